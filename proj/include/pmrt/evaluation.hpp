#ifndef PMRT_EVALUATION_HPP
#define PMRT_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pmrt/anonymizer.hpp"
#include "pmrt/dataset.hpp"
#include "pmrt/layers.hpp"
#include "pmrt/network.hpp"
#include "pmrt/training.hpp"

namespace pmrt {

enum class LabelKind { actor, action };

struct AttackTrainConfig {
  int epochs = 60;
  int batch_size = 16;
  double learning_rate = 1e-3;
  uint64_t seed = 7;
};

// Compact temporal-convolutional classifier over raw joint coordinates:
// two convolution/pool stages, a global average pool, and a dense head.
// It shares no parameters or code path with the retargeting model; trained
// on actor labels it plays the offline re-identification attacker, on
// action labels the auxiliary utility probe.
class AttackModel {
 public:
  AttackModel(int joints, int frames, int classes, LabelKind kind);

  // One pass of gradient training over the corpus per epoch, shuffled and
  // seeded; deterministic in (corpus order, cfg.seed).
  void fit(const std::vector<const SkeletonSequence*>& corpus,
           const AttackTrainConfig& cfg);

  // Class probabilities for one sequence, indexed by label_index.
  std::vector<double> scores(const SkeletonSequence& seq) const;

  int classes() const { return classes_; }
  LabelKind kind() const { return kind_; }
  int joints() const { return joints_; }
  int frames() const { return frames_; }
  std::vector<Param*> params();

 private:
  struct Ctx;
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // x (N, J*3, T)
  void backward(const Tensor& dprobs, const Ctx& ctx);
  Tensor batch_input(
      const std::vector<const SkeletonSequence*>& batch) const;

  int joints_, frames_, classes_;
  LabelKind kind_;
  Conv1d conv1_, conv2_;
  LeakyReLU act_;
  Dense dense1_, dense2_;
};

// Trains a fresh classifier on the corpus. Class count is the largest label
// id present. Throws InsufficientData when fewer than two distinct labels
// of the requested kind exist.
AttackModel train_classifier(const std::vector<SkeletonSequence>& corpus,
                             LabelKind kind,
                             const AttackTrainConfig& cfg = {});

// The re-identification attacker of the evaluation protocol: actor labels,
// originals only.
AttackModel train_attacker(const std::vector<SkeletonSequence>& corpus,
                           const AttackTrainConfig& cfg = {});

void save_attacker(AttackModel& model, const std::string& path);
AttackModel load_attacker(const std::string& path);

struct AttackResult {
  double top1 = 0.0;
  double topk = 0.0;
  // 5 when the label space allows it, else ceil(classes/2), reported as
  // top-k rather than pretending a top-5 exists.
  int k = 5;
  size_t count = 0;
  std::vector<std::string> names;  // per-sequence records
  std::vector<int> ranks;          // 1-based rank of the true label
  std::map<int, double> per_class_top1;
};

// Rank of each sequence's true label (actor or action per the model's
// kind) in the classifier's scores. Ties break toward the smaller class
// index. Throws LabelMismatch when a label falls outside the model's
// classes.
AttackResult attack(const AttackModel& model,
                    const std::vector<SkeletonSequence>& corpus);

struct UtilityReport {
  // Headline convention: each anonymized output is compared against the
  // real recording of its dummy actor performing the input's action in the
  // input's camera view, matching the cross-reconstruction target. Rows
  // without such a recording fall back to the original.
  double mse_retarget = 0.0;
  // Secondary convention: compared against the input itself.
  double mse_vs_original = 0.0;
  size_t count = 0;
  size_t retarget_covered = 0;  // rows with a real retarget recording
  std::vector<std::string> names;
  std::vector<double> per_retarget;
  std::vector<double> per_original;
};

// Aligns anonymized outputs with targets through the audit manifest.
// Throws ManifestMismatch when a manifest row cannot be resolved.
UtilityReport utility_mse(const CorpusIndex& originals,
                          const std::vector<AnonymizeRecord>& manifest,
                          const SkeletonTopology& topology, int frames);

// Mean per-sequence MSE between corpora aligned by position.
double mean_sequence_mse(const std::vector<SkeletonSequence>& a,
                         const std::vector<SkeletonSequence>& b);

struct EvalReport {
  double utility_mse = 0.0;              // retarget convention
  double utility_mse_vs_original = 0.0;  // both conventions always logged
  double reid_top1 = 0.0;
  double reid_topk = 0.0;
  int reid_k = 5;
  double action_top1 = 0.0;
  double attacker_top1_on_originals = 0.0;
  double attacker_topk_on_originals = 0.0;
  std::map<int, double> reid_top1_per_actor;
  std::map<int, double> action_top1_per_action;

  struct PerSequence {
    std::string name;
    double mse_retarget = 0.0;
    double mse_original = 0.0;
    int reid_rank = 0;
    int action_rank = 0;
  };
  std::vector<PerSequence> sequences;  // aggregates recompute from these

  void validate() const;  // fractions in [0,1], top1 <= topk
};

void save_eval_report(const EvalReport& report, const std::string& path);

// Mean silhouette width under Euclidean distance; singleton clusters score
// zero. Inputs must agree in length; at least two distinct labels.
double silhouette_score(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& labels);

std::vector<double> flatten_embedding(const Tensor& emb);

// One row per sequence: the flattened motion embedding, the flattened
// privacy embedding, then the action and actor labels. Plain numbers,
// space-separated, full precision.
void export_embeddings(const PmrModel& model,
                       const std::vector<SkeletonSequence>& corpus,
                       const std::string& out_path);

// Spearman rank correlation with average ranks on ties.
double spearman_rho(const std::vector<double>& x,
                    const std::vector<double>& y);

struct SweepPoint {
  double alpha_emb = 0.0;
  std::string policy;  // "constant" | "random"
  double utility_mse = 0.0;
  double reid_top1 = 0.0;
  double reid_topk = 0.0;
  int k = 5;
};

struct SweepConfig {
  NetworkConfig net;
  TrainConfig train;  // alpha_emb replaced per grid point
  CorpusIndex corpus;
  SkeletonTopology topology;
  std::string out_dir;
  uint64_t dummy_seed = 11;  // random-policy stream
  std::string constant_ref;  // empty = lexicographically first eval stem
  AttackTrainConfig attack;
};

// Retrains the pipeline at each adversarial weight and attacks the
// anonymized outputs with one shared attacker trained on originals.
// Returns one row per (alpha, policy).
std::vector<SweepPoint> tradeoff_sweep(const std::vector<double>& alpha_values,
                                       const SweepConfig& cfg);

// Columns: alpha_emb, policy, utility_mse, reid_top1, reid_topk, k.
void save_sweep_csv(const std::vector<SweepPoint>& rows,
                    const std::string& path);

struct RenderBounds {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.2, y_max = 1.2;
};

// One PNG per requested frame: joints as dots, bones as segments, fixed
// orthographic projection onto the x-y plane with the given bounds so a
// comparison set shares its framing. Returns the written paths.
std::vector<std::string> render_frames(const SkeletonSequence& seq,
                                       const std::vector<int>& frame_indices,
                                       const SkeletonTopology& topology,
                                       const std::string& out_dir,
                                       const RenderBounds& bounds = {},
                                       int width = 256, int height = 320);

}  // namespace pmrt

#endif  // PMRT_EVALUATION_HPP
