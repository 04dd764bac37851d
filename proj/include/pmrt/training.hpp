#ifndef PMRT_TRAINING_HPP
#define PMRT_TRAINING_HPP

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pmrt/dataset.hpp"
#include "pmrt/losses.hpp"
#include "pmrt/network.hpp"
#include "pmrt/optim.hpp"
#include "pmrt/topology.hpp"

namespace pmrt {

enum class StageId { pretrain_ae, pretrain_cls, unpaired, paired };

std::string stage_name(StageId id);
StageId parse_stage_id(const std::string& name);  // throws InvalidConfig

struct Stage {
  StageId id = StageId::pretrain_ae;
  bool paired_data = false;
  int epochs = 0;
};

struct StagePlan {
  std::vector<Stage> stages;

  void validate() const;  // epochs >= 0

  // The published six-stage schedule.
  static StagePlan full();
  // Same shape with compressed epoch budgets, sized for the synthetic corpus.
  static StagePlan desk();
};

struct TrainConfig {
  LossWeights weights;
  StagePlan plan = StagePlan::full();
  int batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
  // Quadruples drawn per epoch in paired-sampling stages; 0 means all. The
  // Cartesian pairing grows combinatorially, so desk runs cap it.
  int quadruples_per_epoch = 0;
  // Held-out sequences (and quadruples) probed for the per-epoch
  // diagnostics; 0 disables them.
  int eval_probe = 64;
  int eval_quads = 16;
  std::string log_path;        // JSONL stream; empty disables
  std::string checkpoint_dir;  // per-epoch and per-stage archives; empty disables

  void validate() const;
};

// Delivered to the step hook after every optimizer sub-step. substep is
// "autoencoder" (groups E_M, E_P, D) or "classifiers" (M, P, Q).
struct StepInfo {
  StageId stage = StageId::pretrain_ae;
  bool paired_data = false;
  size_t stage_index = 0;
  int epoch = 0;
  int batch = 0;
  int64_t global_step = 0;
  std::string substep;
  LossReport report;
};

// Canonical text form of a network configuration; checkpoints embed it and
// refuse to restore across a mismatch.
std::string network_config_echo(const NetworkConfig& cfg);

// Owns the model, one optimizer per parameter group, and the stage cursor.
// All sampling is a pure function of (seed, stage index, epoch), so a
// restored checkpoint replays the remaining schedule bit-exactly.
class Trainer {
 public:
  Trainer(const NetworkConfig& net_cfg, const TrainConfig& cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // Fresh parameters and optimizer state from the config seed.
  void init();

  // Pools as produced by load_split: length-normalized and root-centered.
  // Builds the paired quadruple table; eval pool (optional) feeds the
  // per-epoch held-out diagnostics.
  void set_data(std::vector<SkeletonSequence> train_pool,
                std::vector<SkeletonSequence> eval_pool,
                const SkeletonTopology& topology);

  // Runs the remaining stages from the current cursor. A non-empty filter
  // names the stage kinds to execute; others are skipped (cursor advances,
  // nothing trains, no checkpoint).
  void run(const std::vector<std::string>& stage_filter = {});
  void run_stage(size_t stage_index);

  // Stage bodies. Callable directly; they respect the epoch cursor but do
  // not advance the stage index.
  void run_pretrain_ae(const Stage& stage, size_t stage_index);
  void run_pretrain_classifiers(const Stage& stage, size_t stage_index);
  void run_unpaired(const Stage& stage, size_t stage_index);
  void run_paired(const Stage& stage, size_t stage_index);

  void save_checkpoint(const std::string& path);
  // Throws CorruptCheckpoint on damage, VersionMismatch when the archive was
  // written under a different network configuration.
  void restore_checkpoint(const std::string& path);

  using StepHook = std::function<void(const StepInfo&)>;
  void set_step_hook(StepHook hook) { hook_ = std::move(hook); }

  PmrModel& model() { return model_; }
  const PmrModel& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<PairedQuadruple>& quadruples() const { return quads_; }
  size_t stage_index() const { return stage_index_; }
  int epoch_in_stage() const { return epoch_in_stage_; }
  int64_t global_step() const { return global_step_; }

 private:
  struct PairedSample {
    size_t quad = 0;
    bool swapped = false;  // original and dummy roles exchanged
  };

  std::vector<size_t> epoch_order_sequences(size_t stage_index, int epoch) const;
  std::vector<PairedSample> epoch_order_paired(size_t stage_index, int epoch) const;
  std::vector<const SkeletonSequence*> epoch_order_members(size_t stage_index,
                                                           int epoch) const;

  LossReport autoencoder_step(const std::vector<const SkeletonSequence*>& batch,
                              bool with_embedding_terms);
  LossReport autoencoder_step_paired(const std::vector<PairedSample>& batch);
  LossReport classifier_step(const std::vector<const SkeletonSequence*>& batch);

  void after_substep(const Stage& stage, size_t stage_index, int epoch,
                     int batch, const std::string& substep,
                     const LossReport& report);
  void end_epoch(const Stage& stage, size_t stage_index, int epoch);
  void log_line(const std::string& line);
  void check_finite(const LossReport& report) const;
  void require_labels(const SkeletonSequence& seq) const;

  std::map<std::string, double> heldout_diagnostics();

  NetworkConfig net_cfg_;
  TrainConfig cfg_;
  PmrModel model_;
  Adam opt_ae_, opt_m_, opt_p_, opt_q_;

  std::vector<SkeletonSequence> train_pool_;
  std::vector<SkeletonSequence> eval_pool_;
  std::vector<PairedQuadruple> quads_;
  std::vector<PairedQuadruple> eval_quads_;
  SkeletonTopology topology_;

  size_t stage_index_ = 0;
  int epoch_in_stage_ = 0;
  int step_in_epoch_ = 0;  // batches completed in the current epoch
  int64_t global_step_ = 0;
  std::map<std::string, double> epoch_sums_;
  std::map<std::string, int64_t> epoch_ns_;
  int64_t epoch_counts_ = 0;       // autoencoder sub-steps this epoch
  double epoch_total_sum_ = 0.0;   // their objective totals

  StepHook hook_;
  std::ofstream log_;
};

}  // namespace pmrt

#endif  // PMRT_TRAINING_HPP
