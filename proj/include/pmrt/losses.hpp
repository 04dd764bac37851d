#ifndef PMRT_LOSSES_HPP
#define PMRT_LOSSES_HPP

#include <map>
#include <string>
#include <vector>

#include "pmrt/tensor.hpp"
#include "pmrt/topology.hpp"

namespace pmrt {

// Weighted-sum coefficients for the composite objectives, plus the triplet
// margin. Defaults are the tuned operating point.
struct LossWeights {
  double alpha_rec = 2.0;
  double alpha_cross = 0.1;
  double alpha_ee = 1.0;
  double alpha_trip = 1.0;
  double alpha_smooth = 3.0;
  double alpha_latent = 10.0;
  double alpha_emb = 10.0;
  double gamma = 1.0;  // triplet margin

  void validate() const;  // alphas >= 0, gamma > 0
};

// Numeric guards shared by the probabilistic losses.
inline constexpr double kProbFloor = 1e-12;   // CE log argument floor
inline constexpr double kScoreEps = 1e-7;     // discriminator score clamp
inline constexpr double kAdversarialCeCap = 20.0;

// All sequence-space losses take (J, T, 3) tensors. Optional out-parameters
// receive d loss / d input accumulated from zero; pass nullptr to skip.

// Mean squared deviation over every element. Symmetric. Serves both plain
// and cross reconstruction.
double reconstruction_loss(const Tensor& target, const Tensor& pred,
                           Tensor* grad_pred = nullptr,
                           Tensor* grad_target = nullptr);

// Temporal-consistency penalty: per joint, the inter-frame displacement
// energies of the two sequences are compared; the absolute per-joint gaps
// are summed, square-rooted, and divided by J*T. Depends on displacements
// only, so constant offsets to either argument do not move it.
double smooth_loss(const Tensor& s, const Tensor& s_hat,
                   Tensor* grad_hat = nullptr);

// -log p[label], p floored at kProbFloor. grad is with respect to the
// probability vector. When cap > 0 the value is clamped there and the
// gradient past the cap is zero.
double cross_entropy(const std::vector<double>& probs, int label,
                     std::vector<double>* grad = nullptr, double cap = 0.0);

// Classifier heads see both embeddings of a sequence; the loss is the sum of
// both cross-entropies against the head's label (action for M, actor for P).
double classifier_loss(const std::vector<double>& probs_from_motion,
                       const std::vector<double>& probs_from_privacy,
                       int label,
                       std::vector<double>* grad_motion = nullptr,
                       std::vector<double>* grad_privacy = nullptr);

// Discriminator objective log(real) + log(1 - fake), to be maximized by Q
// (the trainer minimizes its negation). Scores are clamped to
// [kScoreEps, 1 - kScoreEps]; gradients vanish outside the clamp range.
double quality_controller_loss(double score_real, double score_fake,
                               double* grad_real = nullptr,
                               double* grad_fake = nullptr);

// Encoder objective rewarding predictable embeddings:
// CE(M(E_M(s)), a) + CE(P(E_P(s)), p).
double cooperative_loss(const std::vector<double>& m_on_motion,
                        const std::vector<double>& p_on_privacy, int a, int p,
                        std::vector<double>* grad_m = nullptr,
                        std::vector<double>* grad_p = nullptr);

// Encoder/decoder objective punishing leaked information:
// -CE(M(E_P(s)), a) - CE(P(E_M(s)), p) - log(1 - score_fake).
// Each CE is capped at kAdversarialCeCap so the negated terms stay bounded.
// Gradients route to the probability vectors and the fake score; classifier
// and Q parameters never receive gradient from this loss.
double adversarial_loss(const std::vector<double>& m_on_privacy,
                        const std::vector<double>& p_on_motion,
                        double score_fake, int a, int p,
                        std::vector<double>* grad_m = nullptr,
                        std::vector<double>* grad_p = nullptr,
                        double* grad_fake = nullptr);

// Both embeddings of every member of one quadruple. Suffixes name the cell:
// actions {a < b} by actors {p < q}.
struct QuadEmbeddings {
  Tensor m_ap, m_bp, m_aq, m_bq;  // motion embeddings
  Tensor p_ap, p_bp, p_aq, p_bq;  // privacy embeddings
};

// Two hinge terms with squared Euclidean distances over the flattened maps:
// motion anchor m_ap, positive m_aq (same action), negative m_bp;
// privacy anchor p_ap, positive p_bp (same actor), negative p_aq.
double triplet_loss(const QuadEmbeddings& emb, double gamma,
                    QuadEmbeddings* grad = nullptr);

// MSE(m_ap, m_aq) + MSE(p_ap, p_bp): same action must give the same motion
// embedding, same actor the same privacy embedding.
double latent_consistency_loss(const QuadEmbeddings& emb,
                               QuadEmbeddings* grad = nullptr);

// Velocity matching at the extremities: for each end effector, the first
// differences along time of both sequences are compared, normalized by the
// chain length h_e, squared-summed over coordinates, and averaged over the
// T-1 difference frames; terms sum over end effectors.
double end_effector_loss(const Tensor& s, const Tensor& s_hat,
                         const SkeletonTopology& topology,
                         Tensor* grad_hat = nullptr);

// Which composite objective a stage optimizes.
enum class LossTotal { ae, unpaired, paired };

struct LossReport {
  std::map<std::string, double> terms;
  double total = 0.0;
};

// Weighted totals:
//   ae       = a_rec*rec + a_smooth*smooth
//   unpaired = ae + a_emb*(coop + adv)
//   paired   = unpaired + a_cross*cross + a_ee*ee + a_trip*trip
//              + a_latent*latent
// Term names: rec, smooth, coop, adv, cross, ee, trip, latent.
// Throws MissingTerm when a required term is absent.
LossReport total_losses(const std::map<std::string, double>& terms,
                        const LossWeights& weights, LossTotal which);

}  // namespace pmrt

#endif  // PMRT_LOSSES_HPP
