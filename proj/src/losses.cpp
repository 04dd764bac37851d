#include "pmrt/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pmrt/errors.hpp"

namespace pmrt {

void LossWeights::validate() const {
  const double alphas[] = {alpha_rec,    alpha_cross,  alpha_ee, alpha_trip,
                           alpha_smooth, alpha_latent, alpha_emb};
  for (double a : alphas)
    if (!(a >= 0.0)) throw InvalidConfig("loss weights must be >= 0");
  if (!(gamma > 0.0)) throw InvalidConfig("triplet margin must be > 0");
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(what) + ": " + a.shape_str() + " vs " +
                        b.shape_str());
}

void ensure_grad(Tensor* grad, const Tensor& like) {
  if (grad && !grad->same_shape(like)) *grad = Tensor(like.shape());
}

}  // namespace

double reconstruction_loss(const Tensor& target, const Tensor& pred,
                           Tensor* grad_pred, Tensor* grad_target) {
  check_same_shape(target, pred, "reconstruction_loss");
  size_t n = target.size();
  if (n == 0) throw ShapeMismatch("reconstruction_loss: empty tensors");
  ensure_grad(grad_pred, pred);
  ensure_grad(grad_target, target);
  double sum = 0.0;
  const double* t = target.data();
  const double* p = pred.data();
  for (size_t i = 0; i < n; ++i) {
    double d = p[i] - t[i];
    sum += d * d;
    if (grad_pred) grad_pred->data()[i] = 2.0 * d / static_cast<double>(n);
    if (grad_target) grad_target->data()[i] = -2.0 * d / static_cast<double>(n);
  }
  return sum / static_cast<double>(n);
}

double smooth_loss(const Tensor& s, const Tensor& s_hat, Tensor* grad_hat) {
  check_same_shape(s, s_hat, "smooth_loss");
  if (s.ndim() != 3 || s.dim(2) != 3)
    throw ShapeMismatch("smooth_loss wants (J, T, 3), got " + s.shape_str());
  size_t j_count = s.dim(0), t_count = s.dim(1);
  if (t_count < 2) throw ShapeMismatch("smooth_loss needs T >= 2");
  ensure_grad(grad_hat, s_hat);
  if (grad_hat) grad_hat->zero();

  // Per-joint displacement energy gap, then sqrt of the summed gaps.
  std::vector<double> gap(j_count);
  double total_gap = 0.0;
  for (size_t j = 0; j < j_count; ++j) {
    double energy_s = 0.0, energy_hat = 0.0;
    for (size_t t = 0; t + 1 < t_count; ++t)
      for (size_t c = 0; c < 3; ++c) {
        double ds = s.at(j, t + 1, c) - s.at(j, t, c);
        double dh = s_hat.at(j, t + 1, c) - s_hat.at(j, t, c);
        energy_s += ds * ds;
        energy_hat += dh * dh;
      }
    gap[j] = energy_hat - energy_s;
    total_gap += std::abs(gap[j]);
  }
  double denom = static_cast<double>(j_count * t_count);
  double value = std::sqrt(total_gap) / denom;

  if (grad_hat && total_gap > 0.0) {
    // d value / d energy_hat_j = sign(gap_j) / (2 sqrt(total) denom).
    double scale = 1.0 / (2.0 * std::sqrt(total_gap) * denom);
    for (size_t j = 0; j < j_count; ++j) {
      if (gap[j] == 0.0) continue;
      double sg = gap[j] > 0.0 ? scale : -scale;
      for (size_t t = 0; t + 1 < t_count; ++t)
        for (size_t c = 0; c < 3; ++c) {
          double dh = s_hat.at(j, t + 1, c) - s_hat.at(j, t, c);
          grad_hat->at(j, t + 1, c) += sg * 2.0 * dh;
          grad_hat->at(j, t, c) -= sg * 2.0 * dh;
        }
    }
  }
  return value;
}

double cross_entropy(const std::vector<double>& probs, int label,
                     std::vector<double>* grad, double cap) {
  if (label < 0 || label >= static_cast<int>(probs.size()))
    throw LabelOutOfRange("cross_entropy: label " + std::to_string(label) +
                          " for " + std::to_string(probs.size()) + " classes");
  if (grad) grad->assign(probs.size(), 0.0);
  double p = std::max(probs[static_cast<size_t>(label)], kProbFloor);
  double value = -std::log(p);
  if (cap > 0.0 && value >= cap) return cap;  // saturated: zero gradient
  if (grad) (*grad)[static_cast<size_t>(label)] = -1.0 / p;
  return value;
}

double classifier_loss(const std::vector<double>& probs_from_motion,
                       const std::vector<double>& probs_from_privacy,
                       int label, std::vector<double>* grad_motion,
                       std::vector<double>* grad_privacy) {
  return cross_entropy(probs_from_motion, label, grad_motion) +
         cross_entropy(probs_from_privacy, label, grad_privacy);
}

namespace {

double clamped_log(double x, double* grad) {
  double c = std::clamp(x, kScoreEps, 1.0 - kScoreEps);
  if (grad) *grad = (x > kScoreEps && x < 1.0 - kScoreEps) ? 1.0 / c : 0.0;
  return std::log(c);
}

}  // namespace

double quality_controller_loss(double score_real, double score_fake,
                               double* grad_real, double* grad_fake) {
  double g_real = 0.0, g_one_minus_fake = 0.0;
  double value = clamped_log(score_real, &g_real) +
                 clamped_log(1.0 - score_fake, &g_one_minus_fake);
  if (grad_real) *grad_real = g_real;
  if (grad_fake) *grad_fake = -g_one_minus_fake;
  return value;
}

double cooperative_loss(const std::vector<double>& m_on_motion,
                        const std::vector<double>& p_on_privacy, int a, int p,
                        std::vector<double>* grad_m,
                        std::vector<double>* grad_p) {
  return cross_entropy(m_on_motion, a, grad_m) +
         cross_entropy(p_on_privacy, p, grad_p);
}

double adversarial_loss(const std::vector<double>& m_on_privacy,
                        const std::vector<double>& p_on_motion,
                        double score_fake, int a, int p,
                        std::vector<double>* grad_m,
                        std::vector<double>* grad_p, double* grad_fake) {
  double ce_m = cross_entropy(m_on_privacy, a, grad_m, kAdversarialCeCap);
  double ce_p = cross_entropy(p_on_motion, p, grad_p, kAdversarialCeCap);
  if (grad_m)
    for (double& g : *grad_m) g = -g;
  if (grad_p)
    for (double& g : *grad_p) g = -g;
  double g_one_minus_fake = 0.0;
  double log_fooled = clamped_log(1.0 - score_fake, &g_one_minus_fake);
  if (grad_fake) *grad_fake = g_one_minus_fake;  // d(-log(1-f))/df = +1/(1-f)
  return -ce_m - ce_p - log_fooled;
}

namespace {

double squared_distance(const Tensor& x, const Tensor& y) {
  check_same_shape(x, y, "triplet distance");
  double d2 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double d = x.data()[i] - y.data()[i];
    d2 += d * d;
  }
  return d2;
}

// Accumulates the gradient of one active hinge term into the three tensors.
void hinge_grads(const Tensor& anchor, const Tensor& pos, const Tensor& neg,
                 Tensor* g_anchor, Tensor* g_pos, Tensor* g_neg) {
  for (size_t i = 0; i < anchor.size(); ++i) {
    double a = anchor.data()[i], p = pos.data()[i], n = neg.data()[i];
    g_anchor->data()[i] += 2.0 * (n - p);
    g_pos->data()[i] += 2.0 * (p - a);
    g_neg->data()[i] += 2.0 * (a - n);
  }
}

void ensure_quad_grads(QuadEmbeddings* grad, const QuadEmbeddings& like) {
  if (!grad) return;
  auto prep = [](Tensor& g, const Tensor& l) {
    if (!g.same_shape(l)) g = Tensor(l.shape());
    g.zero();
  };
  prep(grad->m_ap, like.m_ap);
  prep(grad->m_bp, like.m_bp);
  prep(grad->m_aq, like.m_aq);
  prep(grad->m_bq, like.m_bq);
  prep(grad->p_ap, like.p_ap);
  prep(grad->p_bp, like.p_bp);
  prep(grad->p_aq, like.p_aq);
  prep(grad->p_bq, like.p_bq);
}

}  // namespace

double triplet_loss(const QuadEmbeddings& emb, double gamma,
                    QuadEmbeddings* grad) {
  ensure_quad_grads(grad, emb);
  double value = 0.0;
  // Motion space: same action (m_aq) must be nearer than same actor (m_bp).
  double motion_term = squared_distance(emb.m_ap, emb.m_aq) -
                       squared_distance(emb.m_ap, emb.m_bp) + gamma;
  if (motion_term > 0.0) {
    value += motion_term;
    if (grad)
      hinge_grads(emb.m_ap, emb.m_aq, emb.m_bp, &grad->m_ap, &grad->m_aq,
                  &grad->m_bp);
  }
  // Privacy space: same actor (p_bp) must be nearer than same action (p_aq).
  double privacy_term = squared_distance(emb.p_ap, emb.p_bp) -
                        squared_distance(emb.p_ap, emb.p_aq) + gamma;
  if (privacy_term > 0.0) {
    value += privacy_term;
    if (grad)
      hinge_grads(emb.p_ap, emb.p_bp, emb.p_aq, &grad->p_ap, &grad->p_bp,
                  &grad->p_aq);
  }
  return value;
}

double latent_consistency_loss(const QuadEmbeddings& emb,
                               QuadEmbeddings* grad) {
  ensure_quad_grads(grad, emb);
  Tensor g_m_ap, g_m_aq, g_p_ap, g_p_bp;
  double value =
      reconstruction_loss(emb.m_aq, emb.m_ap, grad ? &g_m_ap : nullptr,
                          grad ? &g_m_aq : nullptr) +
      reconstruction_loss(emb.p_bp, emb.p_ap, grad ? &g_p_ap : nullptr,
                          grad ? &g_p_bp : nullptr);
  if (grad) {
    grad->m_ap.add_scaled(g_m_ap, 1.0);
    grad->m_aq.add_scaled(g_m_aq, 1.0);
    grad->p_ap.add_scaled(g_p_ap, 1.0);
    grad->p_bp.add_scaled(g_p_bp, 1.0);
  }
  return value;
}

double end_effector_loss(const Tensor& s, const Tensor& s_hat,
                         const SkeletonTopology& topology, Tensor* grad_hat) {
  check_same_shape(s, s_hat, "end_effector_loss");
  if (s.ndim() != 3 || s.dim(2) != 3)
    throw ShapeMismatch("end_effector_loss wants (J, T, 3), got " +
                        s.shape_str());
  size_t t_count = s.dim(1);
  if (t_count < 2) throw ShapeMismatch("end_effector_loss needs T >= 2");
  if (topology.chain_length.size() != topology.end_effectors.size())
    throw MissingChainLength("chain lengths incomplete");
  ensure_grad(grad_hat, s_hat);
  if (grad_hat) grad_hat->zero();

  double value = 0.0;
  double frames = static_cast<double>(t_count - 1);
  for (size_t i = 0; i < topology.end_effectors.size(); ++i) {
    size_t e = static_cast<size_t>(topology.end_effectors[i]);
    if (e >= s.dim(0))
      throw ShapeMismatch("end effector index outside sequence");
    double h = topology.chain_length[i];
    if (!(h > 0.0)) throw MissingChainLength("chain length must be positive");
    for (size_t t = 0; t + 1 < t_count; ++t)
      for (size_t c = 0; c < 3; ++c) {
        double v_s = s.at(e, t + 1, c) - s.at(e, t, c);
        double v_hat = s_hat.at(e, t + 1, c) - s_hat.at(e, t, c);
        double d = (v_s - v_hat) / h;
        value += d * d / frames;
        if (grad_hat) {
          // d value / d v_hat = -2d/(h*frames); v_hat = s_hat(t+1) - s_hat(t).
          double g = 2.0 * d / (h * frames);
          grad_hat->at(e, t + 1, c) -= g;
          grad_hat->at(e, t, c) += g;
        }
      }
  }
  return value;
}

LossReport total_losses(const std::map<std::string, double>& terms,
                        const LossWeights& weights, LossTotal which) {
  weights.validate();
  auto need = [&terms](const char* name) {
    auto it = terms.find(name);
    if (it == terms.end())
      throw MissingTerm(std::string("loss term missing: ") + name);
    return it->second;
  };
  LossReport report;
  auto take = [&](const char* name, double weight) {
    double v = need(name);
    report.terms[name] = v;
    report.total += weight * v;
  };
  take("rec", weights.alpha_rec);
  take("smooth", weights.alpha_smooth);
  if (which != LossTotal::ae) {
    take("coop", weights.alpha_emb);
    take("adv", weights.alpha_emb);
  }
  if (which == LossTotal::paired) {
    take("cross", weights.alpha_cross);
    take("ee", weights.alpha_ee);
    take("trip", weights.alpha_trip);
    take("latent", weights.alpha_latent);
  }
  report.terms["total"] = report.total;
  return report;
}

}  // namespace pmrt
