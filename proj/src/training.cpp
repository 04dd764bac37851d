#include "pmrt/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "pmrt/checkpoint.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/rng.hpp"

namespace pmrt {

namespace {

using nlohmann::json;

// Row n of a network batch (N, T, J, 3), back in storage layout (J, T, 3).
Tensor seq_slice(const Tensor& net, size_t n) {
  size_t t = net.dim(1), j = net.dim(2);
  Tensor out({j, t, 3});
  for (size_t tt = 0; tt < t; ++tt)
    for (size_t jj = 0; jj < j; ++jj)
      for (size_t c = 0; c < 3; ++c) out.at(jj, tt, c) = net.at(n, tt, jj, c);
  return out;
}

// Accumulates scale * g (storage layout) into batch row n.
void add_seq_grad(Tensor& dnet, size_t n, const Tensor& g, double scale) {
  size_t t = dnet.dim(1), j = dnet.dim(2);
  g.require_shape({j, t, 3}, "sequence gradient");
  for (size_t tt = 0; tt < t; ++tt)
    for (size_t jj = 0; jj < j; ++jj)
      for (size_t c = 0; c < 3; ++c)
        dnet.at(n, tt, jj, c) += scale * g.at(jj, tt, c);
}

std::vector<double> prob_row(const Tensor& probs, size_t n) {
  size_t y = probs.dim(1);
  std::vector<double> out(y);
  for (size_t i = 0; i < y; ++i) out[i] = probs.at(n, i);
  return out;
}

void add_prob_grad(Tensor& dprobs, size_t n, const std::vector<double>& g,
                   double scale) {
  for (size_t i = 0; i < g.size(); ++i) dprobs.at(n, i) += scale * g[i];
}

// Row n of a batched tensor as a standalone tensor over the trailing axes.
Tensor row_block(const Tensor& t, size_t n) {
  std::vector<size_t> shape(t.shape().begin() + 1, t.shape().end());
  Tensor out(shape);
  size_t block = out.size();
  std::copy(t.data() + n * block, t.data() + (n + 1) * block, out.data());
  return out;
}

void copy_row_block(const Tensor& src, size_t n, Tensor& dst, size_t m) {
  size_t block = src.size() / src.dim(0);
  std::copy(src.data() + n * block, src.data() + (n + 1) * block,
            dst.data() + m * block);
}

void add_row_block(const Tensor& src, size_t n, Tensor& dst, size_t m) {
  size_t block = src.size() / src.dim(0);
  const double* s = src.data() + n * block;
  double* d = dst.data() + m * block;
  for (size_t i = 0; i < block; ++i) d[i] += s[i];
}

// Accumulates scale * g (a standalone row tensor) into row of dst.
void add_scaled_block(Tensor& dst, size_t row, const Tensor& g, double scale) {
  size_t block = dst.size() / dst.dim(0);
  double* d = dst.data() + row * block;
  const double* s = g.data();
  for (size_t i = 0; i < block; ++i) d[i] += scale * s[i];
}

// Splits one decoder-input gradient row [motion | privacy] and adds the
// halves into the chosen rows of the per-encoder gradient batches.
void add_cat_row(const Tensor& dcat, size_t row, Tensor& dm, Tensor& dp,
                 size_t mrow, size_t prow) {
  size_t c2 = dcat.dim(1), l = dcat.dim(2);
  size_t half = (c2 / 2) * l;
  const double* src = dcat.data() + row * c2 * l;
  double* m = dm.data() + mrow * half;
  double* p = dp.data() + prow * half;
  for (size_t i = 0; i < half; ++i) m[i] += src[i];
  for (size_t i = 0; i < half; ++i) p[i] += src[half + i];
}

int argmax_first(const std::vector<double>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

int64_t take_int(const Archive& a, const std::string& key) {
  auto it = a.ints.find(key);
  if (it == a.ints.end()) throw CorruptCheckpoint("missing record: " + key);
  return it->second;
}

const Tensor& take_tensor(const Archive& a, const std::string& key) {
  auto it = a.tensors.find(key);
  if (it == a.tensors.end()) throw CorruptCheckpoint("missing record: " + key);
  return it->second;
}

const std::string& take_string(const Archive& a, const std::string& key) {
  auto it = a.strings.find(key);
  if (it == a.strings.end()) throw CorruptCheckpoint("missing record: " + key);
  return it->second;
}

constexpr uint64_t kStreamEpoch = 0x65706f6368;  // per-epoch sequence shuffle
constexpr uint64_t kStreamQuads = 0x7175616473;  // per-epoch quadruple draw
constexpr uint64_t kStreamPairs = 0x70616972;    // canonical pair table
constexpr uint64_t kStreamEvalQ = 0x6576616c71;  // held-out pair table

const char* kGroupTags[4] = {"ae", "m", "p", "q"};

}  // namespace

std::string stage_name(StageId id) {
  switch (id) {
    case StageId::pretrain_ae: return "pretrain_ae";
    case StageId::pretrain_cls: return "pretrain_cls";
    case StageId::unpaired: return "unpaired";
    case StageId::paired: return "paired";
  }
  throw InvalidConfig("unknown stage id");
}

StageId parse_stage_id(const std::string& name) {
  if (name == "pretrain_ae") return StageId::pretrain_ae;
  if (name == "pretrain_cls") return StageId::pretrain_cls;
  if (name == "unpaired") return StageId::unpaired;
  if (name == "paired") return StageId::paired;
  throw InvalidConfig("unknown stage name: " + name);
}

void StagePlan::validate() const {
  for (const Stage& s : stages)
    if (s.epochs < 0) throw InvalidConfig("stage epochs must be >= 0");
}

StagePlan StagePlan::full() {
  return {{{StageId::pretrain_ae, true, 5},
           {StageId::pretrain_ae, false, 20},
           {StageId::pretrain_cls, true, 20},
           {StageId::pretrain_cls, false, 50},
           {StageId::unpaired, false, 100},
           {StageId::paired, true, 80}}};
}

StagePlan StagePlan::desk() {
  return {{{StageId::pretrain_ae, true, 2},
           {StageId::pretrain_ae, false, 5},
           {StageId::pretrain_cls, true, 5},
           {StageId::pretrain_cls, false, 10},
           {StageId::unpaired, false, 20},
           {StageId::paired, true, 20}}};
}

void TrainConfig::validate() const {
  weights.validate();
  plan.validate();
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (learning_rate <= 0.0) throw InvalidConfig("learning_rate must be > 0");
  if (quadruples_per_epoch < 0 || eval_probe < 0 || eval_quads < 0)
    throw InvalidConfig("sampling caps must be >= 0");
}

std::string network_config_echo(const NetworkConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  auto vec = [&os](const char* k, const std::vector<int>& v) {
    os << k << '=';
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ';';
  };
  vec("encoder_channels", cfg.encoder_channels);
  vec("decoder_channels", cfg.decoder_channels);
  vec("classifier_channels", cfg.classifier_channels);
  vec("classifier_dense", cfg.classifier_dense);
  vec("qc_channels", cfg.qc_channels);
  vec("qc_dense", cfg.qc_dense);
  os << "embedding_channels=" << cfg.embedding_channels << ';'
     << "embedding_length=" << cfg.embedding_length << ';'
     << "joints=" << cfg.joints << ';' << "frames=" << cfg.frames << ';'
     << "y_action=" << cfg.y_action << ';' << "y_actor=" << cfg.y_actor << ';'
     << "leaky_slope=" << cfg.leaky_slope;
  return os.str();
}

Trainer::Trainer(const NetworkConfig& net_cfg, const TrainConfig& cfg)
    : net_cfg_(net_cfg),
      cfg_(cfg),
      model_(net_cfg),
      opt_ae_(model_.group_autoencoder(), cfg.learning_rate),
      opt_m_(model_.group_motion_cls(), cfg.learning_rate),
      opt_p_(model_.group_privacy_cls(), cfg.learning_rate),
      opt_q_(model_.group_qc(), cfg.learning_rate) {
  cfg_.validate();
  if (!cfg_.log_path.empty()) {
    log_.open(cfg_.log_path, std::ios::app);
    if (!log_) throw IoError("cannot open training log: " + cfg_.log_path);
  }
}

void Trainer::init() {
  model_.init_parameters(cfg_.seed);
  opt_ae_ = Adam(model_.group_autoencoder(), cfg_.learning_rate);
  opt_m_ = Adam(model_.group_motion_cls(), cfg_.learning_rate);
  opt_p_ = Adam(model_.group_privacy_cls(), cfg_.learning_rate);
  opt_q_ = Adam(model_.group_qc(), cfg_.learning_rate);
  stage_index_ = 0;
  epoch_in_stage_ = 0;
  step_in_epoch_ = 0;
  global_step_ = 0;
  epoch_sums_.clear();
  epoch_ns_.clear();
  epoch_counts_ = 0;
  epoch_total_sum_ = 0.0;
}

void Trainer::require_labels(const SkeletonSequence& seq) const {
  int a = label_index(seq.action_id), p = label_index(seq.actor_id);
  if (a < 0 || a >= net_cfg_.y_action)
    throw LabelOutOfRange("action id " + std::to_string(seq.action_id) +
                          " outside the " + std::to_string(net_cfg_.y_action) +
                          " configured classes");
  if (p < 0 || p >= net_cfg_.y_actor)
    throw LabelOutOfRange("actor id " + std::to_string(seq.actor_id) +
                          " outside the " + std::to_string(net_cfg_.y_actor) +
                          " configured classes");
}

void Trainer::set_data(std::vector<SkeletonSequence> train_pool,
                       std::vector<SkeletonSequence> eval_pool,
                       const SkeletonTopology& topology) {
  topology_ = topology;
  topology_.validate();
  train_pool_ = std::move(train_pool);
  eval_pool_ = std::move(eval_pool);
  for (const auto& s : train_pool_) require_labels(s);
  for (const auto& s : eval_pool_) require_labels(s);
  quads_.clear();
  eval_quads_.clear();
  try {
    quads_ = build_pairs(train_pool_, mix_seed(cfg_.seed, kStreamPairs));
  } catch (const NoValidPairs&) {
    // Stages that need pairs will refuse to run; unpaired stages proceed.
  }
  try {
    eval_quads_ = build_pairs(eval_pool_, mix_seed(cfg_.seed, kStreamEvalQ));
  } catch (const NoValidPairs&) {
  }
}

std::vector<size_t> Trainer::epoch_order_sequences(size_t stage_index,
                                                   int epoch) const {
  std::vector<size_t> idx(train_pool_.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(mix_seed(cfg_.seed, kStreamEpoch, stage_index,
                   static_cast<uint64_t>(epoch)));
  rng.shuffle(idx);
  return idx;
}

std::vector<Trainer::PairedSample> Trainer::epoch_order_paired(
    size_t stage_index, int epoch) const {
  std::vector<size_t> qidx(quads_.size());
  std::iota(qidx.begin(), qidx.end(), size_t{0});
  Rng rng(mix_seed(cfg_.seed, kStreamQuads, stage_index,
                   static_cast<uint64_t>(epoch)));
  rng.shuffle(qidx);
  size_t take = qidx.size();
  if (cfg_.quadruples_per_epoch > 0)
    take = std::min(take, static_cast<size_t>(cfg_.quadruples_per_epoch));
  std::vector<PairedSample> out;
  out.reserve(take * 2);
  for (size_t i = 0; i < take; ++i) {
    out.push_back({qidx[i], false});
    out.push_back({qidx[i], true});
  }
  rng.shuffle(out);
  return out;
}

std::vector<const SkeletonSequence*> Trainer::epoch_order_members(
    size_t stage_index, int epoch) const {
  std::vector<size_t> qidx(quads_.size());
  std::iota(qidx.begin(), qidx.end(), size_t{0});
  Rng rng(mix_seed(cfg_.seed, kStreamQuads, stage_index,
                   static_cast<uint64_t>(epoch)));
  rng.shuffle(qidx);
  size_t take = qidx.size();
  if (cfg_.quadruples_per_epoch > 0)
    take = std::min(take, static_cast<size_t>(cfg_.quadruples_per_epoch));
  std::vector<const SkeletonSequence*> out;
  out.reserve(take * 4);
  for (size_t i = 0; i < take; ++i) {
    const PairedQuadruple& q = quads_[qidx[i]];
    out.push_back(&q.s_ap);
    out.push_back(&q.s_bp);
    out.push_back(&q.s_aq);
    out.push_back(&q.s_bq);
  }
  rng.shuffle(out);
  return out;
}

LossReport Trainer::autoencoder_step(
    const std::vector<const SkeletonSequence*>& batch,
    bool with_embedding_terms) {
  const size_t n = batch.size();
  const LossWeights& w = cfg_.weights;
  const double inv_n = 1.0 / static_cast<double>(n);

  Tensor x = batch_to_net(batch);
  Encoder::Ctx ctx_m, ctx_p;
  Decoder::Ctx ctx_d;
  Tensor m = model_.encode_motion(x, &ctx_m);
  Tensor p = model_.encode_privacy(x, &ctx_p);
  Tensor y = model_.decode(m, p, &ctx_d);

  Tensor dy(y.shape());
  double rec_sum = 0.0, smooth_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Tensor target = seq_slice(x, i);
    Tensor pred = seq_slice(y, i);
    Tensor g_rec, g_sm;
    rec_sum += reconstruction_loss(target, pred, &g_rec);
    smooth_sum += smooth_loss(target, pred, &g_sm);
    Tensor g(pred.shape());
    g.add_scaled(g_rec, w.alpha_rec * inv_n);
    g.add_scaled(g_sm, w.alpha_smooth * inv_n);
    add_seq_grad(dy, i, g, 1.0);
  }

  std::map<std::string, double> terms;
  terms["rec"] = rec_sum * inv_n;
  terms["smooth"] = smooth_sum * inv_n;

  Tensor dm(m.shape()), dp(p.shape());
  if (with_embedding_terms) {
    EmbeddingClassifier::Ctx cmm, cmp, cpp_, cpm;
    Tensor probs_mm = model_.cls_motion.forward(m, &cmm, false);
    Tensor probs_mp = model_.cls_motion.forward(p, &cmp, false);
    Tensor probs_pp = model_.cls_privacy.forward(p, &cpp_, false);
    Tensor probs_pm = model_.cls_privacy.forward(m, &cpm, false);
    QualityController::Ctx cq;
    Tensor scores = model_.qc.forward(PmrModel::flatten_joints(y), &cq);

    Tensor d_mm(probs_mm.shape()), d_mp(probs_mp.shape());
    Tensor d_pp(probs_pp.shape()), d_pm(probs_pm.shape());
    Tensor d_scores(scores.shape());
    double coop_sum = 0.0, adv_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int a = label_index(batch[i]->action_id);
      int pid = label_index(batch[i]->actor_id);
      std::vector<double> gm, gp;
      coop_sum += cooperative_loss(prob_row(probs_mm, i), prob_row(probs_pp, i),
                                   a, pid, &gm, &gp);
      add_prob_grad(d_mm, i, gm, w.alpha_emb * inv_n);
      add_prob_grad(d_pp, i, gp, w.alpha_emb * inv_n);
      std::vector<double> gmp, gpm;
      double gf = 0.0;
      adv_sum +=
          adversarial_loss(prob_row(probs_mp, i), prob_row(probs_pm, i),
                           scores.at(i, 0), a, pid, &gmp, &gpm, &gf);
      add_prob_grad(d_mp, i, gmp, w.alpha_emb * inv_n);
      add_prob_grad(d_pm, i, gpm, w.alpha_emb * inv_n);
      // The decoder's side of the discriminator game ascends the reported
      // -log(1 - score) term: descent would push scores toward "fake" and
      // reward artifacts. Negating gf drives Q(reconstruction) toward "real".
      d_scores.at(i, 0) -= w.alpha_emb * inv_n * gf;
    }
    terms["coop"] = coop_sum * inv_n;
    terms["adv"] = adv_sum * inv_n;

    // Frozen heads route gradient to the embeddings without accumulating
    // their own parameter gradients.
    dm.add_scaled(model_.cls_motion.backward(d_mm, cmm, false), 1.0);
    dp.add_scaled(model_.cls_motion.backward(d_mp, cmp, false), 1.0);
    dp.add_scaled(model_.cls_privacy.backward(d_pp, cpp_, false), 1.0);
    dm.add_scaled(model_.cls_privacy.backward(d_pm, cpm, false), 1.0);
    Tensor dflat = model_.qc.backward(d_scores, cq, false);
    dy.add_scaled(dflat.reshaped(y.shape()), 1.0);
  }

  Tensor dcat = model_.decoder.backward(dy, ctx_d, true);
  for (size_t i = 0; i < n; ++i) add_cat_row(dcat, i, dm, dp, i, i);
  model_.enc_motion.backward(dm, ctx_m, true);
  model_.enc_privacy.backward(dp, ctx_p, true);
  opt_ae_.step();

  return total_losses(
      terms, w, with_embedding_terms ? LossTotal::unpaired : LossTotal::ae);
}

LossReport Trainer::autoencoder_step_paired(
    const std::vector<PairedSample>& batch) {
  const size_t v = batch.size();
  const LossWeights& w = cfg_.weights;
  const double inv_v = 1.0 / static_cast<double>(v);
  const double inv_2v = 0.5 * inv_v;

  // Cell rows per variant: ap, bp, aq, bq.
  std::vector<const SkeletonSequence*> members;
  members.reserve(4 * v);
  for (const PairedSample& s : batch) {
    const PairedQuadruple& q = quads_[s.quad];
    members.push_back(&q.s_ap);
    members.push_back(&q.s_bp);
    members.push_back(&q.s_aq);
    members.push_back(&q.s_bq);
  }
  Tensor x = batch_to_net(members);
  Encoder::Ctx ctx_m, ctx_p;
  Tensor m_all = model_.encode_motion(x, &ctx_m);
  Tensor p_all = model_.encode_privacy(x, &ctx_p);
  size_t c = m_all.dim(1), l = m_all.dim(2);

  // Decoder rows per variant: reconstructions of the original and the
  // dummy, then the cross onto the dummy actor.
  Tensor dec_m({3 * v, c, l}), dec_p({3 * v, c, l});
  for (size_t i = 0; i < v; ++i) {
    size_t orig = batch[i].swapped ? 3 : 0;
    size_t dummy = batch[i].swapped ? 0 : 3;
    copy_row_block(m_all, 4 * i + orig, dec_m, 3 * i + 0);
    copy_row_block(p_all, 4 * i + orig, dec_p, 3 * i + 0);
    copy_row_block(m_all, 4 * i + dummy, dec_m, 3 * i + 1);
    copy_row_block(p_all, 4 * i + dummy, dec_p, 3 * i + 1);
    copy_row_block(m_all, 4 * i + orig, dec_m, 3 * i + 2);
    copy_row_block(p_all, 4 * i + dummy, dec_p, 3 * i + 2);
  }
  Decoder::Ctx ctx_d;
  Tensor y = model_.decode(dec_m, dec_p, &ctx_d);

  // Classifier and discriminator views of the two inputs per variant.
  Tensor in_m({2 * v, c, l}), in_p({2 * v, c, l});
  for (size_t i = 0; i < v; ++i) {
    size_t orig = batch[i].swapped ? 3 : 0;
    size_t dummy = batch[i].swapped ? 0 : 3;
    copy_row_block(m_all, 4 * i + orig, in_m, 2 * i + 0);
    copy_row_block(m_all, 4 * i + dummy, in_m, 2 * i + 1);
    copy_row_block(p_all, 4 * i + orig, in_p, 2 * i + 0);
    copy_row_block(p_all, 4 * i + dummy, in_p, 2 * i + 1);
  }
  EmbeddingClassifier::Ctx cmm, cmp, cpp_, cpm;
  Tensor probs_mm = model_.cls_motion.forward(in_m, &cmm, false);
  Tensor probs_mp = model_.cls_motion.forward(in_p, &cmp, false);
  Tensor probs_pp = model_.cls_privacy.forward(in_p, &cpp_, false);
  Tensor probs_pm = model_.cls_privacy.forward(in_m, &cpm, false);

  Tensor recon({2 * v, x.dim(1), x.dim(2), x.dim(3)});
  for (size_t i = 0; i < v; ++i) {
    copy_row_block(y, 3 * i + 0, recon, 2 * i + 0);
    copy_row_block(y, 3 * i + 1, recon, 2 * i + 1);
  }
  QualityController::Ctx cq;
  Tensor scores = model_.qc.forward(PmrModel::flatten_joints(recon), &cq);

  Tensor dy(y.shape());
  Tensor d_mm(probs_mm.shape()), d_mp(probs_mp.shape());
  Tensor d_pp(probs_pp.shape()), d_pm(probs_pm.shape());
  Tensor d_scores(scores.shape());
  Tensor dm_all(m_all.shape()), dp_all(p_all.shape());

  double rec_sum = 0.0, smooth_sum = 0.0, coop_sum = 0.0, adv_sum = 0.0;
  double cross_sum = 0.0, ee_sum = 0.0, trip_sum = 0.0, latent_sum = 0.0;

  for (size_t i = 0; i < v; ++i) {
    size_t orig = batch[i].swapped ? 3 : 0;
    size_t dummy = batch[i].swapped ? 0 : 3;
    size_t ctgt = batch[i].swapped ? 1 : 2;

    // Plain reconstructions of both inputs.
    for (size_t k = 0; k < 2; ++k) {
      size_t cell = k == 0 ? orig : dummy;
      Tensor target = seq_slice(x, 4 * i + cell);
      Tensor pred = seq_slice(y, 3 * i + k);
      Tensor g_rec, g_sm;
      rec_sum += reconstruction_loss(target, pred, &g_rec);
      smooth_sum += smooth_loss(target, pred, &g_sm);
      Tensor g(pred.shape());
      g.add_scaled(g_rec, w.alpha_rec * inv_2v);
      g.add_scaled(g_sm, w.alpha_smooth * inv_2v);
      add_seq_grad(dy, 3 * i + k, g, 1.0);
    }

    // Cross-reconstruction against the real recording of the dummy actor
    // performing the original action, plus end-effector velocity matching
    // against the original motion.
    {
      Tensor target = seq_slice(x, 4 * i + ctgt);
      Tensor pred = seq_slice(y, 3 * i + 2);
      Tensor g_cross, g_ee;
      cross_sum += reconstruction_loss(target, pred, &g_cross);
      Tensor orig_seq = seq_slice(x, 4 * i + orig);
      ee_sum += end_effector_loss(orig_seq, pred, topology_, &g_ee);
      Tensor g(pred.shape());
      g.add_scaled(g_cross, w.alpha_cross * inv_v);
      g.add_scaled(g_ee, w.alpha_ee * inv_v);
      add_seq_grad(dy, 3 * i + 2, g, 1.0);
    }

    // Cooperative and adversarial terms on both inputs.
    for (size_t k = 0; k < 2; ++k) {
      const SkeletonSequence* s = members[4 * i + (k == 0 ? orig : dummy)];
      int a = label_index(s->action_id), pid = label_index(s->actor_id);
      size_t row = 2 * i + k;
      std::vector<double> gm, gp;
      coop_sum += cooperative_loss(prob_row(probs_mm, row),
                                   prob_row(probs_pp, row), a, pid, &gm, &gp);
      add_prob_grad(d_mm, row, gm, w.alpha_emb * inv_2v);
      add_prob_grad(d_pp, row, gp, w.alpha_emb * inv_2v);
      std::vector<double> gmp, gpm;
      double gf = 0.0;
      adv_sum +=
          adversarial_loss(prob_row(probs_mp, row), prob_row(probs_pm, row),
                           scores.at(row, 0), a, pid, &gmp, &gpm, &gf);
      add_prob_grad(d_mp, row, gmp, w.alpha_emb * inv_2v);
      add_prob_grad(d_pm, row, gpm, w.alpha_emb * inv_2v);
      // Ascend the discriminator term, as in the unpaired step.
      d_scores.at(row, 0) -= w.alpha_emb * inv_2v * gf;
    }

    // Triplet and latent-consistency over the four embeddings, with cells
    // relabeled so the original input plays the anchor.
    {
      size_t map[4];
      if (batch[i].swapped) {
        map[0] = 3; map[1] = 2; map[2] = 1; map[3] = 0;
      } else {
        map[0] = 0; map[1] = 1; map[2] = 2; map[3] = 3;
      }
      QuadEmbeddings emb{
          row_block(m_all, 4 * i + map[0]), row_block(m_all, 4 * i + map[1]),
          row_block(m_all, 4 * i + map[2]), row_block(m_all, 4 * i + map[3]),
          row_block(p_all, 4 * i + map[0]), row_block(p_all, 4 * i + map[1]),
          row_block(p_all, 4 * i + map[2]), row_block(p_all, 4 * i + map[3])};
      QuadEmbeddings g_trip, g_lat;
      trip_sum += triplet_loss(emb, w.gamma, &g_trip);
      latent_sum += latent_consistency_loss(emb, &g_lat);
      const Tensor* gm_t[4] = {&g_trip.m_ap, &g_trip.m_bp, &g_trip.m_aq,
                               &g_trip.m_bq};
      const Tensor* gp_t[4] = {&g_trip.p_ap, &g_trip.p_bp, &g_trip.p_aq,
                               &g_trip.p_bq};
      const Tensor* gm_l[4] = {&g_lat.m_ap, &g_lat.m_bp, &g_lat.m_aq,
                               &g_lat.m_bq};
      const Tensor* gp_l[4] = {&g_lat.p_ap, &g_lat.p_bp, &g_lat.p_aq,
                               &g_lat.p_bq};
      for (size_t k = 0; k < 4; ++k) {
        add_scaled_block(dm_all, 4 * i + map[k], *gm_t[k], w.alpha_trip * inv_v);
        add_scaled_block(dp_all, 4 * i + map[k], *gp_t[k], w.alpha_trip * inv_v);
        add_scaled_block(dm_all, 4 * i + map[k], *gm_l[k],
                         w.alpha_latent * inv_v);
        add_scaled_block(dp_all, 4 * i + map[k], *gp_l[k],
                         w.alpha_latent * inv_v);
      }
    }
  }

  // Discriminator path into the two reconstruction rows of each variant.
  Tensor dflat = model_.qc.backward(d_scores, cq, false);
  Tensor dfake = dflat.reshaped(recon.shape());
  for (size_t i = 0; i < v; ++i) {
    add_row_block(dfake, 2 * i + 0, dy, 3 * i + 0);
    add_row_block(dfake, 2 * i + 1, dy, 3 * i + 1);
  }

  Tensor dcat = model_.decoder.backward(dy, ctx_d, true);
  for (size_t i = 0; i < v; ++i) {
    size_t orig = batch[i].swapped ? 3 : 0;
    size_t dummy = batch[i].swapped ? 0 : 3;
    add_cat_row(dcat, 3 * i + 0, dm_all, dp_all, 4 * i + orig, 4 * i + orig);
    add_cat_row(dcat, 3 * i + 1, dm_all, dp_all, 4 * i + dummy, 4 * i + dummy);
    add_cat_row(dcat, 3 * i + 2, dm_all, dp_all, 4 * i + orig, 4 * i + dummy);
  }

  Tensor d_in_m(in_m.shape()), d_in_p(in_p.shape());
  d_in_m.add_scaled(model_.cls_motion.backward(d_mm, cmm, false), 1.0);
  d_in_m.add_scaled(model_.cls_privacy.backward(d_pm, cpm, false), 1.0);
  d_in_p.add_scaled(model_.cls_motion.backward(d_mp, cmp, false), 1.0);
  d_in_p.add_scaled(model_.cls_privacy.backward(d_pp, cpp_, false), 1.0);
  for (size_t i = 0; i < v; ++i) {
    size_t orig = batch[i].swapped ? 3 : 0;
    size_t dummy = batch[i].swapped ? 0 : 3;
    add_row_block(d_in_m, 2 * i + 0, dm_all, 4 * i + orig);
    add_row_block(d_in_m, 2 * i + 1, dm_all, 4 * i + dummy);
    add_row_block(d_in_p, 2 * i + 0, dp_all, 4 * i + orig);
    add_row_block(d_in_p, 2 * i + 1, dp_all, 4 * i + dummy);
  }

  model_.enc_motion.backward(dm_all, ctx_m, true);
  model_.enc_privacy.backward(dp_all, ctx_p, true);
  opt_ae_.step();

  std::map<std::string, double> terms;
  terms["rec"] = rec_sum * inv_2v;
  terms["smooth"] = smooth_sum * inv_2v;
  terms["coop"] = coop_sum * inv_2v;
  terms["adv"] = adv_sum * inv_2v;
  terms["cross"] = cross_sum * inv_v;
  terms["ee"] = ee_sum * inv_v;
  terms["trip"] = trip_sum * inv_v;
  terms["latent"] = latent_sum * inv_v;
  return total_losses(terms, w, LossTotal::paired);
}

LossReport Trainer::classifier_step(
    const std::vector<const SkeletonSequence*>& batch) {
  const size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  Tensor x = batch_to_net(batch);
  Encoder::Ctx ctx_m, ctx_p;
  Decoder::Ctx ctx_d;
  Tensor m = model_.encode_motion(x, &ctx_m);
  Tensor p = model_.encode_privacy(x, &ctx_p);
  Tensor y = model_.decode(m, p, &ctx_d);  // fakes for the discriminator

  // M: action label from both embeddings.
  EmbeddingClassifier::Ctx c1, c2;
  Tensor probs_m1 = model_.cls_motion.forward(m, &c1, true);
  Tensor probs_m2 = model_.cls_motion.forward(p, &c2, true);
  Tensor d1(probs_m1.shape()), d2(probs_m2.shape());
  double cls_m_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    int a = label_index(batch[i]->action_id);
    std::vector<double> g1, g2;
    cls_m_sum += classifier_loss(prob_row(probs_m1, i), prob_row(probs_m2, i),
                                 a, &g1, &g2);
    add_prob_grad(d1, i, g1, inv_n);
    add_prob_grad(d2, i, g2, inv_n);
  }
  model_.cls_motion.backward(d1, c1, true);
  model_.cls_motion.backward(d2, c2, true);

  // P: actor label from both embeddings.
  EmbeddingClassifier::Ctx c3, c4;
  Tensor probs_p1 = model_.cls_privacy.forward(m, &c3, true);
  Tensor probs_p2 = model_.cls_privacy.forward(p, &c4, true);
  Tensor d3(probs_p1.shape()), d4(probs_p2.shape());
  double cls_p_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    int pid = label_index(batch[i]->actor_id);
    std::vector<double> g3, g4;
    cls_p_sum += classifier_loss(prob_row(probs_p1, i), prob_row(probs_p2, i),
                                 pid, &g3, &g4);
    add_prob_grad(d3, i, g3, inv_n);
    add_prob_grad(d4, i, g4, inv_n);
  }
  model_.cls_privacy.backward(d3, c3, true);
  model_.cls_privacy.backward(d4, c4, true);

  // Q: real against generated; the objective is maximized, so the minimized
  // gradient is its negation.
  QualityController::Ctx cr, cf;
  Tensor s_real = model_.qc.forward(PmrModel::flatten_joints(x), &cr);
  Tensor s_fake = model_.qc.forward(PmrModel::flatten_joints(y), &cf);
  Tensor dr(s_real.shape()), df(s_fake.shape());
  double qc_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double gr = 0.0, gf = 0.0;
    qc_sum += quality_controller_loss(s_real.at(i, 0), s_fake.at(i, 0), &gr, &gf);
    dr.at(i, 0) = -gr * inv_n;
    df.at(i, 0) = -gf * inv_n;
  }
  model_.qc.backward(dr, cr, true);
  model_.qc.backward(df, cf, true);

  opt_m_.step();
  opt_p_.step();
  opt_q_.step();

  LossReport rep;
  rep.terms["cls_m"] = cls_m_sum * inv_n;
  rep.terms["cls_p"] = cls_p_sum * inv_n;
  rep.terms["qc"] = qc_sum * inv_n;
  rep.total = rep.terms["cls_m"] + rep.terms["cls_p"] - rep.terms["qc"];
  return rep;
}

void Trainer::check_finite(const LossReport& report) const {
  for (const auto& [k, val] : report.terms)
    if (!std::isfinite(val))
      throw Divergence("non-finite loss term '" + k + "' at global step " +
                       std::to_string(global_step_));
  if (!std::isfinite(report.total))
    throw Divergence("non-finite loss total at global step " +
                     std::to_string(global_step_));
}

void Trainer::log_line(const std::string& line) {
  if (log_.is_open()) log_ << line << '\n';
}

void Trainer::after_substep(const Stage& stage, size_t stage_index, int epoch,
                            int batch, const std::string& substep,
                            const LossReport& report) {
  check_finite(report);
  ++global_step_;
  for (const auto& [k, val] : report.terms) {
    epoch_sums_[k] += val;
    epoch_ns_[k] += 1;
  }
  if (substep == "autoencoder") {
    epoch_total_sum_ += report.total;
    ++epoch_counts_;
  }
  if (log_.is_open()) {
    json j;
    j["kind"] = "step";
    j["stage"] = stage_name(stage.id);
    j["stage_index"] = stage_index;
    j["epoch"] = epoch;
    j["batch"] = batch;
    j["global_step"] = global_step_;
    j["substep"] = substep;
    j["terms"] = report.terms;
    j["total"] = report.total;
    log_line(j.dump());
  }
  if (hook_) {
    StepInfo info;
    info.stage = stage.id;
    info.paired_data = stage.paired_data;
    info.stage_index = stage_index;
    info.epoch = epoch;
    info.batch = batch;
    info.global_step = global_step_;
    info.substep = substep;
    info.report = report;
    hook_(info);
  }
}

std::map<std::string, double> Trainer::heldout_diagnostics() {
  std::map<std::string, double> out;
  if (eval_pool_.empty() || cfg_.eval_probe <= 0) return out;
  size_t probe = std::min(eval_pool_.size(),
                          static_cast<size_t>(cfg_.eval_probe));
  double rec = 0.0, qreal = 0.0, qfake = 0.0;
  int ok_mm = 0, ok_mp = 0, ok_pp = 0, ok_pm = 0;
  size_t done = 0;
  while (done < probe) {
    size_t nb = std::min(static_cast<size_t>(cfg_.batch_size), probe - done);
    std::vector<const SkeletonSequence*> batch;
    for (size_t i = 0; i < nb; ++i) batch.push_back(&eval_pool_[done + i]);
    Tensor x = batch_to_net(batch);
    Encoder::Ctx cm, cp;
    Decoder::Ctx cd;
    Tensor m = model_.encode_motion(x, &cm);
    Tensor p = model_.encode_privacy(x, &cp);
    Tensor y = model_.decode(m, p, &cd);
    EmbeddingClassifier::Ctx e1, e2, e3, e4;
    Tensor pmm = model_.cls_motion.forward(m, &e1, false);
    Tensor pmp = model_.cls_motion.forward(p, &e2, false);
    Tensor ppp = model_.cls_privacy.forward(p, &e3, false);
    Tensor ppm = model_.cls_privacy.forward(m, &e4, false);
    QualityController::Ctx q1, q2;
    Tensor sr = model_.qc.forward(PmrModel::flatten_joints(x), &q1);
    Tensor sf = model_.qc.forward(PmrModel::flatten_joints(y), &q2);
    for (size_t i = 0; i < nb; ++i) {
      rec += reconstruction_loss(seq_slice(x, i), seq_slice(y, i));
      int a = label_index(batch[i]->action_id);
      int pid = label_index(batch[i]->actor_id);
      ok_mm += argmax_first(prob_row(pmm, i)) == a;
      ok_mp += argmax_first(prob_row(pmp, i)) == a;
      ok_pp += argmax_first(prob_row(ppp, i)) == pid;
      ok_pm += argmax_first(prob_row(ppm, i)) == pid;
      qreal += sr.at(i, 0);
      qfake += sf.at(i, 0);
    }
    done += nb;
  }
  double inv = 1.0 / static_cast<double>(probe);
  out["rec"] = rec * inv;
  out["acc_m_motion"] = ok_mm * inv;
  out["acc_m_privacy"] = ok_mp * inv;
  out["acc_p_privacy"] = ok_pp * inv;
  out["acc_p_motion"] = ok_pm * inv;
  out["q_real"] = qreal * inv;
  out["q_fake"] = qfake * inv;

  if (!eval_quads_.empty() && cfg_.eval_quads > 0) {
    size_t nq = std::min(eval_quads_.size(),
                         static_cast<size_t>(cfg_.eval_quads));
    double cross = 0.0;
    size_t qdone = 0;
    while (qdone < nq) {
      size_t chunk = std::min(static_cast<size_t>(cfg_.batch_size), nq - qdone);
      std::vector<const SkeletonSequence*> inputs;
      for (size_t i = 0; i < chunk; ++i) {
        const PairedQuadruple& q = eval_quads_[qdone + i];
        inputs.push_back(&q.s_ap);
        inputs.push_back(&q.s_bq);
      }
      Tensor x2 = batch_to_net(inputs);
      Encoder::Ctx cm, cp;
      Tensor m2 = model_.encode_motion(x2, &cm);
      Tensor p2 = model_.encode_privacy(x2, &cp);
      size_t ce = m2.dim(1), le = m2.dim(2);
      Tensor dm({chunk, ce, le}), dp({chunk, ce, le});
      for (size_t i = 0; i < chunk; ++i) {
        copy_row_block(m2, 2 * i + 0, dm, i);
        copy_row_block(p2, 2 * i + 1, dp, i);
      }
      Decoder::Ctx cd;
      Tensor y2 = model_.decode(dm, dp, &cd);
      for (size_t i = 0; i < chunk; ++i)
        cross += reconstruction_loss(eval_quads_[qdone + i].s_aq.joints,
                                     seq_slice(y2, i));
      qdone += chunk;
    }
    out["cross"] = cross / static_cast<double>(nq);
  }
  return out;
}

void Trainer::end_epoch(const Stage& stage, size_t stage_index, int epoch) {
  if (log_.is_open()) {
    json j;
    j["kind"] = "epoch";
    j["stage"] = stage_name(stage.id);
    j["stage_index"] = stage_index;
    j["epoch"] = epoch;
    json means;
    for (const auto& [k, s] : epoch_sums_)
      means[k] = s / static_cast<double>(std::max<int64_t>(1, epoch_ns_.at(k)));
    j["mean_terms"] = means;
    if (epoch_counts_ > 0)
      j["mean_total"] = epoch_total_sum_ / static_cast<double>(epoch_counts_);
    auto diag = heldout_diagnostics();
    if (!diag.empty()) j["heldout"] = diag;
    log_line(j.dump());
    log_.flush();
  }
  epoch_sums_.clear();
  epoch_ns_.clear();
  epoch_counts_ = 0;
  epoch_total_sum_ = 0.0;
  epoch_in_stage_ = epoch + 1;
  step_in_epoch_ = 0;
  if (!cfg_.checkpoint_dir.empty())
    save_checkpoint(cfg_.checkpoint_dir + "/latest.ckpt");
}

void Trainer::run_pretrain_ae(const Stage& stage, size_t stage_index) {
  const size_t bs = static_cast<size_t>(cfg_.batch_size);
  for (int epoch = epoch_in_stage_; epoch < stage.epochs; ++epoch) {
    std::vector<const SkeletonSequence*> stream;
    if (stage.paired_data) {
      stream = epoch_order_members(stage_index, epoch);
    } else {
      for (size_t idx : epoch_order_sequences(stage_index, epoch))
        stream.push_back(&train_pool_[idx]);
    }
    if (stream.empty()) throw DataExhausted("pretrain_ae: no training data");
    int nb = static_cast<int>((stream.size() + bs - 1) / bs);
    for (int b = step_in_epoch_; b < nb; ++b) {
      size_t lo = b * bs, hi = std::min(stream.size(), lo + bs);
      std::vector<const SkeletonSequence*> batch(stream.begin() + lo,
                                                 stream.begin() + hi);
      LossReport rep = autoencoder_step(batch, false);
      after_substep(stage, stage_index, epoch, b, "autoencoder", rep);
      ++step_in_epoch_;
    }
    end_epoch(stage, stage_index, epoch);
  }
}

void Trainer::run_pretrain_classifiers(const Stage& stage,
                                       size_t stage_index) {
  const size_t bs = static_cast<size_t>(cfg_.batch_size);
  for (int epoch = epoch_in_stage_; epoch < stage.epochs; ++epoch) {
    std::vector<const SkeletonSequence*> stream;
    if (stage.paired_data) {
      stream = epoch_order_members(stage_index, epoch);
    } else {
      for (size_t idx : epoch_order_sequences(stage_index, epoch))
        stream.push_back(&train_pool_[idx]);
    }
    if (stream.empty()) throw DataExhausted("pretrain_cls: no training data");
    int nb = static_cast<int>((stream.size() + bs - 1) / bs);
    for (int b = step_in_epoch_; b < nb; ++b) {
      size_t lo = b * bs, hi = std::min(stream.size(), lo + bs);
      std::vector<const SkeletonSequence*> batch(stream.begin() + lo,
                                                 stream.begin() + hi);
      LossReport rep = classifier_step(batch);
      after_substep(stage, stage_index, epoch, b, "classifiers", rep);
      ++step_in_epoch_;
    }
    end_epoch(stage, stage_index, epoch);
  }
}

void Trainer::run_unpaired(const Stage& stage, size_t stage_index) {
  if (train_pool_.empty()) throw DataExhausted("unpaired: no training data");
  const size_t bs = static_cast<size_t>(cfg_.batch_size);
  for (int epoch = epoch_in_stage_; epoch < stage.epochs; ++epoch) {
    std::vector<size_t> order = epoch_order_sequences(stage_index, epoch);
    int nb = static_cast<int>((order.size() + bs - 1) / bs);
    for (int b = step_in_epoch_; b < nb; ++b) {
      size_t lo = b * bs, hi = std::min(order.size(), lo + bs);
      std::vector<const SkeletonSequence*> batch;
      for (size_t i = lo; i < hi; ++i) batch.push_back(&train_pool_[order[i]]);
      LossReport rep = autoencoder_step(batch, true);
      after_substep(stage, stage_index, epoch, b, "autoencoder", rep);
      LossReport rep2 = classifier_step(batch);
      after_substep(stage, stage_index, epoch, b, "classifiers", rep2);
      ++step_in_epoch_;
    }
    end_epoch(stage, stage_index, epoch);
  }
}

void Trainer::run_paired(const Stage& stage, size_t stage_index) {
  if (quads_.empty())
    throw NoValidPairs("paired stage: the training pool admits no quadruples");
  const size_t bs = static_cast<size_t>(cfg_.batch_size);
  for (int epoch = epoch_in_stage_; epoch < stage.epochs; ++epoch) {
    std::vector<PairedSample> order = epoch_order_paired(stage_index, epoch);
    int nb = static_cast<int>((order.size() + bs - 1) / bs);
    for (int b = step_in_epoch_; b < nb; ++b) {
      size_t lo = b * bs, hi = std::min(order.size(), lo + bs);
      std::vector<PairedSample> vbatch(order.begin() + lo, order.begin() + hi);
      LossReport rep = autoencoder_step_paired(vbatch);
      after_substep(stage, stage_index, epoch, b, "autoencoder", rep);
      std::vector<const SkeletonSequence*> inputs;
      for (const PairedSample& s : vbatch) {
        const PairedQuadruple& q = quads_[s.quad];
        inputs.push_back(s.swapped ? &q.s_bq : &q.s_ap);
        inputs.push_back(s.swapped ? &q.s_ap : &q.s_bq);
      }
      LossReport rep2 = classifier_step(inputs);
      after_substep(stage, stage_index, epoch, b, "classifiers", rep2);
      ++step_in_epoch_;
    }
    end_epoch(stage, stage_index, epoch);
  }
}

void Trainer::run_stage(size_t stage_index) {
  const auto& stages = cfg_.plan.stages;
  if (stage_index >= stages.size())
    throw InvalidConfig("stage index out of range");
  const Stage stage = stages[stage_index];
  switch (stage.id) {
    case StageId::pretrain_ae: run_pretrain_ae(stage, stage_index); break;
    case StageId::pretrain_cls:
      run_pretrain_classifiers(stage, stage_index);
      break;
    case StageId::unpaired: run_unpaired(stage, stage_index); break;
    case StageId::paired: run_paired(stage, stage_index); break;
  }
  stage_index_ = stage_index + 1;
  epoch_in_stage_ = 0;
  step_in_epoch_ = 0;
  if (!cfg_.checkpoint_dir.empty()) {
    std::string path = cfg_.checkpoint_dir + "/stage_" +
                       std::to_string(stage_index + 1) + "_" +
                       stage_name(stage.id) + ".ckpt";
    save_checkpoint(path);
    save_checkpoint(cfg_.checkpoint_dir + "/latest.ckpt");
    if (log_.is_open()) {
      json j;
      j["kind"] = "stage_complete";
      j["stage"] = stage_name(stage.id);
      j["stage_index"] = stage_index;
      j["checkpoint"] = path;
      log_line(j.dump());
      log_.flush();
    }
  }
}

void Trainer::run(const std::vector<std::string>& stage_filter) {
  while (stage_index_ < cfg_.plan.stages.size()) {
    size_t idx = stage_index_;
    bool selected = stage_filter.empty();
    for (const auto& name : stage_filter)
      if (name == stage_name(cfg_.plan.stages[idx].id)) selected = true;
    if (selected) {
      run_stage(idx);
    } else {
      stage_index_ = idx + 1;
      epoch_in_stage_ = 0;
      step_in_epoch_ = 0;
    }
  }
}

void Trainer::save_checkpoint(const std::string& path) {
  Archive a;
  a.strings["kind"] = "trainer";
  a.strings["net_config"] = network_config_echo(net_cfg_);
  a.ints["stage_index"] = static_cast<int64_t>(stage_index_);
  a.ints["epoch_in_stage"] = epoch_in_stage_;
  a.ints["step_in_epoch"] = step_in_epoch_;
  a.ints["global_step"] = global_step_;
  a.ints["seed"] = static_cast<int64_t>(cfg_.seed);

  for (Param* prm : model_.all_params())
    a.tensors.insert({"param." + prm->name, prm->value});
  for (auto& [name, buf] : model_.buffers())
    a.tensors.insert({"buffer." + name, *buf});

  Adam* opts[4] = {&opt_ae_, &opt_m_, &opt_p_, &opt_q_};
  for (int g = 0; g < 4; ++g) {
    Adam& opt = *opts[g];
    std::string base = std::string("opt.") + kGroupTags[g];
    a.ints[base + ".t"] = opt.step_count();
    for (size_t i = 0; i < opt.params().size(); ++i) {
      const std::string& pname = opt.params()[i]->name;
      a.tensors.insert({base + ".m." + pname, opt.first_moments()[i]});
      a.tensors.insert({base + ".v." + pname, opt.second_moments()[i]});
    }
  }

  a.ints["report.count"] = epoch_counts_;
  a.tensors.insert({"report.total_sum", Tensor::full({1}, epoch_total_sum_)});
  for (const auto& [k, val] : epoch_sums_) {
    a.tensors.insert({"report.sum." + k, Tensor::full({1}, val)});
    a.ints["report.n." + k] = epoch_ns_.at(k);
  }

  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_archive(path, a);
}

void Trainer::restore_checkpoint(const std::string& path) {
  Archive a = load_archive(path);
  if (take_string(a, "kind") != "trainer")
    throw CorruptCheckpoint("archive does not hold a trainer state");
  if (take_string(a, "net_config") != network_config_echo(net_cfg_))
    throw VersionMismatch(
        "checkpoint was written under a different network configuration");

  for (Param* prm : model_.all_params()) {
    const Tensor& t = take_tensor(a, "param." + prm->name);
    if (!t.same_shape(prm->value))
      throw CorruptCheckpoint("shape mismatch restoring " + prm->name);
    prm->value = t;
    prm->grad.zero();
  }
  for (auto& [name, buf] : model_.buffers()) {
    const Tensor& t = take_tensor(a, "buffer." + name);
    if (!t.same_shape(*buf))
      throw CorruptCheckpoint("shape mismatch restoring buffer " + name);
    *buf = t;
  }

  Adam* opts[4] = {&opt_ae_, &opt_m_, &opt_p_, &opt_q_};
  for (int g = 0; g < 4; ++g) {
    Adam& opt = *opts[g];
    std::string base = std::string("opt.") + kGroupTags[g];
    opt.set_step_count(take_int(a, base + ".t"));
    for (size_t i = 0; i < opt.params().size(); ++i) {
      const std::string& pname = opt.params()[i]->name;
      const Tensor& m = take_tensor(a, base + ".m." + pname);
      const Tensor& v = take_tensor(a, base + ".v." + pname);
      if (!m.same_shape(opt.first_moments()[i]) ||
          !v.same_shape(opt.second_moments()[i]))
        throw CorruptCheckpoint("shape mismatch restoring moments of " + pname);
      opt.first_moments()[i] = m;
      opt.second_moments()[i] = v;
    }
  }

  stage_index_ = static_cast<size_t>(take_int(a, "stage_index"));
  epoch_in_stage_ = static_cast<int>(take_int(a, "epoch_in_stage"));
  step_in_epoch_ = static_cast<int>(take_int(a, "step_in_epoch"));
  global_step_ = take_int(a, "global_step");
  epoch_counts_ = take_int(a, "report.count");
  epoch_total_sum_ = take_tensor(a, "report.total_sum").data()[0];
  epoch_sums_.clear();
  epoch_ns_.clear();
  const std::string prefix = "report.sum.";
  for (const auto& [key, t] : a.tensors) {
    if (key.rfind(prefix, 0) != 0) continue;
    std::string k = key.substr(prefix.size());
    epoch_sums_[k] = t.data()[0];
    epoch_ns_[k] = take_int(a, "report.n." + k);
  }
}

}  // namespace pmrt
