#include "pmrt/network.hpp"

#include <cmath>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

// Sequential init stream per component, so adding a component never shifts
// the draws of another.
enum ComponentTag : uint64_t {
  kEncMotion = 1,
  kEncPrivacy,
  kDecoder,
  kClsMotion,
  kClsPrivacy,
  kQc
};

Rng component_rng(uint64_t seed, ComponentTag tag) {
  return Rng(mix_seed(seed, 0x696e6974, tag));  // stream tag: init
}

int qc_flatten_length(int joints) {
  int l = joints * 3;
  for (int i = 0; i < 3; ++i) l = (l + 1) / 2;
  return l;
}

}  // namespace

void NetworkConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidConfig("network config: " + what);
  };
  check(encoder_channels.size() >= 2, "encoder needs at least one conv");
  check(encoder_channels.front() == frames,
        "encoder input channels must equal the frame count");
  check(encoder_channels.back() == embedding_channels,
        "encoder output must equal C_e");
  check(decoder_channels.size() >= 2, "decoder needs at least one conv");
  check(decoder_channels.front() == 2 * embedding_channels,
        "decoder input must equal 2*C_e (concatenated embeddings)");
  check(decoder_channels.back() == frames,
        "decoder output channels must equal the frame count");
  check(classifier_channels.size() >= 2, "classifier needs convs");
  check(classifier_channels.front() == embedding_channels,
        "classifier input must equal C_e");
  check(!classifier_dense.empty() &&
            classifier_dense.front() == classifier_channels.back(),
        "classifier dense input must equal its last conv width");
  check(qc_channels.size() == 5, "quality controller wants four convs");
  check(qc_channels.front() == frames,
        "quality controller input channels must equal the frame count");
  check(qc_dense.size() == 3 && qc_dense.back() == 1,
        "quality controller dense chain must end in one score");
  check(qc_dense.front() == qc_channels.back() * qc_flatten_length(joints),
        "quality controller flatten width disagrees with the length chain");
  check(embedding_length % 2 == 0, "L_e must be even (plane is (L_e/2, 2))");
  check(embedding_length / 2 >= 1 && embedding_length / 2 <= joints,
        "L_e/2 must fit the joint axis");
  check(joints >= 2 && frames >= 2, "J and T must be at least 2");
  check(y_action >= 2, "Y_action must be at least 2");
  check(y_actor >= 2, "Y_actor must be at least 2");
  check(leaky_slope >= 0.0 && leaky_slope < 1.0, "leaky slope out of range");
}

// ---------------------------------------------------------------- Encoder

Encoder::Encoder(const std::string& name, const NetworkConfig& cfg)
    : act_(cfg.leaky_slope),
      pool_(cfg.embedding_length / 2, 2),
      joints_(cfg.joints),
      frames_(cfg.frames),
      emb_h_(cfg.embedding_length / 2),
      emb_w_(2) {
  for (size_t i = 0; i + 1 < cfg.encoder_channels.size(); ++i)
    convs_.emplace_back(name + ".conv" + std::to_string(i + 1),
                        cfg.encoder_channels[i], cfg.encoder_channels[i + 1],
                        3, PadMode::reflect);
}

Tensor Encoder::forward(const Tensor& x, Ctx* ctx) const {
  x.require_shape({x.dim(0), static_cast<size_t>(frames_),
                   static_cast<size_t>(joints_), 3},
                  "encoder input");
  ctx->conv.resize(convs_.size());
  ctx->act.resize(convs_.size());
  Tensor h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(h, &ctx->conv[i]);
    h = act_.forward(h, &ctx->act[i]);
  }
  h = pool_.forward(h, &ctx->pool);
  return h.reshaped({h.dim(0), h.dim(1),
                     static_cast<size_t>(emb_h_ * emb_w_)});
}

Tensor Encoder::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  Tensor d = dout.reshaped({dout.dim(0), dout.dim(1),
                            static_cast<size_t>(emb_h_),
                            static_cast<size_t>(emb_w_)});
  d = pool_.backward(d, ctx.pool);
  for (size_t i = convs_.size(); i-- > 0;) {
    d = act_.backward(d, ctx.act[i]);
    d = convs_[i].backward(d, ctx.conv[i], train);
  }
  return d;
}

void Encoder::init(Rng& rng) {
  for (auto& c : convs_) c.init(rng);
}

std::vector<Param*> Encoder::params() {
  std::vector<Param*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

// ---------------------------------------------------------------- Decoder

Decoder::Decoder(const std::string& name, const NetworkConfig& cfg)
    : act_(cfg.leaky_slope),
      resize_(cfg.joints, 3),
      joints_(cfg.joints),
      frames_(cfg.frames),
      emb_h_(cfg.embedding_length / 2),
      emb_w_(2) {
  for (size_t i = 0; i + 1 < cfg.decoder_channels.size(); ++i)
    convs_.emplace_back(name + ".conv" + std::to_string(i + 1),
                        cfg.decoder_channels[i], cfg.decoder_channels[i + 1],
                        3, PadMode::reflect);
}

Tensor Decoder::forward(const Tensor& emb_cat, Ctx* ctx) const {
  emb_cat.require_shape({emb_cat.dim(0), convs_.front().weight.value.dim(1),
                         static_cast<size_t>(emb_h_ * emb_w_)},
                        "decoder input");
  ctx->conv.resize(convs_.size());
  ctx->act.resize(convs_.size());
  Tensor h = emb_cat.reshaped({emb_cat.dim(0), emb_cat.dim(1),
                               static_cast<size_t>(emb_h_),
                               static_cast<size_t>(emb_w_)});
  h = convs_[0].forward(h, &ctx->conv[0]);
  h = act_.forward(h, &ctx->act[0]);
  h = resize_.forward(h, &ctx->resize);
  for (size_t i = 1; i < convs_.size(); ++i) {
    h = convs_[i].forward(h, &ctx->conv[i]);
    h = act_.forward(h, &ctx->act[i]);
  }
  return h;  // (N, T, J, 3)
}

Tensor Decoder::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  Tensor d = dout;
  for (size_t i = convs_.size(); i-- > 1;) {
    d = act_.backward(d, ctx.act[i]);
    d = convs_[i].backward(d, ctx.conv[i], train);
  }
  d = resize_.backward(d, ctx.resize);
  d = act_.backward(d, ctx.act[0]);
  d = convs_[0].backward(d, ctx.conv[0], train);
  return d.reshaped({d.dim(0), d.dim(1),
                     static_cast<size_t>(emb_h_ * emb_w_)});
}

void Decoder::init(Rng& rng) {
  for (auto& c : convs_) c.init(rng);
}

std::vector<Param*> Decoder::params() {
  std::vector<Param*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

// ---------------------------------------------------- EmbeddingClassifier

EmbeddingClassifier::EmbeddingClassifier(const std::string& name,
                                         const NetworkConfig& cfg,
                                         int y_classes)
    : relu_(0.0), y_classes_(y_classes) {
  for (size_t i = 0; i + 1 < cfg.classifier_channels.size(); ++i) {
    convs_.emplace_back(name + ".conv" + std::to_string(i + 1),
                        cfg.classifier_channels[i],
                        cfg.classifier_channels[i + 1], 3);
    bns_.emplace_back(name + ".bn" + std::to_string(i + 1),
                      cfg.classifier_channels[i + 1]);
  }
  std::vector<int> widths = cfg.classifier_dense;
  widths.push_back(y_classes);
  for (size_t i = 0; i + 1 < widths.size(); ++i)
    dense_.emplace_back(name + ".dense" + std::to_string(i + 1), widths[i],
                        widths[i + 1]);
}

Tensor EmbeddingClassifier::forward(const Tensor& x, Ctx* ctx,
                                    bool training) {
  ctx->conv.resize(convs_.size());
  ctx->bn.resize(bns_.size());
  ctx->act.resize(convs_.size());
  ctx->dense.resize(dense_.size());
  ctx->dense_act.resize(dense_.size() - 1);
  Tensor h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(h, &ctx->conv[i]);
    h = bns_[i].forward(h, &ctx->bn[i], training);
    h = relu_.forward(h, &ctx->act[i]);
  }
  h = GlobalAvgPool1d::forward(h, &ctx->pool);
  for (size_t i = 0; i + 1 < dense_.size(); ++i) {
    h = dense_[i].forward(h, &ctx->dense[i]);
    h = relu_.forward(h, &ctx->dense_act[i]);
  }
  h = dense_.back().forward(h, &ctx->dense.back());
  return Softmax::forward(h, &ctx->softmax);
}

Tensor EmbeddingClassifier::backward(const Tensor& dprobs, const Ctx& ctx,
                                     bool train) {
  Tensor d = Softmax::backward(dprobs, ctx.softmax);
  d = dense_.back().backward(d, ctx.dense.back(), train);
  for (size_t i = dense_.size() - 1; i-- > 0;) {
    d = relu_.backward(d, ctx.dense_act[i]);
    d = dense_[i].backward(d, ctx.dense[i], train);
  }
  d = GlobalAvgPool1d::backward(d, ctx.pool);
  for (size_t i = convs_.size(); i-- > 0;) {
    d = relu_.backward(d, ctx.act[i]);
    d = bns_[i].backward(d, ctx.bn[i], train);
    d = convs_[i].backward(d, ctx.conv[i], train);
  }
  return d;
}

void EmbeddingClassifier::init(Rng& rng) {
  for (auto& c : convs_) c.init(rng);
  for (auto& d : dense_) d.init(rng);
}

std::vector<Param*> EmbeddingClassifier::params() {
  std::vector<Param*> out;
  for (size_t i = 0; i < convs_.size(); ++i) {
    out.push_back(&convs_[i].weight);
    out.push_back(&convs_[i].bias);
    out.push_back(&bns_[i].gamma);
    out.push_back(&bns_[i].beta);
  }
  for (auto& d : dense_) {
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> EmbeddingClassifier::buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& bn : bns_) {
    out.emplace_back(bn.gamma.name + ".running_mean", &bn.running_mean);
    out.emplace_back(bn.gamma.name + ".running_var", &bn.running_var);
  }
  return out;
}

// ------------------------------------------------------ QualityController

QualityController::QualityController(const std::string& name,
                                     const NetworkConfig& cfg)
    : act_(cfg.leaky_slope), relu_(0.0) {
  for (size_t i = 0; i + 1 < cfg.qc_channels.size(); ++i)
    convs_.emplace_back(name + ".conv" + std::to_string(i + 1),
                        cfg.qc_channels[i], cfg.qc_channels[i + 1], 3,
                        PadMode::reflect);
  for (size_t i = 0; i + 1 < cfg.qc_dense.size(); ++i)
    dense_.emplace_back(name + ".dense" + std::to_string(i + 1),
                        cfg.qc_dense[i], cfg.qc_dense[i + 1]);
}

Tensor QualityController::forward(const Tensor& x, Ctx* ctx) const {
  ctx->conv.resize(convs_.size());
  ctx->act.resize(convs_.size());
  ctx->pool.resize(convs_.size() - 1);
  ctx->dense.resize(dense_.size());
  Tensor h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(h, &ctx->conv[i]);
    h = act_.forward(h, &ctx->act[i]);
    if (i + 1 < convs_.size()) h = MaxPool1d::forward(h, &ctx->pool[i]);
  }
  Tensor flat = h.reshaped({h.dim(0), h.dim(1) * h.dim(2)});
  Tensor d1 = dense_[0].forward(flat, &ctx->dense[0]);
  d1 = relu_.forward(d1, &ctx->dense_act);
  Tensor d2 = dense_[1].forward(d1, &ctx->dense[1]);
  return Sigmoid::forward(d2, &ctx->sigmoid);
}

Tensor QualityController::backward(const Tensor& dout, const Ctx& ctx,
                                   bool train) {
  Tensor d = Sigmoid::backward(dout, ctx.sigmoid);
  d = dense_[1].backward(d, ctx.dense[1], train);
  d = relu_.backward(d, ctx.dense_act);
  d = dense_[0].backward(d, ctx.dense[0], train);
  // Un-flatten back to the last conv stage's (N, C, L); no pool follows it.
  d = d.reshaped({d.dim(0), static_cast<size_t>(convs_.back().c_out),
                  ctx.conv.back().l});
  for (size_t i = convs_.size(); i-- > 0;) {
    if (i + 1 < convs_.size()) d = MaxPool1d::backward(d, ctx.pool[i]);
    d = act_.backward(d, ctx.act[i]);
    d = convs_[i].backward(d, ctx.conv[i], train);
  }
  return d;
}

void QualityController::init(Rng& rng) {
  for (auto& c : convs_) c.init(rng);
  for (auto& d : dense_) d.init(rng);
}

std::vector<Param*> QualityController::params() {
  std::vector<Param*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  for (auto& d : dense_) {
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  return out;
}

// ----------------------------------------------------------------- model

namespace {

const NetworkConfig& validated(const NetworkConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

PmrModel::PmrModel(const NetworkConfig& cfg)
    : config(validated(cfg)),
      enc_motion("enc_m", cfg),
      enc_privacy("enc_p", cfg),
      decoder("dec", cfg),
      cls_motion("cls_m", cfg, cfg.y_action),
      cls_privacy("cls_p", cfg, cfg.y_actor),
      qc("qc", cfg) {}

void PmrModel::init_parameters(uint64_t seed) {
  Rng r1 = component_rng(seed, kEncMotion);
  enc_motion.init(r1);
  Rng r2 = component_rng(seed, kEncPrivacy);
  enc_privacy.init(r2);
  Rng r3 = component_rng(seed, kDecoder);
  decoder.init(r3);
  Rng r4 = component_rng(seed, kClsMotion);
  cls_motion.init(r4);
  Rng r5 = component_rng(seed, kClsPrivacy);
  cls_privacy.init(r5);
  Rng r6 = component_rng(seed, kQc);
  qc.init(r6);
}

Tensor PmrModel::encode_motion(const Tensor& x, Encoder::Ctx* ctx) const {
  return enc_motion.forward(x, ctx);
}

Tensor PmrModel::encode_privacy(const Tensor& x, Encoder::Ctx* ctx) const {
  return enc_privacy.forward(x, ctx);
}

Tensor PmrModel::decode(const Tensor& motion_emb, const Tensor& privacy_emb,
                        Decoder::Ctx* ctx) const {
  motion_emb.require_shape(privacy_emb.shape(), "embedding pair");
  size_t n = motion_emb.dim(0), c = motion_emb.dim(1), l = motion_emb.dim(2);
  Tensor cat({n, 2 * c, l});
  for (size_t s = 0; s < n; ++s) {
    std::copy(motion_emb.data() + s * c * l, motion_emb.data() + (s + 1) * c * l,
              cat.data() + s * 2 * c * l);
    std::copy(privacy_emb.data() + s * c * l,
              privacy_emb.data() + (s + 1) * c * l,
              cat.data() + (s * 2 + 1) * c * l);
  }
  return decoder.forward(cat, ctx);
}

EmbeddingPair PmrModel::encode(const SkeletonSequence& seq) const {
  Tensor net = to_net_input(seq);
  Tensor batch = net.reshaped({1, net.dim(0), net.dim(1), net.dim(2)});
  Encoder::Ctx ctx_m, ctx_p;
  Tensor m = enc_motion.forward(batch, &ctx_m);
  Tensor p = enc_privacy.forward(batch, &ctx_p);
  return {m.reshaped({m.dim(1), m.dim(2)}), p.reshaped({p.dim(1), p.dim(2)})};
}

SkeletonSequence PmrModel::decode_sequence(const Tensor& motion_emb,
                                           const Tensor& privacy_emb) const {
  Tensor m = motion_emb.reshaped({1, motion_emb.dim(0), motion_emb.dim(1)});
  Tensor p = privacy_emb.reshaped({1, privacy_emb.dim(0), privacy_emb.dim(1)});
  Decoder::Ctx ctx;
  Tensor out = decode(m, p, &ctx);
  return from_net_output(out.reshaped({out.dim(1), out.dim(2), out.dim(3)}),
                         config.joints);
}

std::vector<double> PmrModel::classify_action(const Tensor& emb) {
  Tensor x = emb.reshaped({1, emb.dim(0), emb.dim(1)});
  EmbeddingClassifier::Ctx ctx;
  Tensor probs = cls_motion.forward(x, &ctx, false);
  return {probs.data(), probs.data() + probs.size()};
}

std::vector<double> PmrModel::classify_actor(const Tensor& emb) {
  Tensor x = emb.reshaped({1, emb.dim(0), emb.dim(1)});
  EmbeddingClassifier::Ctx ctx;
  Tensor probs = cls_privacy.forward(x, &ctx, false);
  return {probs.data(), probs.data() + probs.size()};
}

double PmrModel::discriminate(const SkeletonSequence& seq) {
  Tensor net = to_net_input(seq);
  Tensor batch = net.reshaped({1, net.dim(0), net.dim(1), net.dim(2)});
  QualityController::Ctx ctx;
  Tensor score = qc.forward(flatten_joints(batch), &ctx);
  return score.data()[0];
}

std::vector<Param*> PmrModel::group_autoencoder() {
  std::vector<Param*> out = enc_motion.params();
  for (auto* p : enc_privacy.params()) out.push_back(p);
  for (auto* p : decoder.params()) out.push_back(p);
  return out;
}

std::vector<Param*> PmrModel::group_motion_cls() { return cls_motion.params(); }

std::vector<Param*> PmrModel::group_privacy_cls() {
  return cls_privacy.params();
}

std::vector<Param*> PmrModel::group_qc() { return qc.params(); }

std::vector<Param*> PmrModel::all_params() {
  std::vector<Param*> out = group_autoencoder();
  for (auto* p : group_motion_cls()) out.push_back(p);
  for (auto* p : group_privacy_cls()) out.push_back(p);
  for (auto* p : group_qc()) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> PmrModel::buffers() {
  auto out = cls_motion.buffers();
  for (auto& b : cls_privacy.buffers()) out.push_back(b);
  return out;
}

Tensor PmrModel::flatten_joints(const Tensor& x) {
  if (x.ndim() != 4)
    throw ShapeMismatch("flatten_joints wants (N, T, J, 3), got " +
                        x.shape_str());
  return x.reshaped({x.dim(0), x.dim(1), x.dim(2) * x.dim(3)});
}

Tensor batch_to_net(const std::vector<const SkeletonSequence*>& seqs) {
  if (seqs.empty()) throw InvalidConfig("batch_to_net: empty batch");
  size_t t = static_cast<size_t>(seqs[0]->frame_count());
  size_t j = static_cast<size_t>(seqs[0]->joint_count());
  Tensor out({seqs.size(), t, j, 3});
  for (size_t s = 0; s < seqs.size(); ++s) {
    Tensor net = to_net_input(*seqs[s]);
    net.require_shape({t, j, 3}, "batch_to_net member");
    std::copy(net.data(), net.data() + net.size(),
              out.data() + s * t * j * 3);
  }
  return out;
}

size_t count_params(const std::vector<Param*>& params) {
  size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

}  // namespace pmrt
