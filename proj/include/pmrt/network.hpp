#ifndef PMRT_NETWORK_HPP
#define PMRT_NETWORK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmrt/layers.hpp"
#include "pmrt/sequence.hpp"
#include "pmrt/tensor.hpp"

namespace pmrt {

// Channel schedules and label widths for all six components. The spatial
// story, pinned by shape tests:
//  - network input is (T, J, 3): frames on the channel axis, joints and
//    coordinates spanning the 2-D plane;
//  - encoder convs keep (J, 3); one terminal adaptive max pool maps the
//    plane to (L_e/2, 2), so the embedding is (C_e, L_e);
//  - decoder consumes the two concatenated embeddings as (2*C_e, L_e/2, 2),
//    resizes to (J, 3) after its first stage, and emits (T, J, 3);
//  - the quality controller reads (T, J*3) and halves the length (ceil)
//    after each of its first three convs, which lands its flatten width
//    exactly on qc_dense[0].
struct NetworkConfig {
  std::vector<int> encoder_channels = {75, 12, 24, 32, 256};
  std::vector<int> decoder_channels = {512, 256, 128, 96, 75};
  std::vector<int> classifier_channels = {256, 128, 256, 512};
  std::vector<int> classifier_dense = {512, 1024, 512};  // then -> Y
  std::vector<int> qc_channels = {75, 64, 32, 16, 8};
  std::vector<int> qc_dense = {80, 32, 1};
  int embedding_channels = 256;  // C_e
  int embedding_length = 32;     // L_e
  int joints = 25;
  int frames = 75;
  int y_action = 0;
  int y_actor = 0;
  double leaky_slope = 0.2;

  void validate() const;  // throws InvalidConfig on an inconsistent chain
};

// Both embeddings of one sequence, each (C_e, L_e).
struct EmbeddingPair {
  Tensor motion;
  Tensor privacy;
};

// Four reflection-padded 3x3 conv stages with leaky activations at constant
// (J, 3), then an adaptive max pool onto (L_e/2, 2). Output (N, C_e, L_e).
class Encoder {
 public:
  struct Ctx {
    std::vector<Conv2d::Ctx> conv;
    std::vector<LeakyReLU::Ctx> act;
    AdaptiveMaxPool2d::Ctx pool;
  };

  Encoder(const std::string& name, const NetworkConfig& cfg);
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // x (N, T, J, 3)
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);
  std::vector<Param*> params();

 private:
  std::vector<Conv2d> convs_;
  LeakyReLU act_;
  AdaptiveMaxPool2d pool_;
  int joints_, frames_, emb_h_, emb_w_;
};

// Consumes concatenated embeddings (N, 2*C_e, L_e): the map is viewed as
// (2*C_e, L_e/2, 2), convolved once, resized to (J, 3) by nearest
// neighbour, then refined by three more conv stages. Every stage is a
// reflection-padded 3x3 conv with a leaky activation. Output (N, T, J, 3).
class Decoder {
 public:
  struct Ctx {
    std::vector<Conv2d::Ctx> conv;
    std::vector<LeakyReLU::Ctx> act;
    NearestResize2d::Ctx resize;
  };

  Decoder(const std::string& name, const NetworkConfig& cfg);
  Tensor forward(const Tensor& emb_cat, Ctx* ctx) const;
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);
  std::vector<Param*> params();

 private:
  std::vector<Conv2d> convs_;
  LeakyReLU act_;
  NearestResize2d resize_;
  int joints_, frames_, emb_h_, emb_w_;
};

// Three transposed 1-D convs with batch norm and plain rectifier over the
// L_e axis, a global average pool, and a three-layer dense head ending in a
// softmax over Y classes. Training mode drives the batch-norm statistics.
class EmbeddingClassifier {
 public:
  struct Ctx {
    std::vector<TransposedConv1d::Ctx> conv;
    std::vector<BatchNorm1d::Ctx> bn;
    std::vector<LeakyReLU::Ctx> act;
    GlobalAvgPool1d::Ctx pool;
    std::vector<Dense::Ctx> dense;
    std::vector<LeakyReLU::Ctx> dense_act;
    Softmax::Ctx softmax;
  };

  EmbeddingClassifier(const std::string& name, const NetworkConfig& cfg,
                      int y_classes);
  // x (N, C_e, L_e) -> (N, Y) probabilities.
  Tensor forward(const Tensor& x, Ctx* ctx, bool training);
  Tensor backward(const Tensor& dprobs, const Ctx& ctx, bool train);
  void init(Rng& rng);
  std::vector<Param*> params();
  std::vector<std::pair<std::string, Tensor*>> buffers();

 private:
  std::vector<TransposedConv1d> convs_;
  std::vector<BatchNorm1d> bns_;
  LeakyReLU relu_;
  std::vector<Dense> dense_;
  int y_classes_;
};

// Discriminator: reflection-padded 1-D convs over (N, T, J*3) with leaky
// activations, halving the length after each of the first three stages,
// then dense 80 -> 32 -> 1 with a sigmoid. Output (N, 1) in (0, 1).
class QualityController {
 public:
  struct Ctx {
    std::vector<Conv1d::Ctx> conv;
    std::vector<LeakyReLU::Ctx> act;
    std::vector<MaxPool1d::Ctx> pool;
    std::vector<Dense::Ctx> dense;
    LeakyReLU::Ctx dense_act;
    Sigmoid::Ctx sigmoid;
  };

  QualityController(const std::string& name, const NetworkConfig& cfg);
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // x (N, T, J*3)
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);
  std::vector<Param*> params();

 private:
  std::vector<Conv1d> convs_;
  LeakyReLU act_;
  std::vector<Dense> dense_;
  LeakyReLU relu_;
};

// The full model: motion encoder, privacy encoder (identical architecture,
// independent parameters), decoder, both embedding classifiers, and the
// quality controller. Optimizer groups {E_M, E_P, D}, {M}, {P}, {Q} are
// disjoint by construction.
class PmrModel {
 public:
  explicit PmrModel(const NetworkConfig& cfg);

  void init_parameters(uint64_t seed);

  // Batched building blocks for training. Sequences enter in network layout
  // (N, T, J, 3).
  Tensor encode_motion(const Tensor& x, Encoder::Ctx* ctx) const;
  Tensor encode_privacy(const Tensor& x, Encoder::Ctx* ctx) const;
  Tensor decode(const Tensor& motion_emb, const Tensor& privacy_emb,
                Decoder::Ctx* ctx) const;  // embeddings (N, C_e, L_e)

  // Single-sequence inference conveniences (eval mode, contexts internal).
  EmbeddingPair encode(const SkeletonSequence& seq) const;
  SkeletonSequence decode_sequence(const Tensor& motion_emb,
                                   const Tensor& privacy_emb) const;
  std::vector<double> classify_action(const Tensor& emb);  // M head
  std::vector<double> classify_actor(const Tensor& emb);   // P head
  double discriminate(const SkeletonSequence& seq);

  NetworkConfig config;
  Encoder enc_motion;
  Encoder enc_privacy;
  Decoder decoder;
  EmbeddingClassifier cls_motion;   // M: action labels
  EmbeddingClassifier cls_privacy;  // P: actor labels
  QualityController qc;

  std::vector<Param*> group_autoencoder();   // E_M + E_P + D
  std::vector<Param*> group_motion_cls();    // M
  std::vector<Param*> group_privacy_cls();   // P
  std::vector<Param*> group_qc();            // Q
  std::vector<Param*> all_params();
  std::vector<std::pair<std::string, Tensor*>> buffers();

  // Splits a concatenated (N, T, J*3) view out of (N, T, J, 3) for the
  // discriminator.
  static Tensor flatten_joints(const Tensor& x);
};

// Converts a batch of sequences to network layout (N, T, J, 3).
Tensor batch_to_net(const std::vector<const SkeletonSequence*>& seqs);

size_t count_params(const std::vector<Param*>& params);

}  // namespace pmrt

#endif  // PMRT_NETWORK_HPP
