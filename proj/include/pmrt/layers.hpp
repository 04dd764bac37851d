#ifndef PMRT_LAYERS_HPP
#define PMRT_LAYERS_HPP

#include <string>
#include <vector>

#include "pmrt/rng.hpp"
#include "pmrt/tensor.hpp"

namespace pmrt {

// One learnable tensor. grad accumulates across a step and is cleared by the
// optimizer.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, const std::vector<size_t>& shape)
      : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.zero(); }
};

enum class PadMode { zero, reflect };

// All layers run in double precision on batched tensors with a leading
// sample axis. forward() fills the layer's context object with whatever the
// matching backward() needs; backward() returns d loss / d input and, when
// train is set, accumulates parameter gradients. Layers hold no per-call
// state, so one layer instance serves any number of in-flight forwards as
// long as each has its own context.

// 3x3 (2-D) size-preserving convolution, stride 1, pad 1.
class Conv2d {
 public:
  struct Ctx {
    Tensor col;  // (N, C_in*K*K, H*W)
    size_t n = 0, h = 0, w = 0;
  };

  Conv2d(const std::string& name, int c_in, int c_out, int k, PadMode pad);
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // x (N, C_in, H, W)
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);

  Param weight;  // (C_out, C_in, K*K)
  Param bias;    // (C_out)
  int c_in, c_out, k;
  PadMode pad;
};

// k-sized (1-D) size-preserving convolution, stride 1, pad (k-1)/2.
class Conv1d {
 public:
  struct Ctx {
    Tensor col;  // (N, C_in*K, L)
    size_t n = 0, l = 0;
  };

  Conv1d(const std::string& name, int c_in, int c_out, int k, PadMode pad);
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // x (N, C_in, L)
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);

  Param weight;  // (C_out, C_in, K)
  Param bias;    // (C_out)
  int c_in, c_out, k;
  PadMode pad;
};

// 1-D transposed convolution, stride 1, zero pad (k-1)/2 (size-preserving).
// Stored in transposed-conv layout (C_in, C_out, K); evaluated as the
// equivalent flipped-kernel convolution.
class TransposedConv1d {
 public:
  using Ctx = Conv1d::Ctx;

  TransposedConv1d(const std::string& name, int c_in, int c_out, int k);
  Tensor forward(const Tensor& x, Ctx* ctx) const;
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);

  Param weight;  // (C_in, C_out, K)
  Param bias;    // (C_out)
  int c_in, c_out, k;

 private:
  Tensor flipped_weight() const;  // (C_out, C_in, K) conv-layout view
};

// Per-channel batch normalization over (N, C, L). Training mode uses batch
// statistics and updates the running estimates; eval mode reads the running
// estimates and mutates nothing (frozen components must stay bitwise
// constant).
class BatchNorm1d {
 public:
  struct Ctx {
    Tensor x_hat;             // (N, C, L)
    std::vector<double> inv_std;  // per channel (train mode)
    bool training = false;
  };

  explicit BatchNorm1d(const std::string& name, int channels);
  Tensor forward(const Tensor& x, Ctx* ctx, bool training);
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);

  Param gamma, beta;
  Tensor running_mean, running_var;  // buffers, not optimized
  int channels;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Max pooling, kernel 2 stride 2, ceil mode (a trailing odd element forms
// its own window). Ties route the gradient to the first maximum.
class MaxPool1d {
 public:
  struct Ctx {
    std::vector<int> argmax;  // flat source index per output element
    std::vector<size_t> in_shape;
  };

  static Tensor forward(const Tensor& x, Ctx* ctx);  // (N, C, L)
  static Tensor backward(const Tensor& dout, const Ctx& ctx);
};

// Max pooling onto a fixed (OH, OW) grid; window i covers
// [floor(i*in/out), ceil((i+1)*in/out)). Windows may overlap, so backward
// accumulates. Ties route to the first maximum.
class AdaptiveMaxPool2d {
 public:
  struct Ctx {
    std::vector<int> argmax;
    std::vector<size_t> in_shape;
  };

  AdaptiveMaxPool2d(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // (N, C, H, W)
  Tensor backward(const Tensor& dout, const Ctx& ctx) const;

 private:
  int out_h_, out_w_;
};

// Nearest-neighbour resize to a fixed (OH, OW) grid: output (i, j) reads
// source (floor(i*IH/OH), floor(j*IW/OW)).
class NearestResize2d {
 public:
  struct Ctx {
    std::vector<size_t> in_shape;
  };

  NearestResize2d(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
  Tensor forward(const Tensor& x, Ctx* ctx) const;  // (N, C, H, W)
  Tensor backward(const Tensor& dout, const Ctx& ctx) const;

 private:
  int out_h_, out_w_;
};

// Mean over the length axis: (N, C, L) -> (N, C).
class GlobalAvgPool1d {
 public:
  struct Ctx {
    std::vector<size_t> in_shape;
  };

  static Tensor forward(const Tensor& x, Ctx* ctx);
  static Tensor backward(const Tensor& dout, const Ctx& ctx);
};

// Fully connected layer over (N, F_in).
class Dense {
 public:
  struct Ctx {
    Tensor input;
  };

  Dense(const std::string& name, int f_in, int f_out);
  Tensor forward(const Tensor& x, Ctx* ctx) const;
  Tensor backward(const Tensor& dout, const Ctx& ctx, bool train);
  void init(Rng& rng);

  Param weight;  // (F_out, F_in)
  Param bias;    // (F_out)
  int f_in, f_out;
};

// Elementwise max(x, slope*x); slope 0 gives plain ReLU.
class LeakyReLU {
 public:
  struct Ctx {
    Tensor input;
  };

  explicit LeakyReLU(double slope) : slope_(slope) {}
  Tensor forward(const Tensor& x, Ctx* ctx) const;
  Tensor backward(const Tensor& dout, const Ctx& ctx) const;

 private:
  double slope_;
};

// Elementwise logistic function.
class Sigmoid {
 public:
  struct Ctx {
    Tensor output;
  };

  static Tensor forward(const Tensor& x, Ctx* ctx);
  static Tensor backward(const Tensor& dout, const Ctx& ctx);
};

// Row-wise softmax over (N, F), max-shifted for stability.
class Softmax {
 public:
  struct Ctx {
    Tensor output;
  };

  static Tensor forward(const Tensor& x, Ctx* ctx);
  static Tensor backward(const Tensor& dout, const Ctx& ctx);
};

}  // namespace pmrt

#endif  // PMRT_LAYERS_HPP
