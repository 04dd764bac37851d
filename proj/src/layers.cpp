#include "pmrt/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

// Source index for tap k at output position o on an axis of length len,
// or -1 for a zero-padded sample. Reflection mirrors without repeating the
// edge sample, which requires pad < len.
std::vector<int> pad_map_1d(int len, int k, PadMode mode) {
  int pad = (k - 1) / 2;
  if (mode == PadMode::reflect && pad >= len)
    throw ShapeMismatch("reflection pad needs axis length > pad");
  std::vector<int> map(static_cast<size_t>(len) * k);
  for (int o = 0; o < len; ++o)
    for (int t = 0; t < k; ++t) {
      int src = o + t - pad;
      if (src < 0) src = mode == PadMode::reflect ? -src : -1;
      else if (src >= len) src = mode == PadMode::reflect ? 2 * len - 2 - src : -1;
      map[static_cast<size_t>(o) * k + t] = src;
    }
  return map;
}

void he_init(Param& p, double fan_in, Rng& rng) {
  double std = std::sqrt(2.0 / fan_in);
  for (size_t i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = rng.normal(0.0, std);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(const std::string& name, int c_in_, int c_out_, int k_,
               PadMode pad_)
    : weight(name + ".weight",
             {static_cast<size_t>(c_out_), static_cast<size_t>(c_in_),
              static_cast<size_t>(k_ * k_)}),
      bias(name + ".bias", {static_cast<size_t>(c_out_)}),
      c_in(c_in_),
      c_out(c_out_),
      k(k_),
      pad(pad_) {}

void Conv2d::init(Rng& rng) {
  he_init(weight, static_cast<double>(c_in * k * k), rng);
  bias.value.zero();
}

Tensor Conv2d::forward(const Tensor& x, Ctx* ctx) const {
  if (x.ndim() != 4 || x.dim(1) != static_cast<size_t>(c_in))
    throw ShapeMismatch(weight.name + ": input " + x.shape_str());
  size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  size_t spatial = h * w;
  size_t rows = static_cast<size_t>(c_in) * k * k;

  auto map_h = pad_map_1d(static_cast<int>(h), k, pad);
  auto map_w = pad_map_1d(static_cast<int>(w), k, pad);

  ctx->col = Tensor({n, rows, spatial});
  ctx->n = n;
  ctx->h = h;
  ctx->w = w;
  const double* xp = x.data();
  double* colp = ctx->col.data();
  for (size_t s = 0; s < n; ++s)
    for (size_t ci = 0; ci < static_cast<size_t>(c_in); ++ci) {
      const double* plane = xp + (s * c_in + ci) * spatial;
      for (int kh = 0; kh < k; ++kh)
        for (int kw = 0; kw < k; ++kw) {
          double* row = colp + ((s * rows) +
                                (ci * k * k + static_cast<size_t>(kh) * k + kw)) *
                                   spatial;
          for (size_t oh = 0; oh < h; ++oh) {
            int hs = map_h[oh * k + kh];
            for (size_t ow = 0; ow < w; ++ow) {
              int ws = map_w[ow * k + kw];
              row[oh * w + ow] =
                  (hs < 0 || ws < 0) ? 0.0 : plane[hs * w + ws];
            }
          }
        }
    }

  Tensor out({n, static_cast<size_t>(c_out), h, w});
  MapC wm(weight.value.data(), c_out, static_cast<Eigen::Index>(rows));
  for (size_t s = 0; s < n; ++s) {
    MapC col_s(colp + s * rows * spatial, static_cast<Eigen::Index>(rows),
               static_cast<Eigen::Index>(spatial));
    MapM out_s(out.data() + s * c_out * spatial, c_out,
               static_cast<Eigen::Index>(spatial));
    out_s.noalias() = wm * col_s;
    for (int co = 0; co < c_out; ++co)
      out_s.row(co).array() += bias.value.data()[co];
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  size_t n = ctx.n, h = ctx.h, w = ctx.w;
  size_t spatial = h * w;
  size_t rows = static_cast<size_t>(c_in) * k * k;
  dout.require_shape({n, static_cast<size_t>(c_out), h, w},
                     weight.name + " backward");

  auto map_h = pad_map_1d(static_cast<int>(h), k, pad);
  auto map_w = pad_map_1d(static_cast<int>(w), k, pad);

  Tensor dx({n, static_cast<size_t>(c_in), h, w});
  dx.zero();
  Tensor dcol({rows, spatial});
  MapC wm(weight.value.data(), c_out, static_cast<Eigen::Index>(rows));
  MapM dwm(weight.grad.data(), c_out, static_cast<Eigen::Index>(rows));

  for (size_t s = 0; s < n; ++s) {
    MapC dout_s(dout.data() + s * c_out * spatial, c_out,
                static_cast<Eigen::Index>(spatial));
    MapC col_s(ctx.col.data() + s * rows * spatial,
               static_cast<Eigen::Index>(rows),
               static_cast<Eigen::Index>(spatial));
    if (train) {
      dwm.noalias() += dout_s * col_s.transpose();
      for (int co = 0; co < c_out; ++co)
        bias.grad.data()[co] += dout_s.row(co).sum();
    }
    MapM dcol_m(dcol.data(), static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(spatial));
    dcol_m.noalias() = wm.transpose() * dout_s;

    double* dxp = dx.data() + s * c_in * spatial;
    const double* dcolp = dcol.data();
    for (size_t ci = 0; ci < static_cast<size_t>(c_in); ++ci) {
      double* plane = dxp + ci * spatial;
      for (int kh = 0; kh < k; ++kh)
        for (int kw = 0; kw < k; ++kw) {
          const double* row =
              dcolp + (ci * k * k + static_cast<size_t>(kh) * k + kw) * spatial;
          for (size_t oh = 0; oh < h; ++oh) {
            int hs = map_h[oh * k + kh];
            if (hs < 0) continue;
            for (size_t ow = 0; ow < w; ++ow) {
              int ws = map_w[ow * k + kw];
              if (ws < 0) continue;
              plane[hs * w + ws] += row[oh * w + ow];
            }
          }
        }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Conv1d

namespace {

// Shared 1-D correlation core; weight is (C_out, C_in*K) row-major.
Tensor conv1d_forward_core(const Tensor& x, const double* weight,
                           const double* bias, int c_in, int c_out, int k,
                           PadMode pad, Conv1d::Ctx* ctx,
                           const std::string& name) {
  if (x.ndim() != 3 || x.dim(1) != static_cast<size_t>(c_in))
    throw ShapeMismatch(name + ": input " + x.shape_str());
  size_t n = x.dim(0), l = x.dim(2);
  size_t rows = static_cast<size_t>(c_in) * k;
  auto map = pad_map_1d(static_cast<int>(l), k, pad);

  ctx->col = Tensor({n, rows, l});
  ctx->n = n;
  ctx->l = l;
  const double* xp = x.data();
  double* colp = ctx->col.data();
  for (size_t s = 0; s < n; ++s)
    for (size_t ci = 0; ci < static_cast<size_t>(c_in); ++ci) {
      const double* line = xp + (s * c_in + ci) * l;
      for (int t = 0; t < k; ++t) {
        double* row = colp + (s * rows + ci * k + t) * l;
        for (size_t o = 0; o < l; ++o) {
          int src = map[o * k + t];
          row[o] = src < 0 ? 0.0 : line[src];
        }
      }
    }

  Tensor out({n, static_cast<size_t>(c_out), l});
  MapC wm(weight, c_out, static_cast<Eigen::Index>(rows));
  for (size_t s = 0; s < n; ++s) {
    MapC col_s(colp + s * rows * l, static_cast<Eigen::Index>(rows),
               static_cast<Eigen::Index>(l));
    MapM out_s(out.data() + s * c_out * l, c_out,
               static_cast<Eigen::Index>(l));
    out_s.noalias() = wm * col_s;
    for (int co = 0; co < c_out; ++co) out_s.row(co).array() += bias[co];
  }
  return out;
}

Tensor conv1d_backward_core(const Tensor& dout, const Conv1d::Ctx& ctx,
                            const double* weight, int c_in, int c_out, int k,
                            PadMode pad, double* dweight, double* dbias,
                            const std::string& name) {
  size_t n = ctx.n, l = ctx.l;
  size_t rows = static_cast<size_t>(c_in) * k;
  dout.require_shape({n, static_cast<size_t>(c_out), l}, name + " backward");
  auto map = pad_map_1d(static_cast<int>(l), k, pad);

  Tensor dx({n, static_cast<size_t>(c_in), l});
  dx.zero();
  Tensor dcol({rows, l});
  MapC wm(weight, c_out, static_cast<Eigen::Index>(rows));

  for (size_t s = 0; s < n; ++s) {
    MapC dout_s(dout.data() + s * c_out * l, c_out,
                static_cast<Eigen::Index>(l));
    MapC col_s(ctx.col.data() + s * rows * l,
               static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(l));
    if (dweight) {
      MapM dwm(dweight, c_out, static_cast<Eigen::Index>(rows));
      dwm.noalias() += dout_s * col_s.transpose();
      for (int co = 0; co < c_out; ++co) dbias[co] += dout_s.row(co).sum();
    }
    MapM dcol_m(dcol.data(), static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(l));
    dcol_m.noalias() = wm.transpose() * dout_s;

    double* dxp = dx.data() + s * c_in * l;
    for (size_t ci = 0; ci < static_cast<size_t>(c_in); ++ci) {
      double* line = dxp + ci * l;
      for (int t = 0; t < k; ++t) {
        const double* row = dcol.data() + (ci * k + t) * l;
        for (size_t o = 0; o < l; ++o) {
          int src = map[o * k + t];
          if (src >= 0) line[src] += row[o];
        }
      }
    }
  }
  return dx;
}

}  // namespace

Conv1d::Conv1d(const std::string& name, int c_in_, int c_out_, int k_,
               PadMode pad_)
    : weight(name + ".weight",
             {static_cast<size_t>(c_out_), static_cast<size_t>(c_in_),
              static_cast<size_t>(k_)}),
      bias(name + ".bias", {static_cast<size_t>(c_out_)}),
      c_in(c_in_),
      c_out(c_out_),
      k(k_),
      pad(pad_) {}

void Conv1d::init(Rng& rng) {
  he_init(weight, static_cast<double>(c_in * k), rng);
  bias.value.zero();
}

Tensor Conv1d::forward(const Tensor& x, Ctx* ctx) const {
  return conv1d_forward_core(x, weight.value.data(), bias.value.data(), c_in,
                             c_out, k, pad, ctx, weight.name);
}

Tensor Conv1d::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  return conv1d_backward_core(dout, ctx, weight.value.data(), c_in, c_out, k,
                              pad, train ? weight.grad.data() : nullptr,
                              train ? bias.grad.data() : nullptr, weight.name);
}

// ------------------------------------------------------- TransposedConv1d

TransposedConv1d::TransposedConv1d(const std::string& name, int c_in_,
                                   int c_out_, int k_)
    : weight(name + ".weight",
             {static_cast<size_t>(c_in_), static_cast<size_t>(c_out_),
              static_cast<size_t>(k_)}),
      bias(name + ".bias", {static_cast<size_t>(c_out_)}),
      c_in(c_in_),
      c_out(c_out_),
      k(k_) {}

void TransposedConv1d::init(Rng& rng) {
  he_init(weight, static_cast<double>(c_in * k), rng);
  bias.value.zero();
}

Tensor TransposedConv1d::flipped_weight() const {
  // conv-layout equivalent: w'[co, ci, t] = w[ci, co, K-1-t].
  Tensor flipped({static_cast<size_t>(c_out), static_cast<size_t>(c_in),
                  static_cast<size_t>(k)});
  for (int ci = 0; ci < c_in; ++ci)
    for (int co = 0; co < c_out; ++co)
      for (int t = 0; t < k; ++t)
        flipped.at(co, ci, t) = weight.value.at(ci, co, k - 1 - t);
  return flipped;
}

Tensor TransposedConv1d::forward(const Tensor& x, Ctx* ctx) const {
  Tensor flipped = flipped_weight();
  return conv1d_forward_core(x, flipped.data(), bias.value.data(), c_in,
                             c_out, k, PadMode::zero, ctx, weight.name);
}

Tensor TransposedConv1d::backward(const Tensor& dout, const Ctx& ctx,
                                  bool train) {
  Tensor flipped = flipped_weight();
  Tensor dflipped({static_cast<size_t>(c_out), static_cast<size_t>(c_in),
                   static_cast<size_t>(k)});
  dflipped.zero();
  Tensor dx = conv1d_backward_core(
      dout, ctx, flipped.data(), c_in, c_out, k, PadMode::zero,
      train ? dflipped.data() : nullptr, train ? bias.grad.data() : nullptr,
      weight.name);
  if (train)
    for (int ci = 0; ci < c_in; ++ci)
      for (int co = 0; co < c_out; ++co)
        for (int t = 0; t < k; ++t)
          weight.grad.at(ci, co, k - 1 - t) += dflipped.at(co, ci, t);
  return dx;
}

// ------------------------------------------------------------ BatchNorm1d

BatchNorm1d::BatchNorm1d(const std::string& name, int channels_)
    : gamma(name + ".gamma", {static_cast<size_t>(channels_)}),
      beta(name + ".beta", {static_cast<size_t>(channels_)}),
      running_mean({static_cast<size_t>(channels_)}),
      running_var({static_cast<size_t>(channels_)}),
      channels(channels_) {
  gamma.value.fill(1.0);
  beta.value.zero();
  running_mean.zero();
  running_var.fill(1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, Ctx* ctx, bool training) {
  if (x.ndim() != 3 || x.dim(1) != static_cast<size_t>(channels))
    throw ShapeMismatch(gamma.name + ": input " + x.shape_str());
  size_t n = x.dim(0), l = x.dim(2);
  double m = static_cast<double>(n * l);
  ctx->training = training;
  ctx->x_hat = Tensor(x.shape());
  ctx->inv_std.assign(static_cast<size_t>(channels), 0.0);

  Tensor out(x.shape());
  for (int c = 0; c < channels; ++c) {
    double mean, var;
    if (training) {
      double sum = 0.0, sum_sq = 0.0;
      for (size_t s = 0; s < n; ++s) {
        const double* line = x.data() + (s * channels + c) * l;
        for (size_t i = 0; i < l; ++i) {
          sum += line[i];
          sum_sq += line[i] * line[i];
        }
      }
      mean = sum / m;
      var = sum_sq / m - mean * mean;
      if (var < 0.0) var = 0.0;  // rounding guard
      // Biased variance on both the normalization and the running estimate.
      running_mean.data()[c] =
          (1.0 - momentum) * running_mean.data()[c] + momentum * mean;
      running_var.data()[c] =
          (1.0 - momentum) * running_var.data()[c] + momentum * var;
    } else {
      mean = running_mean.data()[c];
      var = running_var.data()[c];
    }
    double inv_std = 1.0 / std::sqrt(var + eps);
    ctx->inv_std[static_cast<size_t>(c)] = inv_std;
    double g = gamma.value.data()[c], b = beta.value.data()[c];
    for (size_t s = 0; s < n; ++s) {
      const double* line = x.data() + (s * channels + c) * l;
      double* hat = ctx->x_hat.data() + (s * channels + c) * l;
      double* o = out.data() + (s * channels + c) * l;
      for (size_t i = 0; i < l; ++i) {
        hat[i] = (line[i] - mean) * inv_std;
        o[i] = g * hat[i] + b;
      }
    }
  }
  return out;
}

Tensor BatchNorm1d::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  dout.require_shape(ctx.x_hat.shape(), gamma.name + " backward");
  size_t n = dout.dim(0), l = dout.dim(2);
  double m = static_cast<double>(n * l);
  Tensor dx(dout.shape());

  for (int c = 0; c < channels; ++c) {
    double g = gamma.value.data()[c];
    double inv_std = ctx.inv_std[static_cast<size_t>(c)];
    double sum_dout = 0.0, sum_dout_xhat = 0.0;
    for (size_t s = 0; s < n; ++s) {
      const double* dop = dout.data() + (s * channels + c) * l;
      const double* hat = ctx.x_hat.data() + (s * channels + c) * l;
      for (size_t i = 0; i < l; ++i) {
        sum_dout += dop[i];
        sum_dout_xhat += dop[i] * hat[i];
      }
    }
    if (train) {
      gamma.grad.data()[c] += sum_dout_xhat;
      beta.grad.data()[c] += sum_dout;
    }
    for (size_t s = 0; s < n; ++s) {
      const double* dop = dout.data() + (s * channels + c) * l;
      const double* hat = ctx.x_hat.data() + (s * channels + c) * l;
      double* dxp = dx.data() + (s * channels + c) * l;
      if (ctx.training) {
        // Batch statistics depend on x: full train-mode derivative.
        for (size_t i = 0; i < l; ++i)
          dxp[i] = g * inv_std / m *
                   (m * dop[i] - sum_dout - hat[i] * sum_dout_xhat);
      } else {
        for (size_t i = 0; i < l; ++i) dxp[i] = g * inv_std * dop[i];
      }
    }
  }
  return dx;
}

// -------------------------------------------------------------- MaxPool1d

Tensor MaxPool1d::forward(const Tensor& x, Ctx* ctx) {
  if (x.ndim() != 3) throw ShapeMismatch("MaxPool1d: input " + x.shape_str());
  size_t n = x.dim(0), c = x.dim(1), l = x.dim(2);
  size_t out_l = (l + 1) / 2;  // ceil mode
  ctx->in_shape = x.shape();
  ctx->argmax.assign(n * c * out_l, 0);

  Tensor out({n, c, out_l});
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* line = x.data() + (s * c + ch) * l;
      double* o = out.data() + (s * c + ch) * out_l;
      int* am = ctx->argmax.data() + (s * c + ch) * out_l;
      for (size_t i = 0; i < out_l; ++i) {
        size_t begin = 2 * i, end = std::min(begin + 2, l);
        size_t best = begin;
        for (size_t p = begin + 1; p < end; ++p)
          if (line[p] > line[best]) best = p;  // first max wins ties
        o[i] = line[best];
        am[i] = static_cast<int>(best);
      }
    }
  return out;
}

Tensor MaxPool1d::backward(const Tensor& dout, const Ctx& ctx) {
  size_t n = ctx.in_shape[0], c = ctx.in_shape[1], l = ctx.in_shape[2];
  size_t out_l = (l + 1) / 2;
  dout.require_shape({n, c, out_l}, "MaxPool1d backward");
  Tensor dx(ctx.in_shape);
  dx.zero();
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* dop = dout.data() + (s * c + ch) * out_l;
      double* dxp = dx.data() + (s * c + ch) * l;
      const int* am = ctx.argmax.data() + (s * c + ch) * out_l;
      for (size_t i = 0; i < out_l; ++i) dxp[am[i]] += dop[i];
    }
  return dx;
}

// ------------------------------------------------------ AdaptiveMaxPool2d

Tensor AdaptiveMaxPool2d::forward(const Tensor& x, Ctx* ctx) const {
  if (x.ndim() != 4)
    throw ShapeMismatch("AdaptiveMaxPool2d: input " + x.shape_str());
  size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  size_t oh = static_cast<size_t>(out_h_), ow = static_cast<size_t>(out_w_);
  if (oh > h || ow > w)
    throw ShapeMismatch("AdaptiveMaxPool2d cannot upsample");
  ctx->in_shape = x.shape();
  ctx->argmax.assign(n * c * oh * ow, 0);

  Tensor out({n, c, oh, ow});
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* plane = x.data() + (s * c + ch) * h * w;
      double* o = out.data() + (s * c + ch) * oh * ow;
      int* am = ctx->argmax.data() + (s * c + ch) * oh * ow;
      for (size_t i = 0; i < oh; ++i) {
        size_t h0 = i * h / oh, h1 = ((i + 1) * h + oh - 1) / oh;
        for (size_t j = 0; j < ow; ++j) {
          size_t w0 = j * w / ow, w1 = ((j + 1) * w + ow - 1) / ow;
          size_t best = h0 * w + w0;
          for (size_t hh = h0; hh < h1; ++hh)
            for (size_t ww = w0; ww < w1; ++ww) {
              size_t p = hh * w + ww;
              if (plane[p] > plane[best]) best = p;
            }
          o[i * ow + j] = plane[best];
          am[i * ow + j] = static_cast<int>(best);
        }
      }
    }
  return out;
}

Tensor AdaptiveMaxPool2d::backward(const Tensor& dout, const Ctx& ctx) const {
  size_t n = ctx.in_shape[0], c = ctx.in_shape[1], h = ctx.in_shape[2],
         w = ctx.in_shape[3];
  size_t oh = static_cast<size_t>(out_h_), ow = static_cast<size_t>(out_w_);
  dout.require_shape({n, c, oh, ow}, "AdaptiveMaxPool2d backward");
  Tensor dx(ctx.in_shape);
  dx.zero();
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* dop = dout.data() + (s * c + ch) * oh * ow;
      double* dxp = dx.data() + (s * c + ch) * h * w;
      const int* am = ctx.argmax.data() + (s * c + ch) * oh * ow;
      for (size_t i = 0; i < oh * ow; ++i) dxp[am[i]] += dop[i];
    }
  return dx;
}

// -------------------------------------------------------- NearestResize2d

Tensor NearestResize2d::forward(const Tensor& x, Ctx* ctx) const {
  if (x.ndim() != 4)
    throw ShapeMismatch("NearestResize2d: input " + x.shape_str());
  size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  size_t oh = static_cast<size_t>(out_h_), ow = static_cast<size_t>(out_w_);
  ctx->in_shape = x.shape();
  Tensor out({n, c, oh, ow});
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* plane = x.data() + (s * c + ch) * h * w;
      double* o = out.data() + (s * c + ch) * oh * ow;
      for (size_t i = 0; i < oh; ++i) {
        size_t hs = i * h / oh;
        for (size_t j = 0; j < ow; ++j) o[i * ow + j] = plane[hs * w + j * w / ow];
      }
    }
  return out;
}

Tensor NearestResize2d::backward(const Tensor& dout, const Ctx& ctx) const {
  size_t n = ctx.in_shape[0], c = ctx.in_shape[1], h = ctx.in_shape[2],
         w = ctx.in_shape[3];
  size_t oh = static_cast<size_t>(out_h_), ow = static_cast<size_t>(out_w_);
  dout.require_shape({n, c, oh, ow}, "NearestResize2d backward");
  Tensor dx(ctx.in_shape);
  dx.zero();
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* dop = dout.data() + (s * c + ch) * oh * ow;
      double* dxp = dx.data() + (s * c + ch) * h * w;
      for (size_t i = 0; i < oh; ++i) {
        size_t hs = i * h / oh;
        for (size_t j = 0; j < ow; ++j)
          dxp[hs * w + j * w / ow] += dop[i * ow + j];
      }
    }
  return dx;
}

// --------------------------------------------------------- GlobalAvgPool1d

Tensor GlobalAvgPool1d::forward(const Tensor& x, Ctx* ctx) {
  if (x.ndim() != 3)
    throw ShapeMismatch("GlobalAvgPool1d: input " + x.shape_str());
  size_t n = x.dim(0), c = x.dim(1), l = x.dim(2);
  ctx->in_shape = x.shape();
  Tensor out({n, c});
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      const double* line = x.data() + (s * c + ch) * l;
      double sum = 0.0;
      for (size_t i = 0; i < l; ++i) sum += line[i];
      out.at(s, ch) = sum / static_cast<double>(l);
    }
  return out;
}

Tensor GlobalAvgPool1d::backward(const Tensor& dout, const Ctx& ctx) {
  size_t n = ctx.in_shape[0], c = ctx.in_shape[1], l = ctx.in_shape[2];
  dout.require_shape({n, c}, "GlobalAvgPool1d backward");
  Tensor dx(ctx.in_shape);
  for (size_t s = 0; s < n; ++s)
    for (size_t ch = 0; ch < c; ++ch) {
      double g = dout.at(s, ch) / static_cast<double>(l);
      double* line = dx.data() + (s * c + ch) * l;
      for (size_t i = 0; i < l; ++i) line[i] = g;
    }
  return dx;
}

// ------------------------------------------------------------------ Dense

Dense::Dense(const std::string& name, int f_in_, int f_out_)
    : weight(name + ".weight",
             {static_cast<size_t>(f_out_), static_cast<size_t>(f_in_)}),
      bias(name + ".bias", {static_cast<size_t>(f_out_)}),
      f_in(f_in_),
      f_out(f_out_) {}

void Dense::init(Rng& rng) {
  he_init(weight, static_cast<double>(f_in), rng);
  bias.value.zero();
}

Tensor Dense::forward(const Tensor& x, Ctx* ctx) const {
  if (x.ndim() != 2 || x.dim(1) != static_cast<size_t>(f_in))
    throw ShapeMismatch(weight.name + ": input " + x.shape_str());
  size_t n = x.dim(0);
  ctx->input = x;
  Tensor out({n, static_cast<size_t>(f_out)});
  MapC xm(x.data(), static_cast<Eigen::Index>(n), f_in);
  MapC wm(weight.value.data(), f_out, f_in);
  MapM om(out.data(), static_cast<Eigen::Index>(n), f_out);
  om.noalias() = xm * wm.transpose();
  for (size_t s = 0; s < n; ++s)
    for (int f = 0; f < f_out; ++f) out.at(s, f) += bias.value.data()[f];
  return out;
}

Tensor Dense::backward(const Tensor& dout, const Ctx& ctx, bool train) {
  size_t n = ctx.input.dim(0);
  dout.require_shape({n, static_cast<size_t>(f_out)},
                     weight.name + " backward");
  MapC dom(dout.data(), static_cast<Eigen::Index>(n), f_out);
  MapC xm(ctx.input.data(), static_cast<Eigen::Index>(n), f_in);
  if (train) {
    MapM dwm(weight.grad.data(), f_out, f_in);
    dwm.noalias() += dom.transpose() * xm;
    for (size_t s = 0; s < n; ++s)
      for (int f = 0; f < f_out; ++f) bias.grad.data()[f] += dout.at(s, f);
  }
  Tensor dx({n, static_cast<size_t>(f_in)});
  MapM dxm(dx.data(), static_cast<Eigen::Index>(n), f_in);
  MapC wm(weight.value.data(), f_out, f_in);
  dxm.noalias() = dom * wm;
  return dx;
}

// ------------------------------------------------------------ activations

Tensor LeakyReLU::forward(const Tensor& x, Ctx* ctx) const {
  ctx->input = x;
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    double v = x.data()[i];
    out.data()[i] = v > 0.0 ? v : slope_ * v;
  }
  return out;
}

Tensor LeakyReLU::backward(const Tensor& dout, const Ctx& ctx) const {
  dout.require_shape(ctx.input.shape(), "LeakyReLU backward");
  Tensor dx(dout.shape());
  for (size_t i = 0; i < dout.size(); ++i)
    dx.data()[i] =
        dout.data()[i] * (ctx.input.data()[i] > 0.0 ? 1.0 : slope_);
  return dx;
}

Tensor Sigmoid::forward(const Tensor& x, Ctx* ctx) {
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i)
    out.data()[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
  ctx->output = out;
  return out;
}

Tensor Sigmoid::backward(const Tensor& dout, const Ctx& ctx) {
  dout.require_shape(ctx.output.shape(), "Sigmoid backward");
  Tensor dx(dout.shape());
  for (size_t i = 0; i < dout.size(); ++i) {
    double o = ctx.output.data()[i];
    dx.data()[i] = dout.data()[i] * o * (1.0 - o);
  }
  return dx;
}

Tensor Softmax::forward(const Tensor& x, Ctx* ctx) {
  if (x.ndim() != 2) throw ShapeMismatch("Softmax: input " + x.shape_str());
  size_t n = x.dim(0), f = x.dim(1);
  Tensor out(x.shape());
  for (size_t s = 0; s < n; ++s) {
    const double* row = x.data() + s * f;
    double* o = out.data() + s * f;
    double mx = row[0];
    for (size_t i = 1; i < f; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (size_t i = 0; i < f; ++i) {
      o[i] = std::exp(row[i] - mx);
      sum += o[i];
    }
    for (size_t i = 0; i < f; ++i) o[i] /= sum;
  }
  ctx->output = out;
  return out;
}

Tensor Softmax::backward(const Tensor& dout, const Ctx& ctx) {
  dout.require_shape(ctx.output.shape(), "Softmax backward");
  size_t n = dout.dim(0), f = dout.dim(1);
  Tensor dx(dout.shape());
  for (size_t s = 0; s < n; ++s) {
    const double* dop = dout.data() + s * f;
    const double* p = ctx.output.data() + s * f;
    double dot = 0.0;
    for (size_t i = 0; i < f; ++i) dot += dop[i] * p[i];
    double* dxp = dx.data() + s * f;
    for (size_t i = 0; i < f; ++i) dxp[i] = p[i] * (dop[i] - dot);
  }
  return dx;
}

}  // namespace pmrt
