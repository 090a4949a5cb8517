#pragma once

// Small tanh MLP R^2 -> R with exact value, gradient and Laplacian via
// forward second-order jets, reverse accumulation through those jets for
// parameter gradients, and an Adam optimizer with step-decay schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coco/errors.hpp"

namespace coco::nn {

inline const std::vector<int> &default_widths() {
  static const std::vector<int> w{2, 20, 20, 20, 20, 1};
  return w;
}

inline std::size_t param_count(std::span<const int> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += std::size_t(widths[l]) * widths[l + 1] + widths[l + 1];
  return n;
}

/// Fully connected network; hidden layers use tanh, the output is linear.
/// Layer l stores W_l (out x in, row-major) followed by b_l.
class Mlp {
public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2 || widths_.back() != 1)
      throw ConfigError("MLP needs at least an input and a scalar output");
    params_.assign(param_count(widths_), 0.0);
    offsets_.resize(widths_.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      offsets_[l] = off;
      off += std::size_t(widths_[l]) * widths_[l + 1] + widths_[l + 1];
    }
  }

  /// Uniform Glorot initialization, zero biases.
  void init_glorot(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const int in = widths_[l], out = widths_[l + 1];
      const double lim = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> dist(-lim, lim);
      double *W = params_.data() + offsets_[l];
      for (int i = 0; i < in * out; ++i)
        W[i] = dist(rng);
      std::fill(W + in * out, W + in * out + out, 0.0);
    }
  }

  [[nodiscard]] const std::vector<int> &widths() const { return widths_; }
  [[nodiscard]] std::size_t layers() const { return widths_.size() - 1; }
  [[nodiscard]] std::size_t offset(std::size_t l) const { return offsets_[l]; }
  [[nodiscard]] std::vector<double> &params() { return params_; }
  [[nodiscard]] const std::vector<double> &params() const { return params_; }
  [[nodiscard]] int input_dim() const { return widths_.front(); }
  [[nodiscard]] int max_width() const {
    return *std::max_element(widths_.begin(), widths_.end());
  }

  /// Sum of squared weights (biases excluded).
  [[nodiscard]] double weight_norm2() const {
    double acc = 0.0;
    for (std::size_t l = 0; l < layers(); ++l) {
      const double *W = params_.data() + offsets_[l];
      for (int i = 0; i < widths_[l] * widths_[l + 1]; ++i)
        acc += W[i] * W[i];
    }
    return acc;
  }

  /// Adds 2 * scale * W to the weight part of grad.
  void add_weight_norm_gradient(std::span<double> grad, double scale) const {
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::size_t off = offsets_[l];
      for (int i = 0; i < widths_[l] * widths_[l + 1]; ++i)
        grad[off + i] += 2.0 * scale * params_[off + i];
    }
  }

private:
  std::vector<int> widths_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

/// Jet order: value only, value + gradient, or value + gradient + diagonal
/// second derivatives.
enum class JetOrder { value = 1, gradient = 3, laplacian = 5 };

/// Output of one evaluation. Channel layout: 0 value, 1..d first
/// derivatives, then d+1..2d second derivatives d^2/dx_i^2 (d = 2 inputs
/// when the order allows it).
struct Jet {
  double u = 0.0;
  double grad[2] = {0.0, 0.0};
  double lap = 0.0;
};

/// Per-point storage for the reverse pass. Reused across points to avoid
/// allocation.
class Tape {
public:
  void prepare(const Mlp &net, JetOrder order) {
    channels_ = static_cast<int>(order);
    stride_ = net.max_width();
    const std::size_t L = net.layers();
    layers_ = L;
    act_.assign((L + 1) * channels_ * stride_, 0.0);
    pre_.assign(L * channels_ * stride_, 0.0);
    dt_.assign(L * 3 * stride_, 0.0);
    adj_a_.assign(2 * channels_ * stride_, 0.0);
  }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] bool fits(const Mlp &net, JetOrder order) const {
    return channels_ == static_cast<int>(order) && layers_ == net.layers() &&
           stride_ >= net.max_width();
  }
  /// Activation of layer-input l (l = 0 is the network input), channel c.
  double *act(std::size_t l, int c) {
    return act_.data() + (l * channels_ + c) * stride_;
  }
  double *pre(std::size_t l, int c) {
    return pre_.data() + (l * channels_ + c) * stride_;
  }
  /// tanh, tanh', tanh'' at the pre-activation of hidden layer l.
  double *dt(std::size_t l, int k) {
    return dt_.data() + (l * 3 + k) * stride_;
  }
  double *adj(int buf, int c) {
    return adj_a_.data() + (buf * channels_ + c) * stride_;
  }

private:
  int channels_ = 0;
  int stride_ = 0;
  std::size_t layers_ = 0;
  std::vector<double> act_, pre_, dt_, adj_a_;
};

/// Forward jet evaluation at x (input dimension = x.size()). For
/// JetOrder::gradient and ::laplacian the input must be 2-dimensional.
inline Jet forward(const Mlp &net, std::span<const double> x, Tape &tape,
                   JetOrder order) {
  const int C = static_cast<int>(order);
  if (!tape.fits(net, order))
    tape.prepare(net, order);
  const auto &w = net.widths();
  const std::size_t L = net.layers();
  const int d = w[0];

  for (int c = 0; c < C; ++c)
    std::fill(tape.act(0, c), tape.act(0, c) + d, 0.0);
  for (int i = 0; i < d; ++i)
    tape.act(0, 0)[i] = x[i];
  if (C >= 3) {
    tape.act(0, 1)[0] = 1.0;
    tape.act(0, 2)[1] = 1.0;
  }

  const double *P = net.params().data();
  for (std::size_t l = 0; l < L; ++l) {
    const int in = w[l], out = w[l + 1];
    const double *W = P + net.offset(l);
    const double *b = W + in * out;
    for (int c = 0; c < C; ++c) {
      const double *a = tape.act(l, c);
      double *z = tape.pre(l, c);
      for (int o = 0; o < out; ++o) {
        const double *Wr = W + o * in;
        double acc = (c == 0) ? b[o] : 0.0;
        for (int i = 0; i < in; ++i)
          acc += Wr[i] * a[i];
        z[o] = acc;
      }
    }
    if (l + 1 == L) {
      for (int c = 0; c < C; ++c)
        std::copy(tape.pre(l, c), tape.pre(l, c) + out, tape.act(l + 1, c));
      break;
    }
    double *t0 = tape.dt(l, 0), *t1 = tape.dt(l, 1), *t2 = tape.dt(l, 2);
    const double *zv = tape.pre(l, 0);
    for (int o = 0; o < out; ++o) {
      const double t = std::tanh(zv[o]);
      t0[o] = t;
      t1[o] = 1.0 - t * t;
      t2[o] = -2.0 * t * t1[o];
    }
    std::copy(t0, t0 + out, tape.act(l + 1, 0));
    if (C >= 3) {
      for (int g = 1; g <= 2; ++g) {
        const double *zg = tape.pre(l, g);
        double *ag = tape.act(l + 1, g);
        for (int o = 0; o < out; ++o)
          ag[o] = t1[o] * zg[o];
      }
    }
    if (C == 5) {
      for (int g = 1; g <= 2; ++g) {
        const double *zg = tape.pre(l, g);
        const double *zh = tape.pre(l, g + 2);
        double *ah = tape.act(l + 1, g + 2);
        for (int o = 0; o < out; ++o)
          ah[o] = t2[o] * zg[o] * zg[o] + t1[o] * zh[o];
      }
    }
  }

  Jet j;
  j.u = tape.act(L, 0)[0];
  if (C >= 3) {
    j.grad[0] = tape.act(L, 1)[0];
    j.grad[1] = tape.act(L, 2)[0];
  }
  if (C == 5)
    j.lap = tape.act(L, 3)[0] + tape.act(L, 4)[0];
  return j;
}

/// Adjoint seed for the outputs of one forward evaluation.
struct JetAdjoint {
  double u = 0.0;
  double grad[2] = {0.0, 0.0};
  double lap = 0.0;
};

/// Accumulates d(seed . jet)/d(params) into grad. Must follow forward() on
/// the same tape.
inline void backward(const Mlp &net, Tape &tape, const JetAdjoint &seed,
                     std::span<double> grad) {
  const int C = tape.channels();
  const auto &w = net.widths();
  const std::size_t L = net.layers();
  const double *P = net.params().data();

  // adjoint of the pre-activation of the current layer, per channel
  int cur = 0;
  double *za[5] = {};
  for (int c = 0; c < C; ++c)
    za[c] = tape.adj(cur, c);
  za[0][0] = seed.u;
  if (C >= 3) {
    za[1][0] = seed.grad[0];
    za[2][0] = seed.grad[1];
  }
  if (C == 5) {
    za[3][0] = seed.lap;
    za[4][0] = seed.lap;
  }

  for (std::size_t l = L; l-- > 0;) {
    const int in = w[l], out = w[l + 1];
    const double *W = P + net.offset(l);
    double *gW = grad.data() + net.offset(l);
    double *gb = gW + in * out;
    for (int o = 0; o < out; ++o)
      gb[o] += za[0][o];
    for (int c = 0; c < C; ++c) {
      const double *a = tape.act(l, c);
      const double *zc = za[c];
      for (int o = 0; o < out; ++o) {
        const double s = zc[o];
        if (s == 0.0)
          continue;
        double *g = gW + o * in;
        for (int i = 0; i < in; ++i)
          g[i] += s * a[i];
      }
    }
    if (l == 0)
      break;

    // adjoint of the activations feeding layer l
    const int nxt = 1 - cur;
    double *aa[5];
    for (int c = 0; c < C; ++c) {
      aa[c] = tape.adj(nxt, c);
      std::fill(aa[c], aa[c] + in, 0.0);
      const double *zc = za[c];
      for (int o = 0; o < out; ++o) {
        const double s = zc[o];
        if (s == 0.0)
          continue;
        const double *Wr = W + o * in;
        for (int i = 0; i < in; ++i)
          aa[c][i] += s * Wr[i];
      }
    }

    // through tanh of hidden layer l-1: a = t(z), a_g = t' z_g,
    // a_h = t'' z_g^2 + t' z_h
    const std::size_t hl = l - 1;
    const double *t0 = tape.dt(hl, 0), *t1 = tape.dt(hl, 1),
                 *t2 = tape.dt(hl, 2);
    for (int i = 0; i < in; ++i) {
      const double dt1 = t2[i];                                  // d t'/dz
      const double dt2 = -2.0 * t1[i] * t1[i] - 2.0 * t0[i] * t2[i]; // d t''/dz
      double zv = aa[0][i] * t1[i];
      if (C >= 3) {
        for (int g = 1; g <= 2; ++g) {
          const double zg = tape.pre(hl, g)[i];
          double zga = aa[g][i] * t1[i];
          zv += aa[g][i] * zg * dt1;
          if (C == 5) {
            const double zh = tape.pre(hl, g + 2)[i];
            const double ah = aa[g + 2][i];
            zga += ah * 2.0 * t2[i] * zg;
            zv += ah * (dt2 * zg * zg + dt1 * zh);
            aa[g + 2][i] = ah * t1[i];
          }
          aa[g][i] = zga;
        }
      }
      aa[0][i] = zv;
    }
    cur = nxt;
    for (int c = 0; c < C; ++c)
      za[c] = aa[c];
  }
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  /// Learning rate multiplied by decay every decay_every steps.
  double decay = 1.0;
  std::int64_t decay_every = 1000;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr, double decay_ = 1.0,
            std::int64_t every = 1000)
      : m(n, 0.0), v(n, 0.0), learning_rate(lr), decay(decay_),
        decay_every(every) {}

  /// Learning rate in effect for the update numbered `at` (0-based).
  [[nodiscard]] double scheduled_lr(std::int64_t at) const {
    return learning_rate *
           std::pow(decay, static_cast<double>(at / decay_every));
  }
  [[nodiscard]] double current_lr() const { return scheduled_lr(step); }
};

inline void adam_step(AdamState &st, std::span<double> params,
                      std::span<const double> grads) {
  if (params.size() != st.m.size() || grads.size() != st.m.size())
    throw ConfigError("Adam: parameter/gradient length mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw NumericalError("Adam: non-finite gradient at index " +
                           std::to_string(i));
  const double lr = st.current_lr();
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
    const double mh = st.m[i] / bc1;
    const double vh = st.v[i] / bc2;
    params[i] -= lr * mh / (std::sqrt(vh) + st.eps);
  }
}

} // namespace coco::nn
