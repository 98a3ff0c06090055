#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sigtrain/rng.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Batched sequences are matrices of shape (channels, batch*len) with sample b
// in columns [b*len, (b+1)*len) ("sample-major"). The LSTM internally uses
// time-major order, column t*batch + b, so whole-batch steps are contiguous.
template <typename S>
Mat<S> sample_to_time_major(const Mat<S>& a, int batch, int len) {
  Mat<S> out(a.rows(), a.cols());
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < len; ++t)
      out.col(static_cast<Eigen::Index>(t) * batch + b) =
          a.col(static_cast<Eigen::Index>(b) * len + t);
  return out;
}

template <typename S>
Mat<S> time_to_sample_major(const Mat<S>& a, int batch, int len) {
  Mat<S> out(a.rows(), a.cols());
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < len; ++t)
      out.col(static_cast<Eigen::Index>(b) * len + t) =
          a.col(static_cast<Eigen::Index>(t) * batch + b);
  return out;
}

// Mutable flat view over one parameter tensor and (optionally) its gradient.
template <typename S>
struct ParamView {
  S* value = nullptr;
  S* grad = nullptr;
  std::ptrdiff_t size = 0;
};

namespace detail {

template <typename S>
void fill_uniform(S* data, std::ptrdiff_t n, double bound, Rng& rng) {
  for (std::ptrdiff_t i = 0; i < n; ++i)
    data[i] = static_cast<S>(rng.uniform(-bound, bound));
}

template <typename S>
S sigmoid(S z) {
  if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
  const S e = std::exp(z);
  return e / (S(1) + e);
}

}  // namespace detail

// 1D convolution over per-sample sequences, zero padded so the output length
// equals the input length (kernel k pads (k-1)/2 left, the rest right).
// Weights are stored as (out_ch, in_ch*k); slice dt holds the tap applied to
// x[t + dt - pad].
template <typename S>
struct Conv1dSame {
  int in_ch = 0, out_ch = 0, k = 0, pad = 0;
  Mat<S> w;
  Vec<S> b;
  Mat<S> dw;
  Vec<S> db;

  Mat<S> x_;  // cached input for the weight gradient
  int batch_ = 0, len_ = 0;

  void init(int in, int out, int kernel, Rng rng) {
    in_ch = in;
    out_ch = out;
    k = kernel;
    pad = (kernel - 1) / 2;
    w.resize(out, static_cast<Eigen::Index>(in) * kernel);
    b.resize(out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in) * kernel);
    detail::fill_uniform(w.data(), w.size(), bound, rng);
    detail::fill_uniform(b.data(), b.size(), bound, rng);
    dw = Mat<S>::Zero(w.rows(), w.cols());
    db = Vec<S>::Zero(b.size());
  }

  Mat<S> forward(const Mat<S>& x, int batch, int len) {
    x_ = x;
    batch_ = batch;
    len_ = len;
    Mat<S> y(out_ch, x.cols());
    y.colwise() = b;
    for (int bi = 0; bi < batch; ++bi) {
      const Eigen::Index base = static_cast<Eigen::Index>(bi) * len;
      for (int dt = 0; dt < k; ++dt) {
        const int s = dt - pad;
        const int t0 = std::max(0, -s);
        const int t1 = len - std::max(0, s);
        if (t1 <= t0) continue;
        y.middleCols(base + t0, t1 - t0).noalias() +=
            w.middleCols(static_cast<Eigen::Index>(dt) * in_ch, in_ch) *
            x.middleCols(base + t0 + s, t1 - t0);
      }
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> dx = Mat<S>::Zero(in_ch, x_.cols());
    db += dy.rowwise().sum();
    for (int bi = 0; bi < batch_; ++bi) {
      const Eigen::Index base = static_cast<Eigen::Index>(bi) * len_;
      for (int dt = 0; dt < k; ++dt) {
        const int s = dt - pad;
        const int t0 = std::max(0, -s);
        const int t1 = len_ - std::max(0, s);
        if (t1 <= t0) continue;
        const auto dyb = dy.middleCols(base + t0, t1 - t0);
        dw.middleCols(static_cast<Eigen::Index>(dt) * in_ch, in_ch).noalias() +=
            dyb * x_.middleCols(base + t0 + s, t1 - t0).transpose();
        dx.middleCols(base + t0 + s, t1 - t0).noalias() +=
            w.middleCols(static_cast<Eigen::Index>(dt) * in_ch, in_ch).transpose() * dyb;
      }
    }
    return dx;
  }

  void zero_grad() {
    dw.setZero();
    db.setZero();
  }
};

// Per-row (feature) batch normalization over all columns. After a conv layer
// the columns run over batch*len (standard 1d batch norm); in the dense head
// they run over the batch.
template <typename S>
struct BatchNorm1d {
  Vec<S> gamma, beta, dgamma, dbeta;
  Vec<S> run_mean, run_var;
  S eps = S(1e-5);
  S momentum = S(0.1);

  Mat<S> xhat_;
  Vec<S> inv_std_;

  void init(int features) {
    gamma = Vec<S>::Ones(features);
    beta = Vec<S>::Zero(features);
    run_mean = Vec<S>::Zero(features);
    run_var = Vec<S>::Ones(features);
    dgamma = Vec<S>::Zero(features);
    dbeta = Vec<S>::Zero(features);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    const auto m = static_cast<double>(x.cols());
    if (train) {
      const Vec<S> mean = x.rowwise().mean();
      Mat<S> centered = x.colwise() - mean;
      const Vec<S> var = centered.array().square().rowwise().mean().matrix();
      inv_std_ = (var.array() + eps).rsqrt().matrix();
      xhat_ = (centered.array().colwise() * inv_std_.array()).matrix();
      run_mean = (S(1) - momentum) * run_mean + momentum * mean;
      const S unbias = m > 1.0 ? static_cast<S>(m / (m - 1.0)) : S(1);
      run_var = (S(1) - momentum) * run_var + momentum * unbias * var;
      Mat<S> y = (xhat_.array().colwise() * gamma.array()).matrix();
      y.colwise() += beta;
      return y;
    }
    const Vec<S> inv = (run_var.array() + eps).rsqrt();
    Mat<S> y = ((x.colwise() - run_mean).array().colwise() * (inv.array() * gamma.array()))
                   .matrix();
    y.colwise() += beta;
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const auto m = static_cast<S>(dy.cols());
    dgamma += (dy.array() * xhat_.array()).rowwise().sum().matrix();
    dbeta += dy.rowwise().sum();
    const Mat<S> dxhat = (dy.array().colwise() * gamma.array()).matrix();
    const Vec<S> sum_dxhat = dxhat.rowwise().sum();
    const Vec<S> sum_dxhat_xhat = (dxhat.array() * xhat_.array()).rowwise().sum();
    Mat<S> dx = m * dxhat;
    dx.colwise() -= sum_dxhat;
    dx -= (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
    dx.array().colwise() *= inv_std_.array() / m;
    return dx;
  }

  void zero_grad() {
    dgamma.setZero();
    dbeta.setZero();
  }
};

template <typename S>
struct Relu {
  Mat<S> y_;

  Mat<S> forward(const Mat<S>& x) {
    y_ = x.cwiseMax(S(0));
    return y_;
  }

  Mat<S> backward(const Mat<S>& dy) const {
    return ((y_.array() > S(0)).template cast<S>() * dy.array()).matrix();
  }
};

template <typename S>
struct Dense {
  Mat<S> w;
  Vec<S> b;
  Mat<S> dw;
  Vec<S> db;
  Mat<S> x_;

  void init(int in, int out, Rng rng) {
    w.resize(out, in);
    b.resize(out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    detail::fill_uniform(w.data(), w.size(), bound, rng);
    detail::fill_uniform(b.data(), b.size(), bound, rng);
    dw = Mat<S>::Zero(out, in);
    db = Vec<S>::Zero(out);
  }

  Mat<S> forward(const Mat<S>& x) {
    x_ = x;
    Mat<S> y = w * x;
    y.colwise() += b;
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    dw.noalias() += dy * x_.transpose();
    db += dy.rowwise().sum();
    return w.transpose() * dy;
  }

  void zero_grad() {
    dw.setZero();
    db.setZero();
  }
};

// Single-layer LSTM scanning len steps over a batch. Gate rows are stacked
// [input; forget; cell; output]. The full hidden sequence is returned.
template <typename S>
struct Lstm {
  int in = 0, hidden = 0;
  Mat<S> wx, wh;  // (4H, in), (4H, H)
  Vec<S> b;       // (4H)
  Mat<S> dwx, dwh;
  Vec<S> db;

  // Caches, all time-major.
  Mat<S> x_;       // sample-major input copy
  Mat<S> gates_;   // (4H, len*batch), post-activation
  Mat<S> c_;       // (H, len*batch)
  Mat<S> tanhc_;   // (H, len*batch)
  Mat<S> h_;       // (H, len*batch)
  int batch_ = 0, len_ = 0;

  void init(int in_features, int hidden_size, Rng rng) {
    in = in_features;
    hidden = hidden_size;
    wx.resize(4 * hidden, in);
    wh.resize(4 * hidden, hidden);
    b.resize(4 * hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    detail::fill_uniform(wx.data(), wx.size(), bound, rng);
    detail::fill_uniform(wh.data(), wh.size(), bound, rng);
    detail::fill_uniform(b.data(), b.size(), bound, rng);
    dwx = Mat<S>::Zero(wx.rows(), wx.cols());
    dwh = Mat<S>::Zero(wh.rows(), wh.cols());
    db = Vec<S>::Zero(b.size());
  }

  Mat<S> forward(const Mat<S>& x, int batch, int len) {
    x_ = x;
    batch_ = batch;
    len_ = len;
    const int H = hidden;
    const Mat<S> zx = sample_to_time_major(Mat<S>(wx * x), batch, len);

    gates_.resize(4 * H, zx.cols());
    c_.resize(H, zx.cols());
    tanhc_.resize(H, zx.cols());
    h_.resize(H, zx.cols());

    Mat<S> h_prev = Mat<S>::Zero(H, batch);
    Mat<S> c_prev = Mat<S>::Zero(H, batch);
    for (int t = 0; t < len; ++t) {
      const Eigen::Index off = static_cast<Eigen::Index>(t) * batch;
      Mat<S> z = zx.middleCols(off, batch);
      z.noalias() += wh * h_prev;
      z.colwise() += b;
      auto gi = gates_.block(0, off, H, batch);
      auto gf = gates_.block(H, off, H, batch);
      auto gg = gates_.block(2 * H, off, H, batch);
      auto go = gates_.block(3 * H, off, H, batch);
      gi = z.topRows(H).unaryExpr([](S v) { return detail::sigmoid(v); });
      gf = z.middleRows(H, H).unaryExpr([](S v) { return detail::sigmoid(v); });
      gg = z.middleRows(2 * H, H).array().tanh().matrix();
      go = z.bottomRows(H).unaryExpr([](S v) { return detail::sigmoid(v); });

      auto ct = c_.middleCols(off, batch);
      ct = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
      auto th = tanhc_.middleCols(off, batch);
      th = ct.array().tanh().matrix();
      auto ht = h_.middleCols(off, batch);
      ht = go.cwiseProduct(th);

      h_prev = ht;
      c_prev = ct;
    }
    return time_to_sample_major(h_, batch, len);
  }

  Mat<S> backward(const Mat<S>& dy) {
    const int H = hidden;
    const int B = batch_;
    const Mat<S> dy_tm = sample_to_time_major(dy, B, len_);
    Mat<S> dz_tm(4 * H, dy_tm.cols());

    Mat<S> dh_carry = Mat<S>::Zero(H, B);
    Mat<S> dc_next = Mat<S>::Zero(H, B);
    for (int t = len_ - 1; t >= 0; --t) {
      const Eigen::Index off = static_cast<Eigen::Index>(t) * B;
      const auto gi = gates_.block(0, off, H, B);
      const auto gf = gates_.block(H, off, H, B);
      const auto gg = gates_.block(2 * H, off, H, B);
      const auto go = gates_.block(3 * H, off, H, B);
      const auto th = tanhc_.middleCols(off, B);

      const Mat<S> dh = dy_tm.middleCols(off, B) + dh_carry;
      const Mat<S> dct =
          (dh.array() * go.array() * (S(1) - th.array().square())).matrix() + dc_next;

      Mat<S> c_prev = t > 0 ? Mat<S>(c_.middleCols(off - B, B)) : Mat<S>(Mat<S>::Zero(H, B));
      Mat<S> h_prev = t > 0 ? Mat<S>(h_.middleCols(off - B, B)) : Mat<S>(Mat<S>::Zero(H, B));

      auto dzi = dz_tm.block(0, off, H, B);
      auto dzf = dz_tm.block(H, off, H, B);
      auto dzg = dz_tm.block(2 * H, off, H, B);
      auto dzo = dz_tm.block(3 * H, off, H, B);
      dzi = (dct.array() * gg.array() * gi.array() * (S(1) - gi.array())).matrix();
      dzf = (dct.array() * c_prev.array() * gf.array() * (S(1) - gf.array())).matrix();
      dzg = (dct.array() * gi.array() * (S(1) - gg.array().square())).matrix();
      dzo = (dh.array() * th.array() * go.array() * (S(1) - go.array())).matrix();

      dwh.noalias() += dz_tm.middleCols(off, B) * h_prev.transpose();
      dh_carry.noalias() = wh.transpose() * dz_tm.middleCols(off, B);
      dc_next = dct.cwiseProduct(gf);
    }

    db += dz_tm.rowwise().sum();
    const Mat<S> dz_sm = time_to_sample_major(dz_tm, B, len_);
    dwx.noalias() += dz_sm * x_.transpose();
    return wx.transpose() * dz_sm;
  }

  void zero_grad() {
    dwx.setZero();
    dwh.setZero();
    db.setZero();
  }
};

// Column-wise softmax with mean cross-entropy against integer labels.
template <typename S>
struct SoftmaxCe {
  Mat<S> probs_;

  Mat<S> forward(const Mat<S>& logits) {
    probs_.resize(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const S mx = logits.col(c).maxCoeff();
      const Vec<S> e = (logits.col(c).array() - mx).exp().matrix();
      probs_.col(c) = e / e.sum();
    }
    return probs_;
  }

  double loss(const std::vector<int>& labels) const {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < probs_.cols(); ++c) {
      const S p = probs_(labels[static_cast<std::size_t>(c)], c);
      acc -= std::log(std::max(static_cast<double>(p), 1e-300));
    }
    return acc / static_cast<double>(probs_.cols());
  }

  Mat<S> backward(const std::vector<int>& labels) const {
    Mat<S> d = probs_;
    const S inv = S(1) / static_cast<S>(probs_.cols());
    for (Eigen::Index c = 0; c < probs_.cols(); ++c)
      d(labels[static_cast<std::size_t>(c)], c) -= S(1);
    return d * inv;
  }
};

// Adam over a fixed parameter registry; call step() once per batch.
template <typename S>
class Adam {
public:
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit Adam(const std::vector<ParamView<S>>& params) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
      v_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
    }
  }

  void step(const std::vector<ParamView<S>>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, t_);
    const double bc2 = 1.0 - std::pow(beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& m = m_[i];
      auto& v = v_[i];
      const auto& p = params[i];
      for (std::ptrdiff_t j = 0; j < p.size; ++j) {
        const double g = static_cast<double>(p.grad[j]);
        m[static_cast<std::size_t>(j)] = beta1 * m[static_cast<std::size_t>(j)] + (1.0 - beta1) * g;
        v[static_cast<std::size_t>(j)] = beta2 * v[static_cast<std::size_t>(j)] + (1.0 - beta2) * g * g;
        const double mhat = m[static_cast<std::size_t>(j)] / bc1;
        const double vhat = v[static_cast<std::size_t>(j)] / bc2;
        p.value[j] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }

  int steps_taken() const { return t_; }

private:
  std::vector<std::vector<double>> m_, v_;
  int t_ = 0;
};

}  // namespace sigtrain::nn
