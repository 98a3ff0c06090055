// Central-difference gradient checks for every layer primitive and for the
// assembled network, all in double so the finite-difference noise floor stays
// far below the tolerance.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>
#include "sigtrain/nn/layers.hpp"
#include "sigtrain/nn/model.hpp"
#include "sigtrain/rng.hpp"

using namespace sigtrain;
using namespace sigtrain::nn;

namespace {

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

Mat<double> random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Mat<double> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-6);
}

// Max relative error between an analytic gradient and the central difference
// of loss() over each coordinate of `value`.
template <typename Loss>
double check_grad(double* value, const double* analytic, Eigen::Index n, Loss&& loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double keep = value[i];
    value[i] = keep + kH;
    const double up = loss();
    value[i] = keep - kH;
    const double dn = loss();
    value[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - dn) / (2.0 * kH)));
  }
  return worst;
}

}  // namespace

TEST_CASE("conv1d gradients match central differences") {
  Rng rng(11, {1});
  const int in = 3, out = 4, k = 8, len = 16, batch = 2;
  Conv1dSame<double> conv;
  conv.init(in, out, k, rng.fork(1));
  Mat<double> x = random_mat(in, batch * len, rng);
  const Mat<double> r = random_mat(out, batch * len, rng);  // fixed readout

  auto loss = [&] { return (conv.forward(x, batch, len).array() * r.array()).sum(); };

  loss();
  conv.zero_grad();
  const Mat<double> dx = conv.backward(r);
  const Mat<double> dw = conv.dw;
  const Vec<double> db = conv.db;

  CHECK(check_grad(conv.w.data(), dw.data(), conv.w.size(), loss) < kTol);
  CHECK(check_grad(conv.b.data(), db.data(), conv.b.size(), loss) < kTol);
  CHECK(check_grad(x.data(), dx.data(), x.size(), loss) < kTol);
}

TEST_CASE("batch norm training-mode gradients match central differences") {
  Rng rng(12, {1});
  const int features = 4, cols = 12;
  BatchNorm1d<double> bn;
  bn.init(features);
  // Non-trivial affine parameters so their gradients are exercised.
  for (int i = 0; i < features; ++i) {
    bn.gamma(i) = 0.5 + 0.3 * i;
    bn.beta(i) = -0.2 + 0.1 * i;
  }
  Mat<double> x = random_mat(features, cols, rng, 2.0);
  const Mat<double> r = random_mat(features, cols, rng);

  auto loss = [&] { return (bn.forward(x, true).array() * r.array()).sum(); };

  loss();
  bn.zero_grad();
  const Mat<double> dx = bn.backward(r);
  const Vec<double> dgamma = bn.dgamma;
  const Vec<double> dbeta = bn.dbeta;

  CHECK(check_grad(bn.gamma.data(), dgamma.data(), bn.gamma.size(), loss) < kTol);
  CHECK(check_grad(bn.beta.data(), dbeta.data(), bn.beta.size(), loss) < kTol);
  CHECK(check_grad(x.data(), dx.data(), x.size(), loss) < kTol);
}

TEST_CASE("dense gradients match central differences") {
  Rng rng(13, {1});
  const int in = 6, out = 4, batch = 5;
  Dense<double> fc;
  fc.init(in, out, rng.fork(1));
  Mat<double> x = random_mat(in, batch, rng);
  const Mat<double> r = random_mat(out, batch, rng);

  auto loss = [&] { return (fc.forward(x).array() * r.array()).sum(); };

  loss();
  fc.zero_grad();
  const Mat<double> dx = fc.backward(r);
  const Mat<double> dw = fc.dw;
  const Vec<double> db = fc.db;

  CHECK(check_grad(fc.w.data(), dw.data(), fc.w.size(), loss) < kTol);
  CHECK(check_grad(fc.b.data(), db.data(), fc.b.size(), loss) < kTol);
  CHECK(check_grad(x.data(), dx.data(), x.size(), loss) < kTol);
}

TEST_CASE("lstm gradients match central differences over a full sequence") {
  Rng rng(14, {1});
  const int in = 5, hidden = 3, len = 7, batch = 2;
  Lstm<double> lstm;
  lstm.init(in, hidden, rng.fork(1));
  Mat<double> x = random_mat(in, batch * len, rng);
  const Mat<double> r = random_mat(hidden, batch * len, rng);

  auto loss = [&] { return (lstm.forward(x, batch, len).array() * r.array()).sum(); };

  loss();
  lstm.zero_grad();
  const Mat<double> dx = lstm.backward(r);
  const Mat<double> dwx = lstm.dwx;
  const Mat<double> dwh = lstm.dwh;
  const Vec<double> db = lstm.db;

  CHECK(check_grad(lstm.wx.data(), dwx.data(), lstm.wx.size(), loss) < kTol);
  CHECK(check_grad(lstm.wh.data(), dwh.data(), lstm.wh.size(), loss) < kTol);
  CHECK(check_grad(lstm.b.data(), db.data(), lstm.b.size(), loss) < kTol);
  CHECK(check_grad(x.data(), dx.data(), x.size(), loss) < kTol);
}

TEST_CASE("softmax cross-entropy gradient matches central differences") {
  Rng rng(15, {1});
  const int classes = 5, batch = 7;
  Mat<double> logits = random_mat(classes, batch, rng, 2.0);
  std::vector<int> labels;
  for (int i = 0; i < batch; ++i)
    labels.push_back(static_cast<int>(rng.below(classes)));

  SoftmaxCe<double> ce;
  auto loss = [&] {
    ce.forward(logits);
    return ce.loss(labels);
  };

  loss();
  const Mat<double> dlogits = ce.backward(labels);
  CHECK(check_grad(logits.data(), dlogits.data(), logits.size(), loss) < kTol);

  // Probabilities are a valid distribution per column.
  const Mat<double> p = ce.forward(logits);
  for (int c = 0; c < batch; ++c) {
    CHECK(p.col(c).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.col(c).minCoeff() > 0.0);
  }
}

TEST_CASE("assembled network gradients match central differences") {
  CldnnSpec spec;
  spec.n_classes = 3;
  spec.input_len = 32;
  spec.conv_channels = 4;
  spec.kernel = 8;
  spec.head_hidden = 8;

  const int batch = 5;
  Rng rng(16, {1});
  Mat<double> x = random_mat(2, batch * spec.input_len, rng);
  std::vector<int> labels;
  for (int i = 0; i < batch; ++i)
    labels.push_back(static_cast<int>(rng.below(spec.n_classes)));

  Cldnn<double> model(spec, 99);
  auto loss = [&] {
    model.forward(x, batch, true);
    return model.loss(labels);
  };

  loss();
  model.zero_grad();
  model.backward(labels);

  // Freeze the analytic gradients before the finite-difference sweep mutates
  // the caches.
  std::vector<std::vector<double>> analytic;
  for (const auto& p : model.params())
    analytic.emplace_back(p.grad, p.grad + p.size);

  const auto params = model.params();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double w = check_grad(params[i].value, analytic[i].data(), params[i].size, loss);
    INFO("tensor ", i, " worst relative error ", w);
    CHECK(w < kTol);
    worst = std::max(worst, w);
  }
  CHECK(worst < kTol);
}

TEST_CASE("parameter registry covers the expected tensor count and sizes") {
  CldnnSpec spec;
  spec.n_classes = 3;
  spec.input_len = 32;
  spec.conv_channels = 4;
  spec.kernel = 8;
  spec.head_hidden = 8;
  Cldnn<float> model(spec, 1);

  const auto params = model.params();
  REQUIRE(params.size() == 21);
  const auto buffers = model.buffers();
  REQUIRE(buffers.size() == 8);

  std::size_t expect = 0;
  expect += 4u * 2 * 8 + 4;        // conv1
  expect += 2u * 4;                // bn1
  expect += 4u * 4 * 8 + 4;        // conv2
  expect += 2u * 4;                // bn2
  expect += 4u * 4 * 8 + 4;        // conv3
  expect += 2u * 4;                // bn3
  expect += 12u * 8 + 12u * 3 + 12;  // lstm on 8 concat channels, hidden 3
  expect += 8u * 96 + 8;           // fc1 over 32*3 flattened features
  expect += 2u * 8;                // bnh
  expect += 3u * 8 + 3;            // fc2
  CHECK(model.parameter_count() == expect);
}
