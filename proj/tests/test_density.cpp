#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "sigtrain/density.hpp"

using namespace sigtrain;

namespace {

NuisanceParams np(double snr, double fo, double srm) {
  NuisanceParams p;
  p.snr_db = snr;
  p.fo_frac = fo;
  p.srm = srm;
  return p;
}

// Fixed fit set used for the reference-value checks below.
std::vector<NuisanceParams> reference_samples() {
  return {np(10.0, 0.01, 4.0),   np(12.0, -0.02, 5.0), np(8.0, 0.03, 3.5),
          np(15.0, 0.0, 6.0),    np(11.0, 0.02, 4.5),  np(9.5, -0.01, 5.5),
          np(13.0, 0.015, 3.8),  np(10.5, -0.025, 4.2)};
}

}  // namespace

TEST_CASE("scott bandwidth matches the d=3 reference value") {
  // n^(-1/(d+4)) for n=8, d=3.
  CHECK(scott_bandwidth(8, 3) == doctest::Approx(0.742997144568474).epsilon(1e-12));
  CHECK(scott_bandwidth(1000, 3) == doctest::Approx(0.3727593720).epsilon(1e-9));
  CHECK(scott_bandwidth(1, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit reproduces the reference covariance and density values") {
  const auto m = kde_fit(reference_samples(), WaveformClass::Qpsk);
  CHECK(m.wclass == WaveformClass::Qpsk);
  CHECK(m.size() == 8);
  CHECK(m.bandwidth == doctest::Approx(0.742997144568474).epsilon(1e-12));

  Eigen::Matrix3d want;
  want << 4.76785714285714, -0.00928571428571429, 1.02678571428571,
      -0.00928571428571429, 0.000385714285714286, -0.00846428571428571,
      1.02678571428571, -0.00846428571428571, 0.756964285714286;
  CHECK((m.data_cov - want).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(kde_pdf(m, {10.0, 0.0, 4.0}) ==
        doctest::Approx(9.445638705064616e-01).epsilon(1e-9));
  CHECK(kde_pdf(m, {12.5, -0.015, 5.2}) ==
        doctest::Approx(7.868991574858584e-01).epsilon(1e-9));
}

TEST_CASE("the density is invariant to sample order") {
  auto samples = reference_samples();
  const auto a = kde_fit(samples, WaveformClass::Qpsk);
  std::reverse(samples.begin(), samples.end());
  const auto b = kde_fit(samples, WaveformClass::Qpsk);
  for (const Eigen::Vector3d q : {Eigen::Vector3d{10.0, 0.0, 4.0},
                                  Eigen::Vector3d{12.5, -0.015, 5.2},
                                  Eigen::Vector3d{7.0, 0.02, 3.1}}) {
    CHECK(kde_pdf(a, q) == doctest::Approx(kde_pdf(b, q)).epsilon(1e-12));
  }
}

TEST_CASE("sampling reproduces the smoothed covariance within five percent") {
  // Correlated cloud with enough spread that every draw is physical: no
  // rejection, so the sample covariance must converge to (1 + h^2) * cov.
  const std::size_t n_fit = 2000;
  Rng rng(101);
  std::vector<NuisanceParams> fit;
  fit.reserve(n_fit);
  for (std::size_t i = 0; i < n_fit; ++i) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    // A full-rank linear map keeps all pairwise correlations in play.
    fit.push_back(np(12.0 + 3.0 * a + 1.0 * b, 0.05 * b, 5.0 + 0.6 * c + 0.3 * a));
  }
  const auto m = kde_fit(fit, WaveformClass::Bpsk);
  const double h2 = m.bandwidth * m.bandwidth;

  const std::size_t n_draw = 100000;
  const auto draws = kde_sample(m, n_draw, Rng(102));
  REQUIRE(draws.size() == n_draw);
  for (const auto& d : draws) REQUIRE(d.valid());

  Eigen::MatrixXd x(n_draw, 3);
  for (std::size_t i = 0; i < n_draw; ++i)
    x.row(static_cast<Eigen::Index>(i)) << draws[i].snr_db, draws[i].fo_frac, draws[i].srm;
  const Eigen::RowVector3d mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::Matrix3d got =
      centered.transpose() * centered / static_cast<double>(n_draw - 1);
  const Eigen::Matrix3d want = (1.0 + h2) * m.data_cov;

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double scale = std::sqrt(want(r, r) * want(c, c));
      CHECK(std::abs(got(r, c) - want(r, c)) < 0.05 * scale);
    }
}

TEST_CASE("zero bandwidth collapses sampling onto the data points") {
  const auto samples = reference_samples();
  auto m = kde_fit(samples, WaveformClass::Qpsk);
  m.bandwidth = 0.0;
  const auto draws = kde_sample(m, 64, Rng(103));
  for (const auto& d : draws) {
    const bool hit = std::any_of(samples.begin(), samples.end(), [&](const NuisanceParams& s) {
      return s.snr_db == d.snr_db && s.fo_frac == d.fo_frac && s.srm == d.srm;
    });
    CHECK(hit);
  }
}

TEST_CASE("sampling is deterministic in the rng") {
  const auto m = kde_fit(reference_samples(), WaveformClass::Qpsk);
  const auto a = kde_sample(m, 100, Rng(104));
  const auto b = kde_sample(m, 100, Rng(104));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].snr_db == b[i].snr_db);
    CHECK(a[i].fo_frac == b[i].fo_frac);
    CHECK(a[i].srm == b[i].srm);
  }
}

TEST_CASE("degenerate fits are rejected") {
  // Too few points.
  std::vector<NuisanceParams> few(7, np(10.0, 0.01, 4.0));
  CHECK_THROWS_AS(kde_fit(few, WaveformClass::Bpsk), FitError);

  // A constant column makes the covariance singular.
  std::vector<NuisanceParams> flat;
  Rng rng(105);
  for (int i = 0; i < 32; ++i) flat.push_back(np(rng.uniform(0.0, 20.0), 0.01, 4.0));
  CHECK_THROWS_AS(kde_fit(flat, WaveformClass::Bpsk), FitError);
}

TEST_CASE("sampling gives up when no draw is physical") {
  // All mass far outside the valid domain: every redraw fails.
  std::vector<NuisanceParams> bad;
  Rng rng(106);
  for (int i = 0; i < 16; ++i)
    bad.push_back(np(rng.uniform(0.0, 20.0), rng.uniform(-0.01, 0.01), rng.uniform(3.0, 6.0)));
  auto m = kde_fit(bad, WaveformClass::Bpsk);
  // Shift the stored points so every kernel sits at srm near -50.
  m.points.col(2).array() -= 55.0;
  CHECK_THROWS_AS(kde_sample(m, 4, Rng(107)), GenerationError);
}

TEST_CASE("model json round-trips exactly") {
  const auto m = kde_fit(reference_samples(), WaveformClass::Qam16);
  const auto back = kde_from_json(kde_to_json(m));
  CHECK(back.wclass == m.wclass);
  CHECK(back.bandwidth == m.bandwidth);
  CHECK(back.points == m.points);
  CHECK(back.data_cov == m.data_cov);

  testutil::TempDir tmp("kdeio");
  KdeModelSet set;
  set[WaveformClass::Qam16] = m;
  set[WaveformClass::Bpsk] = kde_fit(reference_samples(), WaveformClass::Bpsk);
  const auto path = tmp.path() / "models.json";
  write_kde_models(set, path);
  const auto got = read_kde_models(path);
  REQUIRE(got.size() == 2);
  CHECK(got.at(WaveformClass::Qam16).points == m.points);
  CHECK(got.at(WaveformClass::Qam16).bandwidth == m.bandwidth);
  CHECK(got.at(WaveformClass::Bpsk).wclass == WaveformClass::Bpsk);
}
