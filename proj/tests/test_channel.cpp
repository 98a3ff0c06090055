#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sigtrain/channel.hpp"
#include "sigtrain/waveforms.hpp"

using namespace sigtrain;

namespace {

constexpr double kPi = std::numbers::pi;

CVec tone(std::size_t n, double f) {
  CVec x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = 2.0 * kPi * f * static_cast<double>(k);
    x[k] = {std::cos(ph), std::sin(ph)};
  }
  return x;
}

// In-place radix-2 FFT, size must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Frequency (cycles/sample, in [-0.5, 0.5)) of the strongest FFT bin.
double peak_freq(const CVec& x) {
  auto a = x;
  fft(a);
  std::size_t best = 0;
  for (std::size_t k = 1; k < a.size(); ++k)
    if (std::norm(a[k]) > std::norm(a[best])) best = k;
  double f = static_cast<double>(best) / static_cast<double>(a.size());
  if (f >= 0.5) f -= 1.0;
  return f;
}

}  // namespace

TEST_CASE("frequency offset is exactly invertible") {
  CVec x(4096);
  Rng rng(7);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto back = apply_freq_offset(apply_freq_offset(x, 0.137), -0.137);
  double worst = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) worst = std::max(worst, std::abs(back[n] - x[n]));
  CHECK(worst < 1e-6);

  // DC rotated by f is the pure tone at f.
  const auto t = apply_freq_offset(CVec(1024, {1.0, 0.0}), 0.0625);
  const auto ref = tone(1024, 0.0625);
  for (std::size_t n = 0; n < t.size(); ++n) CHECK(std::abs(t[n] - ref[n]) < 1e-9);
}

TEST_CASE("resampling at ratio 1 is the identity") {
  CVec x(3000);
  Rng rng(9);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto y = resample(x, 1.0);
  REQUIRE(y.size() == x.size());
  CHECK(y == x);
}

TEST_CASE("resampling moves a tone to f/ratio within one fft bin") {
  {
    const auto y = resample(tone(4096, 0.11), 2.0);
    REQUIRE(y.size() == 8192);
    CHECK(std::abs(peak_freq(y) - 0.11 / 2.0) <= 1.0 / 8192.0);
  }
  {
    // Decimation by 3: the input tone sits inside the output passband.
    const auto y = resample(tone(6144, 0.12), 1.0 / 3.0);
    REQUIRE(y.size() == 2048);
    CHECK(std::abs(peak_freq(y) - 0.36) <= 1.0 / 2048.0);
  }
}

TEST_CASE("resampled length is the floor of n times ratio") {
  CVec x(1000, {1.0, 0.0});
  CHECK(resample(x, 0.7).size() == 700);
  CHECK(resample(x, 1.0 / 32.0).size() == 31);
  CHECK(resample(x, 2.5).size() == 2500);
  CHECK(resample(CVec(64, {1.0, 0.0}), 31.9).size() == 2041);
  CHECK(resample(CVec{}, 2.0).empty());
}

TEST_CASE("resampling rejects ratios outside its range") {
  CVec x(64, {1.0, 0.0});
  CHECK_THROWS_AS(resample(x, 1.0 / 33.0), std::invalid_argument);
  CHECK_THROWS_AS(resample(x, 33.0), std::invalid_argument);
  CHECK_THROWS_AS(resample(x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(resample(x, -1.0), std::invalid_argument);
}

TEST_CASE("decimation suppresses out-of-band energy") {
  // A tone above the output Nyquist rate must not alias through.
  const auto y = resample(tone(8192, 0.4), 0.5);
  CHECK(mean_power(y) < 0.01);
}

TEST_CASE("awgn hits the requested snr within a tenth of a db") {
  const std::size_t n = 1000000;
  const CVec x(n, {1.0, 0.0});
  for (const double snr : {0.0, 10.0, -5.0}) {
    const auto y = apply_awgn(x, snr, 1.0, Rng(13, {static_cast<std::uint64_t>(snr + 100)}));
    double noise = 0.0;
    for (std::size_t k = 0; k < n; ++k) noise += std::norm(y[k] - x[k]);
    noise /= static_cast<double>(n);
    const double got_db = -linear_to_db(noise);
    CHECK(std::abs(got_db - snr) < 0.1);
  }
}

TEST_CASE("awgn with infinite snr returns the input unchanged") {
  CVec x(100);
  Rng rng(17);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto y = apply_awgn(x, std::numeric_limits<double>::infinity(), 1.0, Rng(18));
  CHECK(y == x);
}

TEST_CASE("awgn is deterministic in the rng") {
  const CVec x(256, {1.0, 0.0});
  const auto a = apply_awgn(x, 5.0, 1.0, Rng(21));
  const auto b = apply_awgn(x, 5.0, 1.0, Rng(21));
  const auto c = apply_awgn(x, 5.0, 1.0, Rng(22));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("degrading slices an interior unit-power window") {
  CVec clean(2048);
  Rng rng(31);
  for (auto& v : clean) v = {rng.normal(), rng.normal()};

  NuisanceParams p;
  p.snr_db = std::numeric_limits<double>::infinity();
  p.fo_frac = 0.0123;
  p.srm = 2.0;
  REQUIRE(p.valid());

  const auto obs = degrade_to_params(clean, p, 2.0, ObservationMeta{}, Rng(32));
  REQUIRE(obs.samples.size() == kObservationLen);
  CHECK(obs.meta.params.snr_db == p.snr_db);
  CHECK(obs.meta.params.fo_frac == p.fo_frac);
  CHECK(obs.meta.params.srm == p.srm);

  // srm/gen_sps is 1 and snr is infinite, so the window is clean[32..1056]
  // rotated and renormalized.
  CVec expect(kObservationLen);
  for (std::size_t i = 0; i < kObservationLen; ++i) {
    const double ph = 2.0 * kPi * p.fo_frac * static_cast<double>(32 + i);
    expect[i] = clean[32 + i] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  const double scale = 1.0 / std::sqrt(mean_power(expect));
  double worst = 0.0;
  for (std::size_t i = 0; i < kObservationLen; ++i) {
    const std::complex<double> got(obs.samples[i].real(), obs.samples[i].imag());
    worst = std::max(worst, std::abs(got - expect[i] * scale));
  }
  CHECK(worst < 1e-5);
  CHECK(mean_power(std::span<const std::complex<float>>(obs.samples)) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("degraded noise stays white at any nominal srm") {
  // Noise observations are produced at the final rate, so the resampler sees
  // a ratio of exactly 1 and must not color the spectrum.
  const auto clean = gen_noise(1100, Rng(41));
  NuisanceParams p;
  p.snr_db = 5.0;
  p.fo_frac = 0.01;
  p.srm = 3.7;
  const auto obs = degrade_to_params(clean, p, 3.7, ObservationMeta{}, Rng(42));
  REQUIRE(obs.samples.size() == kObservationLen);
  CHECK(mean_power(std::span<const std::complex<float>>(obs.samples)) ==
        doctest::Approx(1.0).epsilon(1e-5));

  std::complex<double> lag1{0.0, 0.0};
  for (std::size_t i = 0; i + 1 < obs.samples.size(); ++i) {
    const std::complex<double> a(obs.samples[i].real(), obs.samples[i].imag());
    const std::complex<double> b(obs.samples[i + 1].real(), obs.samples[i + 1].imag());
    lag1 += b * std::conj(a);
  }
  CHECK(std::abs(lag1) / static_cast<double>(obs.samples.size()) < 0.1);
}

TEST_CASE("degrading rejects records that cannot fill the window") {
  const CVec clean(500, {1.0, 0.0});
  NuisanceParams p;
  p.srm = 2.0;
  CHECK_THROWS_AS(degrade_to_params(clean, p, 2.0, ObservationMeta{}, Rng(1)), GenerationError);
  // Ratio far outside the resampler range fails up front.
  CHECK_THROWS_AS(degrade_to_params(clean, p, 100.0, ObservationMeta{}, Rng(1)), GenerationError);
}

TEST_CASE("propagation with everything disabled is a pure phase") {
  PropagationConfig cfg;
  cfg.n_taps = 1;
  cfg.iq_gain_imbalance_db = 0.0;
  cfg.iq_phase_imbalance_deg = 0.0;
  cfg.phase_noise_std_rad = 0.0;
  cfg.cfo_drift_per_sample = 0.0;

  CVec x(512);
  Rng rng(51);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto y = apply_propagation(x, cfg, Rng(52));
  REQUIRE(y.size() == x.size());
  const std::complex<double> h = y[0] / x[0];
  CHECK(std::abs(h) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(y[n] - h * x[n]) < 1e-12);
}

TEST_CASE("multipath power profile decays at the configured rate") {
  PropagationConfig cfg;
  cfg.n_taps = 3;
  cfg.pdp_decay_db_per_tap = 3.0;
  cfg.iq_gain_imbalance_db = 0.0;
  cfg.iq_phase_imbalance_deg = 0.0;
  cfg.phase_noise_std_rad = 0.0;
  cfg.cfo_drift_per_sample = 0.0;

  CVec impulse(8, {0.0, 0.0});
  impulse[0] = {1.0, 0.0};
  std::vector<double> p(3, 0.0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const auto y = apply_propagation(impulse, cfg, Rng(61, {static_cast<std::uint64_t>(t)}));
    for (std::size_t k = 0; k < 3; ++k) p[k] += std::norm(y[k]);
  }
  // Per-realization energy normalization compresses the nominal 3 dB/tap
  // profile; the expected mean ratios (Monte-Carlo, 2e6 draws) are 2.147 dB
  // and 2.377 dB.
  CHECK(std::abs(linear_to_db(p[0] / p[1]) - 2.147) < 0.15);
  CHECK(std::abs(linear_to_db(p[1] / p[2]) - 2.377) < 0.15);
  // The normalization keeps total energy at exactly one.
  CHECK((p[0] + p[1] + p[2]) / trials == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phase-only impairments preserve the envelope") {
  PropagationConfig cfg;
  cfg.n_taps = 1;
  cfg.iq_gain_imbalance_db = 0.0;
  cfg.iq_phase_imbalance_deg = 0.0;
  cfg.phase_noise_std_rad = 0.01;
  cfg.cfo_drift_per_sample = 1e-5;

  CVec x(512);
  Rng rng(71);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  const auto y = apply_propagation(x, cfg, Rng(72));
  for (std::size_t n = 0; n < x.size(); ++n)
    CHECK(std::abs(y[n]) == doctest::Approx(std::abs(x[n])).epsilon(1e-12));
}

TEST_CASE("propagation rejects an empty tap count") {
  PropagationConfig cfg;
  cfg.n_taps = 0;
  CHECK_THROWS_AS(apply_propagation(CVec(8, {1.0, 0.0}), cfg, Rng(1)), ConfigError);
}
