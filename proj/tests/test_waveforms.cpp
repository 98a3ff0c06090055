#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sigtrain/waveforms.hpp"

using namespace sigtrain;

namespace {

constexpr double kPi = std::numbers::pi;

// Single-bin DFT magnitude at frequency f (cycles/sample).
double goertzel_mag(const CVec& x, double f) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double ph = -2.0 * kPi * f * static_cast<double>(n);
    acc += x[n] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return std::abs(acc) / static_cast<double>(x.size());
}

int hamming(int a, int b) { return __builtin_popcount(static_cast<unsigned>(a ^ b)); }

// Matched-filter demodulation of a linear stream produced with symbol k
// centered at sample k*sps. Returns recovered constellation indices.
std::vector<int> demod_linear(const CVec& x, WaveformClass c, int sps, double rolloff,
                              int span, std::size_t n_symbols) {
  const auto taps = rrc_taps(sps, rolloff, span);
  const int delay = span * sps / 2;
  const auto pts = constellation(c);
  std::vector<int> out;
  for (std::size_t k = 0; k < n_symbols; ++k) {
    // Correlate around the symbol center; normalize by tap energy (= sps).
    std::complex<double> acc{0.0, 0.0};
    const auto center = static_cast<std::ptrdiff_t>(k) * sps;
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const std::ptrdiff_t idx = center - delay + static_cast<std::ptrdiff_t>(t);
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(x.size())) continue;
      acc += x[static_cast<std::size_t>(idx)] * taps[taps.size() - 1 - t];
    }
    acc /= static_cast<double>(sps);
    int best = 0;
    double bestd = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = std::norm(acc - pts[i]);
      if (d < bestd) {
        bestd = d;
        best = static_cast<int>(i);
      }
    }
    out.push_back(best);
  }
  return out;
}

// Decision-feedback demodulation of a CPM stream: recover the instantaneous
// frequency, correlate with the known pulse, cancel decided symbols. The
// first `known` symbols are taken from `sent` to bootstrap the feedback.
std::vector<int> demod_cpm(const CVec& x, const ModulatorConfig& cfg, std::size_t n_symbols,
                           const std::vector<int>& sent, std::size_t known) {
  const int sps = static_cast<int>(cfg.sps);
  const auto gf = cpm_freq_pulse(cfg);
  const int L = cpm_pulse_symbols(cfg.wclass);

  // freq[n] such that phase step n->n+1 is 2*pi*h*freq[n+1]: reconstruct by
  // differencing arguments.
  std::vector<double> freq(x.size(), 0.0);
  for (std::size_t n = 0; n + 1 < x.size(); ++n)
    freq[n + 1] = std::arg(x[n + 1] * std::conj(x[n])) / (2.0 * kPi * cfg.fsk_h);

  std::vector<double> r(static_cast<std::size_t>(L), 0.0);
  for (int j = 0; j < L; ++j)
    for (std::size_t t = static_cast<std::size_t>(j) * sps; t < gf.size(); ++t)
      r[static_cast<std::size_t>(j)] += gf[t] * gf[t - static_cast<std::size_t>(j) * sps];

  std::vector<int> decided;
  for (std::size_t k = 0; k < n_symbols; ++k) {
    if (k < known) {
      decided.push_back(sent[k]);
      continue;
    }
    double s = 0.0;
    for (std::size_t t = 0; t < gf.size(); ++t) {
      const std::size_t idx = k * static_cast<std::size_t>(sps) + t;
      if (idx < freq.size()) s += freq[idx] * gf[t];
    }
    for (int j = 1; j < L; ++j) {
      const auto prev = static_cast<std::ptrdiff_t>(k) - j;
      if (prev >= 0) s -= decided[static_cast<std::size_t>(prev)] * r[static_cast<std::size_t>(j)];
    }
    decided.push_back(s >= 0.0 ? 1 : -1);
  }
  return decided;
}

}  // namespace

TEST_CASE("constellations have exact unit power and Gray neighbors") {
  for (const auto c : {WaveformClass::Bpsk, WaveformClass::Qpsk, WaveformClass::Qam16,
                       WaveformClass::Qam64}) {
    const auto pts = constellation(c);
    double p = 0.0;
    for (const auto& v : pts) p += std::norm(v);
    CHECK(p / static_cast<double>(pts.size()) == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK(constellation(WaveformClass::Bpsk)[0] == std::complex<double>{1.0, 0.0});
  CHECK(constellation(WaveformClass::Bpsk)[1] == std::complex<double>{-1.0, 0.0});

  // Any two points at the minimum distance differ in exactly one bit.
  for (const auto c : {WaveformClass::Qpsk, WaveformClass::Qam16, WaveformClass::Qam64}) {
    const auto pts = constellation(c);
    double dmin = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (std::abs(pts[i] - pts[j]) < dmin * 1.001)
          CHECK(hamming(static_cast<int>(i), static_cast<int>(j)) == 1);
  }
}

TEST_CASE("rrc taps satisfy the Nyquist criterion through the matched pair") {
  const int sps = 4, span = 8;
  const auto g = rrc_taps(sps, 0.35, span);
  REQUIRE(g.size() == static_cast<std::size_t>(span * sps + 1));

  double e = 0.0;
  for (const double v : g) e += v * v;
  CHECK(e == doctest::Approx(sps).epsilon(1e-12));

  // Raised cosine = rrc * rrc has (near-)zero crossings at symbol spacing.
  std::vector<double> rc(2 * g.size() - 1, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) rc[i + j] += g[i] * g[j];
  const std::size_t mid = g.size() - 1;
  CHECK(rc[mid] == doctest::Approx(sps).epsilon(1e-12));
  // Truncating at 8 symbols leaves residual ISI peaking where the cut tails
  // overlap (about 1e-2 at the half-span crossing); the adjacent-symbol
  // crossing, which dominates eye closure, stays far cleaner.
  CHECK(std::abs(rc[mid + static_cast<std::size_t>(sps)]) / sps < 5e-4);
  for (int m = 2; m <= span - 1; ++m)
    CHECK(std::abs(rc[mid + static_cast<std::size_t>(m) * sps]) / sps < 1.2e-2);
}

TEST_CASE("generation is deterministic under the seed") {
  const auto cfg = ModulatorConfig::for_class(WaveformClass::Qpsk, 4.0);
  const auto a = gen_linear(cfg, 4096, Rng(5));
  const auto b = gen_linear(cfg, 4096, Rng(5));
  const auto c = gen_linear(cfg, 4096, Rng(6));
  REQUIRE(a.size() == 4096);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("every class is unit average power within 1%") {
  const std::size_t n = 200000;
  int tag = 0;
  for (const auto c : kAllWaveformClasses) {
    const auto cfg = ModulatorConfig::for_class(c, 4.0);
    const auto x = generate(cfg, n, Rng(100 + tag++));
    REQUIRE(x.size() == n);
    CHECK_MESSAGE(mean_power(x) == doctest::Approx(1.0).epsilon(0.01),
                  "class ", to_string(c));
  }
}

TEST_CASE("cpm and fm classes have exactly unit envelope") {
  for (const auto c : {WaveformClass::Bfsk, WaveformClass::Gmsk, WaveformClass::Gbfsk,
                       WaveformClass::FmNb}) {
    const auto cfg = ModulatorConfig::for_class(c, 4.0);
    const auto x = generate(cfg, 20000, Rng(11));
    double worst = 0.0;
    for (const auto& v : x) worst = std::max(worst, std::abs(std::abs(v) - 1.0));
    CHECK_MESSAGE(worst < 1e-12, "class ", to_string(c));
  }
}

TEST_CASE("matched-filter demodulation recovers linear symbols exactly") {
  for (const auto c : {WaveformClass::Bpsk, WaveformClass::Qpsk, WaveformClass::Qam16,
                       WaveformClass::Qam64}) {
    const auto cfg = ModulatorConfig::for_class(c, 4.0);
    std::vector<std::complex<double>> sent;
    const auto x = gen_linear(cfg, 8192, Rng(21), &sent);
    const std::size_t n_sym = 8192 / 4 - 16;  // stay clear of the tail
    const auto got = demod_linear(x, c, 4, cfg.rrc_rolloff, cfg.rrc_span_symbols, n_sym);
    const auto pts = constellation(c);
    std::size_t errors = 0;
    // The leading symbols overlap the dropped warm-up; judge from 16 on.
    for (std::size_t k = 16; k < n_sym; ++k)
      if (pts[static_cast<std::size_t>(got[k])] != sent[k]) ++errors;
    CHECK_MESSAGE(errors == 0, "class ", to_string(c));
  }
}

TEST_CASE("decision-feedback demodulation recovers cpm symbols exactly") {
  for (const auto c : {WaveformClass::Bfsk, WaveformClass::Gmsk, WaveformClass::Gbfsk}) {
    const auto cfg = ModulatorConfig::for_class(c, 4.0);
    std::vector<int> sent;
    const auto x = gen_cpm(cfg, 8192, Rng(31), &sent);
    const std::size_t n_sym = 8192 / 4 - 16;
    const auto got = demod_cpm(x, cfg, n_sym, sent, 16);
    std::size_t errors = 0;
    for (std::size_t k = 16; k < n_sym; ++k)
      if (got[k] != sent[k]) ++errors;
    CHECK_MESSAGE(errors == 0, "class ", to_string(c));
  }
}

TEST_CASE("gmsk symbol advances the phase by half pi in total") {
  const auto cfg = ModulatorConfig::for_class(WaveformClass::Gmsk, 4.0);
  const auto gf = cpm_freq_pulse(cfg);
  double total = 0.0;
  for (const double v : gf) total += v;
  // One symbol's full phase contribution: 2*pi*h*sum(gf) = pi/2 at h = 0.5.
  CHECK(2.0 * kPi * cfg.fsk_h * total == doctest::Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("bfsk spectrum peaks at plus and minus h/(2 sps)") {
  const auto cfg = ModulatorConfig::for_class(WaveformClass::Bfsk, 4.0);
  const auto x = gen_cpm(cfg, 65536, Rng(41));
  const double f0 = cfg.fsk_h / (2.0 * cfg.sps);  // 0.125
  const double on_pos = goertzel_mag(x, f0);
  const double on_neg = goertzel_mag(x, -f0);
  // Tones carry far more energy than nearby off-tone frequencies.
  const double off1 = goertzel_mag(x, f0 + 0.01);
  const double off2 = goertzel_mag(x, f0 - 0.01);
  CHECK(on_pos > 10.0 * off1);
  CHECK(on_pos > 10.0 * off2);
  CHECK(on_neg > 10.0 * off1);
}

TEST_CASE("am is real with conjugate-symmetric spectrum; depth 0 is a pure carrier") {
  auto cfg = ModulatorConfig::for_class(WaveformClass::AmDsb, 4.0);
  const auto x = gen_analog(cfg, 8192, Rng(51));
  for (const auto& v : x) CHECK(v.imag() == 0.0);
  for (const double f : {0.01, 0.03, 0.07}) {
    CHECK(goertzel_mag(x, f) == doctest::Approx(goertzel_mag(x, -f)).epsilon(1e-9));
  }
  CHECK(mean_power(x) == doctest::Approx(1.0).epsilon(1e-9));

  cfg.am_depth = 0.0;
  const auto carrier = gen_analog(cfg, 128, Rng(52));
  for (const auto& v : carrier) {
    CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.imag() == 0.0);
  }
}

TEST_CASE("fm has the configured peak deviation") {
  const auto cfg = ModulatorConfig::for_class(WaveformClass::FmNb, 4.0);
  const auto x = gen_analog(cfg, 16384, Rng(61));
  const double dev = 0.25 / 4.0;
  double peak = 0.0;
  for (std::size_t n = 0; n + 1 < x.size(); ++n)
    peak = std::max(peak, std::abs(std::arg(x[n + 1] * std::conj(x[n]))) / (2.0 * kPi));
  // The message is peak-normalized to 1, so the maximum instantaneous
  // deviation equals fm_dev exactly when the peak sample is in range.
  CHECK(peak == doctest::Approx(dev).epsilon(1e-6));
  CHECK(peak <= dev + 1e-12);
}

TEST_CASE("fractional sps generates at the exact requested length and power") {
  for (const auto c : {WaveformClass::Qpsk, WaveformClass::Gmsk}) {
    auto cfg = ModulatorConfig::for_class(c, 2.5);
    const auto x = generate(cfg, 5000, Rng(71));
    REQUIRE(x.size() == 5000);
    CHECK(mean_power(x) == doctest::Approx(1.0).epsilon(0.02));
    const auto y = generate(cfg, 5000, Rng(71));
    CHECK(x == y);
  }
}

TEST_CASE("wrong classes are rejected") {
  const auto cfg = ModulatorConfig::for_class(WaveformClass::Noise, 4.0);
  CHECK_THROWS_AS(gen_linear(cfg, 2048, Rng(1)), ConfigError);
  CHECK_THROWS_AS(gen_cpm(cfg, 2048, Rng(1)), ConfigError);
  CHECK_THROWS_AS(gen_analog(cfg, 2048, Rng(1)), ConfigError);

  auto bad = ModulatorConfig::for_class(WaveformClass::Qpsk, 1.0);
  CHECK_THROWS_AS(gen_linear(bad, 2048, Rng(1)), ConfigError);
}

TEST_CASE("noise is circular, zero-mean, unit power") {
  const auto x = gen_noise(1000000, Rng(81));
  double pr = 0.0, pi = 0.0;
  std::complex<double> mean{0.0, 0.0};
  double cross = 0.0;
  for (const auto& v : x) {
    mean += v;
    pr += v.real() * v.real();
    pi += v.imag() * v.imag();
    cross += v.real() * v.imag();
  }
  const auto n = static_cast<double>(x.size());
  mean /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK((pr + pi) / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(cross / n) / std::sqrt(pr / n * pi / n) < 0.01);
}
