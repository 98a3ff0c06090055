#include "sigtrain/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace sigtrain {

namespace {

constexpr int kCrossings = 16;   // sinc zero crossings kept per side
constexpr int kSteps = 512;      // table entries per crossing
constexpr double kKaiserBeta = 8.0;

double bessel_i0(double x) {
  // Power series; converges quickly for the argument range used here.
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Prototype lowpass: sinc(u) * kaiser(u / kCrossings), u in crossings.
// Integer arguments are forced to their exact values so that a ratio of 1
// degenerates to the identity.
const std::array<double, kCrossings * kSteps + 1>& sinc_table() {
  static const auto table = [] {
    std::array<double, kCrossings * kSteps + 1> t{};
    const double i0b = bessel_i0(kKaiserBeta);
    for (int i = 0; i < static_cast<int>(t.size()); ++i) {
      if (i == 0) {
        t[i] = 1.0;
        continue;
      }
      if (i % kSteps == 0) {
        t[i] = 0.0;
        continue;
      }
      const double u = static_cast<double>(i) / kSteps;
      const double s = std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
      const double frac = u / kCrossings;
      const double w = bessel_i0(kKaiserBeta * std::sqrt(1.0 - frac * frac)) / i0b;
      t[i] = s * w;
    }
    return t;
  }();
  return table;
}

double proto_at(double u) {
  u = std::abs(u);
  if (u >= kCrossings) return 0.0;
  const double pos = u * kSteps;
  const auto i0 = static_cast<int>(pos);
  const double frac = pos - i0;
  const auto& t = sinc_table();
  if (frac == 0.0) return t[i0];
  return t[i0] + frac * (t[i0 + 1] - t[i0]);
}

}  // namespace

CVec apply_freq_offset(const CVec& x, double fo_frac) {
  CVec y(x.size());
  const double w = 2.0 * std::numbers::pi * fo_frac;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double ph = w * static_cast<double>(n);
    y[n] = x[n] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return y;
}

CVec resample(const CVec& x, double ratio) {
  if (!(ratio >= kResampleRatioMin && ratio <= kResampleRatioMax))
    throw std::invalid_argument("resample ratio " + std::to_string(ratio) +
                                " outside [" + std::to_string(kResampleRatioMin) + ", " +
                                std::to_string(kResampleRatioMax) + "]");
  if (x.empty()) return {};

  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const auto n_out = static_cast<std::size_t>(static_cast<double>(n_in) * ratio);
  CVec y(n_out);

  // When decimating, stretch the kernel so it cuts off at the output
  // bandwidth instead of the input's.
  const double r = std::min(1.0, ratio);
  const double halfw = kCrossings / r;

  for (std::size_t m = 0; m < n_out; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const auto kmin = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - halfw)));
    const auto kmax = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(t + halfw)));
    std::complex<double> acc{0.0, 0.0};
    double wsum = 0.0;
    for (std::ptrdiff_t k = kmin; k <= kmax; ++k) {
      const double w = proto_at((static_cast<double>(k) - t) * r);
      if (w == 0.0) continue;
      acc += x[static_cast<std::size_t>(k)] * w;
      wsum += w;
    }
    y[m] = wsum != 0.0 ? acc / wsum : std::complex<double>{0.0, 0.0};
  }
  return y;
}

CVec apply_awgn(const CVec& x, double snr_db, double signal_power, Rng rng) {
  if (std::isinf(snr_db) && snr_db > 0) return x;
  const double noise_var = signal_power * db_to_linear(-snr_db);
  const double sigma = std::sqrt(noise_var / 2.0);
  CVec y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double re = rng.normal() * sigma;
    const double im = rng.normal() * sigma;
    y[n] = x[n] + std::complex<double>(re, im);
  }
  return y;
}

IqObservation degrade_to_params(const CVec& clean, const NuisanceParams& p, double gen_sps,
                                ObservationMeta meta, Rng rng) {
  if (!(gen_sps > 0.0)) throw GenerationError("gen_sps must be positive");
  const double ratio = p.srm / gen_sps;
  if (!(ratio >= kResampleRatioMin && ratio <= kResampleRatioMax))
    throw GenerationError("srm/gen_sps ratio " + std::to_string(ratio) +
                          " outside resampler range");

  CVec y = ratio == 1.0 ? clean : resample(clean, ratio);
  if (y.size() < kObservationLen)
    throw GenerationError("degraded record has " + std::to_string(y.size()) +
                          " samples, need " + std::to_string(kObservationLen));

  y = apply_freq_offset(y, p.fo_frac);
  y = apply_awgn(y, p.snr_db, mean_power(y), rng.fork(0x6177676eULL));

  // Prefer an interior window when there is slack, dodging filter edges.
  const std::size_t slack = (y.size() - kObservationLen) / 2;
  const std::size_t start = std::min<std::size_t>(32, slack);

  IqObservation obs;
  obs.samples.resize(kObservationLen);
  double acc = 0.0;
  for (std::size_t i = 0; i < kObservationLen; ++i) {
    const auto v = y[start + i];
    acc += std::norm(v);
  }
  const double pw = acc / static_cast<double>(kObservationLen);
  const double scale = pw > 1e-300 ? 1.0 / std::sqrt(pw) : 1.0;
  for (std::size_t i = 0; i < kObservationLen; ++i) {
    const auto v = y[start + i] * scale;
    obs.samples[i] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
  }
  meta.params = p;
  obs.meta = std::move(meta);
  return obs;
}

CVec apply_propagation(const CVec& x, const PropagationConfig& cfg, Rng rng) {
  if (cfg.n_taps < 1) throw ConfigError("propagation n_taps must be >= 1");

  // Multipath: Rayleigh taps on an exponential power profile, normalized to
  // unit energy per realization so the channel never rescales on average.
  Rng tap_rng = rng.fork(0x74617073ULL);
  std::vector<std::complex<double>> taps(static_cast<std::size_t>(cfg.n_taps));
  double energy = 0.0;
  for (int k = 0; k < cfg.n_taps; ++k) {
    const double p = db_to_linear(-cfg.pdp_decay_db_per_tap * k);
    const double s = std::sqrt(p / 2.0);
    taps[static_cast<std::size_t>(k)] = {tap_rng.normal() * s, tap_rng.normal() * s};
    energy += std::norm(taps[static_cast<std::size_t>(k)]);
  }
  if (energy < 1e-30) {
    taps.assign(taps.size(), {0.0, 0.0});
    taps[0] = {1.0, 0.0};
    energy = 1.0;
  }
  const double inv = 1.0 / std::sqrt(energy);
  for (auto& t : taps) t *= inv;

  CVec y(x.size(), {0.0, 0.0});
  for (std::size_t n = 0; n < x.size(); ++n) {
    std::complex<double> acc{0.0, 0.0};
    const std::size_t kmax = std::min<std::size_t>(taps.size() - 1, n);
    for (std::size_t k = 0; k <= kmax; ++k) acc += taps[k] * x[n - k];
    y[n] = acc;
  }

  // Receive-side IQ imbalance: y -> mu*y + nu*conj(y).
  if (cfg.iq_gain_imbalance_db != 0.0 || cfg.iq_phase_imbalance_deg != 0.0) {
    const double g = std::pow(10.0, cfg.iq_gain_imbalance_db / 20.0);
    const double ph = cfg.iq_phase_imbalance_deg * std::numbers::pi / 180.0;
    const std::complex<double> rot(std::cos(ph), std::sin(ph));
    const std::complex<double> mu = (1.0 + g * rot) / 2.0;
    const std::complex<double> nu = (1.0 - g * rot) / 2.0;
    for (auto& v : y) v = mu * v + nu * std::conj(v);
  }

  if (cfg.phase_noise_std_rad > 0.0) {
    Rng pn_rng = rng.fork(0x70686173ULL);
    double theta = 0.0;
    for (auto& v : y) {
      theta += pn_rng.normal() * cfg.phase_noise_std_rad;
      v *= std::complex<double>(std::cos(theta), std::sin(theta));
    }
  }

  if (cfg.cfo_drift_per_sample != 0.0) {
    for (std::size_t n = 0; n < y.size(); ++n) {
      const double nn = static_cast<double>(n);
      const double ph = std::numbers::pi * cfg.cfo_drift_per_sample * nn * nn;
      y[n] *= std::complex<double>(std::cos(ph), std::sin(ph));
    }
  }
  return y;
}

}  // namespace sigtrain
