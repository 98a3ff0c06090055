#include "sigtrain/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sigtrain/channel.hpp"

namespace sigtrain {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_linear(WaveformClass c) {
  return c == WaveformClass::Bpsk || c == WaveformClass::Qpsk ||
         c == WaveformClass::Qam16 || c == WaveformClass::Qam64;
}

bool is_cpm(WaveformClass c) {
  return c == WaveformClass::Bfsk || c == WaveformClass::Gmsk ||
         c == WaveformClass::Gbfsk;
}

bool is_analog(WaveformClass c) {
  return c == WaveformClass::AmDsb || c == WaveformClass::FmNb;
}

// Integer sps or 0 when fractional.
int integer_sps(double sps) {
  const double r = std::round(sps);
  return std::abs(sps - r) < 1e-9 ? static_cast<int>(r) : 0;
}

// Gray-coded per-axis levels, indexed by the raw bit pattern.
constexpr double kGray2[2] = {-1.0, 1.0};
constexpr double kGray4[4] = {-3.0, -1.0, 3.0, 1.0};
constexpr double kGray8[8] = {-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0};

// Generate at an integer rate near cfg.sps and resample down to the exact
// fractional rate, trimming the filter edges.
CVec fractional_via_resample(const ModulatorConfig& cfg, std::size_t n_out, Rng rng,
                             CVec (*gen)(const ModulatorConfig&, std::size_t, Rng)) {
  const int base = std::max(2, static_cast<int>(std::ceil(cfg.sps - 1e-9)));
  const double ratio = cfg.sps / base;
  constexpr std::size_t kEdge = 48;
  const auto n_base = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n_out + 2 * kEdge) / ratio)) + 4;
  ModulatorConfig at_base = cfg;
  at_base.sps = base;
  const CVec full = resample(gen(at_base, n_base, rng), ratio);
  if (full.size() < n_out + kEdge) throw GenerationError("fractional-rate generation came up short");
  const std::size_t start = std::min(kEdge, full.size() - n_out);
  return {full.begin() + static_cast<std::ptrdiff_t>(start),
          full.begin() + static_cast<std::ptrdiff_t>(start + n_out)};
}

CVec gen_linear_plain(const ModulatorConfig& cfg, std::size_t n_out, Rng rng) {
  return gen_linear(cfg, n_out, rng, nullptr);
}

CVec gen_cpm_plain(const ModulatorConfig& cfg, std::size_t n_out, Rng rng) {
  return gen_cpm(cfg, n_out, rng, nullptr);
}

}  // namespace

ModulatorConfig ModulatorConfig::for_class(WaveformClass c, double sps) {
  ModulatorConfig cfg;
  cfg.wclass = c;
  cfg.sps = sps;
  switch (c) {
    case WaveformClass::Bfsk:
      cfg.fsk_h = 1.0;
      break;
    case WaveformClass::Gmsk:
      cfg.fsk_h = 0.5;
      cfg.gauss_bt = 0.3;
      break;
    case WaveformClass::Gbfsk:
      cfg.fsk_h = 1.0;
      cfg.gauss_bt = 0.35;
      break;
    default:
      break;
  }
  return cfg;
}

void ModulatorConfig::validate() const {
  if (!(sps >= 2.0)) throw ConfigError("sps must be >= 2");
  if (!(rrc_rolloff > 0.0 && rrc_rolloff <= 1.0)) throw ConfigError("rrc_rolloff must be in (0,1]");
  if (rrc_span_symbols < 2) throw ConfigError("rrc_span_symbols must be >= 2");
  if (!(fsk_h > 0.0)) throw ConfigError("fsk_h must be > 0");
  if (!(gauss_bt > 0.0 && gauss_bt <= 1.0)) throw ConfigError("gauss_bt must be in (0,1]");
  if (!(am_depth >= 0.0 && am_depth <= 1.0)) throw ConfigError("am_depth must be in [0,1]");
}

std::vector<std::complex<double>> constellation(WaveformClass c) {
  std::vector<std::complex<double>> pts;
  switch (c) {
    case WaveformClass::Bpsk:
      pts = {{1.0, 0.0}, {-1.0, 0.0}};
      break;
    case WaveformClass::Qpsk: {
      const double s = 1.0 / std::sqrt(2.0);
      pts.resize(4);
      for (int b = 0; b < 4; ++b)
        pts[b] = {kGray2[b & 1] * s, kGray2[(b >> 1) & 1] * s};
      break;
    }
    case WaveformClass::Qam16: {
      const double s = 1.0 / std::sqrt(10.0);
      pts.resize(16);
      for (int b = 0; b < 16; ++b)
        pts[b] = {kGray4[b & 3] * s, kGray4[(b >> 2) & 3] * s};
      break;
    }
    case WaveformClass::Qam64: {
      const double s = 1.0 / std::sqrt(42.0);
      pts.resize(64);
      for (int b = 0; b < 64; ++b)
        pts[b] = {kGray8[b & 7] * s, kGray8[(b >> 3) & 7] * s};
      break;
    }
    default:
      throw ConfigError("no constellation for class " + std::string(to_string(c)));
  }
  return pts;
}

std::vector<double> rrc_taps(int sps, double rolloff, int span_symbols) {
  const int half = span_symbols * sps / 2;
  const int len = span_symbols * sps + 1;
  std::vector<double> h(static_cast<std::size_t>(len));
  const double b = rolloff;
  for (int k = 0; k < len; ++k) {
    const double t = static_cast<double>(k - half) / sps;
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - b + 4.0 * b / kPi;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
      v = (b / std::sqrt(2.0)) * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                                  (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
    } else {
      const double num = std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b));
      const double den = kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
      v = num / den;
    }
    h[static_cast<std::size_t>(k)] = v;
  }
  double e = 0.0;
  for (const double v : h) e += v * v;
  const double scale = std::sqrt(static_cast<double>(sps) / e);
  for (double& v : h) v *= scale;
  return h;
}

int cpm_pulse_symbols(WaveformClass c) {
  return c == WaveformClass::Bfsk ? 1 : 4;
}

std::vector<double> cpm_freq_pulse(const ModulatorConfig& cfg) {
  const int sps = integer_sps(cfg.sps);
  if (sps < 2) throw ConfigError("cpm_freq_pulse needs integer sps >= 2");
  const int L = cpm_pulse_symbols(cfg.wclass);
  std::vector<double> gf;
  if (cfg.wclass == WaveformClass::Bfsk) {
    gf.assign(static_cast<std::size_t>(sps), 1.0);
  } else {
    // Rectangle convolved with the Gaussian that gives the configured
    // bandwidth-time product, center-truncated to L symbols.
    const double sigma = sps * std::sqrt(std::log(2.0)) / (2.0 * kPi * cfg.gauss_bt);
    const int kh = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kern(static_cast<std::size_t>(2 * kh + 1));
    for (int n = -kh; n <= kh; ++n)
      kern[static_cast<std::size_t>(n + kh)] = std::exp(-0.5 * n * n / (sigma * sigma));
    std::vector<double> conv(static_cast<std::size_t>(sps) + kern.size() - 1, 0.0);
    for (int a = 0; a < sps; ++a)
      for (std::size_t b = 0; b < kern.size(); ++b) conv[a + b] += kern[b];
    const std::size_t want = static_cast<std::size_t>(L) * sps;
    if (conv.size() <= want) {
      gf = conv;
      gf.resize(want, 0.0);
    } else {
      const std::size_t start = (conv.size() - want) / 2;
      gf.assign(conv.begin() + static_cast<std::ptrdiff_t>(start),
                conv.begin() + static_cast<std::ptrdiff_t>(start + want));
    }
  }
  double s = 0.0;
  for (const double v : gf) s += v;
  for (double& v : gf) v *= 0.5 / s;
  return gf;
}

CVec gen_linear(const ModulatorConfig& cfg, std::size_t n_out, Rng rng,
                std::vector<std::complex<double>>* symbols_out) {
  cfg.validate();
  if (!is_linear(cfg.wclass))
    throw ConfigError("gen_linear cannot produce class " + std::string(to_string(cfg.wclass)));
  if (n_out == 0) return {};

  const int sps = integer_sps(cfg.sps);
  if (sps == 0) {
    if (symbols_out) throw ConfigError("symbol alignment is only available at integer sps");
    return fractional_via_resample(cfg, n_out, rng, &gen_linear_plain);
  }

  const auto pts = constellation(cfg.wclass);
  const auto taps = rrc_taps(sps, cfg.rrc_rolloff, cfg.rrc_span_symbols);
  const int span = cfg.rrc_span_symbols;
  const int delay = span * sps / 2;

  const std::size_t warm = static_cast<std::size_t>(span);
  const std::size_t n_sym =
      warm + (n_out + static_cast<std::size_t>(sps) - 1) / sps + static_cast<std::size_t>(span) + 2;

  std::vector<std::complex<double>> sym(n_sym);
  for (auto& s : sym) s = pts[rng.below(pts.size())];

  CVec shaped(n_sym * static_cast<std::size_t>(sps) + taps.size(), {0.0, 0.0});
  for (std::size_t k = 0; k < n_sym; ++k) {
    const std::size_t base = k * static_cast<std::size_t>(sps);
    for (std::size_t t = 0; t < taps.size(); ++t) shaped[base + t] += sym[k] * taps[t];
  }

  const std::size_t start = static_cast<std::size_t>(delay) + warm * static_cast<std::size_t>(sps);
  CVec out(shaped.begin() + static_cast<std::ptrdiff_t>(start),
           shaped.begin() + static_cast<std::ptrdiff_t>(start + n_out));
  if (symbols_out)
    symbols_out->assign(sym.begin() + static_cast<std::ptrdiff_t>(warm), sym.end());
  return out;
}

CVec gen_cpm(const ModulatorConfig& cfg, std::size_t n_out, Rng rng,
             std::vector<int>* symbols_out) {
  cfg.validate();
  if (!is_cpm(cfg.wclass))
    throw ConfigError("gen_cpm cannot produce class " + std::string(to_string(cfg.wclass)));
  if (n_out == 0) return {};

  const int sps = integer_sps(cfg.sps);
  if (sps == 0) {
    if (symbols_out) throw ConfigError("symbol alignment is only available at integer sps");
    return fractional_via_resample(cfg, n_out, rng, &gen_cpm_plain);
  }

  const auto gf = cpm_freq_pulse(cfg);
  const int L = cpm_pulse_symbols(cfg.wclass);

  const std::size_t warm = static_cast<std::size_t>(L) + 1;
  const std::size_t n_sym = warm + (n_out + static_cast<std::size_t>(sps) - 1) / sps +
                            static_cast<std::size_t>(L) + 2;

  std::vector<int> sym(n_sym);
  for (auto& s : sym) s = rng.below(2) == 0 ? 1 : -1;

  std::vector<double> freq(n_sym * static_cast<std::size_t>(sps) + gf.size(), 0.0);
  for (std::size_t k = 0; k < n_sym; ++k) {
    const std::size_t base = k * static_cast<std::size_t>(sps);
    for (std::size_t t = 0; t < gf.size(); ++t) freq[base + t] += sym[k] * gf[t];
  }

  const std::size_t start = warm * static_cast<std::size_t>(sps);
  CVec out(n_out);
  double phase = 0.0;
  for (std::size_t n = 0; n < start + n_out; ++n) {
    phase += 2.0 * kPi * cfg.fsk_h * freq[n];
    if (n >= start) out[n - start] = {std::cos(phase), std::sin(phase)};
  }
  if (symbols_out)
    symbols_out->assign(sym.begin() + static_cast<std::ptrdiff_t>(warm), sym.end());
  return out;
}

CVec gen_analog(const ModulatorConfig& cfg, std::size_t n_out, Rng rng) {
  cfg.validate();
  if (!is_analog(cfg.wclass))
    throw ConfigError("gen_analog cannot produce class " + std::string(to_string(cfg.wclass)));
  if (n_out == 0) return {};

  // Band-limited Gaussian message, peak-normalized to 1.
  constexpr int kFirHalf = 128;
  const double bw = cfg.msg_bw();
  std::vector<double> lp(2 * kFirHalf + 1);
  for (int k = -kFirHalf; k <= kFirHalf; ++k) {
    const double t = static_cast<double>(k);
    const double s = k == 0 ? 2.0 * bw : std::sin(2.0 * kPi * bw * t) / (kPi * t);
    const double w = 0.54 + 0.46 * std::cos(kPi * t / kFirHalf);
    lp[static_cast<std::size_t>(k + kFirHalf)] = s * w;
  }

  std::vector<double> white(n_out + lp.size() - 1);
  for (auto& v : white) v = rng.normal();
  std::vector<double> msg(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    double acc = 0.0;
    for (std::size_t t = 0; t < lp.size(); ++t) acc += lp[t] * white[n + lp.size() - 1 - t];
    msg[n] = acc;
  }
  double peak = 0.0;
  for (const double v : msg) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : msg) v /= peak;

  CVec out(n_out);
  if (cfg.wclass == WaveformClass::AmDsb) {
    double pw = 0.0;
    for (std::size_t n = 0; n < n_out; ++n) {
      const double v = 1.0 + cfg.am_depth * msg[n];
      out[n] = {v, 0.0};
      pw += v * v;
    }
    pw /= static_cast<double>(n_out);
    const double scale = pw > 0.0 ? 1.0 / std::sqrt(pw) : 1.0;
    for (auto& v : out) v *= scale;
  } else {
    const double dev = cfg.fm_dev();
    double phase = 0.0;
    for (std::size_t n = 0; n < n_out; ++n) {
      phase += 2.0 * kPi * dev * msg[n];
      out[n] = {std::cos(phase), std::sin(phase)};
    }
  }
  return out;
}

CVec gen_noise(std::size_t n_out, Rng rng) {
  CVec out(n_out);
  const double s = 1.0 / std::sqrt(2.0);
  for (auto& v : out) {
    const double re = rng.normal() * s;
    const double im = rng.normal() * s;
    v = {re, im};
  }
  return out;
}

CVec generate(const ModulatorConfig& cfg, std::size_t n_out, Rng rng) {
  if (is_linear(cfg.wclass)) return gen_linear(cfg, n_out, rng);
  if (is_cpm(cfg.wclass)) return gen_cpm(cfg, n_out, rng);
  if (is_analog(cfg.wclass)) return gen_analog(cfg, n_out, rng);
  return gen_noise(n_out, rng);
}

}  // namespace sigtrain
