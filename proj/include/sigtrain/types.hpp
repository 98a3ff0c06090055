#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sigtrain {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class GenerationError : public Error {
public:
  using Error::Error;
};

enum class WaveformClass : std::uint8_t {
  Bpsk,
  Qpsk,
  Qam16,
  Qam64,
  Bfsk,
  Gmsk,
  AmDsb,
  FmNb,
  Gbfsk,
  Noise,
};

inline constexpr std::array<WaveformClass, 10> kAllWaveformClasses = {
    WaveformClass::Bpsk,  WaveformClass::Qpsk,  WaveformClass::Qam16,
    WaveformClass::Qam64, WaveformClass::Bfsk,  WaveformClass::Gmsk,
    WaveformClass::AmDsb, WaveformClass::FmNb,  WaveformClass::Gbfsk,
    WaveformClass::Noise,
};

std::string_view to_string(WaveformClass c);
std::optional<WaveformClass> waveform_class_from_string(std::string_view s);

// An ordered set of waveform classes making up one classification problem.
struct WaveformSpace {
  std::string name;
  std::vector<WaveformClass> classes;

  static WaveformSpace phi3();
  static WaveformSpace phi5();
  static WaveformSpace phi10();
  static WaveformSpace from_name(std::string_view name);

  int size() const { return static_cast<int>(classes.size()); }
  bool contains(WaveformClass c) const;
  // Index of c within the space; throws ConfigError if absent.
  int index_of(WaveformClass c) const;
  double chance_accuracy() const { return 1.0 / static_cast<double>(size()); }
};

// Detection-induced signal conditions: signal-to-noise ratio in dB, residual
// carrier offset as a fraction of the sample rate, and the oversampling
// factor of the isolated signal relative to its symbol rate.
struct NuisanceParams {
  double snr_db = 0.0;
  double fo_frac = 0.0;
  double srm = 1.0;

  // snr_db of +inf is the explicit "no added noise" sentinel; -inf and NaN
  // are rejected. The offset must stay inside the representable band and the
  // signal must remain oversampled.
  bool valid() const {
    const bool snr_ok = !std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity();
    return snr_ok && std::isfinite(fo_frac) && fo_frac > -0.5 && fo_frac < 0.5 &&
           std::isfinite(srm) && srm > 1.0;
  }
};

enum class ObservationSource : std::uint8_t { Capture, Synthetic, Augmented };

std::string_view to_string(ObservationSource s);
std::optional<ObservationSource> observation_source_from_string(std::string_view s);

inline constexpr std::size_t kObservationLen = 1024;

struct ObservationMeta {
  std::uint64_t id = 0;
  WaveformClass wclass = WaveformClass::Noise;
  ObservationSource source = ObservationSource::Synthetic;
  // Best estimate of the conditions baked into the samples. For generated
  // data this is exact; for augmented data it reflects the applied target.
  NuisanceParams params;
  std::optional<std::uint64_t> parent_id;
  std::string seed_path;
};

struct IqObservation {
  std::vector<std::complex<float>> samples;
  ObservationMeta meta;
};

using CVec = std::vector<std::complex<double>>;

template <typename T>
double mean_power(std::span<const std::complex<T>> x) {
  double acc = 0.0;
  for (const auto& v : x) {
    const double re = static_cast<double>(v.real());
    const double im = static_cast<double>(v.imag());
    acc += re * re + im * im;
  }
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double mean_power(const CVec& x) {
  return mean_power(std::span<const std::complex<double>>(x));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace sigtrain
