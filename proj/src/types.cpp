#include "sigtrain/types.hpp"

#include <algorithm>

namespace sigtrain {

namespace {

struct ClassName {
  WaveformClass c;
  std::string_view name;
};

constexpr std::array<ClassName, 10> kClassNames = {{
    {WaveformClass::Bpsk, "BPSK"},
    {WaveformClass::Qpsk, "QPSK"},
    {WaveformClass::Qam16, "QAM16"},
    {WaveformClass::Qam64, "QAM64"},
    {WaveformClass::Bfsk, "BFSK"},
    {WaveformClass::Gmsk, "GMSK"},
    {WaveformClass::AmDsb, "AM-DSB"},
    {WaveformClass::FmNb, "FM-NB"},
    {WaveformClass::Gbfsk, "GBFSK"},
    {WaveformClass::Noise, "Noise"},
}};

}  // namespace

std::string_view to_string(WaveformClass c) {
  for (const auto& e : kClassNames)
    if (e.c == c) return e.name;
  return "?";
}

std::optional<WaveformClass> waveform_class_from_string(std::string_view s) {
  for (const auto& e : kClassNames)
    if (e.name == s) return e.c;
  return std::nullopt;
}

std::string_view to_string(ObservationSource s) {
  switch (s) {
    case ObservationSource::Capture: return "capture";
    case ObservationSource::Synthetic: return "synthetic";
    case ObservationSource::Augmented: return "augmented";
  }
  return "?";
}

std::optional<ObservationSource> observation_source_from_string(std::string_view s) {
  if (s == "capture") return ObservationSource::Capture;
  if (s == "synthetic") return ObservationSource::Synthetic;
  if (s == "augmented") return ObservationSource::Augmented;
  return std::nullopt;
}

WaveformSpace WaveformSpace::phi3() {
  return {"phi3", {WaveformClass::Bpsk, WaveformClass::Qpsk, WaveformClass::Noise}};
}

WaveformSpace WaveformSpace::phi5() {
  return {"phi5",
          {WaveformClass::Bpsk, WaveformClass::Qpsk, WaveformClass::Qam16,
           WaveformClass::Qam64, WaveformClass::Noise}};
}

WaveformSpace WaveformSpace::phi10() {
  return {"phi10",
          {WaveformClass::Bpsk, WaveformClass::Qpsk, WaveformClass::Qam16,
           WaveformClass::Qam64, WaveformClass::Bfsk, WaveformClass::Gmsk,
           WaveformClass::AmDsb, WaveformClass::FmNb, WaveformClass::Gbfsk,
           WaveformClass::Noise}};
}

WaveformSpace WaveformSpace::from_name(std::string_view name) {
  if (name == "phi3") return phi3();
  if (name == "phi5") return phi5();
  if (name == "phi10") return phi10();
  throw ConfigError("unknown waveform space: " + std::string(name));
}

bool WaveformSpace::contains(WaveformClass c) const {
  return std::find(classes.begin(), classes.end(), c) != classes.end();
}

int WaveformSpace::index_of(WaveformClass c) const {
  const auto it = std::find(classes.begin(), classes.end(), c);
  if (it == classes.end())
    throw ConfigError("class " + std::string(to_string(c)) + " not in space " + name);
  return static_cast<int>(it - classes.begin());
}

}  // namespace sigtrain
