#pragma once

#include "sigtrain/rng.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain {

struct ModulatorConfig {
  WaveformClass wclass = WaveformClass::Bpsk;
  double sps = 4.0;              // samples per symbol at generation
  double rrc_rolloff = 0.35;     // linear classes
  int rrc_span_symbols = 8;
  double fsk_h = 1.0;            // CPM modulation index
  double gauss_bt = 0.35;        // GMSK/GBFSK bandwidth-time product
  double fm_dev_frac = 0.0;      // peak deviation / sample rate; 0 = derive 0.25/sps
  double am_depth = 0.5;
  double msg_bw_frac = 0.0;      // analog message bandwidth / sample rate; 0 = derive 0.5/sps

  // Class defaults: GMSK h=0.5 BT=0.3, BFSK h=1.0 rectangular, GBFSK h=1.0
  // BT=0.35; analog classes derive bandwidth and deviation from sps.
  static ModulatorConfig for_class(WaveformClass c, double sps);

  void validate() const;
  double fm_dev() const { return fm_dev_frac > 0.0 ? fm_dev_frac : 0.25 / sps; }
  double msg_bw() const { return msg_bw_frac > 0.0 ? msg_bw_frac : 0.5 / sps; }
};

// Uniform random Gray-mapped symbols through a root-raised-cosine shaper,
// unit average power. Output is steady state: the filter's warm-up ramp is
// dropped, and when symbols_out is given, symbol k is centered on output
// sample k*sps (integer sps only).
CVec gen_linear(const ModulatorConfig& cfg, std::size_t n_out, Rng rng,
                std::vector<std::complex<double>>* symbols_out = nullptr);

// Continuous-phase modulation with +/-1 symbols: rectangular frequency pulse
// for BFSK, Gaussian for GMSK/GBFSK. Exactly unit envelope at integer sps.
// With symbols_out given, symbol k's frequency pulse starts at output sample
// k*sps (integer sps only).
CVec gen_cpm(const ModulatorConfig& cfg, std::size_t n_out, Rng rng,
             std::vector<int>* symbols_out = nullptr);

// Analog classes driven by a band-limited Gaussian message with peak level
// 1: AM-DSB is real with the configured depth, FM-NB is exactly unit
// envelope with the configured peak deviation.
CVec gen_analog(const ModulatorConfig& cfg, std::size_t n_out, Rng rng);

// Circularly symmetric complex Gaussian, unit average power in expectation.
CVec gen_noise(std::size_t n_out, Rng rng);

// Dispatch on cfg.wclass.
CVec generate(const ModulatorConfig& cfg, std::size_t n_out, Rng rng);

// Root-raised-cosine taps over span_symbols symbols (span*sps+1 taps),
// normalized so the tap energy equals sps: a unit-power symbol stream shaped
// with these taps has exactly unit average power in steady state.
std::vector<double> rrc_taps(int sps, double rolloff, int span_symbols);

// CPM frequency pulse over the class's support, normalized to sum 1/2 so
// each symbol advances the phase by +/- pi*h in total.
std::vector<double> cpm_freq_pulse(const ModulatorConfig& cfg);
int cpm_pulse_symbols(WaveformClass c);

// Constellation for a linear class, unit average power, Gray-coded order
// (index = symbol bits).
std::vector<std::complex<double>> constellation(WaveformClass c);

}  // namespace sigtrain
