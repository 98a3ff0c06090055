#pragma once

#include "sigtrain/rng.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain {

// Rotates x by a complex exponential with the given frequency as a fraction
// of the sample rate. apply_freq_offset(apply_freq_offset(x, f), -f) == x up
// to rounding.
CVec apply_freq_offset(const CVec& x, double fo_frac);

inline constexpr double kResampleRatioMin = 1.0 / 32.0;
inline constexpr double kResampleRatioMax = 32.0;

// Arbitrary-ratio polyphase resampler built on a Kaiser-windowed sinc
// prototype (beta 8, 16 zero crossings per side, 512 table steps per
// crossing with linear interpolation). Output sample m interpolates input
// position m/ratio; output length is floor(len(x)*ratio). For ratio < 1 the
// kernel is stretched to cut off at the output Nyquist rate. A ratio of
// exactly 1 reproduces the input bit for bit because the prototype is zero
// at nonzero integer arguments by construction. Tap weights are renormalized
// per output sample, which keeps unit DC gain at every fractional phase and
// degrades gracefully at the edges.
CVec resample(const CVec& x, double ratio);

// Adds circular complex Gaussian noise of variance signal_power *
// 10^(-snr_db/10). snr_db of +inf returns x unchanged. signal_power must be
// the caller's measure of the wanted component; pass mean_power(x) when x is
// clean signal.
CVec apply_awgn(const CVec& x, double snr_db, double signal_power, Rng rng);

// Full detection-imperfection pipeline: resample from gen_sps to p.srm,
// rotate by p.fo_frac, add noise to hit p.snr_db, cut to the 1024-sample
// window and renormalize to unit mean power. Throws GenerationError when
// clean is too short to fill the window after resampling.
IqObservation degrade_to_params(const CVec& clean, const NuisanceParams& p, double gen_sps,
                                ObservationMeta meta, Rng rng);

// Stand-in for an over-the-air channel: a short random multipath response,
// receive-side IQ imbalance, oscillator phase noise and a slow carrier
// drift. All effects can be disabled by zeroing their parameters, in which
// case the output equals the input up to one unit-magnitude complex factor.
struct PropagationConfig {
  int n_taps = 3;
  double pdp_decay_db_per_tap = 3.0;
  double iq_gain_imbalance_db = 0.5;
  double iq_phase_imbalance_deg = 2.0;
  double phase_noise_std_rad = 0.005;
  double cfo_drift_per_sample = 1e-6;
};

CVec apply_propagation(const CVec& x, const PropagationConfig& cfg, Rng rng);

}  // namespace sigtrain
