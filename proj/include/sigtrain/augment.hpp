#pragma once

#include "sigtrain/dataset.hpp"
#include "sigtrain/density.hpp"
#include "sigtrain/rng.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain {

// How augmentation targets are drawn: either a fixed assumed-uniform box
// over the parameter space, or per-class fitted densities.
struct AugmentStrategy {
  enum class Kind { AssumedUniform, Kde };
  Kind kind = Kind::AssumedUniform;
  const KdeModelSet* models = nullptr;  // required for Kde

  // Assumed-uniform ranges when no parameter knowledge is available.
  double snr_lo_db = 0.0, snr_hi_db = 20.0;
  double fo_abs_max = 0.10;
  double srm_lo = 2.0, srm_hi = 8.0;

  static AugmentStrategy assumed_uniform() { return {}; }
  static AugmentStrategy kde(const KdeModelSet& models) {
    AugmentStrategy s;
    s.kind = Kind::Kde;
    s.models = &models;
    return s;
  }
};

NuisanceParams draw_target(const AugmentStrategy& strategy, WaveformClass c, Rng rng);

struct AugmentResult {
  IqObservation child;
  // Which components were actually applied; a skipped (nulled) component
  // leaves the parent's estimate in the child metadata.
  bool fo_applied = false;
  bool srm_applied = false;
  bool snr_applied = false;
  NuisanceParams target;
};

// Re-degrades a parent observation toward target conditions. Frequency
// offset is shifted by the delta from the parent estimate. Sample-rate
// conversion is applied only when the ratio keeps at least a full window of
// samples (ratio >= 1); SNR change is applied only when the target is at or
// below the parent estimate, since noise can be added but never removed.
// The child keeps the 1024-sample window and unit mean power.
AugmentResult augment_observation(const IqObservation& parent, const NuisanceParams& target,
                                  Rng rng);

inline constexpr int kAugmentationsPerParent = 10;

// Builds the stored augmentation pool: children of every parent in
// capture_train, kAugmentationsPerParent per parent, each deterministic
// under (seed, parent id, slot). factor < 10 selects that many of the fixed
// ten slots uniformly per parent. Children link to parents via parent_id.
LoadedDataset build_augmented(const DatasetManifest& capture_train, const SampleStore& store,
                              const AugmentStrategy& strategy, int factor, std::uint64_t seed,
                              const std::string& name);

// The slot indices build_augmented would keep for one parent at the given
// factor; exposed so training-time draws with factor < 10 can select
// consistently from a stored factor-10 pool.
std::vector<int> select_augment_slots(std::uint64_t seed, std::uint64_t parent_id, int factor);

}  // namespace sigtrain
