#include "sigtrain/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sigtrain/channel.hpp"

namespace sigtrain {

namespace {

constexpr std::uint64_t kTagAugment = 0x6175676d656e7431ULL;
constexpr std::uint64_t kTagSlotSelect = 0x736c6f7473656c31ULL;

}  // namespace

NuisanceParams draw_target(const AugmentStrategy& strategy, WaveformClass c, Rng rng) {
  if (strategy.kind == AugmentStrategy::Kind::AssumedUniform) {
    NuisanceParams p;
    p.snr_db = rng.uniform(strategy.snr_lo_db, strategy.snr_hi_db);
    p.fo_frac = rng.uniform(-strategy.fo_abs_max, strategy.fo_abs_max);
    p.srm = rng.uniform(strategy.srm_lo, strategy.srm_hi);
    return p;
  }
  if (!strategy.models) throw ConfigError("kde strategy needs fitted models");
  const auto it = strategy.models->find(c);
  if (it == strategy.models->end())
    throw ConfigError("no kde model for class " + std::string(to_string(c)));
  return kde_sample(it->second, 1, rng)[0];
}

AugmentResult augment_observation(const IqObservation& parent, const NuisanceParams& target,
                                  Rng rng) {
  const NuisanceParams est = parent.meta.params;
  AugmentResult res;
  res.target = target;

  CVec x(parent.samples.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = {static_cast<double>(parent.samples[i].real()),
            static_cast<double>(parent.samples[i].imag())};

  // Frequency offset: always realizable as a rotation by the delta.
  x = apply_freq_offset(x, target.fo_frac - est.fo_frac);
  res.fo_applied = true;

  // Sample-rate change: only upward, so the window stays filled.
  const double ratio = target.srm / est.srm;
  const auto n_new = static_cast<std::size_t>(static_cast<double>(kObservationLen) * ratio);
  if (n_new >= kObservationLen) {
    if (ratio > kResampleRatioMax)
      throw GenerationError("augmentation srm ratio " + std::to_string(ratio) +
                            " beyond resampler range");
    if (ratio != 1.0) {
      x = resample(x, ratio);
      x.resize(kObservationLen);
    }
    res.srm_applied = true;
  }

  // SNR: noise can be added, never removed.
  if (target.snr_db <= est.snr_db) {
    const double p_obs = mean_power(x);
    const double e_lin = db_to_linear(-est.snr_db);  // 0 when est is +inf
    const double p_sig = p_obs / (1.0 + e_lin);
    const double add_var = p_sig * (db_to_linear(-target.snr_db) - e_lin);
    const double sigma = std::sqrt(std::max(0.0, add_var) / 2.0);
    Rng noise = rng.fork(0x736e72ULL);
    for (auto& v : x) v += std::complex<double>(noise.normal() * sigma, noise.normal() * sigma);
    res.snr_applied = true;
  }

  const double pw = mean_power(x);
  const double scale = pw > 1e-300 ? 1.0 / std::sqrt(pw) : 1.0;
  res.child.samples.resize(kObservationLen);
  for (std::size_t i = 0; i < kObservationLen; ++i) {
    const auto v = x[i] * scale;
    res.child.samples[i] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
  }

  res.child.meta.wclass = parent.meta.wclass;
  res.child.meta.source = ObservationSource::Augmented;
  res.child.meta.parent_id = parent.meta.id;
  res.child.meta.params.snr_db = res.snr_applied ? target.snr_db : est.snr_db;
  res.child.meta.params.fo_frac = target.fo_frac;
  res.child.meta.params.srm = res.srm_applied ? target.srm : est.srm;
  return res;
}

std::vector<int> select_augment_slots(std::uint64_t seed, std::uint64_t parent_id, int factor) {
  if (factor < 1 || factor > kAugmentationsPerParent)
    throw ConfigError("augmentation factor must be in [1, " +
                      std::to_string(kAugmentationsPerParent) + "], got " +
                      std::to_string(factor));
  std::vector<int> slots(kAugmentationsPerParent);
  for (int i = 0; i < kAugmentationsPerParent; ++i) slots[static_cast<std::size_t>(i)] = i;
  if (factor < kAugmentationsPerParent) {
    Rng rng(seed, {kTagSlotSelect, parent_id});
    rng.shuffle(slots);
    slots.resize(static_cast<std::size_t>(factor));
    std::sort(slots.begin(), slots.end());
  }
  return slots;
}

LoadedDataset build_augmented(const DatasetManifest& capture_train, const SampleStore& store,
                              const AugmentStrategy& strategy, int factor, std::uint64_t seed,
                              const std::string& name) {
  LoadedDataset out;
  out.manifest.name = name;
  out.manifest.space = capture_train.space;
  out.manifest.seed = seed;

  for (const auto c : capture_train.space.classes) {
    const auto it = capture_train.entries.find(c);
    if (it == capture_train.entries.end()) continue;
    for (const auto& parent_entry : it->second) {
      IqObservation parent;
      const auto row = store.row(parent_entry.row);
      parent.samples.assign(row.begin(), row.end());
      parent.meta = parent_entry.meta;

      for (const int slot : select_augment_slots(seed, parent.meta.id, factor)) {
        Rng rng(seed, {kTagAugment, parent.meta.id, static_cast<std::uint64_t>(slot)});
        const auto target = draw_target(strategy, c, rng.fork(1));
        auto res = augment_observation(parent, target, rng.fork(2));
        res.child.meta.id = parent.meta.id * 16 + static_cast<std::uint64_t>(slot);
        res.child.meta.seed_path = "aug/" + std::to_string(parent.meta.id) + "/" +
                                   std::to_string(slot);
        const auto new_row = out.store.add(
            std::span<const std::complex<float>>(res.child.samples.data(),
                                                 res.child.samples.size()));
        out.manifest.entries[c].push_back({res.child.meta, new_row});
      }
    }
  }
  return out;
}

}  // namespace sigtrain
