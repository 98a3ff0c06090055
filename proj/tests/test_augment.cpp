#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <vector>

#include "sigtrain/augment.hpp"
#include "sigtrain/channel.hpp"
#include "sigtrain/waveforms.hpp"

using namespace sigtrain;

namespace {

constexpr double kPi = std::numbers::pi;

// A parent observation carrying a unit-power tone plus noise at exactly
// est_snr_db, normalized like every stored observation.
IqObservation make_parent(double est_snr_db, double est_fo, double est_srm, std::uint64_t id,
                          Rng rng) {
  CVec x(kObservationLen);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double ph = 2.0 * kPi * 0.05 * static_cast<double>(n);
    x[n] = {std::cos(ph), std::sin(ph)};
  }
  if (std::isfinite(est_snr_db)) {
    const double sigma = std::sqrt(db_to_linear(-est_snr_db) / 2.0);
    for (auto& v : x) v += std::complex<double>(rng.normal() * sigma, rng.normal() * sigma);
  }
  const double scale = 1.0 / std::sqrt(mean_power(x));
  IqObservation obs;
  obs.samples.resize(kObservationLen);
  for (std::size_t n = 0; n < kObservationLen; ++n) {
    const auto v = x[n] * scale;
    obs.samples[n] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
  }
  obs.meta.id = id;
  obs.meta.wclass = WaveformClass::Qpsk;
  obs.meta.source = ObservationSource::Capture;
  obs.meta.params.snr_db = est_snr_db;
  obs.meta.params.fo_frac = est_fo;
  obs.meta.params.srm = est_srm;
  return obs;
}

// SNR of samples against a known unit-modulus reference tone, via projection.
double measured_snr_db(const std::vector<std::complex<float>>& samples, const CVec& ref) {
  std::complex<double> num{0.0, 0.0};
  double den = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const std::complex<double> v(samples[n].real(), samples[n].imag());
    num += v * std::conj(ref[n]);
    den += std::norm(ref[n]);
  }
  const auto gain = num / den;
  double psig = 0.0, pnoise = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const std::complex<double> v(samples[n].real(), samples[n].imag());
    psig += std::norm(gain * ref[n]);
    pnoise += std::norm(v - gain * ref[n]);
  }
  return linear_to_db(psig / pnoise);
}

NuisanceParams np(double snr, double fo, double srm) {
  NuisanceParams p;
  p.snr_db = snr;
  p.fo_frac = fo;
  p.srm = srm;
  return p;
}

}  // namespace

TEST_CASE("uniform targets stay inside the assumed box") {
  const auto s = AugmentStrategy::assumed_uniform();
  Rng rng(401);
  for (int i = 0; i < 2000; ++i) {
    const auto p = draw_target(s, WaveformClass::Qpsk, rng.fork(static_cast<std::uint64_t>(i)));
    CHECK(p.snr_db >= s.snr_lo_db);
    CHECK(p.snr_db <= s.snr_hi_db);
    CHECK(std::abs(p.fo_frac) <= s.fo_abs_max);
    CHECK(p.srm >= s.srm_lo);
    CHECK(p.srm <= s.srm_hi);
    CHECK(p.valid());
  }
  const auto a = draw_target(s, WaveformClass::Qpsk, Rng(402));
  const auto b = draw_target(s, WaveformClass::Qpsk, Rng(402));
  CHECK(a.snr_db == b.snr_db);
  CHECK(a.fo_frac == b.fo_frac);
  CHECK(a.srm == b.srm);
}

TEST_CASE("kde targets need a model for the class") {
  std::vector<NuisanceParams> fit;
  Rng rng(403);
  for (int i = 0; i < 64; ++i)
    fit.push_back(np(rng.uniform(5.0, 15.0), rng.uniform(-0.05, 0.05), rng.uniform(3.0, 6.0)));
  KdeModelSet models;
  models[WaveformClass::Qpsk] = kde_fit(fit, WaveformClass::Qpsk);

  const auto s = AugmentStrategy::kde(models);
  const auto p = draw_target(s, WaveformClass::Qpsk, Rng(404));
  CHECK(p.valid());
  CHECK_THROWS_AS(draw_target(s, WaveformClass::Bpsk, Rng(404)), ConfigError);

  AugmentStrategy broken;
  broken.kind = AugmentStrategy::Kind::Kde;
  CHECK_THROWS_AS(draw_target(broken, WaveformClass::Qpsk, Rng(404)), ConfigError);
}

TEST_CASE("a pure frequency move is an exact rotation of the parent") {
  const auto parent = make_parent(10.0, 0.02, 4.0, 7, Rng(405));
  // Higher snr target nulls the noise step; lower srm nulls the rate step.
  const auto target = np(15.0, 0.05, 3.0);
  const auto res = augment_observation(parent, target, Rng(406));

  CHECK(res.fo_applied);
  CHECK_FALSE(res.srm_applied);
  CHECK_FALSE(res.snr_applied);
  CHECK(res.child.meta.params.snr_db == 10.0);
  CHECK(res.child.meta.params.fo_frac == 0.05);
  CHECK(res.child.meta.params.srm == 4.0);
  CHECK(res.child.meta.source == ObservationSource::Augmented);
  REQUIRE(res.child.meta.parent_id.has_value());
  CHECK(*res.child.meta.parent_id == 7);

  double worst = 0.0;
  for (std::size_t n = 0; n < kObservationLen; ++n) {
    const double ph = 2.0 * kPi * (0.05 - 0.02) * static_cast<double>(n);
    const std::complex<double> rot(std::cos(ph), std::sin(ph));
    const std::complex<double> want =
        std::complex<double>(parent.samples[n].real(), parent.samples[n].imag()) * rot;
    const std::complex<double> got(res.child.samples[n].real(), res.child.samples[n].imag());
    worst = std::max(worst, std::abs(got - want));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("noise is added to hit a lower target snr") {
  const auto parent = make_parent(10.0, 0.0, 4.0, 9, Rng(407));
  const auto target = np(3.0, 0.0, 3.0);
  const auto res = augment_observation(parent, target, Rng(408));
  CHECK(res.snr_applied);
  CHECK(res.child.meta.params.snr_db == 3.0);
  CHECK(mean_power(std::span<const std::complex<float>>(res.child.samples)) ==
        doctest::Approx(1.0).epsilon(1e-5));

  CVec ref(kObservationLen);
  for (std::size_t n = 0; n < ref.size(); ++n) {
    const double ph = 2.0 * kPi * 0.05 * static_cast<double>(n);
    ref[n] = {std::cos(ph), std::sin(ph)};
  }
  CHECK(std::abs(measured_snr_db(res.child.samples, ref) - 3.0) < 0.75);
}

TEST_CASE("a clean parent accepts any finite snr target") {
  const auto parent =
      make_parent(std::numeric_limits<double>::infinity(), 0.0, 4.0, 11, Rng(409));
  const auto res = augment_observation(parent, np(0.0, 0.0, 3.0), Rng(410));
  CHECK(res.snr_applied);

  CVec ref(kObservationLen);
  for (std::size_t n = 0; n < ref.size(); ++n) {
    const double ph = 2.0 * kPi * 0.05 * static_cast<double>(n);
    ref[n] = {std::cos(ph), std::sin(ph)};
  }
  CHECK(std::abs(measured_snr_db(res.child.samples, ref) - 0.0) < 0.75);
}

TEST_CASE("rate conversion applies only upward") {
  const auto parent = make_parent(10.0, 0.0, 4.0, 13, Rng(411));
  {
    const auto res = augment_observation(parent, np(15.0, 0.0, 8.0), Rng(412));
    CHECK(res.srm_applied);
    CHECK(res.child.meta.params.srm == 8.0);
    CHECK(res.child.samples.size() == kObservationLen);
    CHECK(mean_power(std::span<const std::complex<float>>(res.child.samples)) ==
          doctest::Approx(1.0).epsilon(1e-5));
  }
  {
    const auto res = augment_observation(parent, np(15.0, 0.0, 2.0), Rng(413));
    CHECK_FALSE(res.srm_applied);
    CHECK(res.child.meta.params.srm == 4.0);
  }
  {
    // Holding the rate still counts as realized.
    const auto res = augment_observation(parent, np(15.0, 0.0, 4.0), Rng(414));
    CHECK(res.srm_applied);
    CHECK(res.child.meta.params.srm == 4.0);
  }
}

TEST_CASE("slot selection is deterministic, nested and bounded") {
  CHECK_THROWS_AS(select_augment_slots(1, 2, 0), ConfigError);
  CHECK_THROWS_AS(select_augment_slots(1, 2, 11), ConfigError);

  const auto all = select_augment_slots(5, 77, 10);
  REQUIRE(all.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

  for (int factor = 1; factor < 10; ++factor) {
    const auto a = select_augment_slots(5, 77, factor);
    const auto b = select_augment_slots(5, 77, factor);
    CHECK(a == b);
    REQUIRE(a.size() == static_cast<std::size_t>(factor));
    CHECK(std::is_sorted(a.begin(), a.end()));
    const std::set<int> uniq(a.begin(), a.end());
    CHECK(uniq.size() == a.size());
    for (const int s : a) {
      CHECK(s >= 0);
      CHECK(s < 10);
    }
    // Smaller factors pick a prefix of the same shuffled order, so the kept
    // slots nest as the factor grows.
    const auto bigger = select_augment_slots(5, 77, factor + 1);
    for (const int s : a) CHECK(std::find(bigger.begin(), bigger.end(), s) != bigger.end());
  }

  // Different parents see different subsets at least somewhere.
  bool differs = false;
  for (std::uint64_t pid = 0; pid < 16 && !differs; ++pid)
    differs = select_augment_slots(5, pid, 3) != select_augment_slots(5, pid + 100, 3);
  CHECK(differs);
}

TEST_CASE("the stored pool is per-parent deterministic and factor-consistent") {
  // Small capture-train split: two classes, three parents each.
  LoadedDataset cap;
  cap.manifest.name = "cap_train";
  cap.manifest.space = WaveformSpace::phi3();
  cap.manifest.seed = 99;
  std::uint64_t id = 1;
  for (const auto c : {WaveformClass::Bpsk, WaveformClass::Qpsk}) {
    for (int i = 0; i < 3; ++i) {
      auto parent = make_parent(12.0, 0.01, 4.0, id, Rng(500 + id));
      parent.meta.wclass = c;
      const auto row = cap.store.add(
          std::span<const std::complex<float>>(parent.samples.data(), parent.samples.size()));
      cap.manifest.entries[c].push_back({parent.meta, row});
      ++id;
    }
  }

  const auto strategy = AugmentStrategy::assumed_uniform();
  const auto full = build_augmented(cap.manifest, cap.store, strategy, 10, 1234, "omega_as");
  CHECK(full.manifest.name == "omega_as");
  CHECK(full.manifest.count(WaveformClass::Bpsk) == 30);
  CHECK(full.manifest.count(WaveformClass::Qpsk) == 30);
  CHECK(full.manifest.count(WaveformClass::Noise) == 0);

  for (const auto* e : full.manifest.ordered()) {
    CHECK(e->meta.source == ObservationSource::Augmented);
    REQUIRE(e->meta.parent_id.has_value());
    CHECK(e->meta.id == *e->meta.parent_id * 16 + (e->meta.id % 16));
    CHECK(cap.manifest.find(*e->meta.parent_id) != nullptr);
  }

  // Rebuilding bit-for-bit reproduces the pool.
  const auto again = build_augmented(cap.manifest, cap.store, strategy, 10, 1234, "omega_as");
  REQUIRE(again.store.rows() == full.store.rows());
  const auto raw_a = full.store.raw();
  const auto raw_b = again.store.raw();
  CHECK(std::equal(raw_a.begin(), raw_a.end(), raw_b.begin(), raw_b.end()));

  // A factor-3 pool is the matching subset of the factor-10 pool.
  const auto small = build_augmented(cap.manifest, cap.store, strategy, 3, 1234, "omega_as3");
  CHECK(small.manifest.count(WaveformClass::Bpsk) == 9);
  for (const auto* e : small.manifest.ordered()) {
    const auto* big = full.manifest.find(e->meta.id);
    REQUIRE(big != nullptr);
    const auto sa = small.store.row(e->row);
    const auto sb = full.store.row(big->row);
    CHECK(std::equal(sa.begin(), sa.end(), sb.begin(), sb.end()));
  }

  // A different seed moves the targets.
  const auto other = build_augmented(cap.manifest, cap.store, strategy, 10, 4321, "omega_as_b");
  const auto raw_c = other.store.raw();
  CHECK_FALSE(std::equal(raw_a.begin(), raw_a.end(), raw_c.begin(), raw_c.end()));
}
