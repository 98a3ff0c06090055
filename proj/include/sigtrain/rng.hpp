#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace sigtrain {

// SplitMix64 finalizer. Full avalanche, so consecutive counters give
// statistically independent outputs.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator. Every draw is a pure function of (key, counter),
// and keys are derived from a root seed plus a structural path, so any
// observation's stream can be regenerated in isolation without replaying the
// rest of a run. Copying the object forks the stream deliberately.
class Rng {
public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : key_(mix64(seed)) {
    for (auto p : path) key_ = mix64(key_ ^ mix64(p + 0x632be59bd9b4e019ULL));
  }

  // Child generator with an independent stream; does not advance this one.
  Rng fork(std::uint64_t tag) const {
    return Rng(mix64(key_ ^ mix64(tag + 0xd1b54a32d192ed03ULL)));
  }

  std::uint64_t next_u64() {
    return mix64(key_ ^ (0x9e3779b97f4a7c15ULL * ++ctr_));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). Lemire reduction; bias is O(n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sigtrain
