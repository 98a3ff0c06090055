#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sigtrain/types.hpp"

namespace sigtrain {

class DatasetError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent manifest / metadata.
class ManifestError : public DatasetError {
public:
  using DatasetError::DatasetError;
};

// Sample file shorter (or longer) than the manifest says.
class TruncationError : public DatasetError {
public:
  using DatasetError::DatasetError;
};

// Sample file bytes do not hash to the recorded digest.
class ChecksumError : public DatasetError {
public:
  using DatasetError::DatasetError;
};

class BalanceError : public DatasetError {
public:
  using DatasetError::DatasetError;
};

class SplitError : public DatasetError {
public:
  using DatasetError::DatasetError;
};

// Flat storage for fixed-length observations. Row r owns samples
// [r*1024, (r+1)*1024). Manifests index into a store by row, so subsetting a
// manifest never copies sample data.
class SampleStore {
public:
  std::uint32_t add(std::span<const std::complex<float>> samples);
  std::uint32_t add(const CVec& samples);

  std::span<const std::complex<float>> row(std::uint32_t r) const {
    return {data_.data() + static_cast<std::size_t>(r) * kObservationLen, kObservationLen};
  }

  std::size_t rows() const { return data_.size() / kObservationLen; }

  std::span<const std::complex<float>> raw() const { return {data_.data(), data_.size()}; }

private:
  std::vector<std::complex<float>> data_;
};

struct ManifestEntry {
  ObservationMeta meta;
  std::uint32_t row = 0;
};

// Per-class index over a SampleStore. Class order follows the waveform
// space; entry order within a class is the storage order and is preserved by
// every transform so that results stay deterministic.
struct DatasetManifest {
  std::string name;
  WaveformSpace space;
  std::uint64_t seed = 0;
  std::map<WaveformClass, std::vector<ManifestEntry>> entries;

  std::size_t total() const;
  std::size_t count(WaveformClass c) const;
  std::size_t min_class_count() const;
  // All entries in class order then storage order.
  std::vector<const ManifestEntry*> ordered() const;
  const ManifestEntry* find(std::uint64_t id) const;
};

// Cuts a detection-length record into fixed windows: floor((N-window)/stride)+1
// of them for N >= window, none otherwise.
template <typename T>
std::vector<std::vector<std::complex<T>>> slice_record(
    std::span<const std::complex<T>> record, std::size_t window = kObservationLen,
    std::size_t stride = 2 * kObservationLen) {
  std::vector<std::vector<std::complex<T>>> out;
  if (record.size() < window || window == 0 || stride == 0) return out;
  const std::size_t n = (record.size() - window) / stride + 1;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto* base = record.data() + k * stride;
    out.emplace_back(base, base + window);
  }
  return out;
}

inline std::vector<CVec> slice_record(const CVec& record,
                                      std::size_t window = kObservationLen,
                                      std::size_t stride = 2 * kObservationLen) {
  return slice_record<double>({record.data(), record.size()}, window, stride);
}

// True for samples no classifier should see: non-finite values or spikes
// beyond 10x the RMS level.
bool is_irregular(std::span<const std::complex<float>> samples);

// Keeps entries with estimated SNR strictly above the threshold.
DatasetManifest filter_min_snr(const DatasetManifest& m, double threshold_db = -10.0);

// Trims every class down to the smallest class count. Which entries are
// dropped depends only on manifest.seed and entry ids.
DatasetManifest balance_classes(const DatasetManifest& m);

// Per-class uniform subsample without replacement, deterministic under seed.
DatasetManifest subsample_per_class(const DatasetManifest& m, std::size_t n_per_class,
                                    std::uint64_t seed);

// Disjoint split with max(1, floor(n*val_frac)) validation entries per class.
std::pair<DatasetManifest, DatasetManifest> split_train_val(const DatasetManifest& m,
                                                            double val_frac,
                                                            std::uint64_t seed);

struct LoadedDataset {
  DatasetManifest manifest;
  SampleStore store;
};

// Directory layout: manifest.json (shape, counts, digest), meta.jsonl (one
// observation record per line, storage order), data.iq (interleaved I/Q
// float32, little endian). Writing compacts rows to 0..n-1 in manifest
// order; loading verifies structure, length and digest.
void write_dataset(const DatasetManifest& m, const SampleStore& store,
                   const std::filesystem::path& dir);
LoadedDataset read_dataset(const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::span<const std::byte> bytes);

}  // namespace sigtrain
