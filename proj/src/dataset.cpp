#include "sigtrain/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sigtrain/rng.hpp"

namespace sigtrain {

namespace {

using nlohmann::json;

// Per-entry ranking key for deterministic drops/splits. Distinct tags keep
// the balance, subsample and split orderings independent of each other.
std::uint64_t rank_key(std::uint64_t seed, std::uint64_t tag, std::uint64_t id) {
  return mix64(mix64(seed + tag) ^ mix64(id));
}

constexpr std::uint64_t kTagBalance = 0x62616c616e636531ULL;
constexpr std::uint64_t kTagSubsample = 0x73756273616d7031ULL;
constexpr std::uint64_t kTagSplit = 0x73706c6974303031ULL;

// Keeps `keep` entries of `src`, chosen by ranking key, in original order.
std::vector<ManifestEntry> keep_ranked(const std::vector<ManifestEntry>& src,
                                       std::size_t keep, std::uint64_t seed,
                                       std::uint64_t tag) {
  std::vector<std::size_t> idx(src.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = rank_key(seed, tag, src[a].meta.id);
    const auto kb = rank_key(seed, tag, src[b].meta.id);
    if (ka != kb) return ka < kb;
    return a < b;
  });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  std::vector<ManifestEntry> out;
  out.reserve(keep);
  for (auto i : idx) out.push_back(src[i]);
  return out;
}

json snr_to_json(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return "inf";
  return snr_db;
}

double snr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ManifestError("bad snr_db value: " + j.dump());
  }
  return j.get<double>();
}

std::string u64_to_string(std::uint64_t v) { return std::to_string(v); }

std::uint64_t u64_from_string(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ManifestError("bad unsigned id: '" + s + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    throw ManifestError("bad unsigned id: '" + s + "'");
  return v;
}

std::string hash_to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json meta_to_json(const ObservationMeta& m) {
  json j;
  j["id"] = u64_to_string(m.id);
  j["class"] = std::string(to_string(m.wclass));
  j["source"] = std::string(to_string(m.source));
  j["snr_db"] = snr_to_json(m.params.snr_db);
  j["fo_frac"] = m.params.fo_frac;
  j["srm"] = m.params.srm;
  if (m.parent_id)
    j["parent_id"] = u64_to_string(*m.parent_id);
  else
    j["parent_id"] = nullptr;
  j["seed_path"] = m.seed_path;
  return j;
}

ObservationMeta meta_from_json(const json& j) {
  ObservationMeta m;
  m.id = u64_from_string(j.at("id").get<std::string>());
  const auto cls = waveform_class_from_string(j.at("class").get<std::string>());
  if (!cls) throw ManifestError("unknown class: " + j.at("class").dump());
  m.wclass = *cls;
  const auto src = observation_source_from_string(j.at("source").get<std::string>());
  if (!src) throw ManifestError("unknown source: " + j.at("source").dump());
  m.source = *src;
  m.params.snr_db = snr_from_json(j.at("snr_db"));
  m.params.fo_frac = j.at("fo_frac").get<double>();
  m.params.srm = j.at("srm").get<double>();
  if (!j.at("parent_id").is_null())
    m.parent_id = u64_from_string(j.at("parent_id").get<std::string>());
  m.seed_path = j.at("seed_path").get<std::string>();
  return m;
}

}  // namespace

std::uint32_t SampleStore::add(std::span<const std::complex<float>> samples) {
  if (samples.size() != kObservationLen)
    throw DatasetError("observation must have exactly " + std::to_string(kObservationLen) +
                       " samples, got " + std::to_string(samples.size()));
  const auto r = static_cast<std::uint32_t>(rows());
  data_.insert(data_.end(), samples.begin(), samples.end());
  return r;
}

std::uint32_t SampleStore::add(const CVec& samples) {
  std::vector<std::complex<float>> f(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    f[i] = {static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag())};
  return add(std::span<const std::complex<float>>(f));
}

std::size_t DatasetManifest::total() const {
  std::size_t n = 0;
  for (const auto& [c, v] : entries) n += v.size();
  return n;
}

std::size_t DatasetManifest::count(WaveformClass c) const {
  const auto it = entries.find(c);
  return it == entries.end() ? 0 : it->second.size();
}

std::size_t DatasetManifest::min_class_count() const {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto c : space.classes) n = std::min(n, count(c));
  return n == std::numeric_limits<std::size_t>::max() ? 0 : n;
}

std::vector<const ManifestEntry*> DatasetManifest::ordered() const {
  std::vector<const ManifestEntry*> out;
  out.reserve(total());
  for (const auto c : space.classes) {
    const auto it = entries.find(c);
    if (it == entries.end()) continue;
    for (const auto& e : it->second) out.push_back(&e);
  }
  return out;
}

const ManifestEntry* DatasetManifest::find(std::uint64_t id) const {
  for (const auto& [c, v] : entries)
    for (const auto& e : v)
      if (e.meta.id == id) return &e;
  return nullptr;
}

bool is_irregular(std::span<const std::complex<float>> samples) {
  double acc = 0.0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return true;
    acc += static_cast<double>(s.real()) * s.real() + static_cast<double>(s.imag()) * s.imag();
  }
  if (samples.empty()) return false;
  const double limit = 100.0 * acc / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const double p = static_cast<double>(s.real()) * s.real() + static_cast<double>(s.imag()) * s.imag();
    if (p > limit) return true;
  }
  return false;
}

DatasetManifest filter_min_snr(const DatasetManifest& m, double threshold_db) {
  DatasetManifest out;
  out.name = m.name;
  out.space = m.space;
  out.seed = m.seed;
  for (const auto& [c, v] : m.entries) {
    std::vector<ManifestEntry> kept;
    for (const auto& e : v)
      if (e.meta.params.snr_db > threshold_db) kept.push_back(e);
    out.entries[c] = std::move(kept);
  }
  return out;
}

DatasetManifest balance_classes(const DatasetManifest& m) {
  for (const auto c : m.space.classes)
    if (m.count(c) == 0)
      throw BalanceError("cannot balance: class " + std::string(to_string(c)) +
                         " has no entries");
  const std::size_t n_min = m.min_class_count();
  DatasetManifest out;
  out.name = m.name;
  out.space = m.space;
  out.seed = m.seed;
  for (const auto c : m.space.classes)
    out.entries[c] = keep_ranked(m.entries.at(c), n_min, m.seed, kTagBalance);
  return out;
}

DatasetManifest subsample_per_class(const DatasetManifest& m, std::size_t n_per_class,
                                    std::uint64_t seed) {
  DatasetManifest out;
  out.name = m.name;
  out.space = m.space;
  out.seed = m.seed;
  for (const auto c : m.space.classes) {
    const auto it = m.entries.find(c);
    const std::size_t have = it == m.entries.end() ? 0 : it->second.size();
    if (have < n_per_class)
      throw DatasetError("subsample wants " + std::to_string(n_per_class) + " of class " +
                         std::string(to_string(c)) + " but only " + std::to_string(have) +
                         " available");
    out.entries[c] = keep_ranked(it->second, n_per_class, seed, kTagSubsample);
  }
  return out;
}

std::pair<DatasetManifest, DatasetManifest> split_train_val(const DatasetManifest& m,
                                                            double val_frac,
                                                            std::uint64_t seed) {
  if (!(val_frac > 0.0 && val_frac < 1.0))
    throw SplitError("val_frac must be in (0,1), got " + std::to_string(val_frac));
  DatasetManifest train, val;
  for (auto* part : {&train, &val}) {
    part->name = m.name;
    part->space = m.space;
    part->seed = m.seed;
  }
  train.name = m.name + "_train";
  val.name = m.name + "_val";
  for (const auto c : m.space.classes) {
    const auto it = m.entries.find(c);
    const std::size_t n = it == m.entries.end() ? 0 : it->second.size();
    if (n < 2)
      throw SplitError("class " + std::string(to_string(c)) +
                       " has fewer than 2 entries, cannot split");
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(static_cast<double>(n) * val_frac));
    const auto& src = it->second;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto ka = rank_key(seed, kTagSplit, src[a].meta.id);
      const auto kb = rank_key(seed, kTagSplit, src[b].meta.id);
      if (ka != kb) return ka < kb;
      return a < b;
    });
    std::vector<bool> in_val(n, false);
    for (std::size_t i = 0; i < n_val; ++i) in_val[idx[i]] = true;
    for (std::size_t i = 0; i < n; ++i)
      (in_val[i] ? val : train).entries[c].push_back(src[i]);
  }
  return {std::move(train), std::move(val)};
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_dataset(const DatasetManifest& m, const SampleStore& store,
                   const std::filesystem::path& dir) {
  for (const auto& [c, v] : m.entries)
    if (!v.empty() && !m.space.contains(c))
      throw ManifestError("manifest has entries for class " + std::string(to_string(c)) +
                          " outside space " + m.space.name);

  std::filesystem::create_directories(dir);
  const auto order = m.ordered();

  std::vector<std::complex<float>> blob;
  blob.reserve(order.size() * kObservationLen);
  for (const auto* e : order) {
    if (e->row >= store.rows())
      throw ManifestError("entry row " + std::to_string(e->row) + " outside store");
    const auto rowspan = store.row(e->row);
    blob.insert(blob.end(), rowspan.begin(), rowspan.end());
  }
  const auto* bytes = reinterpret_cast<const std::byte*>(blob.data());
  const std::size_t nbytes = blob.size() * sizeof(std::complex<float>);
  const std::uint64_t digest = fnv1a64({bytes, nbytes});

  {
    std::ofstream f(dir / "data.iq", std::ios::binary | std::ios::trunc);
    if (!f) throw DatasetError("cannot open " + (dir / "data.iq").string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(nbytes));
    if (!f) throw DatasetError("short write to " + (dir / "data.iq").string());
  }

  {
    std::ofstream f(dir / "meta.jsonl", std::ios::binary | std::ios::trunc);
    if (!f) throw DatasetError("cannot open " + (dir / "meta.jsonl").string() + " for writing");
    for (const auto* e : order) f << meta_to_json(e->meta).dump() << '\n';
  }

  {
    json j;
    j["format_version"] = 1;
    j["name"] = m.name;
    j["space"] = m.space.name;
    json cls = json::array();
    for (const auto c : m.space.classes) cls.push_back(std::string(to_string(c)));
    j["classes"] = cls;
    j["seed"] = u64_to_string(m.seed);
    json counts;
    for (const auto c : m.space.classes)
      counts[std::string(to_string(c))] = m.count(c);
    j["counts"] = counts;
    j["num_observations"] = order.size();
    j["samples_per_observation"] = kObservationLen;
    j["data_hash_fnv1a64"] = hash_to_hex(digest);
    std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) throw DatasetError("cannot open " + (dir / "manifest.json").string() + " for writing");
    f << j.dump(2) << '\n';
  }
}

LoadedDataset read_dataset(const std::filesystem::path& dir) {
  json mj;
  {
    std::ifstream f(dir / "manifest.json", std::ios::binary);
    if (!f) throw ManifestError("missing manifest.json in " + dir.string());
    try {
      f >> mj;
    } catch (const json::exception& e) {
      throw ManifestError("unparseable manifest.json: " + std::string(e.what()));
    }
  }

  LoadedDataset out;
  std::size_t n_expected = 0;
  std::string want_hash;
  try {
    if (mj.at("format_version").get<int>() != 1)
      throw ManifestError("unsupported format_version");
    out.manifest.name = mj.at("name").get<std::string>();
    out.manifest.space = WaveformSpace::from_name(mj.at("space").get<std::string>());
    out.manifest.seed = u64_from_string(mj.at("seed").get<std::string>());
    if (mj.at("samples_per_observation").get<std::size_t>() != kObservationLen)
      throw ManifestError("unsupported samples_per_observation");
    n_expected = mj.at("num_observations").get<std::size_t>();
    want_hash = mj.at("data_hash_fnv1a64").get<std::string>();
  } catch (const json::exception& e) {
    throw ManifestError("manifest.json missing fields: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw ManifestError(e.what());
  }

  std::vector<ObservationMeta> metas;
  {
    std::ifstream f(dir / "meta.jsonl", std::ios::binary);
    if (!f) throw ManifestError("missing meta.jsonl in " + dir.string());
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      try {
        metas.push_back(meta_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw ManifestError("bad meta.jsonl line " + std::to_string(metas.size() + 1) + ": " +
                            e.what());
      }
    }
  }
  if (metas.size() != n_expected)
    throw ManifestError("manifest declares " + std::to_string(n_expected) +
                        " observations but meta.jsonl has " + std::to_string(metas.size()));

  std::vector<std::complex<float>> blob;
  {
    std::ifstream f(dir / "data.iq", std::ios::binary | std::ios::ate);
    if (!f) throw TruncationError("missing data.iq in " + dir.string());
    const auto size = static_cast<std::size_t>(f.tellg());
    const std::size_t want = n_expected * kObservationLen * sizeof(std::complex<float>);
    if (size != want)
      throw TruncationError("data.iq is " + std::to_string(size) + " bytes, expected " +
                            std::to_string(want));
    blob.resize(n_expected * kObservationLen);
    f.seekg(0);
    f.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(want));
    if (!f) throw TruncationError("short read from data.iq");
  }

  const std::uint64_t digest =
      fnv1a64({reinterpret_cast<const std::byte*>(blob.data()),
               blob.size() * sizeof(std::complex<float>)});
  if (hash_to_hex(digest) != want_hash)
    throw ChecksumError("data.iq digest " + hash_to_hex(digest) + " != recorded " + want_hash);

  for (std::size_t r = 0; r < n_expected; ++r) {
    const auto row = out.store.add(std::span<const std::complex<float>>(
        blob.data() + r * kObservationLen, kObservationLen));
    if (!out.manifest.space.contains(metas[r].wclass))
      throw ManifestError("meta.jsonl row " + std::to_string(r) + " class " +
                          std::string(to_string(metas[r].wclass)) + " not in space " +
                          out.manifest.space.name);
    out.manifest.entries[metas[r].wclass].push_back({metas[r], row});
  }

  // Cross-check per-class counts if present.
  if (mj.contains("counts")) {
    for (const auto c : out.manifest.space.classes) {
      const auto key = std::string(to_string(c));
      if (mj["counts"].contains(key) &&
          mj["counts"][key].get<std::size_t>() != out.manifest.count(c))
        throw ManifestError("count mismatch for class " + key);
    }
  }
  return out;
}

}  // namespace sigtrain
