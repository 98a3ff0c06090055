#include "sigtrain/nn/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "sigtrain/rng.hpp"

namespace sigtrain::nn {

namespace {

constexpr std::uint64_t kTagShuffle = 0x65706f63686d6978ULL;  // "epochmix"

// Checkpoints store raw float32; the toolchain only targets little-endian
// hosts, so no swapping is done.
static_assert(std::endian::native == std::endian::little);

void check_set(const CldnnSpec& spec, const TrainingSet& s, const char* which) {
  if (s.size() == 0) throw ConfigError(std::string(which) + " set is empty");
  if (s.input_len != spec.input_len)
    throw ConfigError(std::string(which) + " set observation length does not match the model");
  if (s.n_classes != spec.n_classes)
    throw ConfigError(std::string(which) + " set class count does not match the model");
  if (s.x.rows() != 2 ||
      s.x.cols() != static_cast<Eigen::Index>(s.size()) * s.input_len)
    throw ConfigError(std::string(which) + " set sample matrix has the wrong shape");
  for (int lab : s.labels)
    if (lab < 0 || lab >= spec.n_classes)
      throw ConfigError(std::string(which) + " set has a label outside the class range");
}

Eigen::MatrixXf gather(const TrainingSet& s, const std::vector<std::size_t>& order,
                       std::size_t start, int count) {
  const int L = s.input_len;
  Eigen::MatrixXf out(2, static_cast<Eigen::Index>(count) * L);
  for (int i = 0; i < count; ++i)
    out.middleCols(static_cast<Eigen::Index>(i) * L, L) =
        s.x.middleCols(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]) * L, L);
  return out;
}

// Runs the model over `data` in inference mode, invoking fn(probs, start, count)
// for each chunk.
template <typename Fn>
void for_eval_chunks(Cldnn<float>& model, const TrainingSet& data, int batch_cap, Fn&& fn) {
  if (batch_cap < 1) throw ConfigError("evaluation batch size must be >= 1");
  const std::size_t n = data.size();
  const int L = data.input_len;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_cap)) {
    const int count = static_cast<int>(std::min<std::size_t>(batch_cap, n - start));
    const Eigen::MatrixXf bx =
        data.x.middleCols(static_cast<Eigen::Index>(start) * L,
                          static_cast<Eigen::Index>(count) * L);
    const Eigen::MatrixXf probs = model.forward(bx, count, false);
    fn(probs, start, count);
  }
}

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

constexpr char kCheckpointMagic[8] = {'C', 'L', 'D', 'N', 'N', 'C', 'P', '1'};

}  // namespace

TrainingSet to_training_set(const DatasetManifest& m, const SampleStore& store) {
  TrainingSet out;
  out.n_classes = m.space.size();
  const int L = out.input_len;
  const auto entries = m.ordered();
  out.x.resize(2, static_cast<Eigen::Index>(entries.size()) * L);
  out.labels.reserve(entries.size());
  out.ids.reserve(entries.size());
  Eigen::Index col = 0;
  for (const ManifestEntry* e : entries) {
    const auto row = store.row(e->row);
    if (row.size() != static_cast<std::size_t>(L))
      throw ManifestError("sample row length does not match the observation length");
    for (int t = 0; t < L; ++t) {
      out.x(0, col + t) = row[static_cast<std::size_t>(t)].real();
      out.x(1, col + t) = row[static_cast<std::size_t>(t)].imag();
    }
    out.labels.push_back(m.space.index_of(e->meta.wclass));
    out.ids.push_back(e->meta.id);
    col += L;
  }
  return out;
}

TrainResult train_cldnn(const CldnnSpec& spec, const TrainingConfig& cfg,
                        const TrainingSet& train, const TrainingSet& val) {
  spec.validate();
  cfg.validate();
  check_set(spec, train, "training");
  check_set(spec, val, "validation");

  Cldnn<float> model(spec, cfg.seed);
  Adam<float> opt(model.params());
  opt.lr = cfg.lr;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.eps = cfg.eps;

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingHistory history;
  std::optional<Cldnn<float>> best;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::vector<int> blabels;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const int count = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n - start));
      const Eigen::MatrixXf bx = gather(train, order, start, count);
      blabels.resize(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i)
        blabels[static_cast<std::size_t>(i)] =
            train.labels[order[start + static_cast<std::size_t>(i)]];

      model.zero_grad();
      model.forward(bx, count, true);
      const double batch_loss = model.loss(blabels);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " (non-finite loss)";
        throw TrainError(msg.str(), history);
      }
      model.backward(blabels);
      opt.step(model.params());
      loss_sum += batch_loss * count;
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(n);

    double val_loss = 0.0;
    std::size_t val_hits = 0;
    for_eval_chunks(model, val, cfg.batch_size,
                    [&](const Eigen::MatrixXf& probs, std::size_t start, int count) {
                      for (int i = 0; i < count; ++i) {
                        const int lab = val.labels[start + static_cast<std::size_t>(i)];
                        const double p = std::max(static_cast<double>(probs(lab, i)), 1e-300);
                        val_loss -= std::log(p);
                        Eigen::Index pred = 0;
                        probs.col(i).maxCoeff(&pred);
                        if (static_cast<int>(pred) == lab) ++val_hits;
                      }
                    });
    st.val_loss = val_loss / static_cast<double>(val.size());
    st.val_acc = static_cast<double>(val_hits) / static_cast<double>(val.size());
    if (!std::isfinite(st.val_loss)) {
      std::ostringstream msg;
      msg << "validation loss became non-finite at epoch " << epoch;
      throw TrainError(msg.str(), history);
    }
    history.push_back(st);

    if (st.val_loss < best_val) {
      best_val = st.val_loss;
      best_epoch = epoch;
      best = model;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  return TrainResult{std::move(*best), std::move(history), best_epoch};
}

EvalResult evaluate_cldnn(Cldnn<float>& model, const TrainingSet& data, int batch_cap) {
  check_set(model.spec(), data, "evaluation");
  const int C = model.spec().n_classes;
  EvalResult out;
  out.confusion = Eigen::MatrixXi::Zero(C, C);
  for_eval_chunks(model, data, batch_cap,
                  [&](const Eigen::MatrixXf& probs, std::size_t start, int count) {
                    for (int i = 0; i < count; ++i) {
                      Eigen::Index pred = 0;
                      probs.col(i).maxCoeff(&pred);
                      out.confusion(data.labels[start + static_cast<std::size_t>(i)],
                                    static_cast<int>(pred))++;
                    }
                  });
  out.accuracy =
      static_cast<double>(out.confusion.trace()) / static_cast<double>(data.size());
  out.per_class_accuracy.resize(static_cast<std::size_t>(C), 0.0);
  for (int c = 0; c < C; ++c) {
    const int row_total = out.confusion.row(c).sum();
    if (row_total > 0)
      out.per_class_accuracy[static_cast<std::size_t>(c)] =
          static_cast<double>(out.confusion(c, c)) / static_cast<double>(row_total);
  }
  return out;
}

double eval_loss(Cldnn<float>& model, const TrainingSet& data, int batch_cap) {
  check_set(model.spec(), data, "evaluation");
  double acc = 0.0;
  for_eval_chunks(model, data, batch_cap,
                  [&](const Eigen::MatrixXf& probs, std::size_t start, int count) {
                    for (int i = 0; i < count; ++i) {
                      const int lab = data.labels[start + static_cast<std::size_t>(i)];
                      acc -= std::log(std::max(static_cast<double>(probs(lab, i)), 1e-300));
                    }
                  });
  return acc / static_cast<double>(data.size());
}

void save_checkpoint(Cldnn<float>& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const CldnnSpec& s = model.spec();
  write_u32(os, static_cast<std::uint32_t>(s.n_classes));
  write_u32(os, static_cast<std::uint32_t>(s.input_len));
  write_u32(os, static_cast<std::uint32_t>(s.conv_channels));
  write_u32(os, static_cast<std::uint32_t>(s.kernel));
  write_u32(os, static_cast<std::uint32_t>(s.head_hidden));
  auto dump = [&](const std::vector<ParamView<float>>& views) {
    for (const auto& p : views) {
      write_u64(os, static_cast<std::uint64_t>(p.size));
      os.write(reinterpret_cast<const char*>(p.value),
               static_cast<std::streamsize>(p.size) * static_cast<std::streamsize>(sizeof(float)));
    }
  };
  dump(model.params());
  dump(model.buffers());
  if (!os) throw Error("checkpoint write failed: " + path.string());
}

Cldnn<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path.string());
  char magic[sizeof kCheckpointMagic] = {};
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw Error("not a model checkpoint: " + path.string());
  CldnnSpec spec;
  spec.n_classes = static_cast<int>(read_u32(is));
  spec.input_len = static_cast<int>(read_u32(is));
  spec.conv_channels = static_cast<int>(read_u32(is));
  spec.kernel = static_cast<int>(read_u32(is));
  spec.head_hidden = static_cast<int>(read_u32(is));
  if (!is) throw Error("truncated checkpoint header: " + path.string());
  spec.validate();

  Cldnn<float> model(spec, 0);
  auto slurp = [&](const std::vector<ParamView<float>>& views) {
    for (const auto& p : views) {
      const auto size = read_u64(is);
      if (!is || size != static_cast<std::uint64_t>(p.size))
        throw Error("checkpoint tensor size mismatch: " + path.string());
      is.read(reinterpret_cast<char*>(p.value),
              static_cast<std::streamsize>(p.size) * static_cast<std::streamsize>(sizeof(float)));
    }
  };
  slurp(model.params());
  slurp(model.buffers());
  if (!is) throw Error("truncated checkpoint: " + path.string());
  is.peek();
  if (!is.eof()) throw Error("trailing bytes after checkpoint payload: " + path.string());
  return model;
}

void write_history(const TrainingHistory& h, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open history for writing: " + path.string());
  os << "epoch,train_loss,val_loss,val_acc\n";
  os.precision(17);
  for (const auto& e : h)
    os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_acc << '\n';
  if (!os) throw Error("history write failed: " + path.string());
}

TrainingHistory read_history(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open history: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "epoch,train_loss,val_loss,val_acc")
    throw Error("unrecognized history header: " + path.string());
  TrainingHistory out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    EpochStats e;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> e.epoch >> c1 >> e.train_loss >> c2 >> e.val_loss >> c3 >> e.val_acc) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw Error("malformed history row: " + line);
    out.push_back(e);
  }
  return out;
}

}  // namespace sigtrain::nn
