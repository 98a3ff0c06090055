#pragma once

#include <filesystem>
#include <vector>

#include "sigtrain/dataset.hpp"
#include "sigtrain/nn/model.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain::nn {

struct TrainingConfig {
  int batch_size = 1500;
  int max_epochs = 50;
  int patience = 4;  // epochs without a new validation-loss minimum
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs)
      throw ConfigError("patience must be in [1, max_epochs)");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

using TrainingHistory = std::vector<EpochStats>;

// Training failure that still carries whatever history accumulated.
class TrainError : public Error {
public:
  TrainError(const std::string& msg, TrainingHistory history)
      : Error(msg), history(std::move(history)) {}
  TrainingHistory history;
};

// Observations materialized for the network: channel 0 carries I, channel 1
// carries Q, sample b in columns [b*1024, (b+1)*1024), labels indexed within
// the originating waveform space.
struct TrainingSet {
  Eigen::MatrixXf x;  // (2, n * input_len)
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
  int input_len = static_cast<int>(kObservationLen);
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }
};

TrainingSet to_training_set(const DatasetManifest& m, const SampleStore& store);

struct TrainResult {
  Cldnn<float> model;
  TrainingHistory history;
  int best_epoch = 0;  // 1-based epoch whose weights are returned
};

// Adam + early exit: stops after `patience` epochs without a strictly lower
// validation loss (or at max_epochs) and returns the weights, including
// batch-norm statistics, from the best epoch. Throws TrainError with partial
// history when the loss stops being finite.
TrainResult train_cldnn(const CldnnSpec& spec, const TrainingConfig& cfg,
                        const TrainingSet& train, const TrainingSet& val);

struct EvalResult {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted
  std::vector<double> per_class_accuracy;
};

EvalResult evaluate_cldnn(Cldnn<float>& model, const TrainingSet& data, int batch_cap = 256);

// Mean cross-entropy under inference-mode batch norm.
double eval_loss(Cldnn<float>& model, const TrainingSet& data, int batch_cap = 256);

// Versioned binary checkpoint: shape descriptor, then each parameter and
// batch-norm buffer as little-endian float32 in registry order.
void save_checkpoint(Cldnn<float>& model, const std::filesystem::path& path);
Cldnn<float> load_checkpoint(const std::filesystem::path& path);

void write_history(const TrainingHistory& h, const std::filesystem::path& path);
TrainingHistory read_history(const std::filesystem::path& path);

}  // namespace sigtrain::nn
