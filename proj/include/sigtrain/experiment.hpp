#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sigtrain/analysis.hpp"
#include "sigtrain/channel.hpp"
#include "sigtrain/dataset.hpp"
#include "sigtrain/density.hpp"
#include "sigtrain/nn/train.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain {

// Assumed-uniform nuisance-parameter box used for synthetic generation and
// parameter-agnostic augmentation targets.
struct SynthConfig {
  std::size_t obs_per_class = 1000;
  std::size_t test_obs_per_class = 250;  // synthetic test set size
  double gen_sps = 8.0;
  double snr_lo_db = 0.0, snr_hi_db = 20.0;
  double fo_abs_max = 0.10;
  double srm_lo = 2.0, srm_hi = 8.0;

  void validate() const;
};

// Capture stand-in: long records through a propagation surrogate, detector
// imperfections drawn from empirical-looking distributions, then sliced into
// observations. Disabling the surrogate skips propagation and draws the
// imperfections from the synthetic box instead, which should make the output
// statistically indistinguishable from synthetic generation.
struct SurrogateConfig {
  std::size_t obs_per_class = 1000;
  double gen_sps = 8.0;
  int slices_per_record = 4;
  bool enabled = true;
  double snr_mean_db = 12.0, snr_std_db = 5.0;
  double snr_min_db = -5.0, snr_max_db = 30.0;
  double fo_std = 0.02, fo_abs_max = 0.2;
  double srm_lo = 1.8, srm_hi = 8.5;
  PropagationConfig propagation;

  void validate() const;
};

struct ModelConfig {
  int conv_channels = 50;
  int kernel = 8;
  int head_hidden = 256;
};

struct ExperimentConfig {
  WaveformSpace space = WaveformSpace::phi3();
  std::uint64_t seed = 0;
  std::filesystem::path data_dir = "data";
  std::vector<std::string> sources;  // subset of known_sources()
  std::vector<long long> qty_grid;   // ascending per-class counts
  int repeats = 1;
  SynthConfig synth;
  SurrogateConfig surrogate;
  int augment_factor = 10;
  ModelConfig model;
  nn::TrainingConfig train;
  double val_frac = 0.1;

  void validate() const;
  nn::CldnnSpec cldnn_spec() const;
};

// The five trainable dataset symbols, in canonical order.
const std::vector<std::string>& known_sources();

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

// Synthetic generation. Variants: "omega_ss" and "omega_ts" draw conditions
// uniformly from the synthetic box; "omega_sk" draws them from per-class
// fitted densities (models required). Each observation consumes its own seed
// chain, so regeneration is byte-identical and order-independent.
LoadedDataset build_synthetic(const ExperimentConfig& cfg, const std::string& variant,
                              const KdeModelSet* models = nullptr,
                              std::vector<std::string>* errors = nullptr);
void cmd_synth(const ExperimentConfig& cfg, const std::string& variant,
               const std::filesystem::path& out_dir, const KdeModelSet* models = nullptr,
               std::vector<std::string>* errors = nullptr);

// Capture surrogate: synthesizes records, applies the propagation surrogate
// and a detector-imperfection draw, slices, filters implausible windows and
// low-SNR observations, balances classes, then splits 90/10 into a training
// set and a held-out test set.
struct CaptureSurrogate {
  DatasetManifest train;  // omega_c
  DatasetManifest test;   // omega_tc
  SampleStore store;      // shared by both manifests
};
CaptureSurrogate build_capture_surrogate(const ExperimentConfig& cfg,
                                         std::vector<std::string>* errors = nullptr);
// Writes <out_parent>/omega_c and <out_parent>/omega_tc.
void cmd_capture_surrogate(const ExperimentConfig& cfg,
                           const std::filesystem::path& out_parent,
                           std::vector<std::string>* errors = nullptr);

// One density per class from the manifest's recorded detection conditions.
KdeModelSet fit_kde_models(const DatasetManifest& m);
void cmd_kde_fit(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_json);

// Builds the stored augmentation pool from a capture training set.
// "omega_as" draws targets from the synthetic box, "omega_ak" from fitted
// densities.
void cmd_augment(const ExperimentConfig& cfg, const std::filesystem::path& parents_dir,
                 const std::string& variant, const std::filesystem::path& out_dir,
                 const KdeModelSet* models = nullptr);

// Trains one classifier on a dataset directory (internal train/validation
// split) and writes model.bin plus history.csv into out_dir.
nn::TrainResult cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
                          const std::filesystem::path& out_dir);
nn::EvalResult cmd_eval(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& dataset_dir, int batch_cap = 256);

// Full ensemble sweep over (source, quantity, repeat) cells. Expects the
// dataset directories named after their symbols under cfg.data_dir. The run
// table is rewritten sorted after every cell so an interrupted sweep resumes
// to a byte-identical final table. Failed cells are recorded next to the
// table and skipped.
struct SweepOutcome {
  int completed = 0;
  int skipped = 0;
  int failed = 0;
  std::vector<std::string> errors;
};
SweepOutcome cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& table_path,
                       bool resume);

struct AnalyzeOptions {
  std::filesystem::path out_dir;
  double alpha_linear = 1.0;     // forecast target for log-linear fits
  double alpha_logistic = 0.95;  // forecast target for log-logistic fits
};

struct AnalyzeOutcome {
  bool no_data = false;
  int n_rows = 0;
  int n_outliers = 0;
  std::vector<std::filesystem::path> outputs;
};

// Statistical pass over a run table: convergence filtering, trend fits on
// both axes, forecasts for significant trends, collection-time estimates,
// synthetic-source contrasts, and the two figure families. Pure function of
// the table and options.
AnalyzeOutcome cmd_analyze(const std::filesystem::path& run_table, const AnalyzeOptions& opt);

// Arithmetic-only mode: forecasts and durations from externally supplied fit
// parameters (JSON), no run table involved.
AnalyzeOutcome cmd_analyze_fits(const std::filesystem::path& fits_json,
                                const AnalyzeOptions& opt);

// Raw presentation pass: per-space comparison scatter plus a per-source
// summary table, no filtering or fitting.
AnalyzeOutcome cmd_report(const std::filesystem::path& run_table,
                          const std::filesystem::path& out_dir);

}  // namespace sigtrain
