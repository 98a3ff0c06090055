#include "sigtrain/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigtrain/density.hpp"
#include "sigtrain/experiment.hpp"
#include "sigtrain/rng.hpp"

namespace sigtrain {

namespace {

// The tool is single-threaded and fully seeded, so strict mode has nothing
// extra to disable; the flag is accepted so scripted invocations can state
// their intent.
struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool strict = false;
};

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config)
    sub->add_option("--config", c.config, "experiment config (JSON)")->required();
  auto* seed = sub->add_option("--seed", c.seed, "override the config seed");
  sub->parse_complete_callback([seed, &c] { c.seed_set = seed->count() > 0; });
  sub->add_flag("--strict-determinism", c.strict,
                "assert fully reproducible execution (always on; accepted for scripting)");
}

ExperimentConfig load_config(const Common& c) {
  auto cfg = read_experiment_config(c.config);
  if (c.seed_set) cfg.seed = c.seed;
  return cfg;
}

int finish_partial(const std::vector<std::string>& errors, const std::string& what) {
  if (errors.empty()) return 0;
  std::cerr << what << ": " << errors.size() << " item(s) failed; output is partial\n";
  for (const auto& e : errors) std::cerr << "  " << e << "\n";
  return 3;
}

std::optional<KdeModelSet> maybe_models(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_kde_models(path);
}

void print_eval(const nn::EvalResult& r, const WaveformSpace& space, const std::string& out) {
  std::cout << "accuracy " << r.accuracy << "\n";
  for (std::size_t i = 0; i < r.per_class_accuracy.size(); ++i)
    std::cout << "  " << to_string(space.classes[i]) << " " << r.per_class_accuracy[i] << "\n";
  if (out.empty()) return;
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["per_class_accuracy"] = r.per_class_accuracy;
  auto& conf = j["confusion"] = nlohmann::json::array();
  for (int i = 0; i < r.confusion.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    conf.push_back(std::move(row));
  }
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw Error("cannot write " + out);
  f << j.dump(2) << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"training-data pipeline for modulation classification"};
  app.require_subcommand(1);
  int rc = 0;

  // synth
  auto synth_c = std::make_shared<Common>();
  auto synth_variant = std::make_shared<std::string>();
  auto synth_out = std::make_shared<std::string>();
  auto synth_models = std::make_shared<std::string>();
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, *synth_c);
  synth->add_option("--variant", *synth_variant, "omega_ss, omega_sk or omega_ts")
      ->required()
      ->check(CLI::IsMember({"omega_ss", "omega_sk", "omega_ts"}));
  synth->add_option("--out", *synth_out, "output dataset directory")->required();
  synth->add_option("--models", *synth_models, "fitted densities (required for omega_sk)");
  synth->callback([&rc, synth_c, synth_variant, synth_out, synth_models] {
    const auto cfg = load_config(*synth_c);
    const auto models = maybe_models(*synth_models);
    std::vector<std::string> errors;
    cmd_synth(cfg, *synth_variant, *synth_out, models ? &*models : nullptr, &errors);
    std::cout << "wrote " << *synth_out << "\n";
    rc = finish_partial(errors, "synth");
  });

  // capture-surrogate
  auto cap_c = std::make_shared<Common>();
  auto cap_out = std::make_shared<std::string>();
  auto* cap = app.add_subcommand("capture-surrogate",
                                 "emulate a capture campaign (omega_c and omega_tc)");
  add_common(cap, *cap_c);
  cap->add_option("--out", *cap_out, "parent directory for omega_c and omega_tc")->required();
  cap->callback([&rc, cap_c, cap_out] {
    const auto cfg = load_config(*cap_c);
    std::vector<std::string> errors;
    cmd_capture_surrogate(cfg, *cap_out, &errors);
    std::cout << "wrote " << *cap_out << "/omega_c and " << *cap_out << "/omega_tc\n";
    rc = finish_partial(errors, "capture-surrogate");
  });

  // kde fit | sample
  auto* kde = app.add_subcommand("kde", "fit or sample per-class condition densities");
  kde->require_subcommand(1);
  auto kfit_dataset = std::make_shared<std::string>();
  auto kfit_out = std::make_shared<std::string>();
  auto* kfit = kde->add_subcommand("fit", "fit densities from a dataset's recorded conditions");
  kfit->add_option("--dataset", *kfit_dataset, "dataset directory")->required();
  kfit->add_option("--out", *kfit_out, "output JSON file")->required();
  kfit->callback([kfit_dataset, kfit_out] {
    cmd_kde_fit(*kfit_dataset, *kfit_out);
    std::cout << "wrote " << *kfit_out << "\n";
  });

  auto ks_models = std::make_shared<std::string>();
  auto ks_class = std::make_shared<std::string>();
  auto ks_out = std::make_shared<std::string>();
  auto ks_n = std::make_shared<std::size_t>(10);
  auto ks_seed = std::make_shared<std::uint64_t>(0);
  auto* ksample = kde->add_subcommand("sample", "draw condition triples from fitted densities");
  ksample->add_option("--models", *ks_models, "fitted densities JSON")->required();
  ksample->add_option("--class", *ks_class, "waveform class name")->required();
  ksample->add_option("--n", *ks_n, "number of draws");
  ksample->add_option("--seed", *ks_seed, "draw seed");
  ksample->add_option("--out", *ks_out, "output CSV (default: stdout)");
  ksample->callback([ks_models, ks_class, ks_out, ks_n, ks_seed] {
    const auto models = read_kde_models(*ks_models);
    const auto c = waveform_class_from_string(*ks_class);
    if (!c) throw ConfigError("unknown waveform class \"" + *ks_class + "\"");
    const auto it = models.find(*c);
    if (it == models.end())
      throw ConfigError("no fitted density for class \"" + *ks_class + "\"");
    const auto draws = kde_sample(it->second, *ks_n, Rng(*ks_seed, {0x6b646573616d706cULL}));
    std::ostringstream os;
    os << "snr_db,fo_frac,srm\n";
    os.precision(17);
    for (const auto& p : draws) os << p.snr_db << ',' << p.fo_frac << ',' << p.srm << "\n";
    if (ks_out->empty()) {
      std::cout << os.str();
    } else {
      std::ofstream f(*ks_out, std::ios::trunc);
      if (!f) throw Error("cannot write " + *ks_out);
      f << os.str();
      std::cout << "wrote " << *ks_out << "\n";
    }
  });

  // augment
  auto aug_c = std::make_shared<Common>();
  auto aug_parents = std::make_shared<std::string>();
  auto aug_variant = std::make_shared<std::string>();
  auto aug_out = std::make_shared<std::string>();
  auto aug_models = std::make_shared<std::string>();
  auto* aug = app.add_subcommand("augment", "build a stored augmentation pool from captures");
  add_common(aug, *aug_c);
  aug->add_option("--parents", *aug_parents, "capture training dataset directory")->required();
  aug->add_option("--variant", *aug_variant, "omega_as or omega_ak")
      ->required()
      ->check(CLI::IsMember({"omega_as", "omega_ak"}));
  aug->add_option("--out", *aug_out, "output dataset directory")->required();
  aug->add_option("--models", *aug_models, "fitted densities (required for omega_ak)");
  aug->callback([aug_c, aug_parents, aug_variant, aug_out, aug_models] {
    const auto cfg = load_config(*aug_c);
    const auto models = maybe_models(*aug_models);
    cmd_augment(cfg, *aug_parents, *aug_variant, *aug_out, models ? &*models : nullptr);
    std::cout << "wrote " << *aug_out << "\n";
  });

  // train
  auto tr_c = std::make_shared<Common>();
  auto tr_dataset = std::make_shared<std::string>();
  auto tr_out = std::make_shared<std::string>();
  auto* tr = app.add_subcommand("train", "train one classifier on a dataset directory");
  add_common(tr, *tr_c);
  tr->add_option("--dataset", *tr_dataset, "training dataset directory")->required();
  tr->add_option("--out", *tr_out, "output directory (model.bin, history.csv)")->required();
  tr->callback([tr_c, tr_dataset, tr_out] {
    const auto cfg = load_config(*tr_c);
    const auto res = cmd_train(cfg, *tr_dataset, *tr_out);
    std::cout << "epochs " << res.history.size() << ", best epoch " << res.best_epoch
              << ", val loss " << res.history[res.best_epoch - 1].val_loss << ", val acc "
              << res.history[res.best_epoch - 1].val_acc << "\n";
  });

  // eval
  auto ev_model = std::make_shared<std::string>();
  auto ev_dataset = std::make_shared<std::string>();
  auto ev_out = std::make_shared<std::string>();
  auto ev_cap = std::make_shared<int>(256);
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
  ev->add_option("--model", *ev_model, "checkpoint file")->required();
  ev->add_option("--dataset", *ev_dataset, "evaluation dataset directory")->required();
  ev->add_option("--out", *ev_out, "write results as JSON");
  ev->add_option("--batch-cap", *ev_cap, "forward-pass chunk size");
  ev->callback([ev_model, ev_dataset, ev_out, ev_cap] {
    const auto ds = read_dataset(*ev_dataset);
    const auto res = cmd_eval(*ev_model, *ev_dataset, *ev_cap);
    print_eval(res, ds.manifest.space, *ev_out);
  });

  // sweep
  auto sw_c = std::make_shared<Common>();
  auto sw_out = std::make_shared<std::string>();
  auto sw_resume = std::make_shared<bool>(false);
  auto* sw = app.add_subcommand("sweep", "train the full (source, quantity, repeat) grid");
  add_common(sw, *sw_c);
  sw->add_option("--out", *sw_out, "run table CSV path")->required();
  sw->add_flag("--resume", *sw_resume, "keep completed run_ids from an existing table");
  sw->callback([&rc, sw_c, sw_out, sw_resume] {
    const auto cfg = load_config(*sw_c);
    const auto out = cmd_sweep(cfg, *sw_out, *sw_resume);
    std::cout << "completed " << out.completed << ", skipped " << out.skipped << ", failed "
              << out.failed << "\n";
    if (out.failed > 0) {
      for (const auto& e : out.errors) std::cerr << "  " << e << "\n";
      rc = 3;
    }
  });

  // analyze
  auto an_table = std::make_shared<std::string>();
  auto an_fits = std::make_shared<std::string>();
  auto an_out = std::make_shared<std::string>();
  auto an_lin = std::make_shared<double>(1.0);
  auto an_log = std::make_shared<double>(0.95);
  auto* an = app.add_subcommand("analyze", "filter, fit, forecast and plot a run table");
  auto* an_topt = an->add_option("--table", *an_table, "run table CSV");
  an->add_option("--fits", *an_fits, "externally supplied fit parameters (JSON)")
      ->excludes(an_topt);
  an->add_option("--out", *an_out, "output directory")->required();
  an->add_option("--alpha-linear", *an_lin, "forecast target for log-linear fits");
  an->add_option("--alpha-logistic", *an_log, "forecast target for log-logistic fits");
  an->callback([an_table, an_fits, an_out, an_lin, an_log] {
    AnalyzeOptions opt;
    opt.out_dir = *an_out;
    opt.alpha_linear = *an_lin;
    opt.alpha_logistic = *an_log;
    if (an_table->empty() == an_fits->empty())
      throw ConfigError("analyze needs exactly one of --table or --fits");
    const auto out = an_fits->empty() ? cmd_analyze(*an_table, opt)
                                      : cmd_analyze_fits(*an_fits, opt);
    if (out.no_data) {
      std::cout << "no data: the run table has no rows, nothing to analyze\n";
      return;
    }
    std::cout << "analyzed " << out.n_rows << " row(s), excluded " << out.n_outliers << "\n";
    for (const auto& p : out.outputs) std::cout << "  " << p.string() << "\n";
  });

  // report
  auto rp_table = std::make_shared<std::string>();
  auto rp_out = std::make_shared<std::string>();
  auto* rp = app.add_subcommand("report", "raw per-source summary and scatter, no filtering");
  rp->add_option("--table", *rp_table, "run table CSV")->required();
  rp->add_option("--out", *rp_out, "output directory")->required();
  rp->callback([rp_table, rp_out] {
    const auto out = cmd_report(*rp_table, *rp_out);
    if (out.no_data) {
      std::cout << "no data: the run table has no rows, nothing to report\n";
      return;
    }
    std::cout << "reported " << out.n_rows << " row(s)\n";
    for (const auto& p : out.outputs) std::cout << "  " << p.string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace sigtrain
