#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigtrain/types.hpp"

namespace sigtrain {

class StatsError : public Error {
public:
  using Error::Error;
};

// One sweep cell result. qty_per_class counts stored observations available
// to training; parents_per_class counts the non-augmented ones (equal to
// qty_per_class except for augmented sources).
struct RunRecord {
  std::string run_id;
  std::string space;
  std::string source;
  long long qty_per_class = 0;
  long long parents_per_class = 0;
  double acc_tc = 0.0;
  double acc_ts = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

void write_run_table(const std::vector<RunRecord>& rows, const std::filesystem::path& path);
std::vector<RunRecord> read_run_table(const std::filesystem::path& path);

// Largest accuracy strictly below twice the chance rate, or -inf when every
// run cleared it. Runs at or below the bound are the outliers to drop.
double outlier_bound(std::span<const double> accs, int n_classes);
std::vector<double> filter_outliers(std::span<const double> accs, int n_classes);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 0.0;  // two-sided
  double mean_a = 0.0, mean_b = 0.0;
};

// Welch's unequal-variance t-test with the Welch-Satterthwaite degrees of
// freedom. Requires >= 2 points per sample and a nonzero pooled standard
// error.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b);

enum class TrendKind { LogLinear, LogLogistic };

// Accuracy regressed on log10(quantity): directly (alpha = p1*x + p2) or
// through a natural-log logit (ln(alpha/(1-alpha)) = p1*(x - p2)). Residual
// statistics are kept in the fitted (possibly logit) y-space for prediction
// bands.
struct TrendFit {
  TrendKind kind = TrendKind::LogLinear;
  double p1 = 0.0;
  double p2 = 0.0;
  int n = 0;
  double x_mean = 0.0;
  double sxx = 0.0;
  double resid_var = 0.0;  // SSE / (n - 2)
  double slope_se = 0.0;
  bool significant = false;  // two-sided slope t-test at 5%
};

struct TrendPoint {
  double qty = 0.0;
  double acc = 0.0;
};

TrendFit fit_log_linear(std::span<const TrendPoint> pts);
TrendFit fit_log_logistic(std::span<const TrendPoint> pts);

// Trend value at a quantity (accuracy space for both kinds).
double trend_value(const TrendFit& f, double qty);

// Quantity needed to reach accuracy alpha. The logistic inverse rejects
// alpha >= 1, where the answer is unbounded.
double forecast_qty(const TrendFit& f, double alpha);

// Half-width of the 95% prediction band at qty, in the fit's own y-space.
double prediction_halfwidth(const TrendFit& f, double qty);

// Continuous capture time (days) to collect qty observations per class with
// no overlap: each observation consumes stride samples at the capture rate.
double capture_duration_days(double qty_per_class, int n_classes, double sample_rate_hz = 40e3,
                             double samples_per_observation = 2048.0);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
// Two-sided p for |T| >= |t| under Student's t.
double student_t_two_sided_p(double t, double dof);
double student_t_ppf(double q, double dof);

}  // namespace sigtrain
