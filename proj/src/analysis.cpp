#include "sigtrain/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sigtrain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
  double x_mean = 0.0;
  double sxx = 0.0;
  double sse = 0.0;
  int n = 0;
};

Ols ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  Ols o;
  o.n = static_cast<int>(x.size());
  double xm = 0.0, ym = 0.0;
  for (int i = 0; i < o.n; ++i) {
    xm += x[static_cast<std::size_t>(i)];
    ym += y[static_cast<std::size_t>(i)];
  }
  xm /= o.n;
  ym /= o.n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < o.n; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - xm;
    sxx += dx * dx;
    sxy += dx * (y[static_cast<std::size_t>(i)] - ym);
  }
  if (!(sxx > 0.0)) throw StatsError("zero spread in log10(quantity); cannot fit a trend");
  o.slope = sxy / sxx;
  o.intercept = ym - o.slope * xm;
  o.x_mean = xm;
  o.sxx = sxx;
  for (int i = 0; i < o.n; ++i) {
    const double r = y[static_cast<std::size_t>(i)] -
                     (o.slope * x[static_cast<std::size_t>(i)] + o.intercept);
    o.sse += r * r;
  }
  return o;
}

TrendFit finish_fit(const Ols& o, TrendKind kind, double p1, double p2) {
  TrendFit f;
  f.kind = kind;
  f.p1 = p1;
  f.p2 = p2;
  f.n = o.n;
  f.x_mean = o.x_mean;
  f.sxx = o.sxx;
  f.resid_var = o.n > 2 ? o.sse / (o.n - 2) : 0.0;
  f.slope_se = std::sqrt(f.resid_var / o.sxx);
  if (f.slope_se > 0.0) {
    const double tstat = o.slope / f.slope_se;
    f.significant = std::abs(tstat) > student_t_ppf(0.975, o.n - 2);
  } else {
    f.significant = o.slope != 0.0;
  }
  return f;
}

std::vector<double> log_quantities(std::span<const TrendPoint> pts) {
  std::vector<double> x;
  x.reserve(pts.size());
  for (const auto& p : pts) {
    if (!(p.qty > 0.0)) throw StatsError("quantity must be positive");
    x.push_back(std::log10(p.qty));
  }
  return x;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_run_table(const std::vector<RunRecord>& rows, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << "run_id,space,source,qty_per_class,parents_per_class,acc_tc,acc_ts,epochs,seed\n";
  f.precision(10);
  for (const auto& r : rows) {
    f << r.run_id << ',' << r.space << ',' << r.source << ',' << r.qty_per_class << ','
      << r.parents_per_class << ',' << r.acc_tc << ',' << r.acc_ts << ',' << r.epochs << ','
      << r.seed << '\n';
  }
}

std::vector<RunRecord> read_run_table(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("missing run table: " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw Error("empty run table file: " + path.string());
  const std::string header = "run_id,space,source,qty_per_class,parents_per_class,acc_tc,acc_ts,epochs,seed";
  if (line != header) throw Error("unexpected run table header: " + line);
  std::vector<RunRecord> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto parts = split_csv_line(line);
    if (parts.size() != 9)
      throw Error("run table line " + std::to_string(lineno) + " has " +
                  std::to_string(parts.size()) + " fields");
    try {
      RunRecord r;
      r.run_id = parts[0];
      r.space = parts[1];
      r.source = parts[2];
      r.qty_per_class = std::stoll(parts[3]);
      r.parents_per_class = std::stoll(parts[4]);
      r.acc_tc = std::stod(parts[5]);
      r.acc_ts = std::stod(parts[6]);
      r.epochs = std::stoi(parts[7]);
      r.seed = std::stoull(parts[8]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error("run table line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

double outlier_bound(std::span<const double> accs, int n_classes) {
  const double cutoff = 2.0 / static_cast<double>(n_classes);
  double bound = -kInf;
  for (const double a : accs)
    if (a < cutoff) bound = std::max(bound, a);
  return bound;
}

std::vector<double> filter_outliers(std::span<const double> accs, int n_classes) {
  const double bound = outlier_bound(accs, n_classes);
  std::vector<double> out;
  out.reserve(accs.size());
  for (const double a : accs)
    if (a > bound) out.push_back(a);
  return out;
}

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw StatsError("welch_ttest needs at least 2 points per sample");
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  TTestResult r;
  for (const double v : a) r.mean_a += v;
  for (const double v : b) r.mean_b += v;
  r.mean_a /= na;
  r.mean_b /= nb;
  double va = 0.0, vb = 0.0;
  for (const double v : a) va += (v - r.mean_a) * (v - r.mean_a);
  for (const double v : b) vb += (v - r.mean_b) * (v - r.mean_b);
  va /= na - 1.0;
  vb /= nb - 1.0;
  const double sa = va / na, sb = vb / nb;
  const double se2 = sa + sb;
  if (!(se2 > 0.0)) throw StatsError("welch_ttest: both samples have zero variance");
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  double denom = 0.0;
  if (va > 0.0) denom += sa * sa / (na - 1.0);
  if (vb > 0.0) denom += sb * sb / (nb - 1.0);
  r.dof = se2 * se2 / denom;
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

TrendFit fit_log_linear(std::span<const TrendPoint> pts) {
  if (pts.size() < 3) throw StatsError("trend fit needs at least 3 points");
  const auto x = log_quantities(pts);
  std::vector<double> y;
  y.reserve(pts.size());
  for (const auto& p : pts) y.push_back(p.acc);
  const auto o = ols_fit(x, y);
  return finish_fit(o, TrendKind::LogLinear, o.slope, o.intercept);
}

TrendFit fit_log_logistic(std::span<const TrendPoint> pts) {
  if (pts.size() < 3) throw StatsError("trend fit needs at least 3 points");
  const auto x = log_quantities(pts);
  std::vector<double> y;
  y.reserve(pts.size());
  for (const auto& p : pts) {
    if (!(p.acc > 0.0 && p.acc < 1.0))
      throw StatsError("logistic fit needs accuracies strictly inside (0,1)");
    y.push_back(std::log(p.acc / (1.0 - p.acc)));
  }
  const auto o = ols_fit(x, y);
  if (o.slope == 0.0) throw StatsError("logistic fit has zero slope; p2 is undefined");
  return finish_fit(o, TrendKind::LogLogistic, o.slope, -o.intercept / o.slope);
}

double trend_value(const TrendFit& f, double qty) {
  if (!(qty > 0.0)) throw StatsError("quantity must be positive");
  const double x = std::log10(qty);
  if (f.kind == TrendKind::LogLinear) return f.p1 * x + f.p2;
  const double u = f.p1 * (x - f.p2);
  return 1.0 / (1.0 + std::exp(-u));
}

double forecast_qty(const TrendFit& f, double alpha) {
  if (f.kind == TrendKind::LogLinear) {
    if (f.p1 == 0.0) throw StatsError("flat trend cannot be inverted");
    return std::pow(10.0, (alpha - f.p2) / f.p1);
  }
  if (!(alpha > 0.0)) throw StatsError("target accuracy must be positive");
  if (alpha >= 1.0)
    throw StatsError("a logistic trend reaches accuracy " + std::to_string(alpha) +
                     " only with an unbounded quantity");
  if (f.p1 == 0.0) throw StatsError("flat trend cannot be inverted");
  return std::pow(10.0, f.p2 - std::log((1.0 - alpha) / alpha) / f.p1);
}

double prediction_halfwidth(const TrendFit& f, double qty) {
  if (f.n <= 2) return 0.0;
  const double x = std::log10(qty);
  const double d = x - f.x_mean;
  const double s = std::sqrt(f.resid_var * (1.0 + 1.0 / f.n + d * d / f.sxx));
  return student_t_ppf(0.975, f.n - 2) * s;
}

double capture_duration_days(double qty_per_class, int n_classes, double sample_rate_hz,
                             double samples_per_observation) {
  if (!(sample_rate_hz > 0.0)) throw StatsError("sample rate must be positive");
  return qty_per_class * samples_per_observation * static_cast<double>(n_classes) /
         sample_rate_hz / 86400.0;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw StatsError("incomplete_beta needs positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  // Continued fraction for the canonical region; otherwise use symmetry.
  const auto betacf = [](double aa, double bb, double xx) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * xx / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
      const int m2 = 2 * m;
      double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + num / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      h *= d * c;
      num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + num / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
  };

  const double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(lnfront);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw StatsError("degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw StatsError("degrees of freedom must be positive");
  if (t == 0.0) return 1.0;
  return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

double student_t_ppf(double q, double dof) {
  if (!(q > 0.0 && q < 1.0)) throw StatsError("quantile must be in (0,1)");
  if (q == 0.5) return 0.0;
  const bool upper = q > 0.5;
  const double target = upper ? q : 1.0 - q;
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, dof) < target) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  const double v = 0.5 * (lo + hi);
  return upper ? v : -v;
}

}  // namespace sigtrain
