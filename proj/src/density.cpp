#include "sigtrain/density.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace sigtrain {

namespace {

using nlohmann::json;

Eigen::LLT<Eigen::Matrix3d> kernel_chol(const KdeModel& m) {
  const Eigen::Matrix3d c = m.bandwidth * m.bandwidth * m.data_cov;
  Eigen::LLT<Eigen::Matrix3d> llt(c);
  if (llt.info() != Eigen::Success)
    throw FitError("kernel covariance is not positive definite");
  return llt;
}

}  // namespace

double scott_bandwidth(std::size_t n, int d) {
  return std::pow(static_cast<double>(n), -1.0 / (d + 4));
}

KdeModel kde_fit(const std::vector<NuisanceParams>& samples, WaveformClass c) {
  if (samples.size() < 8)
    throw FitError("kde_fit needs at least 8 samples, got " + std::to_string(samples.size()));
  KdeModel m;
  m.wclass = c;
  const auto n = static_cast<Eigen::Index>(samples.size());
  m.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = samples[static_cast<std::size_t>(i)];
    m.points(i, 0) = p.snr_db;
    m.points(i, 1) = p.fo_frac;
    m.points(i, 2) = p.srm;
  }
  const Eigen::RowVector3d mean = m.points.colwise().mean();
  const Eigen::MatrixXd centered = m.points.rowwise() - mean;
  m.data_cov = centered.transpose() * centered / static_cast<double>(n - 1);
  m.bandwidth = scott_bandwidth(samples.size(), 3);

  Eigen::LLT<Eigen::Matrix3d> llt(m.data_cov);
  if (llt.info() != Eigen::Success)
    throw FitError("sample covariance is singular for class " + std::string(to_string(c)));
  return m;
}

double kde_pdf(const KdeModel& m, const Eigen::Vector3d& x) {
  if (!(m.bandwidth > 0.0)) throw FitError("kde_pdf needs a positive bandwidth");
  const auto llt = kernel_chol(m);
  const Eigen::Matrix3d L = llt.matrixL();
  const double logdet = 2.0 * std::log(L(0, 0) * L(1, 1) * L(2, 2));
  const double lognorm = -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + logdet);

  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
    const Eigen::Vector3d d = x - m.points.row(i).transpose();
    const Eigen::Vector3d z = llt.matrixL().solve(d);
    acc += std::exp(-0.5 * z.squaredNorm() + lognorm);
  }
  return acc / static_cast<double>(m.points.rows());
}

std::vector<NuisanceParams> kde_sample(const KdeModel& m, std::size_t n, Rng rng) {
  if (m.size() == 0) throw FitError("cannot sample an empty model");
  Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
  if (m.bandwidth > 0.0) L = kernel_chol(m).matrixL();

  std::vector<NuisanceParams> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    NuisanceParams p;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      const auto i = static_cast<Eigen::Index>(rng.below(m.size()));
      Eigen::Vector3d y = m.points.row(i).transpose();
      if (m.bandwidth > 0.0) {
        const Eigen::Vector3d z{rng.normal(), rng.normal(), rng.normal()};
        // L already carries the bandwidth: L*L^T = bandwidth^2 * data_cov.
        y += L * z;
      }
      p.snr_db = y(0);
      p.fo_frac = y(1);
      p.srm = y(2);
      ok = p.valid();
    }
    if (!ok)
      throw GenerationError("kde_sample rejected 100 consecutive draws; model mass is "
                            "outside the physical domain");
    out.push_back(p);
  }
  return out;
}

namespace {

json model_to_json(const KdeModel& m) {
  json j;
  j["class"] = std::string(to_string(m.wclass));
  j["bandwidth"] = m.bandwidth;
  json pts = json::array();
  for (Eigen::Index i = 0; i < m.points.rows(); ++i)
    pts.push_back({m.points(i, 0), m.points(i, 1), m.points(i, 2)});
  j["points"] = pts;
  json cov = json::array();
  for (int r = 0; r < 3; ++r)
    cov.push_back({m.data_cov(r, 0), m.data_cov(r, 1), m.data_cov(r, 2)});
  j["cov"] = cov;
  return j;
}

KdeModel model_from_json(const json& j) {
  KdeModel m;
  const auto cls = waveform_class_from_string(j.at("class").get<std::string>());
  if (!cls) throw FitError("unknown class in model: " + j.at("class").dump());
  m.wclass = *cls;
  m.bandwidth = j.at("bandwidth").get<double>();
  const auto& pts = j.at("points");
  m.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (Eigen::Index i = 0; i < m.points.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      m.points(i, c) = pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  const auto& cov = j.at("cov");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      m.data_cov(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

}  // namespace

std::string kde_to_json(const KdeModel& m) { return model_to_json(m).dump(2); }

KdeModel kde_from_json(const std::string& text) {
  try {
    return model_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FitError("unparseable kde model: " + std::string(e.what()));
  }
}

void write_kde_models(const KdeModelSet& models, const std::filesystem::path& path) {
  json j;
  json inner;
  for (const auto& [c, m] : models) inner[std::string(to_string(c))] = model_to_json(m);
  j["models"] = inner;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

KdeModelSet read_kde_models(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FitError("missing kde model file: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw FitError("unparseable kde model file: " + std::string(e.what()));
  }
  KdeModelSet out;
  try {
    for (const auto& [key, val] : j.at("models").items()) {
      const auto m = model_from_json(val);
      out[m.wclass] = m;
    }
  } catch (const json::exception& e) {
    throw FitError("bad kde model file: " + std::string(e.what()));
  }
  return out;
}

}  // namespace sigtrain
