#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sigtrain/rng.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain {

class FitError : public Error {
public:
  using Error::Error;
};

// Scott's rule bandwidth factor for n points in d dimensions.
double scott_bandwidth(std::size_t n, int d);

// Gaussian kernel density over (snr_db, fo_frac, srm) triples: one kernel
// per data point with covariance bandwidth^2 * data_cov.
struct KdeModel {
  WaveformClass wclass = WaveformClass::Noise;
  Eigen::MatrixXd points;      // n x 3
  Eigen::Matrix3d data_cov;    // unbiased sample covariance of points
  double bandwidth = 0.0;      // Scott factor at fit time

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

// Fits a model on at least 8 triples; throws FitError when the sample
// covariance is singular (e.g. a constant column).
KdeModel kde_fit(const std::vector<NuisanceParams>& samples, WaveformClass c);

double kde_pdf(const KdeModel& m, const Eigen::Vector3d& x);

// Draws n parameter triples: pick a data point uniformly, add bandwidth-
// scaled Gaussian jitter, and redraw (up to 100 times) anything outside the
// physical domain (srm <= 1 or |fo| >= 0.5 or bad snr).
std::vector<NuisanceParams> kde_sample(const KdeModel& m, std::size_t n, Rng rng);

std::string kde_to_json(const KdeModel& m);
KdeModel kde_from_json(const std::string& text);

// One model per class, as persisted by the `kde fit` command.
using KdeModelSet = std::map<WaveformClass, KdeModel>;
void write_kde_models(const KdeModelSet& models, const std::filesystem::path& path);
KdeModelSet read_kde_models(const std::filesystem::path& path);

}  // namespace sigtrain
