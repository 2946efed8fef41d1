/*
 * Copyright 2026 The bopt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace bopt {

using Point = std::vector<double>;

/// Axis-aligned box; lower[i] < upper[i] for every dimension.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x, double slack = 0.0) const noexcept;
  Point center() const;
  /// Throws InvalidArgument naming the offending dimension ("bounds[i]").
  void validate() const;

  static Bounds unit(std::size_t dim);
};

enum class KernelFamily { SquaredExpIso, SquaredExpARD, Matern };

const char* to_string(KernelFamily family) noexcept;
KernelFamily kernel_family_from_string(const std::string& name);

/// Full parameterization of the zero-mean GP prior.
///
/// `theta` holds one length scale for SquaredExpIso, one per input dimension
/// for SquaredExpARD, and either form for Matern. `smoothness` is only read
/// by Matern and must be 0.5, 1.5 or 2.5.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExpIso;
  std::vector<double> theta = {1.0};
  double smoothness = 2.5;
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  void validate() const;

  static KernelSpec squared_exp(double length_scale, double signal_variance = 1.0,
                                double noise_variance = 0.0);
};

struct ObservationSet {
  std::vector<Point> points;
  std::vector<double> values;
  Bounds bounds;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  void add(Point x, double y);
  void validate() const;
};

struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;
  bool includes_observation_noise = false;

  double stddev() const noexcept;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

/// Covariance matrix with noise and jitter already on the diagonal, plus its
/// Cholesky factor. `jitter` is the absolute amount that made the
/// factorization succeed.
struct FactoredKernel {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> cholesky;
  double jitter = 0.0;
};

/// Jitter starts at 1e-8 * signal_variance and grows x10 up to
/// 1e-2 * signal_variance; throws ErrorCode::Conditioning beyond that.
FactoredKernel factor_kernel_matrix(const KernelSpec& spec, const std::vector<Point>& points);

inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const std::vector<Point>& points) {
  return factor_kernel_matrix(spec, points).matrix;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const std::vector<Point>& points,
                              std::span<const double> query);

/// A GP conditioned on an ObservationSet. Factorizes once; each query costs
/// O(t^2). Immutable after construction.
class GaussianProcess {
 public:
  GaussianProcess(KernelSpec spec, ObservationSet data);

  PosteriorSummary predict(std::span<const double> query, bool include_noise = false) const;
  double log_marginal_likelihood() const;

  const KernelSpec& spec() const noexcept { return spec_; }
  const ObservationSet& data() const noexcept { return data_; }
  double jitter() const noexcept { return jitter_; }

 private:
  KernelSpec spec_;
  ObservationSet data_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double log_likelihood_ = 0.0;
};

PosteriorSummary posterior(const KernelSpec& spec, const ObservationSet& data,
                           std::span<const double> query, bool include_noise = false);

double log_marginal_likelihood(const KernelSpec& spec, const ObservationSet& data);

std::vector<double> sample_prior(const KernelSpec& spec, const std::vector<Point>& points,
                                 std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Hyperparameter fitting

/// Log-normal hyperprior applied independently to every fitted
/// hyperparameter: log p = -(log v - log median)^2 / (2 sigma^2).
struct LogNormalPrior {
  double median = 1.0;
  double sigma = 1.0;
};

struct FitOptions {
  /// Family, smoothness, theta length and the values of anything not fitted.
  KernelSpec initial;
  bool fit_signal_variance = true;
  bool fit_noise_variance = false;
  std::size_t seeds = 5;
  std::uint64_t rng_seed = 0;
  double lower = 1e-3;
  double upper = 1e3;
  std::size_t max_evaluations_per_start = 200;
  double relative_tolerance = 1e-6;
  std::optional<LogNormalPrior> hyperprior;
};

struct FitResult {
  KernelSpec spec;
  /// Objective actually maximized: log marginal likelihood plus hyperprior.
  double objective = 0.0;
  double log_likelihood = 0.0;
  std::size_t evaluations = 0;
  /// Every start failed to factorize; `spec` is the widest-length-scale spec.
  bool fallback = false;
};

/// Starting points in log-space, drawn uniformly from the log box.
std::vector<std::vector<double>> hyperparameter_seeds(const FitOptions& options, std::size_t dim);

/// One bounded Nelder-Mead run in log-space from `start`.
FitResult fit_from_start(const ObservationSet& data, const FitOptions& options,
                         const std::vector<double>& start);

FitResult fit_hyperparameters(const ObservationSet& data, const FitOptions& options);

}  // namespace bopt
