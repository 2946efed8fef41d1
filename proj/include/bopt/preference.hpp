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
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "bopt/gp.hpp"

namespace bopt {

/// One recorded comparison: items[winner] was preferred over items[loser].
struct PreferencePair {
  std::size_t winner = 0;
  std::size_t loser = 0;
};

struct PreferenceDataset {
  std::vector<Point> items;
  std::vector<PreferencePair> pairs;
  Bounds bounds;

  /// Index of an item within `tolerance` (max-norm) of `x`, appending it if
  /// none exists.
  std::size_t add_item(const Point& x, double tolerance = 1e-9);
  void add_preference(const Point& winner, const Point& loser, double tolerance = 1e-9);
  void validate() const;
};

struct LaplaceResult {
  Eigen::VectorXd f_map;
  /// K^{-1} f_map, carried so K is never inverted explicitly.
  Eigen::VectorXd alpha;
  Eigen::MatrixXd c_matrix;
  Eigen::VectorXd b_vector;
  bool converged = false;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  double log_posterior = 0.0;
  /// Log-posterior after each accepted Newton step (first entry: f = 0).
  std::vector<double> trace;
};

namespace probit {

/// h_i(x_j) for every pair (rows) and item (columns): +1 at the winner,
/// -1 at the loser.
Eigen::MatrixXd difference_matrix(const PreferenceDataset& data);

/// Z_i = (f(r_i) - f(c_i)) / (sqrt(2) sigma).
Eigen::VectorXd z_scores(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma);

/// Gradient of sum_i log Phi(Z_i) with respect to f.
Eigen::VectorXd b_vector(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma);

/// Negative Hessian of sum_i log Phi(Z_i); positive semi-definite.
Eigen::MatrixXd c_matrix(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma);

double log_likelihood(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma);

}  // namespace probit

struct LaplaceOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 100;
  std::size_t max_halvings = 20;
};

LaplaceResult laplace_map(const KernelSpec& kernel, const PreferenceDataset& data,
                          double sigma_noise, const LaplaceOptions& options = {});

/// Latent-valuation posterior under the Laplace approximation. Holds the
/// factorizations needed for O(t^2) queries.
class PreferenceModel {
 public:
  PreferenceModel(KernelSpec kernel, PreferenceDataset data, LaplaceResult laplace);

  PosteriorSummary predict(std::span<const double> query) const;
  double covariance(std::span<const double> a, std::span<const double> b) const;
  /// Index of the item with the largest posterior mean; ties go lowest.
  std::size_t incumbent_index() const;

  const KernelSpec& kernel() const noexcept { return kernel_; }
  const PreferenceDataset& data() const noexcept { return data_; }
  const LaplaceResult& laplace() const noexcept { return laplace_; }

 private:
  KernelSpec kernel_;
  PreferenceDataset data_;
  LaplaceResult laplace_;
  Eigen::MatrixXd variance_weight_;  // (C K + I)^{-1} C
};

PosteriorSummary preference_posterior(const KernelSpec& kernel, const PreferenceDataset& data,
                                      const LaplaceResult& laplace, std::span<const double> query);

}  // namespace bopt
