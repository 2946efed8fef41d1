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

#include "bopt/preference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bopt/error.hpp"
#include "bopt/normal.hpp"

namespace bopt {

namespace {

double max_abs_diff(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

std::size_t PreferenceDataset::add_item(const Point& x, double tolerance) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].size() == x.size() && max_abs_diff(items[i], x) <= tolerance) return i;
  }
  items.push_back(x);
  return items.size() - 1;
}

void PreferenceDataset::add_preference(const Point& winner, const Point& loser, double tolerance) {
  if (winner.size() != loser.size()) throw_invalid("winner and loser differ in dimension");
  if (max_abs_diff(winner, loser) <= tolerance)
    throw_invalid("winner and loser are the same point");
  if (!bounds.lower.empty()) {
    if (!bounds.contains(winner)) throw_invalid("winner lies outside bounds", "winner");
    if (!bounds.contains(loser)) throw_invalid("loser lies outside bounds", "loser");
  }
  const std::size_t w = add_item(winner, tolerance);
  const std::size_t l = add_item(loser, tolerance);
  pairs.push_back({w, l});
}

void PreferenceDataset::validate() const {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.winner >= items.size() || p.loser >= items.size())
      throw_invalid("pair index out of range", "pairs[" + std::to_string(i) + "]");
    if (p.winner == p.loser)
      throw_invalid("pair compares an item with itself", "pairs[" + std::to_string(i) + "]");
  }
}

// ---------------------------------------------------------------------------

namespace probit {

Eigen::MatrixXd difference_matrix(const PreferenceDataset& data) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.pairs.size()),
                                            static_cast<Eigen::Index>(data.items.size()));
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    h(row, static_cast<Eigen::Index>(data.pairs[i].winner)) += 1.0;
    h(row, static_cast<Eigen::Index>(data.pairs[i].loser)) -= 1.0;
  }
  return h;
}

Eigen::VectorXd z_scores(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(data.pairs.size()));
  const double scale = std::numbers::sqrt2 * sigma;
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    z(static_cast<Eigen::Index>(i)) = (f(static_cast<Eigen::Index>(data.pairs[i].winner)) -
                                       f(static_cast<Eigen::Index>(data.pairs[i].loser))) /
                                      scale;
  }
  return z;
}

Eigen::VectorXd b_vector(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma) {
  const Eigen::VectorXd z = z_scores(data, f, sigma);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(f.size());
  const double scale = 1.0 / (std::numbers::sqrt2 * sigma);
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    const double ratio = scale * normal_hazard(z(static_cast<Eigen::Index>(i)));
    b(static_cast<Eigen::Index>(data.pairs[i].winner)) += ratio;
    b(static_cast<Eigen::Index>(data.pairs[i].loser)) -= ratio;
  }
  return b;
}

Eigen::MatrixXd c_matrix(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma) {
  const Eigen::VectorXd z = z_scores(data, f, sigma);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(f.size(), f.size());
  const double scale = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    const double zi = z(static_cast<Eigen::Index>(i));
    const double lambda = normal_hazard(zi);
    // -d^2/dZ^2 log Phi(Z) = lambda (lambda + Z) > 0
    const double w = scale * lambda * (lambda + zi);
    const auto r = static_cast<Eigen::Index>(data.pairs[i].winner);
    const auto l = static_cast<Eigen::Index>(data.pairs[i].loser);
    c(r, r) += w;
    c(l, l) += w;
    c(r, l) -= w;
    c(l, r) -= w;
  }
  return c;
}

double log_likelihood(const PreferenceDataset& data, const Eigen::VectorXd& f, double sigma) {
  const Eigen::VectorXd z = z_scores(data, f, sigma);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += log_normal_cdf(z(i));
  return sum;
}

}  // namespace probit

// ---------------------------------------------------------------------------

LaplaceResult laplace_map(const KernelSpec& kernel, const PreferenceDataset& data,
                          double sigma_noise, const LaplaceOptions& options) {
  kernel.validate();
  data.validate();
  if (data.items.size() < 2) throw_invalid("Laplace approximation needs at least two items");
  if (data.pairs.empty()) throw_invalid("Laplace approximation needs at least one preference");
  if (!(sigma_noise > 0.0)) throw_invalid("probit noise must be positive", "probit_noise");

  const Eigen::MatrixXd k = factor_kernel_matrix(kernel, data.items).matrix;
  const Eigen::Index t = k.rows();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(t, t);

  // The iterate is alpha with f = K alpha, so f^T K^{-1} f = f^T alpha.
  auto log_posterior = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& alpha) {
    return -0.5 * f.dot(alpha) + probit::log_likelihood(data, f, sigma_noise);
  };

  LaplaceResult result;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(t);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(t);
  double psi = log_posterior(f, alpha);
  result.trace.push_back(psi);

  for (;;) {
    const Eigen::VectorXd b = probit::b_vector(data, f, sigma_noise);
    const double gradient_norm = (b - alpha).cwiseAbs().maxCoeff();
    if (gradient_norm <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;

    // Full Newton target: f* = (K^{-1} + C)^{-1} (C f + b) = K (I + C K)^{-1} (C f + b).
    const Eigen::MatrixXd c = probit::c_matrix(data, f, sigma_noise);
    const Eigen::VectorXd target = (identity + c * k).partialPivLu().solve(c * f + b);

    double step = 1.0;
    bool accepted = false;
    for (std::size_t h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      const Eigen::VectorXd alpha_try = alpha + step * (target - alpha);
      const Eigen::VectorXd f_try = k * alpha_try;
      const double psi_try = log_posterior(f_try, alpha_try);
      if (std::isfinite(psi_try) && psi_try >= psi) {
        alpha = alpha_try;
        f = f_try;
        psi = psi_try;
        accepted = true;
        break;
      }
    }
    ++result.iterations;
    if (!accepted) break;
    result.trace.push_back(psi);
  }

  result.f_map = f;
  result.alpha = alpha;
  result.b_vector = probit::b_vector(data, f, sigma_noise);
  result.c_matrix = probit::c_matrix(data, f, sigma_noise);
  result.final_gradient_norm = (result.b_vector - alpha).cwiseAbs().maxCoeff();
  result.converged = result.final_gradient_norm <= options.gradient_tolerance;
  result.log_posterior = psi;
  return result;
}

PreferenceModel::PreferenceModel(KernelSpec kernel, PreferenceDataset data, LaplaceResult laplace)
    : kernel_(std::move(kernel)), data_(std::move(data)), laplace_(std::move(laplace)) {
  if (laplace_.f_map.size() != static_cast<Eigen::Index>(data_.items.size()))
    throw_invalid("Laplace result does not match the dataset");
  const Eigen::MatrixXd k = factor_kernel_matrix(kernel_, data_.items).matrix;
  const Eigen::Index t = k.rows();
  // (K + C^{-1})^{-1} = (C K + I)^{-1} C, defined even when C is singular.
  variance_weight_ = (laplace_.c_matrix * k + Eigen::MatrixXd::Identity(t, t))
                         .partialPivLu()
                         .solve(laplace_.c_matrix);
}

PosteriorSummary PreferenceModel::predict(std::span<const double> query) const {
  PosteriorSummary out;
  const Eigen::VectorXd k = kernel_vector(kernel_, data_.items, query);
  out.mean = k.dot(laplace_.alpha);
  out.variance = std::max(kernel_eval(kernel_, query, query) - k.dot(variance_weight_ * k), 0.0);
  return out;
}

double PreferenceModel::covariance(std::span<const double> a, std::span<const double> b) const {
  const Eigen::VectorXd ka = kernel_vector(kernel_, data_.items, a);
  const Eigen::VectorXd kb = kernel_vector(kernel_, data_.items, b);
  return kernel_eval(kernel_, a, b) - ka.dot(variance_weight_ * kb);
}

std::size_t PreferenceModel::incumbent_index() const {
  std::size_t best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data_.items.size(); ++i) {
    const double m = predict(data_.items[i]).mean;
    if (m > best_mean) {
      best_mean = m;
      best = i;
    }
  }
  return best;
}

PosteriorSummary preference_posterior(const KernelSpec& kernel, const PreferenceDataset& data,
                                      const LaplaceResult& laplace, std::span<const double> query) {
  if (!laplace.converged) throw_invalid("Laplace result did not converge");
  return PreferenceModel(kernel, data, laplace).predict(query);
}

}  // namespace bopt
