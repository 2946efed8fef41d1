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

#include "bopt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "bopt/error.hpp"

namespace bopt {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Conditioning: return "conditioning";
    case ErrorCode::InvalidObjective: return "invalid_objective";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::WrongMode: return "wrong_mode";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Bounds / data

bool Bounds::contains(std::span<const double> x, double slack) const noexcept {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] - slack && x[i] <= upper[i] + slack)) return false;
  }
  return true;
}

Point Bounds::center() const {
  Point c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

void Bounds::validate() const {
  if (lower.empty()) throw_invalid("bounds must have at least one dimension", "bounds");
  if (lower.size() != upper.size()) throw_invalid("bounds lower/upper size mismatch", "bounds");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const std::string field = "bounds[" + std::to_string(i) + "]";
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw_invalid("non-finite bound in dimension " + std::to_string(i), field);
    if (!(lower[i] < upper[i]))
      throw_invalid("lower bound must be below upper bound in dimension " + std::to_string(i),
                    field);
  }
}

Bounds Bounds::unit(std::size_t dim) {
  return Bounds{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

const char* to_string(KernelFamily family) noexcept {
  switch (family) {
    case KernelFamily::SquaredExpIso: return "sqexp_iso";
    case KernelFamily::SquaredExpARD: return "sqexp_ard";
    case KernelFamily::Matern: return "matern";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "sqexp_iso" || name == "sqexp") return KernelFamily::SquaredExpIso;
  if (name == "sqexp_ard" || name == "ard") return KernelFamily::SquaredExpARD;
  if (name == "matern") return KernelFamily::Matern;
  throw_invalid("unknown kernel family '" + name + "'", "kernel.family");
}

void KernelSpec::validate() const {
  if (theta.empty()) throw_invalid("kernel theta must not be empty", "kernel.theta");
  if (family == KernelFamily::SquaredExpIso && theta.size() != 1)
    throw_invalid("isotropic kernel takes exactly one length scale", "kernel.theta");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0) || !std::isfinite(theta[i]))
      throw_invalid("length scales must be positive", "kernel.theta[" + std::to_string(i) + "]");
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
    throw_invalid("signal variance must be positive", "kernel.signal_variance");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw_invalid("noise variance must be non-negative", "kernel.noise_variance");
  if (family == KernelFamily::Matern && smoothness != 0.5 && smoothness != 1.5 &&
      smoothness != 2.5)
    throw_invalid("Matern smoothness must be 0.5, 1.5 or 2.5", "kernel.smoothness");
}

KernelSpec KernelSpec::squared_exp(double length_scale, double signal_variance,
                                   double noise_variance) {
  KernelSpec spec;
  spec.theta = {length_scale};
  spec.signal_variance = signal_variance;
  spec.noise_variance = noise_variance;
  return spec;
}

void ObservationSet::add(Point x, double y) {
  points.push_back(std::move(x));
  values.push_back(y);
}

void ObservationSet::validate() const {
  bounds.validate();
  if (points.size() != values.size()) throw_invalid("points and values differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!bounds.contains(points[i], 1e-12))
      throw_invalid("observation " + std::to_string(i) + " lies outside bounds",
                    "points[" + std::to_string(i) + "]");
    if (!std::isfinite(values[i]))
      throw_invalid("observation value must be finite", "values[" + std::to_string(i) + "]");
  }
}

double PosteriorSummary::stddev() const noexcept { return std::sqrt(std::max(variance, 0.0)); }

// ---------------------------------------------------------------------------
// Kernels

namespace {

double scaled_sq_distance(const KernelSpec& spec, std::span<const double> a,
                          std::span<const double> b) {
  if (a.size() != b.size()) throw_invalid("kernel arguments differ in dimension");
  const bool per_dim = spec.theta.size() != 1;
  if (per_dim && spec.theta.size() != a.size())
    throw_invalid("length-scale vector does not match input dimension");
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = per_dim ? spec.theta[i] : spec.theta[0];
    const double diff = (a[i] - b[i]) / scale;
    r2 += diff * diff;
  }
  return r2;
}

// Closed forms of z^nu K_nu(z) / (2^(nu-1) Gamma(nu)) with z = 2 sqrt(nu) r.
double matern_correlation(double smoothness, double r) {
  const double z = 2.0 * std::sqrt(smoothness) * r;
  if (smoothness == 0.5) return std::exp(-z);
  if (smoothness == 1.5) return (1.0 + z) * std::exp(-z);
  return (1.0 + z + z * z / 3.0) * std::exp(-z);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  if (spec.family == KernelFamily::SquaredExpARD && spec.theta.size() != a.size())
    throw_invalid("ARD kernel needs one length scale per dimension");
  const double r2 = scaled_sq_distance(spec, a, b);
  if (spec.family == KernelFamily::Matern)
    return spec.signal_variance * matern_correlation(spec.smoothness, std::sqrt(r2));
  return spec.signal_variance * std::exp(-0.5 * r2);
}

FactoredKernel factor_kernel_matrix(const KernelSpec& spec, const std::vector<Point>& points) {
  const auto t = static_cast<Eigen::Index>(points.size());
  if (t == 0) throw_invalid("kernel matrix needs at least one point");
  Eigen::MatrixXd base(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel_eval(spec, points[i], points[j]);
      base(i, j) = k;
      base(j, i) = k;
    }
    if (points[i].size() != points[0].size()) throw_invalid("points differ in dimension");
  }
  base.diagonal().array() += spec.noise_variance;

  FactoredKernel out;
  for (double jitter = 1e-8 * spec.signal_variance; jitter <= 1e-2 * spec.signal_variance * 1.0001;
       jitter *= 10.0) {
    out.matrix = base;
    out.matrix.diagonal().array() += jitter;
    out.cholesky.compute(out.matrix);
    if (out.cholesky.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw Error(ErrorCode::Conditioning,
              "kernel matrix is not positive definite after maximal jitter");
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const std::vector<Point>& points,
                              std::span<const double> query) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    k(static_cast<Eigen::Index>(i)) = kernel_eval(spec, points[i], query);
  return k;
}

// ---------------------------------------------------------------------------
// Posterior

namespace {

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

GaussianProcess::GaussianProcess(KernelSpec spec, ObservationSet data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  if (data_.points.size() != data_.values.size())
    throw_invalid("points and values differ in length");
  if (data_.empty()) return;
  FactoredKernel factored = factor_kernel_matrix(spec_, data_.points);
  cholesky_ = std::move(factored.cholesky);
  jitter_ = factored.jitter;
  const Eigen::VectorXd y = as_vector(data_.values);
  alpha_ = cholesky_.solve(y);
  const Eigen::MatrixXd& l = cholesky_.matrixLLT();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  log_likelihood_ = -0.5 * y.dot(alpha_) - 0.5 * log_det -
                    0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);

  // Jitter only exists to get the factorization through. Refine the mean
  // weights against the unjittered matrix so noise-free data is reproduced;
  // stop once the residual stalls (singular K) or the
  // weights grow past the point where k . alpha loses precision. Eigenvalues
  // well below the jitter converge slowly, hence the generous step count.
  if (jitter_ > 0.0) {
    const Eigen::Index n = static_cast<Eigen::Index>(data_.size());
    const Eigen::MatrixXd exact =
        factored.matrix - jitter_ * Eigen::MatrixXd::Identity(n, n);
    const double weight_cap = 1e8 * y.lpNorm<Eigen::Infinity>() / spec_.signal_variance;
    Eigen::VectorXd residual = y - exact * alpha_;
    for (int step = 0; step < 50; ++step) {
      const Eigen::VectorXd next = alpha_ + cholesky_.solve(residual);
      const Eigen::VectorXd next_residual = y - exact * next;
      if (!(next_residual.norm() < 0.9 * residual.norm())) break;
      if (next.lpNorm<Eigen::Infinity>() > weight_cap) break;
      alpha_ = next;
      residual = next_residual;
    }
  }
}

PosteriorSummary GaussianProcess::predict(std::span<const double> query,
                                          bool include_noise) const {
  PosteriorSummary out;
  out.includes_observation_noise = include_noise;
  const double noise = include_noise ? spec_.noise_variance : 0.0;
  if (data_.empty()) {
    out.mean = 0.0;
    out.variance = spec_.signal_variance + noise;
    return out;
  }
  if (query.size() != data_.points.front().size())
    throw_invalid("query dimension does not match data");
  const Eigen::VectorXd k = kernel_vector(spec_, data_.points, query);
  out.mean = k.dot(alpha_);
  const Eigen::VectorXd v = cholesky_.matrixL().solve(k);
  const double prior = kernel_eval(spec_, query, query);
  out.variance = std::max(prior - v.squaredNorm(), 0.0) + noise;
  return out;
}

double GaussianProcess::log_marginal_likelihood() const {
  if (data_.empty()) throw_invalid("log marginal likelihood needs at least one observation");
  return log_likelihood_;
}

PosteriorSummary posterior(const KernelSpec& spec, const ObservationSet& data,
                           std::span<const double> query, bool include_noise) {
  return GaussianProcess(spec, data).predict(query, include_noise);
}

double log_marginal_likelihood(const KernelSpec& spec, const ObservationSet& data) {
  return GaussianProcess(spec, data).log_marginal_likelihood();
}

std::vector<double> sample_prior(const KernelSpec& spec, const std::vector<Point>& points,
                                 std::uint64_t rng_seed) {
  spec.validate();
  const FactoredKernel factored = factor_kernel_matrix(spec, points);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(points.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  const Eigen::VectorXd draw = factored.cholesky.matrixL() * z;
  return {draw.data(), draw.data() + draw.size()};
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting

namespace {

struct ParameterLayout {
  std::size_t theta_count;
  bool signal;
  bool noise;

  std::size_t size() const { return theta_count + (signal ? 1 : 0) + (noise ? 1 : 0); }

  KernelSpec decode(const KernelSpec& initial, const std::vector<double>& logs) const {
    KernelSpec spec = initial;
    spec.theta.assign(theta_count, 1.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < theta_count; ++i) spec.theta[i] = std::exp(logs[k++]);
    if (signal) spec.signal_variance = std::exp(logs[k++]);
    if (noise) spec.noise_variance = std::exp(logs[k++]);
    return spec;
  }
};

ParameterLayout layout_for(const FitOptions& options, std::size_t dim) {
  std::size_t theta_count = options.initial.theta.size();
  if (options.initial.family == KernelFamily::SquaredExpARD) theta_count = dim;
  if (options.initial.family == KernelFamily::SquaredExpIso) theta_count = 1;
  return {theta_count, options.fit_signal_variance, options.fit_noise_variance};
}

// Negative of the maximized objective; +inf on conditioning failure.
class FitObjective {
 public:
  FitObjective(const ObservationSet& data, const FitOptions& options, ParameterLayout layout)
      : data_(data), options_(options), layout_(layout) {}

  double operator()(const std::vector<double>& logs) {
    ++evaluations;
    const KernelSpec spec = layout_.decode(options_.initial, logs);
    double value;
    try {
      value = log_marginal_likelihood(spec, data_);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (options_.hyperprior) {
      const double mu = std::log(options_.hyperprior->median);
      const double s = options_.hyperprior->sigma;
      for (double v : logs) value -= (v - mu) * (v - mu) / (2.0 * s * s);
    }
    return std::isfinite(value) ? -value : std::numeric_limits<double>::infinity();
  }

  std::size_t evaluations = 0;

 private:
  const ObservationSet& data_;
  const FitOptions& options_;
  ParameterLayout layout_;
};

void clamp_into(std::vector<double>& x, double lo, double hi) {
  for (double& v : x) v = std::clamp(v, lo, hi);
}

}  // namespace

std::vector<std::vector<double>> hyperparameter_seeds(const FitOptions& options, std::size_t dim) {
  const ParameterLayout layout = layout_for(options, dim);
  std::mt19937_64 rng(options.rng_seed);
  std::uniform_real_distribution<double> uniform(std::log(options.lower), std::log(options.upper));
  std::vector<std::vector<double>> seeds(std::max<std::size_t>(options.seeds, 1));
  for (auto& seed : seeds) {
    seed.resize(layout.size());
    for (double& v : seed) v = uniform(rng);
  }
  return seeds;
}

FitResult fit_from_start(const ObservationSet& data, const FitOptions& options,
                         const std::vector<double>& start) {
  if (data.size() < 2) throw_invalid("hyperparameter fitting needs at least two observations");
  const std::size_t dim = data.points.front().size();
  const ParameterLayout layout = layout_for(options, dim);
  if (start.size() != layout.size()) throw_invalid("start point has wrong length");
  const double lo = std::log(options.lower);
  const double hi = std::log(options.upper);
  FitObjective objective(data, options, layout);

  // Bounded Nelder-Mead; the best vertex value never increases.
  const std::size_t n = layout.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  clamp_into(simplex[0], lo, hi);
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1] = simplex[0];
    const double step = (simplex[0][i] + 1.0 <= hi) ? 1.0 : -1.0;
    simplex[i + 1][i] += step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = objective(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = simplex[order[i]];
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double w) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + w * (b[i] - a[i]);
    clamp_into(out, lo, hi);
    return out;
  };

  while (objective.evaluations < options.max_evaluations_per_start) {
    sort_simplex();
    const double best = values.front();
    const double worst = values.back();
    if (std::isfinite(worst) &&
        worst - best <= options.relative_tolerance * std::max(1.0, std::abs(best)))
      break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);

    const auto reflected = blend(centroid, simplex[n], -1.0);
    const double fr = objective(reflected);
    if (fr < values[0]) {
      const auto expanded = blend(centroid, simplex[n], -2.0);
      const double fe = objective(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const auto contracted = outside ? blend(centroid, reflected, 0.5)
                                      : blend(centroid, simplex[n], 0.5);
      const double fc = objective(contracted);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = blend(simplex[0], simplex[i], 0.5);
          values[i] = objective(simplex[i]);
        }
      }
    }
  }
  sort_simplex();

  FitResult result;
  result.evaluations = objective.evaluations;
  if (!std::isfinite(values.front())) {
    result.fallback = true;
    result.objective = -std::numeric_limits<double>::infinity();
    result.log_likelihood = -std::numeric_limits<double>::infinity();
    result.spec = layout.decode(options.initial, simplex.front());
    return result;
  }
  result.spec = layout.decode(options.initial, simplex.front());
  result.objective = -values.front();
  result.log_likelihood = log_marginal_likelihood(result.spec, data);
  return result;
}

FitResult fit_hyperparameters(const ObservationSet& data, const FitOptions& options) {
  if (data.size() < 2) throw_invalid("hyperparameter fitting needs at least two observations");
  const std::size_t dim = data.points.front().size();
  std::optional<FitResult> best;
  std::size_t evaluations = 0;
  for (const auto& start : hyperparameter_seeds(options, dim)) {
    FitResult r = fit_from_start(data, options, start);
    evaluations += r.evaluations;
    if (r.fallback) continue;
    if (!best || r.objective > best->objective) best = std::move(r);
  }
  if (!best) {
    FitResult fallback;
    fallback.spec = options.initial;
    const ParameterLayout layout = layout_for(options, dim);
    fallback.spec.theta.assign(layout.theta_count, options.upper);
    fallback.fallback = true;
    fallback.objective = -std::numeric_limits<double>::infinity();
    fallback.log_likelihood = -std::numeric_limits<double>::infinity();
    fallback.evaluations = evaluations;
    return fallback;
  }
  best->evaluations = evaluations;
  return *best;
}

}  // namespace bopt
