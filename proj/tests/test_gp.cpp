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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bopt/error.hpp"
#include "bopt/gp.hpp"

using namespace bopt;

namespace {

ObservationSet random_set(std::mt19937_64& rng, std::size_t t, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  ObservationSet data;
  data.bounds = Bounds::unit(d);
  for (std::size_t i = 0; i < t; ++i) {
    Point x(d);
    for (double& v : x) v = u(rng);
    data.add(x, n(rng));
  }
  return data;
}

// Random design whose kernel matrix keeps its smallest eigenvalue at least
// 100x above the base jitter. Interpolating nearly coincident points with
// unrelated values is not representable in double precision at all.
ObservationSet well_posed_set(std::mt19937_64& rng, std::size_t t, std::size_t d,
                              const KernelSpec& k) {
  for (;;) {
    ObservationSet data = random_set(rng, t, d);
    Eigen::MatrixXd m(t, t);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j) m(i, j) = kernel_eval(k, data.points[i], data.points[j]);
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues()(0) >= 1e-6 * k.signal_variance)
      return data;
  }
}

// Matérn with the modified Bessel function of the second kind, scaled so the
// argument is 2 sqrt(nu) r / theta.
double matern_bessel(double nu, double r, double theta) {
  if (r == 0.0) return 1.0;
  const double z = 2.0 * std::sqrt(nu) * r / theta;
  return std::pow(z, nu) * std::cyl_bessel_k(nu, z) / (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
}

// log N(y | 0, A) with an explicit inverse and determinant.
double dense_lml(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const double quad = y.dot(a.inverse() * y);
  return -0.5 * quad - 0.5 * std::log(a.determinant()) -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("squared exponential values") {
  const KernelSpec k = KernelSpec::squared_exp(1.0);
  const Point zero{0.0}, one{1.0};
  CHECK(kernel_eval(k, zero, zero) == doctest::Approx(1.0));
  CHECK(kernel_eval(k, zero, one) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("matern closed forms agree with the Bessel oracle") {
  for (double nu : {0.5, 1.5, 2.5}) {
    KernelSpec k;
    k.family = KernelFamily::Matern;
    k.smoothness = nu;
    k.theta = {0.7};
    for (double r : {0.01, 0.1, 0.5, 1.0, 2.0, 4.0}) {
      const Point a{0.0}, b{r};
      CHECK(kernel_eval(k, a, b) == doctest::Approx(matern_bessel(nu, r, 0.7)).epsilon(1e-10));
    }
  }
  // Half-integer order one-half is the unsquared exponential.
  KernelSpec k;
  k.family = KernelFamily::Matern;
  k.smoothness = 0.5;
  k.theta = {1.0};
  for (double r : {0.5, 1.0, 2.0})
    CHECK(kernel_eval(k, Point{0.0}, Point{r}) ==
          doctest::Approx(std::exp(-std::numbers::sqrt2 * r)).epsilon(1e-12));
}

TEST_CASE("matern rejects unsupported smoothness") {
  KernelSpec k;
  k.family = KernelFamily::Matern;
  k.smoothness = 1.0;
  CHECK_THROWS_AS(k.validate(), Error);
}

TEST_CASE("kernel symmetry holds exactly for every family") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<KernelSpec> specs(4);
  specs[0] = KernelSpec::squared_exp(0.4, 2.0);
  specs[1].family = KernelFamily::SquaredExpARD;
  specs[1].theta = {0.3, 1.7, 0.9};
  specs[2].family = KernelFamily::Matern;
  specs[2].smoothness = 1.5;
  specs[3].family = KernelFamily::Matern;
  specs[3].smoothness = 2.5;
  specs[3].theta = {0.2, 0.5, 1.0};
  for (const KernelSpec& k : specs) {
    for (int i = 0; i < 50; ++i) {
      Point a(3), b(3);
      for (double& v : a) v = u(rng);
      for (double& v : b) v = u(rng);
      CHECK(kernel_eval(k, a, b) == kernel_eval(k, b, a));
      CHECK(kernel_eval(k, a, a) == doctest::Approx(k.signal_variance));
    }
  }
}

TEST_CASE("ARD discards a dimension with a huge length scale") {
  KernelSpec k;
  k.family = KernelFamily::SquaredExpARD;
  k.theta = {0.5, 1e6};
  const Point a{0.1, 0.0};
  const double base = kernel_eval(k, a, Point{0.4, 0.0});
  for (double shift : {0.5, 3.0, 10.0})
    CHECK(std::abs(kernel_eval(k, a, Point{0.4, shift}) - base) <= 1e-6);
}

TEST_CASE("dimension mismatch is an invalid argument") {
  KernelSpec k;
  k.family = KernelFamily::SquaredExpARD;
  k.theta = {1.0, 1.0};
  try {
    kernel_eval(k, Point{0.0, 0.0, 0.0}, Point{0.0, 0.0, 0.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  CHECK_THROWS_AS(kernel_eval(KernelSpec::squared_exp(1.0), Point{0.0}, Point{0.0, 1.0}), Error);
}

TEST_CASE("kernel matrix diagonal") {
  const std::vector<Point> one{{0.3}};
  const FactoredKernel a = factor_kernel_matrix(KernelSpec::squared_exp(1.0), one);
  CHECK(a.matrix(0, 0) == doctest::Approx(1.0 + a.jitter).epsilon(1e-14));
  CHECK(a.jitter <= 1e-8);
  const FactoredKernel b = factor_kernel_matrix(KernelSpec::squared_exp(1.0, 1.0, 0.1), one);
  CHECK(b.matrix(0, 0) == doctest::Approx(1.1 + b.jitter).epsilon(1e-14));
}

TEST_CASE("duplicate points factor through jitter escalation") {
  const std::vector<Point> pts{{0.5}, {0.5}};
  FactoredKernel f;
  CHECK_NOTHROW(f = factor_kernel_matrix(KernelSpec::squared_exp(1.0), pts));
  CHECK(f.jitter > 0.0);
  CHECK(f.jitter <= 1e-2);
  CHECK(f.cholesky.info() == Eigen::Success);
}

TEST_CASE("posterior examples") {
  ObservationSet data;
  data.bounds = Bounds{{-100.0}, {100.0}};
  data.add({0.0}, 1.0);
  const KernelSpec k = KernelSpec::squared_exp(1.0);

  const PosteriorSummary at_data = posterior(k, data, Point{0.0});
  CHECK(at_data.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(at_data.variance <= 1e-6);

  const PosteriorSummary far = posterior(k, data, Point{50.0});
  CHECK(std::abs(far.mean) < 1e-9);
  CHECK(far.variance == doctest::Approx(1.0).epsilon(1e-9));

  // k = exp(-1/2) at distance one, so mu = k and var = 1 - k^2.
  const PosteriorSummary one = posterior(k, data, Point{1.0});
  CHECK(one.mean == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  CHECK(one.variance == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));

  ObservationSet empty;
  empty.bounds = Bounds::unit(1);
  const PosteriorSummary prior = posterior(KernelSpec::squared_exp(1.0, 2.5), empty, Point{0.3});
  CHECK(prior.mean == 0.0);
  CHECK(prior.variance == doctest::Approx(2.5));
}

TEST_CASE("observation noise is added on request") {
  ObservationSet data;
  data.bounds = Bounds::unit(1);
  data.add({0.2}, 0.5);
  const KernelSpec k = KernelSpec::squared_exp(0.3, 1.0, 0.04);
  const PosteriorSummary latent = posterior(k, data, Point{0.6});
  const PosteriorSummary noisy = posterior(k, data, Point{0.6}, true);
  CHECK(noisy.includes_observation_noise);
  CHECK_FALSE(latent.includes_observation_noise);
  CHECK(noisy.variance == doctest::Approx(latent.variance + 0.04).epsilon(1e-12));
}

TEST_CASE("property: noise-free interpolation and bounded variance") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 2;
    const KernelSpec k = KernelSpec::squared_exp(0.2, 1.5);
    const ObservationSet data = well_posed_set(rng, 1 + trial % 10, d, k);
    const GaussianProcess gp(k, data);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const PosteriorSummary p = gp.predict(data.points[i]);
      CHECK(std::abs(p.mean - data.values[i]) <= 1e-6);
      CHECK(p.variance <= 1e-6);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int q = 0; q < 20; ++q) {
      Point x(d);
      for (double& v : x) v = u(rng);
      const PosteriorSummary p = gp.predict(x);
      CHECK(p.variance >= 0.0);
      CHECK(p.variance <= k.signal_variance + k.noise_variance + 1e-9);
    }
  }
}

TEST_CASE("property: posterior variance does not depend on observed values") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    ObservationSet a = random_set(rng, 2 + trial % 7, 2);
    ObservationSet b = a;
    for (double& y : b.values) y = n(rng);
    const KernelSpec k = KernelSpec::squared_exp(0.25, 1.0, trial % 2 ? 0.01 : 0.0);
    const GaussianProcess ga(k, a), gb(k, b);
    for (int q = 0; q < 10; ++q) {
      const Point x{0.1 * q, 1.0 - 0.07 * q};
      CHECK(std::abs(ga.predict(x).variance - gb.predict(x).variance) <= 1e-12);
    }
  }
}

TEST_CASE("log marginal likelihood") {
  SUBCASE("single observation at its mean") {
    ObservationSet data;
    data.bounds = Bounds::unit(1);
    data.add({0.5}, 0.0);
    const KernelSpec k = KernelSpec::squared_exp(1.0, 2.0);
    const GaussianProcess gp(k, data);
    const double v = 2.0 + gp.jitter();
    CHECK(gp.log_marginal_likelihood() ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * v)).epsilon(1e-12));
  }
  SUBCASE("dense oracle on random sets") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t t = 1 + trial % 8;
      const ObservationSet data = random_set(rng, t, 2);
      const KernelSpec k = KernelSpec::squared_exp(0.4, 1.3, 0.05);
      const GaussianProcess gp(k, data);
      Eigen::MatrixXd a(t, t);
      Eigen::VectorXd y(t);
      for (std::size_t i = 0; i < t; ++i) {
        y[i] = data.values[i];
        for (std::size_t j = 0; j < t; ++j)
          a(i, j) = kernel_eval(k, data.points[i], data.points[j]) +
                    (i == j ? k.noise_variance + gp.jitter() : 0.0);
      }
      CHECK(std::abs(gp.log_marginal_likelihood() - dense_lml(a, y)) <= 1e-8);
    }
  }
  SUBCASE("zero data prefers smaller variance") {
    ObservationSet data;
    data.bounds = Bounds::unit(1);
    for (double x : {0.1, 0.5, 0.9}) data.add({x}, 0.0);
    const double l1 = log_marginal_likelihood(KernelSpec::squared_exp(0.2, 1.0, 0.1), data);
    const double l2 = log_marginal_likelihood(KernelSpec::squared_exp(0.2, 1.0, 1.0), data);
    const double l3 = log_marginal_likelihood(KernelSpec::squared_exp(0.2, 1.0, 10.0), data);
    CHECK(l1 > l2);
    CHECK(l2 > l3);
  }
}

TEST_CASE("prior samples") {
  const std::vector<Point> pts{{0.0}, {0.3}, {1.0}};
  const KernelSpec k = KernelSpec::squared_exp(0.5);
  CHECK(sample_prior(k, pts, 42) == sample_prior(k, pts, 42));

  const int draws = 10000;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int s = 0; s < draws; ++s) {
    const auto f = sample_prior(k, pts, static_cast<std::uint64_t>(s) + 1);
    const Eigen::Vector3d v(f[0], f[1], f[2]);
    cov += v * v.transpose();
  }
  cov /= draws;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double expected = kernel_eval(k, pts[i], pts[j]);
      // 5% relative, with an absolute floor for the near-zero corner entry.
      CHECK(std::abs(cov(i, j) - expected) <= std::max(0.05 * expected, 0.03));
    }

  double sq = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double f = sample_prior(k, {{0.2}}, 1000 + static_cast<std::uint64_t>(s))[0];
    sq += f * f;
  }
  CHECK(sq / draws == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("hyperparameter fit recovers a known length scale") {
  ObservationSet data;
  data.bounds = Bounds{{0.0}, {5.0}};
  std::vector<Point> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({5.0 * i / 19.0});
  const auto f = sample_prior(KernelSpec::squared_exp(0.5), pts, 7);
  for (int i = 0; i < 20; ++i) data.add(pts[i], f[i]);

  // Oracle: likelihood surface on a log grid over (theta, signal variance).
  double grid_best = -1e300, grid_theta = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double theta = std::exp(std::log(0.01) + (std::log(100.0) - std::log(0.01)) * i / 300.0);
    for (int j = 0; j <= 60; ++j) {
      const double sv = std::exp(std::log(0.01) + (std::log(100.0) - std::log(0.01)) * j / 60.0);
      double l = -1e300;
      try {
        l = log_marginal_likelihood(KernelSpec::squared_exp(theta, sv), data);
      } catch (const Error&) {
      }
      if (l > grid_best) grid_best = l, grid_theta = theta;
    }
  }
  CHECK(grid_theta >= 0.25);
  CHECK(grid_theta <= 1.0);

  FitOptions options;
  options.initial = KernelSpec::squared_exp(1.0);
  options.seeds = 5;
  options.rng_seed = 1;
  const FitResult fit = fit_hyperparameters(data, options);
  CHECK_FALSE(fit.fallback);
  CHECK(fit.spec.theta[0] >= 0.25);
  CHECK(fit.spec.theta[0] <= 1.0);
  CHECK(fit.log_likelihood >= grid_best - 1e-3);
}

TEST_CASE("fit contracts") {
  ObservationSet data;
  data.bounds = Bounds{{0.0}, {10.0}};
  data.add({0.0}, 1.0);
  data.add({10.0}, 1.0);
  FitOptions options;
  options.initial = KernelSpec::squared_exp(1.0);
  options.seeds = 3;
  const FitResult degenerate = fit_hyperparameters(data, options);
  CHECK(std::isfinite(degenerate.spec.theta[0]));
  CHECK(std::isfinite(degenerate.spec.signal_variance));
  CHECK_NOTHROW(degenerate.spec.validate());

  std::mt19937_64 rng(2);
  const ObservationSet random = random_set(rng, 8, 1);
  options.seeds = 1;
  options.rng_seed = 99;
  const FitResult once = fit_hyperparameters(random, options);
  const FitResult manual = fit_from_start(random, options, hyperparameter_seeds(options, 1)[0]);
  CHECK(once.spec.theta == manual.spec.theta);
  CHECK(once.objective == manual.objective);

  options.seeds = 4;
  const FitResult a = fit_hyperparameters(random, options);
  const FitResult b = fit_hyperparameters(random, options);
  CHECK(a.spec.theta == b.spec.theta);
  CHECK(a.spec.signal_variance == b.spec.signal_variance);
  // Never worse than any seed it started from.
  for (const auto& start : hyperparameter_seeds(options, 1)) {
    KernelSpec s = options.initial;
    s.theta = {std::exp(start[0])};
    s.signal_variance = std::exp(start[1]);
    CHECK(a.objective >= log_marginal_likelihood(s, random) - 1e-9);
  }
}
