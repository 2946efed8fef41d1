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

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "bopt/direct.hpp"
#include "bopt/error.hpp"
#include "bopt/harness.hpp"

using namespace bopt;

namespace {

MaximizerBudget evals(std::size_t n) {
  MaximizerBudget b;
  b.max_evaluations = n;
  b.max_iterations = 100000;
  return b;
}

/// Sum of three Gaussian bumps with random centers, widths and heights.
Objective random_bumps(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::array<double, 4>> bumps(3);
  for (auto& b : bumps) b = {u(rng), u(rng), 0.15 + 0.3 * u(rng), 0.5 + u(rng)};
  return [bumps](std::span<const double> x) {
    double s = 0.0;
    for (const auto& b : bumps) {
      const double dx = x[0] - b[0], dy = x[1] - b[1];
      s += b[3] * std::exp(-(dx * dx + dy * dy) / (2.0 * b[2] * b[2]));
    }
    return s;
  };
}

}  // namespace

TEST_CASE("DIRECT finds a 1D quadratic peak") {
  const auto r = maximize([](std::span<const double> x) { return -(x[0] - 0.3) * (x[0] - 0.3); },
                          Bounds::unit(1), evals(500));
  CHECK(std::abs(r.argmax[0] - 0.3) <= 1e-2);
  CHECK(r.evaluations <= 500);
}

TEST_CASE("constant objective keeps the center") {
  Bounds b{{-1.0, 2.0}, {3.0, 4.0}};
  const auto r = maximize([](std::span<const double>) { return 7.0; }, b);
  CHECK(r.argmax == b.center());
  CHECK(r.value == 7.0);
}

TEST_CASE("DIRECT on negated Branin matches a dense grid") {
  const TestObjective branin = negated_branin();
  const KnownOptimum grid = grid_optimum(branin.evaluator, branin.bounds, 400);
  const auto start = std::chrono::steady_clock::now();
  const auto r = maximize(branin.evaluator, branin.bounds, MaximizerBudget{2000, 100, 1e-9});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.value >= grid.value - 1e-2);
  CHECK(seconds < 5.0);
  const auto again = maximize(branin.evaluator, branin.bounds, MaximizerBudget{2000, 100, 1e-9});
  CHECK(again.argmax == r.argmax);
  CHECK(again.value == r.value);
}

TEST_CASE("result never falls below the center value") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Objective f = random_bumps(seed);
    const Bounds b = Bounds::unit(2);
    const Point c = b.center();
    CHECK(maximize(f, b, evals(50)).value >= f(c));
  }
}

TEST_CASE("multistart from the optimum of a concave quadratic stays there") {
  auto f = [](std::span<const double> x) {
    return -(x[0] - 0.5) * (x[0] - 0.5) - 2.0 * (x[1] - 0.5) * (x[1] - 0.5);
  };
  // The domain center is always the first start.
  const auto r = multistart_maximize(f, Bounds::unit(2), 1, 3, evals(400));
  CHECK(std::abs(r.argmax[0] - 0.5) <= 1e-4);
  CHECK(std::abs(r.argmax[1] - 0.5) <= 1e-4);

  const auto l = local_maximize(f, Bounds::unit(2), Point{0.5, 0.5}, 200);
  CHECK(l.argmax == Point{0.5, 0.5});
}

TEST_CASE("multistart and DIRECT agree on random smooth objectives") {
  const Bounds b = Bounds::unit(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const Objective f = random_bumps(seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const double v = f(Point{i / 100.0, j / 100.0});
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const auto d = maximize(f, b, evals(2000));
    const auto m = multistart_maximize(f, b, 10, seed, evals(2000));
    CHECK(std::abs(d.value - m.value) <= 1e-2 * (hi - lo));
  }
}

TEST_CASE("multistart is deterministic per seed") {
  const Objective f = random_bumps(7);
  const auto a = multistart_maximize(f, Bounds::unit(2), 5, 11, evals(500));
  const auto b = multistart_maximize(f, Bounds::unit(2), 5, 11, evals(500));
  CHECK(a.argmax == b.argmax);
  CHECK(a.value == b.value);
  CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("property: DIRECT stays in bounds and its history never decreases") {
  const TestObjective branin = negated_branin();
  bool inside = true;
  Objective probe = [&](std::span<const double> x) {
    inside = inside && branin.bounds.contains(x);
    return branin(x);
  };
  DirectMaximizer dm(probe, branin.bounds, evals(3000));
  while (dm.step()) {
  }
  CHECK(inside);
  const auto& h = dm.history();
  REQUIRE(h.size() > 2);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
  CHECK(dm.best().value == h.back());
}

TEST_CASE("any-time: best is available between steps") {
  const Objective f = random_bumps(3);
  DirectMaximizer dm(f, Bounds::unit(2), evals(300));
  double last = dm.best().value;
  while (dm.step()) {
    const double v = dm.best().value;
    CHECK(v >= last);
    CHECK(f(dm.best().argmax) == v);
    last = v;
  }
  CHECK(dm.evaluations() <= 300 + 2);  // the last division may complete its pair
}

TEST_CASE("rectangles shrink everywhere as the budget grows") {
  auto f = [](std::span<const double> x) { return x[0] * std::sin(12.0 * x[0]); };
  std::vector<double> diag;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    DirectMaximizer dm(f, Bounds::unit(1), evals(n));
    dm.run();
    diag.push_back(dm.max_diagonal());
  }
  CHECK(diag[1] < diag[0]);
  CHECK(diag[2] < diag[1]);
  CHECK(diag[2] < 0.05);
}

TEST_CASE("NaN objective is rejected") {
  try {
    maximize([](std::span<const double>) { return std::nan(""); }, Bounds::unit(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidObjective);
    CHECK(std::string(e.what()).find("0.5") != std::string::npos);
  }
}

TEST_CASE("budget validation") {
  CHECK_THROWS_AS(MaximizerBudget({0, 10, 1e-9}).validate(), Error);
  CHECK_THROWS_AS(MaximizerBudget({10, 0, 1e-9}).validate(), Error);
  CHECK_THROWS_AS(MaximizerBudget({10, 10, 0.0}).validate(), Error);
  CHECK_THROWS_AS(maximize([](std::span<const double>) { return 0.0; }, Bounds{{1.0}, {1.0}}),
                  Error);
}
