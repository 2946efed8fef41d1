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
#include <functional>
#include <span>
#include <vector>

#include "bopt/gp.hpp"

namespace bopt {

using Objective = std::function<double(std::span<const double>)>;

struct MaximizerBudget {
  std::size_t max_evaluations = 2000;
  std::size_t max_iterations = 100;
  /// Rectangles whose diagonal (in unit-cube coordinates) falls below this
  /// are never divided.
  double min_rectangle_diagonal = 1e-9;

  void validate() const;
};

struct MaximizeResult {
  Point argmax;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
};

/// DIRECT over a box, maximizing. Coordinates are normalized to the unit
/// cube internally; every rectangle is stored as its center plus a per-axis
/// trisection level (side = 3^-level).
///
/// Potentially-optimal rectangles are the lower-right convex hull of
/// (diagonal, -value) with the epsilon test; each is trisected along its
/// longest side, lowest axis index first. `step()` runs one iteration so the
/// caller can stop at any time and read `best()`.
class DirectMaximizer {
 public:
  DirectMaximizer(Objective objective, Bounds bounds, MaximizerBudget budget = {},
                  double epsilon = 1e-4);

  /// Returns false once the budget is exhausted or nothing can be divided.
  bool step();
  MaximizeResult run();

  MaximizeResult best() const;
  std::size_t evaluations() const noexcept { return evaluations_; }
  std::size_t rectangle_count() const noexcept { return rects_.size(); }
  /// Largest remaining rectangle diagonal, unit-cube coordinates.
  double max_diagonal() const;
  /// Best-so-far value after each completed iteration (first entry: center).
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  struct Rect {
    std::vector<double> center;  // unit cube
    std::vector<int> level;
    int level_sum = 0;
    double value = 0.0;
  };

  double evaluate(const std::vector<double>& unit_point);
  Point to_domain(const std::vector<double>& unit_point) const;
  double diagonal(int level_sum) const;
  std::vector<std::size_t> potentially_optimal() const;
  void divide(std::size_t index);

  Objective objective_;
  Bounds bounds_;
  MaximizerBudget budget_;
  double epsilon_;
  std::vector<Rect> rects_;
  std::size_t evaluations_ = 0;
  std::size_t iterations_ = 0;
  std::size_t best_index_ = 0;
  bool done_ = false;
  std::vector<double> history_;
};

MaximizeResult maximize(const Objective& objective, const Bounds& bounds,
                        const MaximizerBudget& budget = {});

/// Bounded compass search from one start; the step halves after each sweep
/// without improvement.
MaximizeResult local_maximize(const Objective& objective, const Bounds& bounds, const Point& start,
                              std::size_t max_evaluations);

/// Domain center plus `starts` uniform random starts, each refined by
/// `local_maximize` with an equal share of the evaluation budget.
MaximizeResult multistart_maximize(const Objective& objective, const Bounds& bounds,
                                   std::size_t starts, std::uint64_t rng_seed,
                                   const MaximizerBudget& budget = {});

}  // namespace bopt
