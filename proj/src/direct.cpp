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

#include "bopt/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "bopt/error.hpp"

namespace bopt {

void MaximizerBudget::validate() const {
  if (max_evaluations < 1) throw_invalid("max_evaluations must be positive", "maximizer.max_evaluations");
  if (max_iterations < 1) throw_invalid("max_iterations must be positive", "maximizer.max_iterations");
  if (!(min_rectangle_diagonal > 0.0))
    throw_invalid("min_rectangle_diagonal must be positive", "maximizer.min_rectangle_diagonal");
}

namespace {

[[noreturn]] void throw_nan(std::span<const double> x) {
  std::ostringstream msg;
  msg << "objective returned NaN at (";
  for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
  msg << ")";
  throw Error(ErrorCode::InvalidObjective, msg.str());
}

double checked_call(const Objective& objective, std::span<const double> x) {
  const double v = objective(x);
  if (std::isnan(v)) throw_nan(x);
  return v;
}

}  // namespace

DirectMaximizer::DirectMaximizer(Objective objective, Bounds bounds, MaximizerBudget budget,
                                 double epsilon)
    : objective_(std::move(objective)), bounds_(std::move(bounds)), budget_(budget),
      epsilon_(epsilon) {
  bounds_.validate();
  budget_.validate();
  Rect root;
  root.center.assign(bounds_.dim(), 0.5);
  root.level.assign(bounds_.dim(), 0);
  root.value = evaluate(root.center);
  rects_.push_back(std::move(root));
  history_.push_back(rects_.front().value);
  if (budget_.max_evaluations < 3) done_ = true;
}

Point DirectMaximizer::to_domain(const std::vector<double>& unit_point) const {
  Point x(unit_point.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = std::clamp(unit_point[i], 0.0, 1.0);
    x[i] = std::clamp(bounds_.lower[i] + u * (bounds_.upper[i] - bounds_.lower[i]),
                      bounds_.lower[i], bounds_.upper[i]);
  }
  return x;
}

double DirectMaximizer::evaluate(const std::vector<double>& unit_point) {
  ++evaluations_;
  return checked_call(objective_, to_domain(unit_point));
}

double DirectMaximizer::diagonal(int level_sum) const {
  const auto d = static_cast<int>(bounds_.dim());
  const int base = level_sum / d;
  const int extra = level_sum % d;
  double sq = 0.0;
  for (int i = 0; i < d; ++i) {
    const double side = std::pow(3.0, -(base + (i < extra ? 1 : 0)));
    sq += side * side;
  }
  return std::sqrt(sq);
}

double DirectMaximizer::max_diagonal() const {
  int min_sum = std::numeric_limits<int>::max();
  for (const Rect& r : rects_) min_sum = std::min(min_sum, r.level_sum);
  return diagonal(min_sum);
}

std::vector<std::size_t> DirectMaximizer::potentially_optimal() const {
  // Best rectangle per size class; ties keep the oldest.
  std::map<int, std::size_t> best_per_size;
  for (std::size_t i = 0; i < rects_.size(); ++i) {
    auto [it, inserted] = best_per_size.try_emplace(rects_[i].level_sum, i);
    if (!inserted && rects_[i].value > rects_[it->second].value) it->second = i;
  }
  // Work with (half diagonal, -value) so that smaller is better.
  struct Candidate {
    std::size_t index;
    double size;
    double f;
  };
  std::vector<Candidate> candidates;
  for (auto it = best_per_size.rbegin(); it != best_per_size.rend(); ++it) {
    candidates.push_back({it->second, 0.5 * diagonal(it->first), -rects_[it->second].value});
  }
  const double f_min = -rects_[best_index_].value;

  std::vector<std::size_t> selected;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const Candidate& c = candidates[j];
    if (2.0 * c.size < budget_.min_rectangle_diagonal) continue;
    double k_low = -std::numeric_limits<double>::infinity();
    double k_high = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (i == j) continue;
      const Candidate& o = candidates[i];
      const double slope = (c.f - o.f) / (c.size - o.size);
      if (o.size < c.size) k_low = std::max(k_low, slope);
      else k_high = std::min(k_high, slope);
    }
    if (!(k_high > 0.0)) continue;
    if (k_low > k_high * (1.0 + 1e-12) + 1e-300) continue;
    if (std::isfinite(k_high) &&
        c.f - k_high * c.size > f_min - epsilon_ * std::abs(f_min) + 1e-15 * std::abs(f_min))
      continue;
    selected.push_back(c.index);
  }
  return selected;
}

void DirectMaximizer::divide(std::size_t index) {
  const std::size_t axis = static_cast<std::size_t>(
      std::min_element(rects_[index].level.begin(), rects_[index].level.end()) -
      rects_[index].level.begin());
  const int new_level = rects_[index].level[axis] + 1;
  const double offset = std::pow(3.0, -new_level);

  rects_[index].level[axis] = new_level;
  rects_[index].level_sum += 1;
  Rect parent = rects_[index];
  for (double sign : {-1.0, 1.0}) {
    Rect child = parent;
    child.center[axis] += sign * offset;
    child.value = evaluate(child.center);
    rects_.push_back(std::move(child));
    if (rects_.back().value > rects_[best_index_].value) best_index_ = rects_.size() - 1;
  }
}

bool DirectMaximizer::step() {
  if (done_) return false;
  if (iterations_ >= budget_.max_iterations) {
    done_ = true;
    return false;
  }
  const std::vector<std::size_t> selected = potentially_optimal();
  if (selected.empty()) {
    done_ = true;
    return false;
  }
  for (std::size_t index : selected) {
    if (evaluations_ + 2 > budget_.max_evaluations) {
      done_ = true;
      break;
    }
    divide(index);
  }
  ++iterations_;
  history_.push_back(rects_[best_index_].value);
  if (evaluations_ + 2 > budget_.max_evaluations) done_ = true;
  return !done_;
}

MaximizeResult DirectMaximizer::run() {
  while (step()) {
  }
  return best();
}

MaximizeResult DirectMaximizer::best() const {
  return MaximizeResult{to_domain(rects_[best_index_].center), rects_[best_index_].value,
                        evaluations_, iterations_};
}

MaximizeResult maximize(const Objective& objective, const Bounds& bounds,
                        const MaximizerBudget& budget) {
  return DirectMaximizer(objective, bounds, budget).run();
}

MaximizeResult local_maximize(const Objective& objective, const Bounds& bounds, const Point& start,
                              std::size_t max_evaluations) {
  bounds.validate();
  if (!bounds.contains(start)) throw_invalid("start point lies outside bounds");
  const std::size_t d = bounds.dim();
  Point x = start;
  double fx = checked_call(objective, x);
  std::size_t evaluations = 1;
  std::vector<double> step(d);
  for (std::size_t i = 0; i < d; ++i) step[i] = 0.25 * (bounds.upper[i] - bounds.lower[i]);

  while (evaluations < max_evaluations) {
    bool improved = false;
    for (std::size_t i = 0; i < d && evaluations < max_evaluations; ++i) {
      for (double sign : {1.0, -1.0}) {
        if (evaluations >= max_evaluations) break;
        Point y = x;
        y[i] = std::clamp(x[i] + sign * step[i], bounds.lower[i], bounds.upper[i]);
        if (y[i] == x[i]) continue;
        const double fy = checked_call(objective, y);
        ++evaluations;
        if (fy > fx) {
          x = std::move(y);
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      double largest = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        step[i] *= 0.5;
        largest = std::max(largest, step[i] / (bounds.upper[i] - bounds.lower[i]));
      }
      if (largest < 1e-9) break;
    }
  }
  return MaximizeResult{x, fx, evaluations, 0};
}

MaximizeResult multistart_maximize(const Objective& objective, const Bounds& bounds,
                                   std::size_t starts, std::uint64_t rng_seed,
                                   const MaximizerBudget& budget) {
  bounds.validate();
  budget.validate();
  std::vector<Point> points{bounds.center()};
  std::mt19937_64 rng(rng_seed);
  for (std::size_t s = 0; s < starts; ++s) {
    Point p(bounds.dim());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = std::uniform_real_distribution<double>(bounds.lower[i], bounds.upper[i])(rng);
    points.push_back(std::move(p));
  }
  const std::size_t share = std::max<std::size_t>(1, budget.max_evaluations / points.size());
  MaximizeResult best;
  bool have = false;
  std::size_t evaluations = 0;
  for (const Point& p : points) {
    MaximizeResult r = local_maximize(objective, bounds, p, share);
    evaluations += r.evaluations;
    if (!have || r.value > best.value) {
      best = std::move(r);
      have = true;
    }
  }
  best.evaluations = evaluations;
  best.iterations = points.size();
  return best;
}

}  // namespace bopt
