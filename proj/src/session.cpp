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

#include "bopt/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bopt/error.hpp"
#include "json_util.hpp"

namespace bopt {

using nlohmann::json;

const char* to_string(SessionMode mode) noexcept {
  return mode == SessionMode::Scalar ? "scalar" : "preference";
}

const char* to_string(PairStrategy strategy) noexcept {
  switch (strategy) {
    case PairStrategy::Random: return "random";
    case PairStrategy::MaxVariance: return "max_variance";
    case PairStrategy::MaxEI: return "max_ei";
  }
  return "unknown";
}

SessionMode session_mode_from_string(const std::string& name) {
  if (name == "scalar") return SessionMode::Scalar;
  if (name == "preference") return SessionMode::Preference;
  throw_invalid("unknown session mode '" + name + "'", "mode");
}

PairStrategy pair_strategy_from_string(const std::string& name) {
  if (name == "random") return PairStrategy::Random;
  if (name == "max_variance" || name == "maxvar" || name == "variance") return PairStrategy::MaxVariance;
  if (name == "max_ei" || name == "maxei" || name == "ei") return PairStrategy::MaxEI;
  throw_invalid("unknown pair strategy '" + name + "'", "strategy");
}

const char* to_string(PairEi variant) noexcept {
  return variant == PairEi::Marginal ? "marginal" : "difference";
}

PairEi pair_ei_from_string(const std::string& name) {
  if (name == "marginal") return PairEi::Marginal;
  if (name == "difference") return PairEi::Difference;
  throw_invalid("unknown pair_ei variant '" + name + "'", "pair_ei");
}

// ---------------------------------------------------------------------------
// Config

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void check_point(const Bounds& bounds, const Point& x, const char* field) {
  if (x.size() != bounds.dim())
    throw_invalid(std::string(field) + " has dimension " + std::to_string(x.size()) +
                      ", expected " + std::to_string(bounds.dim()),
                  field);
  for (double v : x)
    if (!std::isfinite(v)) throw_invalid(std::string(field) + " must be finite", field);
  if (!bounds.contains(x)) throw_invalid(std::string(field) + " lies outside bounds", field);
}

}  // namespace

std::size_t SessionConfig::seed_count() const noexcept {
  return n_seed.value_or(std::max<std::size_t>(2, bounds.dim() + 1));
}

double SessionConfig::sigma_noise() const noexcept {
  return probit_noise.value_or(0.1 * std::sqrt(kernel.signal_variance));
}

void SessionConfig::validate() const {
  bounds.validate();
  kernel.validate();
  if (kernel.family == KernelFamily::SquaredExpARD && kernel.theta.size() != bounds.dim())
    throw_invalid("ARD kernel needs one length scale per dimension", "kernel.theta");
  if (kernel.theta.size() != 1 && kernel.theta.size() != bounds.dim())
    throw_invalid("length-scale vector does not match the bounds", "kernel.theta");
  acquisition.validate();
  maximizer.validate();
  if (refit_period < 1) throw_invalid("refit_period must be positive", "refit_period");
  if (fit_seeds < 1) throw_invalid("fit_seeds must be positive", "fit_seeds");
  if (probit_noise && !(*probit_noise > 0.0))
    throw_invalid("probit_noise must be positive", "probit_noise");
  for (std::size_t i = 0; i < candidates.size(); ++i)
    check_point(bounds, candidates[i], ("candidates[" + std::to_string(i) + "]").c_str());
  if (!candidates.empty()) {
    const bool distinct = std::any_of(candidates.begin(), candidates.end(), [&](const Point& c) {
      return max_abs_diff(c, candidates.front()) > 1e-9;
    });
    if (!distinct) throw_invalid("candidates need at least two distinct points", "candidates");
  }
  if (n_seed && *n_seed < 2) throw_invalid("n_seed must be at least 2", "n_seed");
  if (hyperprior && (!(hyperprior->median > 0.0) || !(hyperprior->sigma > 0.0)))
    throw_invalid("hyperprior median and sigma must be positive", "hyperprior");
}

namespace detail {

json kernel_to_json(const KernelSpec& k) {
  return json{{"family", to_string(k.family)},
              {"theta", k.theta},
              {"smoothness", k.smoothness},
              {"signal_variance", k.signal_variance},
              {"noise_variance", k.noise_variance}};
}

KernelSpec kernel_from_json(const json& j, const Bounds& bounds) {
  detail::require_object(j, "kernel");
  KernelSpec k;
  if (j.contains("family"))
    k.family = kernel_family_from_string(detail::get<std::string>(j, "family", "kernel.family"));
  if (j.contains("theta")) {
    k.theta = detail::get<std::vector<double>>(j, "theta", "kernel.theta");
  } else {
    double width = 0.0;
    for (std::size_t i = 0; i < bounds.dim(); ++i) width += bounds.upper[i] - bounds.lower[i];
    width = bounds.dim() > 0 ? width / static_cast<double>(bounds.dim()) : 1.0;
    const std::size_t n = k.family == KernelFamily::SquaredExpARD ? bounds.dim() : 1;
    k.theta.assign(std::max<std::size_t>(n, 1), 0.25 * width);
  }
  k.smoothness = detail::get_or(j, "smoothness", "kernel.smoothness", k.smoothness);
  k.signal_variance = detail::get_or(j, "signal_variance", "kernel.signal_variance", k.signal_variance);
  k.noise_variance = detail::get_or(j, "noise_variance", "kernel.noise_variance", k.noise_variance);
  return k;
}

}  // namespace detail

using detail::kernel_from_json;
using detail::kernel_to_json;

std::string SessionConfig::to_json() const {
  json bounds_json = json::array();
  for (std::size_t i = 0; i < bounds.dim(); ++i)
    bounds_json.push_back({bounds.lower[i], bounds.upper[i]});
  json j{{"mode", to_string(mode)},
         {"bounds", bounds_json},
         {"kernel", kernel_to_json(kernel)},
         {"acquisition",
          {{"kind", to_string(acquisition.kind)},
           {"xi", acquisition.xi ? json(*acquisition.xi) : json(nullptr)},
           {"nu", acquisition.nu},
           {"delta", acquisition.delta}}},
         {"strategy", to_string(strategy)},
         {"pair_ei", to_string(pair_ei)},
         {"probit_noise", probit_noise ? json(*probit_noise) : json(nullptr)},
         {"refit_period", refit_period},
         {"fit_hyperparameters", fit_hyperparameters},
         {"fit_seeds", fit_seeds},
         {"hyperprior", hyperprior ? json{{"median", hyperprior->median}, {"sigma", hyperprior->sigma}}
                                   : json(nullptr)},
         {"n_seed", n_seed ? json(*n_seed) : json(nullptr)},
         {"rng_seed", rng_seed},
         {"candidates", candidates},
         {"maximizer",
          {{"max_evaluations", maximizer.max_evaluations},
           {"max_iterations", maximizer.max_iterations},
           {"min_rectangle_diagonal", maximizer.min_rectangle_diagonal}}}};
  return j.dump();
}

SessionConfig SessionConfig::from_json(std::string_view text) {
  const json j = detail::parse(text);
  detail::require_object(j, "");
  SessionConfig c;
  if (j.contains("mode")) c.mode = session_mode_from_string(detail::get<std::string>(j, "mode", "mode"));
  if (!j.contains("bounds")) throw_invalid("bounds are required", "bounds");
  const json& b = j.at("bounds");
  if (!b.is_array() || b.empty()) throw_invalid("bounds must be a non-empty array of [lo, hi]", "bounds");
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::string field = "bounds[" + std::to_string(i) + "]";
    if (!b[i].is_array() || b[i].size() != 2 || !b[i][0].is_number() || !b[i][1].is_number())
      throw_invalid("each bound must be a pair [lo, hi]", field);
    c.bounds.lower.push_back(b[i][0].get<double>());
    c.bounds.upper.push_back(b[i][1].get<double>());
  }
  c.bounds.validate();
  c.kernel = j.contains("kernel") ? kernel_from_json(j.at("kernel"), c.bounds)
                                  : kernel_from_json(json::object(), c.bounds);
  if (j.contains("acquisition")) {
    const json& a = j.at("acquisition");
    detail::require_object(a, "acquisition");
    if (a.contains("kind"))
      c.acquisition.kind =
          acquisition_kind_from_string(detail::get<std::string>(a, "kind", "acquisition.kind"));
    if (a.contains("xi") && !a.at("xi").is_null())
      c.acquisition.xi = detail::get<double>(a, "xi", "acquisition.xi");
    c.acquisition.nu = detail::get_or(a, "nu", "acquisition.nu", c.acquisition.nu);
    c.acquisition.delta = detail::get_or(a, "delta", "acquisition.delta", c.acquisition.delta);
  }
  if (j.contains("strategy"))
    c.strategy = pair_strategy_from_string(detail::get<std::string>(j, "strategy", "strategy"));
  if (j.contains("pair_ei"))
    c.pair_ei = pair_ei_from_string(detail::get<std::string>(j, "pair_ei", "pair_ei"));
  if (j.contains("candidates") && !j.at("candidates").is_null())
    c.candidates = detail::get<std::vector<Point>>(j, "candidates", "candidates");
  if (j.contains("probit_noise") && !j.at("probit_noise").is_null())
    c.probit_noise = detail::get<double>(j, "probit_noise", "probit_noise");
  c.refit_period = detail::get_or<std::size_t>(j, "refit_period", "refit_period", c.refit_period);
  c.fit_hyperparameters =
      detail::get_or(j, "fit_hyperparameters", "fit_hyperparameters", c.fit_hyperparameters);
  c.fit_seeds = detail::get_or<std::size_t>(j, "fit_seeds", "fit_seeds", c.fit_seeds);
  if (j.contains("hyperprior") && !j.at("hyperprior").is_null()) {
    const json& h = j.at("hyperprior");
    detail::require_object(h, "hyperprior");
    c.hyperprior = LogNormalPrior{detail::get_or(h, "median", "hyperprior.median", 1.0),
                                  detail::get_or(h, "sigma", "hyperprior.sigma", 1.0)};
  }
  if (j.contains("n_seed") && !j.at("n_seed").is_null())
    c.n_seed = detail::get<std::size_t>(j, "n_seed", "n_seed");
  c.rng_seed = detail::get_or<std::uint64_t>(j, "rng_seed", "rng_seed", c.rng_seed);
  if (j.contains("maximizer")) {
    const json& m = j.at("maximizer");
    detail::require_object(m, "maximizer");
    c.maximizer.max_evaluations = detail::get_or<std::size_t>(
        m, "max_evaluations", "maximizer.max_evaluations", c.maximizer.max_evaluations);
    c.maximizer.max_iterations = detail::get_or<std::size_t>(
        m, "max_iterations", "maximizer.max_iterations", c.maximizer.max_iterations);
    c.maximizer.min_rectangle_diagonal = detail::get_or(
        m, "min_rectangle_diagonal", "maximizer.min_rectangle_diagonal",
        c.maximizer.min_rectangle_diagonal);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

std::vector<Point> seed_design(const Bounds& bounds, std::size_t count) {
  std::vector<Point> points(count, Point(bounds.dim()));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < bounds.dim(); ++j) {
      const double slot = static_cast<double>((i + j) % count + 1) / static_cast<double>(count + 1);
      points[i][j] = bounds.lower[j] + slot * (bounds.upper[j] - bounds.lower[j]);
    }
  }
  return points;
}

std::string generate_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Small move away from `from`, staying in bounds; used when two proposals collide.
Point nudge(const Point& x, const Bounds& bounds, double fraction) {
  Point y = x;
  const Point c = bounds.center();
  const double width = bounds.upper[0] - bounds.lower[0];
  const double dir = (y[0] <= c[0]) ? 1.0 : -1.0;
  y[0] = std::clamp(y[0] + dir * fraction * width, bounds.lower[0], bounds.upper[0]);
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// Session

Session::Session(SessionConfig config, std::string id)
    : config_(std::move(config)), id_(id.empty() ? generate_session_id() : std::move(id)) {
  config_.validate();
  kernel_ = config_.kernel;
  data_.bounds = config_.bounds;
  preferences_.bounds = config_.bounds;
}

void Session::require_mode(SessionMode mode, const char* what) const {
  if (config_.mode != mode)
    throw Error(ErrorCode::WrongMode, std::string(what) + " is not available on a " +
                                          to_string(config_.mode) + " session");
}

Point Session::propose() const {
  require_mode(SessionMode::Scalar, "propose");
  const std::size_t n_seed = config_.seed_count();
  if (iteration_ < n_seed) return seed_design(config_.bounds, n_seed)[iteration_];

  const GaussianProcess gp(kernel_, data_);
  const Incumbent incumbent = select_incumbent(data_, kernel_, config_.noisy());
  AcquisitionSpec acquisition = config_.acquisition;
  acquisition.iteration = iteration_ + 1;
  acquisition.dim = dim();
  const KernelSpec& kernel = kernel_;
  Objective utility = [&](std::span<const double> x) {
    return acquisition_value(acquisition, kernel, gp.predict(x), incumbent);
  };
  Point x = maximize(utility, config_.bounds, config_.maximizer).argmax;

  if (!config_.noisy()) {
    const Point c = config_.bounds.center();
    for (int attempt = 0; attempt < 16; ++attempt) {
      const bool duplicate = std::any_of(data_.points.begin(), data_.points.end(),
                                         [&](const Point& p) { return max_abs_diff(p, x) <= 1e-9; });
      if (!duplicate) break;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double width = config_.bounds.upper[i] - config_.bounds.lower[i];
        const double dir = x[i] <= c[i] ? 1.0 : -1.0;
        x[i] = std::clamp(x[i] + dir * 1e-6 * width, config_.bounds.lower[i], config_.bounds.upper[i]);
      }
    }
  }
  return x;
}

void Session::observe(const Point& x, double y, std::string token) {
  require_mode(SessionMode::Scalar, "observe");
  check_point(config_.bounds, x, "x");
  if (!std::isfinite(y)) throw_invalid("observation must be finite", "y");
  HistoryEntry e;
  e.kind = HistoryEntry::Kind::Observation;
  e.x = x;
  e.y = y;
  e.token = std::move(token);
  e.timestamp = utc_timestamp();
  apply(std::move(e));
}

void Session::refit() {
  FitOptions options;
  options.initial = kernel_;
  options.seeds = config_.fit_seeds;
  options.rng_seed = mix_seed(config_.rng_seed, iteration_);
  options.hyperprior = config_.hyperprior;
  FitResult fitted = fit_hyperparameters(data_, options);

  // Also continue from the current hyperparameters.
  std::vector<double> current;
  const std::size_t theta_count =
      kernel_.family == KernelFamily::SquaredExpARD ? dim()
      : kernel_.family == KernelFamily::SquaredExpIso ? 1 : kernel_.theta.size();
  for (std::size_t i = 0; i < theta_count; ++i)
    current.push_back(std::log(std::clamp(kernel_.theta[std::min(i, kernel_.theta.size() - 1)],
                                          options.lower, options.upper)));
  current.push_back(std::log(std::clamp(kernel_.signal_variance, options.lower, options.upper)));
  const FitResult local = fit_from_start(data_, options, current);
  if (!local.fallback && (fitted.fallback || local.objective > fitted.objective)) fitted = local;
  if (!fitted.fallback) kernel_ = fitted.spec;
}

void Session::apply(HistoryEntry entry) {
  if (entry.kind == HistoryEntry::Kind::Observation) {
    require_mode(SessionMode::Scalar, "observe");
    data_.add(entry.x, entry.y);
    ++iteration_;
    history_.push_back(std::move(entry));
    if (config_.fit_hyperparameters && data_.size() >= 2 && iteration_ % config_.refit_period == 0)
      refit();
    return;
  }
  require_mode(SessionMode::Preference, "record_preference");
  preferences_.add_preference(entry.winner, entry.loser);
  laplace_ = laplace_map(kernel_, preferences_, config_.sigma_noise());
  ++iteration_;
  history_.push_back(std::move(entry));
}

Incumbent Session::best() const {
  if (config_.mode == SessionMode::Scalar) {
    if (data_.empty()) throw_invalid("session has no observations yet");
    return select_incumbent(data_, kernel_, config_.noisy());
  }
  if (!laplace_) throw_invalid("session has no preferences yet");
  const PreferenceModel model(kernel_, preferences_, *laplace_);
  const std::size_t index = model.incumbent_index();
  return Incumbent{preferences_.items[index], model.predict(preferences_.items[index]).mean, index};
}

std::optional<PreferenceModel> Session::preference_model() const {
  if (!laplace_) return std::nullopt;
  return PreferenceModel(kernel_, preferences_, *laplace_);
}

PosteriorSummary Session::predict(std::span<const double> query) const {
  if (query.size() != dim()) throw_invalid("query has the wrong dimension");
  if (config_.mode == SessionMode::Scalar) return GaussianProcess(kernel_, data_).predict(query);
  if (!laplace_) return PosteriorSummary{0.0, kernel_eval(kernel_, query, query), false};
  return PreferenceModel(kernel_, preferences_, *laplace_).predict(query);
}

std::pair<Point, Point> Session::select_pair() const {
  return select_pair(config_.strategy, mix_seed(config_.rng_seed, 1000003 + iteration_));
}

namespace {

// Index of the candidate closest to `x`, skipping `excluded` (may be npos).
std::size_t nearest_candidate(const std::vector<Point>& candidates, const Point& x,
                              std::size_t excluded) {
  std::size_t best = std::string::npos;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == excluded || (excluded != std::string::npos &&
                          max_abs_diff(candidates[i], candidates[excluded]) <= 1e-9))
      continue;
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d += (candidates[i][k] - x[k]) * (candidates[i][k] - x[k]);
    if (d < best_d) best_d = d, best = i;
  }
  return best;
}

}  // namespace

std::pair<Point, Point> Session::select_pair(PairStrategy strategy, std::uint64_t rng_seed) const {
  require_mode(SessionMode::Preference, "select_pair");
  const std::vector<Point>& pool = config_.candidates;
  if (!laplace_) {
    const auto seeds = seed_design(config_.bounds, config_.seed_count());
    if (pool.empty()) return {seeds[0], seeds[1]};
    const std::size_t a = nearest_candidate(pool, seeds[0], std::string::npos);
    return {pool[a], pool[nearest_candidate(pool, seeds[1], a)]};
  }
  const PreferenceModel model(kernel_, preferences_, *laplace_);
  const std::size_t inc_index = model.incumbent_index();
  const Point first = preferences_.items[inc_index];
  const Bounds& bounds = config_.bounds;

  Objective utility;
  if (strategy == PairStrategy::MaxVariance) {
    utility = [&](std::span<const double> x) { return model.predict(x).variance; };
  } else if (strategy == PairStrategy::MaxEI) {
    const Incumbent inc{first, model.predict(first).mean, inc_index};
    const double xi = config_.acquisition.xi_for(kernel_);
    const double inc_var = model.predict(first).variance;
    const bool difference = config_.pair_ei == PairEi::Difference;
    utility = [&, inc, xi, inc_var, difference](std::span<const double> x) {
      PosteriorSummary p = model.predict(x);
      if (difference)
        p.variance = std::max(0.0, p.variance + inc_var - 2.0 * model.covariance(x, inc.location));
      return expected_improvement(p, inc, xi);
    };
  }

  Point second;
  if (!pool.empty()) {
    // Items already compared with the incumbent are skipped: repeating an
    // answered comparison costs the user a click, and a near tie would
    // otherwise be re-served indefinitely.
    std::vector<bool> compared(preferences_.items.size(), false);
    for (const PreferencePair& p : preferences_.pairs) {
      if (p.winner == inc_index) compared[p.loser] = true;
      if (p.loser == inc_index) compared[p.winner] = true;
    }
    auto is_compared = [&](const Point& c) {
      for (std::size_t j = 0; j < compared.size(); ++j)
        if (compared[j] && max_abs_diff(preferences_.items[j], c) <= 1e-9) return true;
      return false;
    };
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (max_abs_diff(pool[i], first) > 1e-9 && !is_compared(pool[i])) open.push_back(i);
    if (open.empty())
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (max_abs_diff(pool[i], first) > 1e-9) open.push_back(i);
    if (strategy == PairStrategy::Random) {
      std::mt19937_64 rng(rng_seed);
      second = pool[open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)]];
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i : open) {
        const double u = utility(pool[i]);
        if (u > best) best = u, second = pool[i];
      }
    }
    return {first, second};
  }

  if (strategy == PairStrategy::Random) {
    std::mt19937_64 rng(rng_seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
      second.assign(dim(), 0.0);
      for (std::size_t i = 0; i < dim(); ++i)
        second[i] = std::uniform_real_distribution<double>(bounds.lower[i], bounds.upper[i])(rng);
      if (max_abs_diff(first, second) > 1e-6) break;
    }
  } else {
    second = maximize(utility, bounds, config_.maximizer).argmax;
  }
  for (int attempt = 0; attempt < 8 && max_abs_diff(first, second) <= 1e-6; ++attempt)
    second = nudge(second, bounds, 1e-3 * (attempt + 1));
  return {first, second};
}

void Session::record_preference(const Point& winner, const Point& loser, std::string token) {
  require_mode(SessionMode::Preference, "record_preference");
  check_point(config_.bounds, winner, "winner");
  check_point(config_.bounds, loser, "loser");
  if (max_abs_diff(winner, loser) <= 1e-9) throw_invalid("winner and loser are the same point", "loser");
  HistoryEntry e;
  e.kind = HistoryEntry::Kind::Preference;
  e.winner = winner;
  e.loser = loser;
  e.token = std::move(token);
  e.timestamp = utc_timestamp();
  apply(std::move(e));
}

bool Session::has_token(const std::string& token) const {
  if (token.empty()) return false;
  return std::any_of(history_.begin(), history_.end(),
                     [&](const HistoryEntry& e) { return e.token == token; });
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kSchema = "bopt.session";
constexpr int kSchemaVersion = 1;

}  // namespace

std::string Session::serialize() const {
  json history = json::array();
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const HistoryEntry& e = history_[i];
    json entry{{"seq", i}, {"timestamp", e.timestamp}};
    if (e.kind == HistoryEntry::Kind::Observation) {
      entry["type"] = "observation";
      entry["x"] = e.x;
      entry["y"] = e.y;
    } else {
      entry["type"] = "preference";
      entry["winner"] = e.winner;
      entry["loser"] = e.loser;
    }
    if (!e.token.empty()) entry["token"] = e.token;
    history.push_back(std::move(entry));
  }
  json doc{{"schema", kSchema},
           {"version", kSchemaVersion},
           {"id", id_},
           {"mode", to_string(config_.mode)},
           {"creation_token", creation_token_},
           {"config", json::parse(config_.to_json())},
           {"history", std::move(history)},
           {"snapshot", {{"iteration", iteration_}, {"kernel", kernel_to_json(kernel_)}}}};
  return doc.dump(2);
}

Session Session::deserialize(std::string_view text) {
  const json doc = detail::parse(text);
  detail::require_object(doc, "");
  if (doc.value("schema", std::string()) != kSchema)
    throw Error(ErrorCode::Parse, "not a session document", "schema");
  if (doc.value("version", 0) != kSchemaVersion)
    throw Error(ErrorCode::Parse, "unsupported session schema version", "version");
  Session session(SessionConfig::from_json(doc.at("config").dump()),
                  detail::get<std::string>(doc, "id", "id"));
  session.creation_token_ = doc.value("creation_token", std::string());
  const json& history = doc.at("history");
  if (!history.is_array()) throw Error(ErrorCode::Parse, "history must be an array", "history");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const json& h = history[i];
    const std::string path = "history[" + std::to_string(i) + "]";
    HistoryEntry e;
    const std::string type = detail::get<std::string>(h, "type", path + ".type");
    e.timestamp = h.value("timestamp", std::string());
    e.token = h.value("token", std::string());
    if (type == "observation") {
      e.kind = HistoryEntry::Kind::Observation;
      e.x = detail::get<std::vector<double>>(h, "x", path + ".x");
      e.y = detail::get<double>(h, "y", path + ".y");
    } else if (type == "preference") {
      e.kind = HistoryEntry::Kind::Preference;
      e.winner = detail::get<std::vector<double>>(h, "winner", path + ".winner");
      e.loser = detail::get<std::vector<double>>(h, "loser", path + ".loser");
    } else {
      throw Error(ErrorCode::Parse, "unknown history entry type '" + type + "'", path + ".type");
    }
    session.apply(std::move(e));
  }
  return session;
}

void Session::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << serialize();
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move session file into place: " + ec.message());
}

Session Session::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace bopt
