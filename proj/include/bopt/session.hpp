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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bopt/acquisition.hpp"
#include "bopt/direct.hpp"
#include "bopt/gp.hpp"
#include "bopt/preference.hpp"

namespace bopt {

enum class SessionMode { Scalar, Preference };
enum class PairStrategy { Random, MaxVariance, MaxEI };
/// Which spread MaxEI uses for the challenger. `Marginal` plugs in σ(x);
/// `Difference` uses the sd of f(x) − f(x⁺), which stays informative when
/// comparisons only pin down differences of the latent function.
enum class PairEi { Marginal, Difference };

const char* to_string(SessionMode mode) noexcept;
const char* to_string(PairStrategy strategy) noexcept;
SessionMode session_mode_from_string(const std::string& name);
PairStrategy pair_strategy_from_string(const std::string& name);
const char* to_string(PairEi variant) noexcept;
PairEi pair_ei_from_string(const std::string& name);

struct SessionConfig {
  SessionMode mode = SessionMode::Scalar;
  Bounds bounds;
  KernelSpec kernel;
  /// `iteration` and `dim` are filled in by the session at proposal time.
  AcquisitionSpec acquisition;
  PairStrategy strategy = PairStrategy::MaxEI;
  PairEi pair_ei = PairEi::Marginal;
  /// Optional finite gallery. When set, pairs are drawn from these points
  /// only and the continuous maximizer is not used.
  std::vector<Point> candidates;
  /// Probit decision noise; unset means 0.1 * sqrt(signal variance).
  std::optional<double> probit_noise;
  /// Refit hyperparameters after every `refit_period` observations.
  std::size_t refit_period = 1;
  bool fit_hyperparameters = true;
  std::size_t fit_seeds = 3;
  std::optional<LogNormalPrior> hyperprior;
  /// Unset means max(2, d + 1).
  std::optional<std::size_t> n_seed;
  std::uint64_t rng_seed = 0;
  MaximizerBudget maximizer;

  bool noisy() const noexcept { return kernel.noise_variance > 0.0; }
  std::size_t seed_count() const noexcept;
  double sigma_noise() const noexcept;

  /// Throws InvalidArgument with a field path ("bounds[1]", "kernel.theta").
  void validate() const;

  std::string to_json() const;
  static SessionConfig from_json(std::string_view text);
};

/// Stratified space-filling design: coordinate j of point i sits at
/// (((i + j) mod n) + 1) / (n + 1) of the way across dimension j.
std::vector<Point> seed_design(const Bounds& bounds, std::size_t count);

struct HistoryEntry {
  enum class Kind { Observation, Preference };
  Kind kind = Kind::Observation;
  Point x;
  double y = 0.0;
  Point winner;
  Point loser;
  std::string token;
  std::string timestamp;
};

/// One optimization run: the propose/observe loop for scalar objectives or
/// the gallery loop for pairwise preferences.
///
/// All state is a deterministic function of (config, history): `deserialize`
/// replays the history through the same code path as the live calls, so
/// proposals after a reload are bitwise identical. Single writer; const
/// member functions do not mutate.
class Session {
 public:
  explicit Session(SessionConfig config, std::string id = {});

  const std::string& id() const noexcept { return id_; }
  SessionMode mode() const noexcept { return config_.mode; }
  const SessionConfig& config() const noexcept { return config_; }
  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t dim() const noexcept { return config_.bounds.dim(); }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const ObservationSet& data() const noexcept { return data_; }
  const PreferenceDataset& preferences() const noexcept { return preferences_; }
  const std::optional<LaplaceResult>& laplace() const noexcept { return laplace_; }
  const std::vector<HistoryEntry>& history() const noexcept { return history_; }
  /// Client token the session was created under, if any.
  const std::string& creation_token() const noexcept { return creation_token_; }
  void set_creation_token(std::string token) { creation_token_ = std::move(token); }

  // Scalar mode.
  Point propose() const;
  void observe(const Point& x, double y, std::string token = {});

  /// Both modes: noise-free best observation, best posterior mean at the
  /// sampled points (noisy), or the item with the largest latent mean.
  Incumbent best() const;

  // Preference mode.
  std::pair<Point, Point> select_pair() const;
  std::pair<Point, Point> select_pair(PairStrategy strategy, std::uint64_t rng_seed) const;
  void record_preference(const Point& winner, const Point& loser, std::string token = {});
  bool has_token(const std::string& token) const;
  std::optional<PreferenceModel> preference_model() const;

  /// Posterior of the surrogate (scalar) or the latent valuation
  /// (preference) at `query`.
  PosteriorSummary predict(std::span<const double> query) const;

  std::string serialize() const;
  static Session deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Session load(const std::filesystem::path& path);

 private:
  void apply(HistoryEntry entry);
  void refit();
  void require_mode(SessionMode mode, const char* what) const;

  SessionConfig config_;
  std::string id_;
  KernelSpec kernel_;
  ObservationSet data_;
  PreferenceDataset preferences_;
  std::optional<LaplaceResult> laplace_;
  std::vector<HistoryEntry> history_;
  std::size_t iteration_ = 0;
  std::string creation_token_;
};

std::string generate_session_id();
std::string utc_timestamp();

}  // namespace bopt
