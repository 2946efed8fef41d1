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

#include "bopt/bopt.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "bopt/direct.hpp"
#include "bopt/error.hpp"
#include "bopt/gp.hpp"
#include "bopt/harness.hpp"
#include "bopt/service.hpp"
#include "bopt/session.hpp"
#include "json_util.hpp"

struct bopt_session {
  bopt::Session session;
};

struct bopt_service {
  explicit bopt_service(const char* data_dir) : service(data_dir) {}
  bopt::SessionService service;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;
thread_local std::string g_last_field;

// Carries a nonzero callback return code out through the core.
struct CallbackAbort {
  int code;
};

bopt_status to_status(bopt::ErrorCode code) {
  switch (code) {
    case bopt::ErrorCode::InvalidArgument: return BOPT_INVALID_ARGUMENT;
    case bopt::ErrorCode::Conditioning: return BOPT_CONDITIONING;
    case bopt::ErrorCode::InvalidObjective: return BOPT_INVALID_OBJECTIVE;
    case bopt::ErrorCode::NotFound: return BOPT_NOT_FOUND;
    case bopt::ErrorCode::WrongMode: return BOPT_WRONG_MODE;
    case bopt::ErrorCode::Conflict: return BOPT_CONFLICT;
    case bopt::ErrorCode::Io: return BOPT_IO;
    case bopt::ErrorCode::Parse: return BOPT_PARSE;
  }
  return BOPT_INTERNAL;
}

template <class F>
bopt_status guarded(F&& body) {
  g_last_error.clear();
  g_last_field.clear();
  try {
    body();
    return BOPT_OK;
  } catch (const bopt::Error& e) {
    g_last_error = e.what();
    g_last_field = e.field();
    return to_status(e.code());
  } catch (const CallbackAbort& a) {
    g_last_error = "objective callback returned " + std::to_string(a.code);
    return BOPT_INVALID_OBJECTIVE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BOPT_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BOPT_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return BOPT_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) bopt::throw_invalid(std::string(name) + " must not be null", name);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bopt::Point to_point(const double* x, std::size_t dim) { return bopt::Point(x, x + dim); }

void copy_point(const bopt::Point& p, double* out) { std::copy(p.begin(), p.end(), out); }

bopt::Objective wrap(bopt_objective_fn fn, void* user) {
  return [fn, user](std::span<const double> x) {
    double value = 0.0;
    const int rc = fn(x.data(), x.size(), &value, user);
    if (rc != 0) throw CallbackAbort{rc};
    return value;
  };
}

json trace_json(const bopt::TraceRecord& r) {
  return json{{"repetition", r.repetition}, {"iteration", r.iteration}, {"x", r.x},
              {"y", r.y},                   {"best", r.best},           {"regret", r.regret},
              {"gap", r.gap}};
}

bopt::Bounds bounds_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bopt::throw_invalid("bounds must be a non-empty array", path);
  bopt::Bounds b;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string field = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2 || !j[i][0].is_number() || !j[i][1].is_number())
      bopt::throw_invalid("each bound must be a pair [lo, hi]", field);
    b.lower.push_back(j[i][0].get<double>());
    b.upper.push_back(j[i][1].get<double>());
  }
  b.validate();
  return b;
}

}  // namespace

extern "C" {

const char* bopt_version(void) { return "0.1.0"; }

const char* bopt_status_name(bopt_status status) {
  switch (status) {
    case BOPT_OK: return "ok";
    case BOPT_INVALID_ARGUMENT: return "invalid_argument";
    case BOPT_CONDITIONING: return "conditioning";
    case BOPT_INVALID_OBJECTIVE: return "invalid_objective";
    case BOPT_NOT_FOUND: return "not_found";
    case BOPT_WRONG_MODE: return "wrong_mode";
    case BOPT_CONFLICT: return "conflict";
    case BOPT_IO: return "io";
    case BOPT_PARSE: return "parse";
    case BOPT_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* bopt_last_error(void) { return g_last_error.c_str(); }
const char* bopt_last_error_field(void) { return g_last_field.c_str(); }
void bopt_string_free(char* s) { std::free(s); }

// ---- sessions --------------------------------------------------------------

bopt_status bopt_session_create(const char* config_json, bopt_session** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    bopt::SessionConfig config = bopt::SessionConfig::from_json(config_json);
    config.validate();
    *out = new bopt_session{bopt::Session(std::move(config), bopt::generate_session_id())};
  });
}

bopt_status bopt_session_from_json(const char* document, bopt_session** out) {
  return guarded([&] {
    require(document, "document");
    require(out, "out");
    *out = new bopt_session{bopt::Session::deserialize(document)};
  });
}

bopt_status bopt_session_to_json(const bopt_session* s, char** out) {
  return guarded([&] {
    require(s, "session");
    require(out, "out");
    *out = dup_string(s->session.serialize());
  });
}

bopt_status bopt_session_load(const char* path, bopt_session** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new bopt_session{bopt::Session::load(path)};
  });
}

bopt_status bopt_session_save(const bopt_session* s, const char* path) {
  return guarded([&] {
    require(s, "session");
    require(path, "path");
    s->session.save(path);
  });
}

void bopt_session_free(bopt_session* s) { delete s; }

size_t bopt_session_dim(const bopt_session* s) { return s ? s->session.dim() : 0; }
size_t bopt_session_iteration(const bopt_session* s) { return s ? s->session.iteration() : 0; }

bopt_status bopt_session_propose(const bopt_session* s, double* x) {
  return guarded([&] {
    require(s, "session");
    require(x, "x");
    copy_point(s->session.propose(), x);
  });
}

bopt_status bopt_session_observe(bopt_session* s, const double* x, double y) {
  return guarded([&] {
    require(s, "session");
    require(x, "x");
    s->session.observe(to_point(x, s->session.dim()), y);
  });
}

bopt_status bopt_session_best(const bopt_session* s, double* x, double* value) {
  return guarded([&] {
    require(s, "session");
    const bopt::Incumbent inc = s->session.best();
    if (x) copy_point(inc.location, x);
    if (value) *value = inc.value;
  });
}

bopt_status bopt_session_predict(const bopt_session* s, const double* x, double* mean, double* stddev) {
  return guarded([&] {
    require(s, "session");
    require(x, "x");
    const bopt::PosteriorSummary p = s->session.predict(to_point(x, s->session.dim()));
    if (mean) *mean = p.mean;
    if (stddev) *stddev = p.stddev();
  });
}

bopt_status bopt_session_select_pair(const bopt_session* s, double* first, double* second) {
  return guarded([&] {
    require(s, "session");
    require(first, "first");
    require(second, "second");
    const auto pair = s->session.select_pair();
    copy_point(pair.first, first);
    copy_point(pair.second, second);
  });
}

bopt_status bopt_session_record_preference(bopt_session* s, const double* winner, const double* loser,
                                           const char* token) {
  return guarded([&] {
    require(s, "session");
    require(winner, "winner");
    require(loser, "loser");
    const std::string tok = token ? token : "";
    if (s->session.has_token(tok)) return;
    const std::size_t d = s->session.dim();
    s->session.record_preference(to_point(winner, d), to_point(loser, d), tok);
  });
}

// ---- one-shot --------------------------------------------------------------

bopt_status bopt_maximize(bopt_objective_fn objective, void* user, size_t dim, const double* lower,
                          const double* upper, size_t max_evaluations, double* argmax,
                          double* value) {
  return guarded([&] {
    require(reinterpret_cast<const void*>(objective), "objective");
    require(lower, "lower");
    require(upper, "upper");
    require(argmax, "argmax");
    bopt::Bounds bounds{to_point(lower, dim), to_point(upper, dim)};
    bopt::MaximizerBudget budget;
    if (max_evaluations > 0) budget.max_evaluations = max_evaluations;
    budget.max_iterations = std::max<std::size_t>(budget.max_iterations, max_evaluations);
    const bopt::MaximizeResult r = bopt::maximize(wrap(objective, user), bounds, budget);
    copy_point(r.argmax, argmax);
    if (value) *value = r.value;
  });
}

bopt_status bopt_optimize(const char* config_json, size_t iterations, bopt_objective_fn objective,
                          void* objective_user, bopt_trace_fn trace, void* trace_user,
                          char** result_json) {
  return guarded([&] {
    require(config_json, "config_json");
    require(reinterpret_cast<const void*>(objective), "objective");
    bopt::SessionConfig config = bopt::SessionConfig::from_json(config_json);
    config.validate();
    if (config.mode != bopt::SessionMode::Scalar)
      throw bopt::Error(bopt::ErrorCode::WrongMode, "optimize needs a scalar session", "mode");
    bopt::Session session(std::move(config), bopt::generate_session_id());
    const bopt::Objective f = wrap(objective, objective_user);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= iterations; ++t) {
      const bopt::Point x = session.propose();
      const double y = f(x);
      if (std::isnan(y)) throw bopt::Error(bopt::ErrorCode::InvalidObjective, "objective returned NaN");
      session.observe(x, y);
      best = std::max(best, y);
      if (trace) {
        const std::string rec =
            json{{"iteration", t}, {"x", x}, {"y", y}, {"best", best}}.dump();
        trace(rec.c_str(), trace_user);
      }
    }
    if (result_json) {
      json out{{"evaluations", iterations}, {"best", nullptr}};
      if (iterations > 0) {
        const bopt::Incumbent inc = session.best();
        out["best"] = {{"x", inc.location}, {"value", inc.value}};
      }
      out["kernel"] = bopt::detail::kernel_to_json(session.kernel());
      *result_json = dup_string(out.dump());
    }
  });
}

bopt_status bopt_fit(const char* data_json, const char* options_json, char** report_json) {
  return guarded([&] {
    require(data_json, "data_json");
    require(report_json, "report_json");
    const json data = bopt::detail::parse(data_json);
    bopt::detail::require_object(data, "");
    const json opts = options_json ? bopt::detail::parse(options_json) : json::object();
    bopt::detail::require_object(opts, "");

    bopt::ObservationSet set;
    if (!data.contains("bounds")) bopt::throw_invalid("bounds are required", "bounds");
    set.bounds = bounds_from_json(data.at("bounds"), "bounds");
    const auto xs = bopt::detail::get<std::vector<std::vector<double>>>(data, "x", "x");
    const auto ys = bopt::detail::get<std::vector<double>>(data, "y", "y");
    if (xs.size() != ys.size()) bopt::throw_invalid("x and y differ in length", "y");
    for (std::size_t i = 0; i < xs.size(); ++i) set.add(xs[i], ys[i]);
    set.validate();

    bopt::FitOptions options;
    options.initial = bopt::detail::kernel_from_json(
        opts.contains("kernel") ? opts.at("kernel") : json::object(), set.bounds);
    options.seeds = bopt::detail::get_or<std::size_t>(opts, "seeds", "seeds", options.seeds);
    options.rng_seed = bopt::detail::get_or<std::uint64_t>(opts, "rng_seed", "rng_seed", 0);
    options.fit_noise_variance =
        bopt::detail::get_or(opts, "fit_noise_variance", "fit_noise_variance", false);
    options.fit_signal_variance =
        bopt::detail::get_or(opts, "fit_signal_variance", "fit_signal_variance", true);
    if (opts.contains("hyperprior") && !opts.at("hyperprior").is_null()) {
      const json& h = opts.at("hyperprior");
      options.hyperprior = bopt::LogNormalPrior{
          bopt::detail::get<double>(h, "median", "hyperprior.median"),
          bopt::detail::get<double>(h, "sigma", "hyperprior.sigma")};
    }
    const bopt::FitResult r = bopt::fit_hyperparameters(set, options);
    const json report{{"kernel", bopt::detail::kernel_to_json(r.spec)},
                      {"log_likelihood", r.log_likelihood},
                      {"objective", r.objective},
                      {"evaluations", r.evaluations},
                      {"fallback", r.fallback},
                      {"observations", set.size()}};
    *report_json = dup_string(report.dump(2));
  });
}

bopt_status bopt_benchmark_scalar(const char* request_json, bopt_trace_fn trace, void* trace_user,
                                  char** report_json) {
  return guarded([&] {
    require(request_json, "request_json");
    require(report_json, "report_json");
    const json req = bopt::detail::parse(request_json);
    bopt::detail::require_object(req, "");
    const bopt::TestObjective objective = bopt::builtin_objective(
        bopt::detail::get_or<std::string>(req, "objective", "objective", "multimodal1d"));
    bopt::ScalarBenchmarkConfig config;
    config.method = bopt::scalar_method_from_string(
        bopt::detail::get_or<std::string>(req, "method", "method", "ei"));
    config.iterations = bopt::detail::get_or<std::size_t>(req, "iterations", "iterations", config.iterations);
    config.repetitions =
        bopt::detail::get_or<std::size_t>(req, "repetitions", "repetitions", config.repetitions);
    config.rng_seed = bopt::detail::get_or<std::uint64_t>(req, "rng_seed", "rng_seed", 0);
    config.fit_hyperparameters =
        bopt::detail::get_or(req, "fit_hyperparameters", "fit_hyperparameters", true);
    if (req.contains("kernel")) config.kernel = bopt::detail::kernel_from_json(req.at("kernel"), objective.bounds);
    if (trace) {
      config.on_record = [&](const bopt::TraceRecord& r) {
        const std::string rec = trace_json(r).dump();
        trace(rec.c_str(), trace_user);
      };
    }
    const bopt::ScalarBenchmarkResult r = bopt::run_scalar_benchmark(objective, config);
    json runs = json::array();
    for (const auto& run : r.runs)
      runs.push_back({{"final_gap", run.final_gap},
                      {"cumulative_regret", run.cumulative_regret},
                      {"best", run.best_trace.empty() ? 0.0 : run.best_trace.back()}});
    const json report{{"objective", objective.name},
                      {"method", bopt::to_string(config.method)},
                      {"optimum", r.optimum},
                      {"mean_gap", r.mean_gap},
                      {"mean_gap_trace", r.mean_gap_trace},
                      {"runs", std::move(runs)}};
    *report_json = dup_string(report.dump(2));
  });
}

bopt_status bopt_benchmark_preference(const char* request_json, char** report_json) {
  return guarded([&] {
    require(request_json, "request_json");
    require(report_json, "report_json");
    const json req = bopt::detail::parse(request_json);
    bopt::detail::require_object(req, "");
    const std::string objective =
        bopt::detail::get_or<std::string>(req, "objective", "objective", "target");
    const double noise = bopt::detail::get_or(req, "decision_noise", "decision_noise", 0.05);
    std::function<bopt::PreferenceTrial(std::uint64_t)> make_trial;
    std::size_t dim = 0;
    const std::size_t pool_size = bopt::detail::get_or<std::size_t>(req, "pool_size", "pool_size", 0);
    if (objective == "target") {
      // A fresh random target per trial, optionally among a finite gallery.
      dim = bopt::detail::get_or<std::size_t>(req, "dim", "dim", 2);
      if (dim < 1) bopt::throw_invalid("dim must be positive", "dim");
      make_trial = [dim, noise, pool_size](std::uint64_t seed) {
        if (pool_size > 0) return bopt::sample_gallery_trial(dim, pool_size, noise, seed);
        return bopt::PreferenceTrial{bopt::sample_target_user(dim, noise, seed), {}};
      };
    } else {
      if (pool_size > 0) bopt::throw_invalid("pool_size requires the target objective", "pool_size");
      bopt::SimulatedUser user{bopt::builtin_objective(objective), noise};
      dim = user.latent.dim();
      make_trial = [user](std::uint64_t) { return bopt::PreferenceTrial{user, {}}; };
    }
    bopt::PreferenceBenchmarkConfig config;
    config.strategy = bopt::pair_strategy_from_string(
        bopt::detail::get_or<std::string>(req, "strategy", "strategy", "max_ei"));
    config.repetitions =
        bopt::detail::get_or<std::size_t>(req, "repetitions", "repetitions", config.repetitions);
    config.max_queries =
        bopt::detail::get_or<std::size_t>(req, "max_queries", "max_queries", config.max_queries);
    config.target_tolerance =
        bopt::detail::get_or(req, "target_tolerance", "target_tolerance", config.target_tolerance);
    config.rng_seed = bopt::detail::get_or<std::uint64_t>(req, "rng_seed", "rng_seed", 0);
    if (req.contains("probit_noise") && !req.at("probit_noise").is_null())
      config.probit_noise = bopt::detail::get<double>(req, "probit_noise", "probit_noise");
    if (req.contains("xi") && !req.at("xi").is_null())
      config.xi = bopt::detail::get<double>(req, "xi", "xi");
    if (req.contains("pair_ei"))
      config.pair_ei = bopt::pair_ei_from_string(bopt::detail::get<std::string>(req, "pair_ei", "pair_ei"));
    if (req.contains("kernel"))
      config.kernel = bopt::detail::kernel_from_json(req.at("kernel"), bopt::Bounds::unit(dim));
    const bopt::PreferenceBenchmarkResult r = bopt::run_preference_benchmark(make_trial, config);
    std::size_t reached = 0;
    for (bool b : r.reached) reached += b ? 1 : 0;
    const json report{{"objective", objective},
                      {"strategy", bopt::to_string(config.strategy)},
                      {"pair_ei", bopt::to_string(config.pair_ei)},
                      {"pool_size", pool_size},
                      {"mean", r.mean},
                      {"stddev", r.stddev},
                      {"queries", r.queries},
                      {"reached", reached},
                      {"trials", r.queries.size()}};
    *report_json = dup_string(report.dump(2));
  });
}

bopt_status bopt_objective_names(char** out) {
  return guarded([&] {
    require(out, "out");
    *out = dup_string(json(bopt::builtin_objective_names()).dump());
  });
}

// ---- service ---------------------------------------------------------------

bopt_status bopt_service_create(const char* data_dir, bopt_service** out) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(out, "out");
    *out = new bopt_service(data_dir);
  });
}

void bopt_service_free(bopt_service* svc) { delete svc; }

bopt_status bopt_service_handle(bopt_service* svc, const char* method, const char* target,
                                const char* body, int* http_status, char** response_body) {
  return guarded([&] {
    require(svc, "service");
    require(method, "method");
    require(target, "target");
    require(http_status, "http_status");
    require(response_body, "response_body");
    const bopt::HttpResponse r = svc->service.handle({method, target, body ? body : ""});
    *http_status = r.status;
    *response_body = dup_string(r.body);
  });
}

bopt_status bopt_service_bind(bopt_service* svc, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require(svc, "service");
    const int p = svc->service.bind(host ? host : "127.0.0.1", port);
    if (bound_port) *bound_port = p;
  });
}

bopt_status bopt_service_run(bopt_service* svc) {
  return guarded([&] {
    require(svc, "service");
    svc->service.run();
  });
}

void bopt_service_stop(bopt_service* svc) {
  if (svc) svc->service.stop();
}

}  // extern "C"
