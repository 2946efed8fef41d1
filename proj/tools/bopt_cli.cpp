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

// bopt command-line tool. Every flag can also be set through an environment
// variable named BOPT_<FLAG> (upper case, dashes as underscores); an explicit
// flag wins over the environment.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "bopt/bopt.h"

namespace {

using nlohmann::json;

int fail(bopt_status status) {
  std::cerr << "bopt: " << bopt_status_name(status) << ": " << bopt_last_error();
  const std::string field = bopt_last_error_field();
  if (!field.empty()) std::cerr << " (field " << field << ")";
  std::cerr << "\n";
  return 1;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  bopt_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- external objective ----------------------------------------------------

struct CommandObjective {
  std::string command;
};

// Runs "<command> x1 x2 ..." and parses the first number on stdout.
int run_command(const double* x, size_t dim, double* value, void* user) {
  const auto* obj = static_cast<const CommandObjective*>(user);
  std::ostringstream cmd;
  cmd.precision(17);
  cmd << obj->command;
  for (size_t i = 0; i < dim; ++i) cmd << ' ' << x[i];
  FILE* pipe = popen(cmd.str().c_str(), "r");
  if (!pipe) return 2;
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int rc = pclose(pipe);
  if (rc != 0) return 3;
  char* end = nullptr;
  *value = std::strtod(out.c_str(), &end);
  return end == out.c_str() ? 4 : 0;
}

void write_line(const char* record, void* user) {
  auto* out = static_cast<std::ostream*>(user);
  *out << record << '\n';
}

json parse_bounds(const std::string& text) {
  // "lo:hi,lo:hi"
  json bounds = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::runtime_error("bound '" + item + "' is not lo:hi");
    bounds.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return bounds;
}

// ---- subcommands -------------------------------------------------------------

struct OptimizeArgs {
  std::string objective = "multimodal1d";
  std::string acquisition = "ei";
  std::string bounds;
  std::size_t iterations = 30;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::string trace;
  bool no_fit = false;
};

int cmd_optimize(const OptimizeArgs& a) {
  std::ofstream trace_file;
  std::ostream* trace_out = nullptr;
  if (!a.trace.empty()) {
    if (a.trace == "-") {
      trace_out = &std::cout;
    } else {
      trace_file.open(a.trace, std::ios::trunc);
      if (!trace_file) throw std::runtime_error("cannot write " + a.trace);
      trace_out = &trace_file;
    }
  }
  const bopt_trace_fn trace_fn = trace_out ? write_line : nullptr;

  char* result = nullptr;
  bopt_status st;
  const std::string prefix = "command:";
  if (a.objective.rfind(prefix, 0) == 0) {
    if (a.bounds.empty()) throw std::runtime_error("--bounds is required for command objectives");
    CommandObjective obj{a.objective.substr(prefix.size())};
    const json config{{"mode", "scalar"},
                      {"bounds", parse_bounds(a.bounds)},
                      {"acquisition", {{"kind", a.acquisition}}},
                      {"fit_hyperparameters", !a.no_fit},
                      {"rng_seed", a.seed}};
    st = bopt_optimize(config.dump().c_str(), a.iterations, run_command, &obj, trace_fn, trace_out,
                       &result);
  } else {
    const json request{{"objective", a.objective},
                       {"method", a.acquisition},
                       {"iterations", a.iterations},
                       {"repetitions", a.repetitions},
                       {"rng_seed", a.seed},
                       {"fit_hyperparameters", !a.no_fit}};
    st = bopt_benchmark_scalar(request.dump().c_str(), trace_fn, trace_out, &result);
  }
  if (st != BOPT_OK) return fail(st);
  if (trace_out != &std::cout) std::cout << take(result) << "\n";
  else bopt_string_free(result);
  return 0;
}

struct PrefSimArgs {
  std::string objective = "target";
  std::size_t dim = 2;
  std::string strategy = "max_ei";
  std::size_t trials = 50;
  std::size_t max_queries = 100;
  double noise = 0.05;
  double tolerance = 0.0;
  double probit_noise = 0.0;
  double xi = -1.0;
  double length_scale = 0.8;
  std::size_t pool = 38;
  std::string pair_ei = "marginal";
  std::uint64_t seed = 0;
};

int cmd_pref_sim(const PrefSimArgs& a) {
  json request{{"objective", a.objective},     {"strategy", a.strategy},
               {"repetitions", a.trials},      {"max_queries", a.max_queries},
               {"decision_noise", a.noise},    {"target_tolerance", a.tolerance},
               {"rng_seed", a.seed},           {"dim", a.dim},
               {"pool_size", a.pool},          {"pair_ei", a.pair_ei}};
  if (a.probit_noise > 0.0) request["probit_noise"] = a.probit_noise;
  if (a.xi >= 0.0) request["xi"] = a.xi;
  if (a.length_scale > 0.0) request["kernel"] = {{"theta", {a.length_scale}}};
  char* report = nullptr;
  const bopt_status st = bopt_benchmark_preference(request.dump().c_str(), &report);
  if (st != BOPT_OK) return fail(st);
  std::cout << take(report) << "\n";
  return 0;
}

struct FitArgs {
  std::string data;
  std::string kernel = "sqexp_iso";
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  bool fit_noise = false;
};

int cmd_fit(const FitArgs& a) {
  const std::string data = read_file(a.data);
  const json options{{"kernel", {{"family", a.kernel}}},
                     {"seeds", a.seeds},
                     {"rng_seed", a.seed},
                     {"fit_noise_variance", a.fit_noise}};
  char* report = nullptr;
  const bopt_status st = bopt_fit(data.c_str(), options.dump().c_str(), &report);
  if (st != BOPT_OK) return fail(st);
  std::cout << take(report) << "\n";
  return 0;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "bopt-data";
};

int cmd_serve(const ServeArgs& a) {
  // Handle SIGINT/SIGTERM on a dedicated thread so stop() runs outside a
  // signal handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  bopt_service* svc = nullptr;
  bopt_status st = bopt_service_create(a.data_dir.c_str(), &svc);
  if (st != BOPT_OK) return fail(st);
  int port = 0;
  st = bopt_service_bind(svc, a.host.c_str(), a.port, &port);
  if (st != BOPT_OK) {
    bopt_service_free(svc);
    return fail(st);
  }
  std::cerr << "bopt: serving on http://" << a.host << ":" << port << " (data in " << a.data_dir
            << ")\n";
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    bopt_service_stop(svc);
  });
  st = bopt_service_run(svc);
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  bopt_service_free(svc);
  return st == BOPT_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization with Gaussian process surrogates"};
  app.set_version_flag("--version", std::string(bopt_version()));
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Run a scalar optimization loop");
  optimize->add_option("--objective", opt.objective,
                       "Built-in objective name or command:<program> (called as program x1 x2 ...)")
      ->envname("BOPT_OBJECTIVE")
      ->capture_default_str();
  optimize->add_option("--acquisition", opt.acquisition, "ei, pi, ucb or random")
      ->envname("BOPT_ACQUISITION")
      ->capture_default_str();
  optimize->add_option("--bounds", opt.bounds, "Box for command objectives, e.g. 0:1,-2:2")
      ->envname("BOPT_BOUNDS");
  optimize->add_option("--iterations", opt.iterations, "Objective evaluations")
      ->envname("BOPT_ITERATIONS")
      ->capture_default_str();
  optimize->add_option("--repetitions", opt.repetitions, "Independent runs (built-in objectives)")
      ->envname("BOPT_REPETITIONS")
      ->capture_default_str();
  optimize->add_option("--seed", opt.seed, "RNG seed")->envname("BOPT_SEED")->capture_default_str();
  optimize->add_option("--trace", opt.trace, "JSON-lines trace output ('-' for stdout)")
      ->envname("BOPT_TRACE");
  optimize->add_flag("--no-fit", opt.no_fit, "Keep the initial kernel hyperparameters")
      ->envname("BOPT_NO_FIT");

  PrefSimArgs pref;
  auto* pref_sim = app.add_subcommand("pref-sim", "Simulated preference-gallery trials");
  pref_sim->add_option("--objective", pref.objective,
                       "Latent valuation: 'target' (random target per trial) or a built-in name")
      ->envname("BOPT_OBJECTIVE")
      ->capture_default_str();
  pref_sim->add_option("--dim", pref.dim, "Dimension of the target space")
      ->envname("BOPT_DIM")
      ->capture_default_str();
  pref_sim->add_option("--strategy", pref.strategy, "random, max_variance or max_ei")
      ->envname("BOPT_STRATEGY")
      ->capture_default_str();
  pref_sim->add_option("--trials", pref.trials, "Number of trials")
      ->envname("BOPT_TRIALS")
      ->capture_default_str();
  pref_sim->add_option("--max-queries", pref.max_queries, "Query cap per trial")
      ->envname("BOPT_MAX_QUERIES")
      ->capture_default_str();
  pref_sim->add_option("--noise", pref.noise, "Simulated user's decision noise")
      ->envname("BOPT_NOISE")
      ->capture_default_str();
  pref_sim->add_option("--tolerance", pref.tolerance, "Latent-value tolerance that ends a trial")
      ->envname("BOPT_TOLERANCE")
      ->capture_default_str();
  pref_sim->add_option("--probit-noise", pref.probit_noise,
                       "Noise the model assumes (0 keeps the library default)")
      ->envname("BOPT_PROBIT_NOISE");
  pref_sim->add_option("--length-scale", pref.length_scale,
                       "Kernel length scale (0 keeps a quarter of the box width)")
      ->envname("BOPT_LENGTH_SCALE")
      ->capture_default_str();
  pref_sim->add_option("--xi", pref.xi, "EI margin for max_ei (negative keeps the default)")
      ->envname("BOPT_XI");
  pref_sim->add_option("--pool", pref.pool,
                       "Gallery size; the target is one of its items (0 means a continuous space)")
      ->envname("BOPT_POOL")
      ->capture_default_str();
  pref_sim->add_option("--pair-ei", pref.pair_ei, "Spread used by max_ei: difference or marginal")
      ->envname("BOPT_PAIR_EI")
      ->capture_default_str();
  pref_sim->add_option("--seed", pref.seed, "RNG seed")->envname("BOPT_SEED")->capture_default_str();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit kernel hyperparameters to a data file");
  fit_cmd->add_option("--data", fit.data, "JSON file with bounds, x and y")
      ->envname("BOPT_DATA")
      ->required();
  fit_cmd->add_option("--kernel", fit.kernel, "sqexp_iso, sqexp_ard or matern")
      ->envname("BOPT_KERNEL")
      ->capture_default_str();
  fit_cmd->add_option("--seeds", fit.seeds, "Random restarts")
      ->envname("BOPT_SEEDS")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "RNG seed")->envname("BOPT_SEED")->capture_default_str();
  fit_cmd->add_flag("--fit-noise", fit.fit_noise, "Also fit the noise variance")
      ->envname("BOPT_FIT_NOISE");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP session service");
  serve_cmd->add_option("--host", serve.host, "Listen address")
      ->envname("BOPT_HOST")
      ->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Listen port (0 picks one)")
      ->envname("BOPT_PORT")
      ->capture_default_str();
  serve_cmd->add_option("--data-dir", serve.data_dir, "Session persistence directory")
      ->envname("BOPT_DATA_DIR")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return cmd_optimize(opt);
    if (*pref_sim) return cmd_pref_sim(pref);
    if (*fit_cmd) return cmd_fit(fit);
    if (*serve_cmd) return cmd_serve(serve);
  } catch (const std::exception& e) {
    std::cerr << "bopt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
