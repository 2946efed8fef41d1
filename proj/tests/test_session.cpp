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
#include <filesystem>
#include <limits>
#include <random>

#include "bopt/error.hpp"
#include "bopt/harness.hpp"
#include "bopt/session.hpp"

using namespace bopt;

namespace {

SessionConfig scalar_config(std::size_t d = 1) {
  SessionConfig c;
  c.bounds = Bounds::unit(d);
  c.kernel = KernelSpec::squared_exp(0.2);
  c.rng_seed = 5;
  return c;
}

double wiggle(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::sin(6.0 * v) * v;
  return s;
}

void step(Session& s) {
  const Point x = s.propose();
  s.observe(x, wiggle(x));
}

std::string field_of(const SessionConfig& c) {
  try {
    c.validate();
  } catch (const Error& e) {
    return e.field();
  }
  return "<valid>";
}

}  // namespace

TEST_CASE("seed design") {
  Session s(scalar_config());
  CHECK(s.propose() == Point{1.0 / 3.0});
  s.observe({1.0 / 3.0}, 0.0);
  CHECK(s.propose() == Point{2.0 / 3.0});

  const auto pts = seed_design(Bounds{{0.0, -1.0}, {1.0, 1.0}}, 3);
  REQUIRE(pts.size() == 3);
  // Axis j of point i sits at fraction ((i + j) mod 3 + 1) / 4.
  CHECK(pts[0] == Point{0.25, 0.0});
  CHECK(pts[1] == Point{0.5, 0.5});
  CHECK(pts[2] == Point{0.75, -0.5});
  CHECK(scalar_config(2).seed_count() == 3);
  CHECK(scalar_config(1).seed_count() == 2);
}

TEST_CASE("proposal matches a dense grid argmax of the acquisition") {
  for (AcquisitionKind kind : {AcquisitionKind::PI, AcquisitionKind::EI, AcquisitionKind::UCB}) {
    CAPTURE(to_string(kind));
    SessionConfig c = scalar_config();
    c.fit_hyperparameters = false;
    c.acquisition.kind = kind;
    Session s(c);
    for (int i = 0; i < 4; ++i) step(s);

    const GaussianProcess gp(s.kernel(), s.data());
    const Incumbent inc = s.best();
    AcquisitionSpec spec = c.acquisition;
    spec.iteration = s.iteration() + 1;
    spec.dim = 1;
    double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double v = acquisition_value(spec, s.kernel(), gp.predict(Point{i / 1e4}), inc);
      if (v > best) best = v, arg = i / 1e4;
    }
    CHECK(std::abs(s.propose()[0] - arg) <= 1e-2);
  }
}

TEST_CASE("propose is deterministic and read-only") {
  Session a(scalar_config(2)), b(scalar_config(2));
  for (int i = 0; i < 5; ++i) {
    step(a);
    step(b);
  }
  const std::size_t before = a.data().size();
  CHECK(a.propose() == b.propose());
  CHECK(a.propose() == a.propose());
  CHECK(a.data().size() == before);
  CHECK(a.config().bounds.contains(a.propose()));
}

TEST_CASE("observe contracts") {
  Session s(scalar_config());
  CHECK_THROWS_AS(s.observe({1.5}, 0.0), Error);
  CHECK_THROWS_AS(s.observe({0.5}, std::nan("")), Error);
  CHECK_THROWS_AS(s.observe({0.5}, std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(s.observe({0.5, 0.5}, 0.0), Error);
  CHECK_THROWS_AS(s.best(), Error);
  s.observe({0.5}, 2.0, "t1");
  CHECK(s.iteration() == 1);
  CHECK(s.history().size() == 1);
  CHECK(s.has_token("t1"));
  CHECK_FALSE(s.has_token("t2"));
  CHECK_FALSE(s.has_token(""));
  const Incumbent inc = s.best();
  CHECK(inc.location == Point{0.5});
  CHECK(inc.value == 2.0);
}

TEST_CASE("mode-specific calls are rejected on the other mode") {
  Session s(scalar_config());
  try {
    s.select_pair();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongMode);
  }
  SessionConfig c = scalar_config();
  c.mode = SessionMode::Preference;
  Session p(c);
  CHECK_THROWS_AS(p.propose(), Error);
  CHECK_THROWS_AS(p.observe({0.5}, 1.0), Error);
}

TEST_CASE("refit schedule") {
  SessionConfig c = scalar_config();
  c.refit_period = 5;
  Session s(c);
  const KernelSpec initial = s.kernel();
  for (int i = 0; i < 4; ++i) {
    step(s);
    CHECK(s.kernel().theta == initial.theta);
    CHECK(s.kernel().signal_variance == initial.signal_variance);
  }
  step(s);
  CHECK(s.kernel().theta != initial.theta);
}

TEST_CASE("duplicate proposals are nudged toward the center") {
  SessionConfig c = scalar_config();
  c.fit_hyperparameters = false;
  c.maximizer = MaximizerBudget{1, 1, 1e-9};  // DIRECT returns the center
  Session s(c);
  s.observe({0.5}, 0.0);
  s.observe({0.9}, 0.0);
  const Point x = s.propose();
  CHECK(x[0] != 0.5);
  CHECK(std::abs(x[0] - 0.5) <= 1e-5);

  c.kernel.noise_variance = 0.1;
  Session noisy(c);
  noisy.observe({0.5}, 0.0);
  noisy.observe({0.9}, 0.0);
  CHECK(noisy.propose() == Point{0.5});
}

TEST_CASE("noisy incumbent is the best posterior mean at sampled points") {
  SessionConfig c = scalar_config();
  c.kernel.noise_variance = 0.05;
  c.fit_hyperparameters = false;
  Session s(c);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.2);
  for (int i = 0; i < 8; ++i) {
    const Point x = s.propose();
    s.observe(x, wiggle(x) + g(rng));
  }
  double best = -1e300;
  for (const Point& x : s.data().points) best = std::max(best, s.predict(x).mean);
  CHECK(s.best().value == best);
}

TEST_CASE("property: noise-free incumbent never decreases") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    SessionConfig c = scalar_config(2);
    c.fit_hyperparameters = false;
    Session s(c);
    double last = -1e300;
    for (int i = 0; i < 15; ++i) {
      s.observe({u(rng), u(rng)}, g(rng));
      CHECK(s.best().value >= last);
      last = s.best().value;
    }
  }
}

TEST_CASE("session finds the top of a multimodal 1D function") {
  const TestObjective f = multimodal_1d();
  SessionConfig c;
  c.bounds = f.bounds;
  c.kernel = KernelSpec::squared_exp(0.1);
  Session s(c);
  for (int i = 0; i < 30; ++i) {
    const Point x = s.propose();
    s.observe(x, f(x));
  }
  CHECK(s.best().value >= f.known_optimum->value - 0.05);
}

TEST_CASE("replay: reload reproduces posterior and the next proposals bit for bit") {
  SessionConfig c = scalar_config(2);
  c.kernel.noise_variance = 0.01;
  Session live(c, "replay-1");
  for (int i = 0; i < 6; ++i) step(live);
  Session copy = Session::deserialize(live.serialize());
  CHECK(copy.id() == "replay-1");
  CHECK(copy.iteration() == live.iteration());
  CHECK(copy.kernel().theta == live.kernel().theta);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point q{u(rng), u(rng)};
    CHECK(copy.predict(q).mean == live.predict(q).mean);
  }
  for (int i = 0; i < 3; ++i) {
    const Point a = live.propose(), b = copy.propose();
    CHECK(a == b);
    live.observe(a, wiggle(a));
    copy.observe(b, wiggle(b));
  }
  CHECK(copy.serialize().size() == live.serialize().size());
}

TEST_CASE("save and load through a file") {
  const auto dir = std::filesystem::temp_directory_path() / "bopt_test_session";
  std::filesystem::create_directories(dir);
  Session s(scalar_config(), "file-1");
  step(s);
  step(s);
  step(s);
  s.save(dir / "file-1.json");
  const Session back = Session::load(dir / "file-1.json");
  CHECK(back.propose() == s.propose());
  CHECK(back.history().size() == 3);
  CHECK(back.history()[2].timestamp == s.history()[2].timestamp);
  CHECK_THROWS_AS(Session::load(dir / "missing.json"), Error);
  CHECK_THROWS_AS(Session::deserialize("{not json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("preference replay reproduces the Laplace mode") {
  SessionConfig c = scalar_config(2);
  c.mode = SessionMode::Preference;
  Session s(c);
  s.record_preference({0.1, 0.2}, {0.8, 0.8}, "a");
  s.record_preference({0.4, 0.4}, {0.1, 0.2}, "b");
  s.record_preference({0.4, 0.4}, {0.6, 0.1}, "c");
  const Session back = Session::deserialize(s.serialize());
  REQUIRE(back.laplace());
  CHECK((back.laplace()->f_map - s.laplace()->f_map).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(back.select_pair() == s.select_pair());
  CHECK(back.has_token("b"));
}

TEST_CASE("config validation names the offending field") {
  SessionConfig c = scalar_config(2);
  CHECK(field_of(c) == "<valid>");
  c.bounds.upper[1] = 0.0;
  CHECK(field_of(c) == "bounds[1]");
  c = scalar_config(2);
  c.kernel.family = KernelFamily::SquaredExpARD;
  c.kernel.theta = {0.1, 0.2, 0.3};
  CHECK(field_of(c) == "kernel.theta");
  c = scalar_config();
  c.refit_period = 0;
  CHECK(field_of(c) == "refit_period");
  c = scalar_config();
  c.fit_seeds = 0;
  CHECK(field_of(c) == "fit_seeds");
  c = scalar_config();
  c.probit_noise = -1.0;
  CHECK(field_of(c) == "probit_noise");
  c = scalar_config();
  c.n_seed = 1;
  CHECK(field_of(c) == "n_seed");
}

TEST_CASE("config JSON round trip and parse errors") {
  SessionConfig c = scalar_config(2);
  c.mode = SessionMode::Preference;
  c.strategy = PairStrategy::MaxVariance;
  c.pair_ei = PairEi::Difference;
  c.candidates = {{0.1, 0.2}, {0.3, 0.4}};
  c.probit_noise = 0.2;
  c.n_seed = 4;
  const std::string text = c.to_json();
  const SessionConfig back = SessionConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.pair_ei == PairEi::Difference);
  CHECK(back.candidates == c.candidates);

  auto parse_field = [](const std::string& t) {
    try {
      SessionConfig::from_json(t);
    } catch (const Error& e) {
      return e.field();
    }
    return std::string("<valid>");
  };
  CHECK(parse_field(R"({"bounds": [[0, 1], [2, 1]]})") == "bounds[1]");
  CHECK(parse_field(R"({"bounds": [[0, 1], [0]]})") == "bounds[1]");
  CHECK(parse_field(R"({})") == "bounds");
  CHECK(parse_field(R"({"bounds": [[0, 1]], "pair_ei": "both"})") == "pair_ei");
  CHECK(parse_field(R"({"bounds": [[0, 1]], "mode": "batch"})") == "mode");
  CHECK(parse_field(R"({"bounds": [[0, 1]]})") == "<valid>");
  CHECK_THROWS_AS(SessionConfig::from_json("[1, 2"), Error);
}
