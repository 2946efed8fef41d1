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

#include "bopt/service.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include <httplib.h>

#include "bopt/error.hpp"
#include "json_util.hpp"

namespace bopt {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::WrongMode:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Conditioning:
    case ErrorCode::InvalidObjective: return 422;
    case ErrorCode::Io: return 500;
  }
  return 500;
}

HttpResponse error_response(int status, const std::string& code, const std::string& message,
                            const std::string& field = {}) {
  json err{{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return {status, json{{"error", err}}.dump()};
}

HttpResponse ok(const json& body, int status = 200) { return {status, body.dump()}; }

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
         });
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const std::size_t next = path.find('/', pos);
    const std::string part = path.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!part.empty()) parts.push_back(part);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return parts;
}

std::string query_value(const std::string& query, const std::string& key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    const std::size_t amp = query.find('&', pos);
    const std::string item = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    const std::size_t eq = item.find('=');
    if (item.substr(0, eq) == key) return eq == std::string::npos ? std::string() : item.substr(eq + 1);
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return {};
}

json body_object(const std::string& body) {
  if (body.empty()) return json::object();
  json j = detail::parse(body);
  detail::require_object(j, "");
  return j;
}

json bounds_json(const Bounds& b) {
  json out = json::array();
  for (std::size_t i = 0; i < b.dim(); ++i) out.push_back({b.lower[i], b.upper[i]});
  return out;
}

/// Declarative swatch description; attribute k is driven by normalized
/// coordinate k, and unused attributes keep mid-range defaults.
json render_spec(const Bounds& bounds, const Point& x) {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    u[i] = std::clamp((x[i] - bounds.lower[i]) / (bounds.upper[i] - bounds.lower[i]), 0.0, 1.0);
  auto at = [&](std::size_t i, double fallback) { return i < u.size() ? u[i] : fallback; };
  return json{{"kind", "swatch"},
              {"normalized", u},
              {"hue", 360.0 * at(0, 0.5)},
              {"saturation", 0.25 + 0.75 * at(1, 0.6)},
              {"lightness", 0.25 + 0.5 * at(2, 0.5)},
              {"curve", {{"amplitude", at(3, 0.5)}, {"frequency", 1.0 + 4.0 * at(0, 0.5)}}}};
}

json pair_json(const Bounds& bounds, const std::pair<Point, Point>& pair) {
  return json{{"points", {pair.first, pair.second}},
              {"render", {render_spec(bounds, pair.first), render_spec(bounds, pair.second)}}};
}

json session_summary(const Session& s) {
  return json{{"id", s.id()}, {"mode", to_string(s.mode())}, {"iteration", s.iteration()}};
}

std::size_t grid_size(const std::string& query, std::size_t dim) {
  const std::string raw = query_value(query, "grid");
  if (raw.empty()) return dim == 1 ? 101 : 32;
  std::size_t n = 0;
  try {
    n = static_cast<std::size_t>(std::stoul(raw));
  } catch (const std::exception&) {
    throw_invalid("grid must be a positive integer", "grid");
  }
  if (n < 2 || n > kMaxGridPerDim)
    throw_invalid("grid must be between 2 and " + std::to_string(kMaxGridPerDim), "grid");
  return n;
}

json posterior_curve(const Session& s, std::size_t n) {
  const Bounds& b = s.config().bounds;
  const std::size_t d = b.dim();
  json points = json::array();
  std::vector<std::size_t> idx(d, 0);
  Point x(d);
  for (;;) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = b.lower[i] + (b.upper[i] - b.lower[i]) * static_cast<double>(idx[i]) /
                              static_cast<double>(n - 1);
    const PosteriorSummary p = s.predict(x);
    points.push_back({{"x", x}, {"mean", p.mean}, {"stddev", p.stddev()}});
    std::size_t k = 0;
    while (k < d && ++idx[k] == n) idx[k++] = 0;
    if (k == d) break;
  }
  return json{{"dims", d}, {"grid_size", n}, {"points", std::move(points)}};
}

bool has_evidence(const Session& s) {
  return s.mode() == SessionMode::Scalar ? !s.data().empty() : s.laplace().has_value();
}

json session_view(const Session& s, const std::optional<std::pair<Point, Point>>& pair,
                  std::size_t grid) {
  json view{{"schema_version", kApiSchemaVersion},
            {"id", s.id()},
            {"mode", to_string(s.mode())},
            {"iteration", s.iteration()},
            {"bounds", bounds_json(s.config().bounds)},
            {"current_pair", nullptr},
            {"incumbent", nullptr},
            {"posterior_curve", nullptr}};
  if (pair) view["current_pair"] = pair_json(s.config().bounds, *pair);
  if (has_evidence(s)) {
    const Incumbent inc = s.best();
    view["incumbent"] = {{"x", inc.location},
                         {"value", inc.value},
                         {"render", render_spec(s.config().bounds, inc.location)}};
  }
  if (s.dim() <= 2) view["posterior_curve"] = posterior_curve(s, grid);
  return view;
}

std::string token_of(const json& body) {
  if (!body.contains("token") || body.at("token").is_null()) return {};
  return detail::get<std::string>(body, "token", "token");
}

}  // namespace

SessionService::SessionService(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create data directory " + data_dir_.string());
  for (const auto& file : std::filesystem::directory_iterator(data_dir_)) {
    if (file.path().extension() != ".json") continue;
    try {
      Session s = Session::load(file.path());
      const std::string id = s.id();
      sessions_.emplace(id, std::make_shared<Entry>(std::move(s)));
    } catch (const Error& e) {
      std::cerr << "skipping " << file.path().string() << ": " << e.what() << "\n";
    }
  }
}

SessionService::~SessionService() { stop(); }

std::size_t SessionService::session_count() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'", "id");
  return it->second;
}

void SessionService::persist(const Entry& entry) const {
  entry.session.save(data_dir_ / (entry.session.id() + ".json"));
}

HttpResponse SessionService::handle(const HttpRequest& request) {
  const std::size_t q = request.target.find('?');
  const std::string path = request.target.substr(0, q);
  const std::string query = q == std::string::npos ? std::string() : request.target.substr(q + 1);
  const std::vector<std::string> parts = split_path(path);
  const std::string& method = request.method;

  try {
    if (parts.size() == 1 && parts[0] == "health" && method == "GET")
      return ok({{"status", "ok"}, {"schema_version", kApiSchemaVersion}});
    if (!parts.empty() && parts[0] == "sessions") {
      if (parts.size() == 1) {
        if (method == "POST") return create_session(request.body);
        if (method == "GET") return list_sessions();
      } else {
        const std::string& id = parts[1];
        if (!valid_id(id)) throw Error(ErrorCode::NotFound, "no session '" + id + "'", "id");
        if (parts.size() == 2) {
          if (method == "GET") return read_session(id);
          if (method == "DELETE") return delete_session(id);
        } else if (parts.size() == 3) {
          const std::string& action = parts[2];
          if (action == "pair" && method == "GET") return get_pair(id);
          if (action == "preference" && method == "POST") return post_preference(id, request.body);
          if (action == "state" && method == "GET") return get_state(id, query);
          if (action == "propose" && method == "POST") return propose(id);
          if (action == "observe" && method == "POST") return observe(id, request.body);
        }
      }
    }
    return error_response(404, "not_found", "no route for " + method + " " + path);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what(), e.field());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

HttpResponse SessionService::create_session(const std::string& body) {
  const json j = body_object(body);
  const std::string token = token_of(j);
  SessionConfig config = SessionConfig::from_json(j.contains("config") ? j.at("config").dump() : body);
  config.validate();

  std::unique_lock lock(mutex_);
  if (!token.empty()) {
    for (const auto& [id, entry] : sessions_) {
      if (entry->session.creation_token() == token) return ok(session_summary(entry->session), 200);
    }
  }
  std::string id;
  do {
    id = generate_session_id();
  } while (sessions_.count(id) != 0);
  auto entry = std::make_shared<Entry>(Session(std::move(config), id));
  entry->session.set_creation_token(token);
  persist(*entry);
  sessions_.emplace(id, entry);
  return ok(session_summary(entry->session), 201);
}

HttpResponse SessionService::list_sessions() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, entry] : sessions_) entries.push_back(entry);
  }
  json list = json::array();
  for (const auto& entry : entries) {
    std::lock_guard lock(entry->mutex);
    list.push_back(session_summary(entry->session));
  }
  return ok({{"sessions", std::move(list)}});
}

HttpResponse SessionService::read_session(const std::string& id) const {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  json out = session_summary(entry->session);
  out["config"] = json::parse(entry->session.config().to_json());
  out["history_length"] = entry->session.history().size();
  return ok(out);
}

HttpResponse SessionService::delete_session(const std::string& id) {
  std::shared_ptr<Entry> entry;
  {
    std::unique_lock lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'", "id");
    entry = it->second;
    sessions_.erase(it);
  }
  std::lock_guard lock(entry->mutex);
  std::error_code ec;
  std::filesystem::remove(data_dir_ / (id + ".json"), ec);
  return ok({{"deleted", id}});
}

HttpResponse SessionService::get_pair(const std::string& id) {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->pair) entry->pair = entry->session.select_pair();
  json out = pair_json(entry->session.config().bounds, *entry->pair);
  out["iteration"] = entry->session.iteration();
  return ok(out);
}

HttpResponse SessionService::post_preference(const std::string& id, const std::string& body) {
  const json j = body_object(body);
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  if (s.mode() != SessionMode::Preference)
    throw Error(ErrorCode::WrongMode, "session is not in preference mode", "mode");
  const int winner = detail::get<int>(j, "winner_index", "winner_index");
  if (winner != 0 && winner != 1) throw_invalid("winner_index must be 0 or 1", "winner_index");
  const std::string token = token_of(j);

  // A replay is answered from current state, whether or not the pair it
  // answered is still outstanding.
  if (!s.has_token(token)) {
    if (!entry->pair) throw Error(ErrorCode::Conflict, "no outstanding pair; GET the pair first", "pair");
    const auto& [first, second] = *entry->pair;
    Session next = s;
    if (winner == 0) next.record_preference(first, second, token);
    else next.record_preference(second, first, token);
    next.save(data_dir_ / (s.id() + ".json"));
    s = std::move(next);
    entry->pair.reset();
  }
  return ok(session_view(s, entry->pair, grid_size({}, s.dim())));
}

HttpResponse SessionService::get_state(const std::string& id, const std::string& query) {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return ok(session_view(entry->session, entry->pair, grid_size(query, entry->session.dim())));
}

HttpResponse SessionService::propose(const std::string& id) {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (entry->session.mode() != SessionMode::Scalar)
    throw Error(ErrorCode::WrongMode, "session is not in scalar mode", "mode");
  return ok({{"x", entry->session.propose()}, {"iteration", entry->session.iteration()}});
}

HttpResponse SessionService::observe(const std::string& id, const std::string& body) {
  const json j = body_object(body);
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  if (s.mode() != SessionMode::Scalar)
    throw Error(ErrorCode::WrongMode, "session is not in scalar mode", "mode");
  const Point x = detail::get<std::vector<double>>(j, "x", "x");
  const double y = detail::get<double>(j, "y", "y");
  const std::string token = token_of(j);
  if (!s.has_token(token)) {
    Session next = s;
    next.observe(x, y, token);
    next.save(data_dir_ / (s.id() + ".json"));
    s = std::move(next);
  }
  return ok(session_view(s, std::nullopt, grid_size({}, s.dim())));
}

// ---------------------------------------------------------------------------
// HTTP adapter

int SessionService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    std::string target = req.path;
    if (!req.params.empty()) {
      std::string q;
      for (const auto& [k, v] : req.params) q += (q.empty() ? "" : "&") + k + "=" + v;
      target += "?" + q;
    }
    const HttpResponse r = handle({req.method, target, req.body});
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  const std::string any = R"(/.*)";
  server_->Get(any, dispatch);
  server_->Post(any, dispatch);
  server_->Delete(any, dispatch);
  server_->Options(any, [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void SessionService::run() {
  if (!server_) throw Error(ErrorCode::InvalidArgument, "bind before run");
  server_->listen_after_bind();
}

void SessionService::stop() {
  if (server_) server_->stop();
}

}  // namespace bopt
