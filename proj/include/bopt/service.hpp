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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "bopt/session.hpp"

namespace httplib {
class Server;
}

namespace bopt {

struct HttpRequest {
  std::string method;
  /// Path with optional query string, e.g. "/sessions/ab12/state?grid=64".
  std::string target;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

inline constexpr int kApiSchemaVersion = 1;
inline constexpr std::size_t kMaxGridPerDim = 512;

/// Session store behind the JSON request/response API.
///
/// Routing is a pure function of the request (`handle`), so the HTTP layer
/// is a thin adapter. Every mutation is persisted to `<data_dir>/<id>.json`
/// before the response is produced; idempotency tokens live in the session
/// history, so a retried request after a restart is still recognized.
class SessionService {
 public:
  explicit SessionService(std::filesystem::path data_dir);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  HttpResponse handle(const HttpRequest& request);

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until `stop()`; requires a prior `bind`.
  void run();
  void stop();

  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mutex;
    Session session;
    std::optional<std::pair<Point, Point>> pair;

    explicit Entry(Session s) : session(std::move(s)) {}
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void persist(const Entry& entry) const;

  HttpResponse create_session(const std::string& body);
  HttpResponse list_sessions() const;
  HttpResponse read_session(const std::string& id) const;
  HttpResponse delete_session(const std::string& id);
  HttpResponse get_pair(const std::string& id);
  HttpResponse post_preference(const std::string& id, const std::string& body);
  HttpResponse get_state(const std::string& id, const std::string& query);
  HttpResponse propose(const std::string& id);
  HttpResponse observe(const std::string& id, const std::string& body);

  std::filesystem::path data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace bopt
