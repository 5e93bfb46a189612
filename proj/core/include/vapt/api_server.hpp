#pragma once

#include <memory>
#include <string>

#include "vapt/service.hpp"

namespace vapt {

struct ApiResponse {
  int status = 200;
  json body;
};

// Maps an error to {status, {"error", "message", ...}}.
ApiResponse error_response(const Error& e);

// Routes /v1 requests to a StudyService. `dispatch` is usable without a
// socket; `listen` serves the same routes over HTTP.
class ApiServer {
 public:
  explicit ApiServer(StudyService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  ApiResponse dispatch(const std::string& method, const std::string& path, const std::string& body,
                       const std::string& idempotency_key = {});

  // Port 0 picks a free port. Returns the bound port; throws Errc::io when busy.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  StudyService& service_;
};

}  // namespace vapt
