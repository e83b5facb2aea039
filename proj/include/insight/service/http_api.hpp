#pragma once

#include <chrono>

#include <json.hpp>

#include "insight/error.hpp"
#include "insight/service/service.hpp"

namespace httplib {
class Server;
}

namespace insight::service {

int http_status_for(ErrorCode code);

// Static description of every endpoint, served at GET /api-docs.
nlohmann::json api_description();

// JSON-over-HTTP front end of InsightService. Errors are returned as
// {"error": {"code", "message"}} with a status from http_status_for.
//
// GET /sessions/{id}/turns/{tid} answers with server-sent events when the
// request accepts text/event-stream: one "stage" event per stage tag, then a
// final "turn" event carrying the turn document.
class HttpApi {
 public:
  HttpApi(InsightService& service, nlohmann::json public_config);

  void mount(httplib::Server& server);

  // How long one SSE wait blocks before a keep-alive comment is sent.
  std::chrono::milliseconds sse_poll{1000};

 private:
  InsightService& service_;
  nlohmann::json public_config_;
};

}  // namespace insight::service
