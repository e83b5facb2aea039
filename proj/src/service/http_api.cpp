#include "insight/service/http_api.hpp"

#include <httplib.h>

namespace insight::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status_for(code), {{"error", {{"code", to_string(code)}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

std::string required(const json& body, const char* field) {
  if (!body.contains(field) || !body[field].is_string())
    throw Error(ErrorCode::InvalidArgument, std::string("missing string field \"") + field + "\"");
  return body[field].get<std::string>();
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::InvalidArgument, e.what());
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", {{"code", "Internal"}, {"message", e.what()}}}});
    }
  };
}

std::string sse_event(std::string_view name, const json& data) {
  return "event: " + std::string(name) + "\ndata: " + data.dump() + "\n\n";
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownTurn:
    case ErrorCode::UnknownBookmark:
    case ErrorCode::UnknownTable:
      return 404;
    case ErrorCode::NameConflict:
    case ErrorCode::SessionBusy:
    case ErrorCode::SessionNotReady:
      return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::EmptyInput:
    case ErrorCode::UnknownModel:
      return 400;
    case ErrorCode::ConnectionFailed:
    case ErrorCode::PermissionDenied:
      return 422;
    case ErrorCode::ProviderError:
    case ErrorCode::EngineUnavailable:
      return 502;
    case ErrorCode::Timeout:
      return 504;
    default:
      return 500;
  }
}

json api_description() {
  auto ep = [](const char* method, const char* path, const char* body, const char* returns) {
    return json{{"method", method}, {"path", path}, {"body", body}, {"returns", returns}};
  };
  return {
      {"endpoints",
       {ep("POST", "/datasets", "{name, connection}", "201 dataset"),
        ep("GET", "/datasets", "", "dataset list"),
        ep("GET", "/datasets/{id}", "", "dataset with HDC overview when ready"),
        ep("POST", "/sessions", "{dataset, model?}", "201 session (state generating|ready)"),
        ep("GET", "/sessions/{id}", "", "session with its turns"),
        ep("POST", "/sessions/{id}/questions", "{text, wait?}", "202 running turn, or 200 finished turn when wait"),
        ep("GET", "/sessions/{id}/turns/{tid}", "",
           "turn JSON; with Accept: text/event-stream, stage events then a final turn event"),
        ep("POST", "/sessions/{id}/turns/{tid}/confirm", "", "resumes a turn awaiting confirmation"),
        ep("POST", "/sessions/{id}/model", "{model}", "session"),
        ep("POST", "/bookmarks", "{turn_id, sub_task_index, label?}", "201 bookmark"),
        ep("GET", "/bookmarks?session={id}", "", "bookmark list"),
        ep("POST", "/bookmarks/compare", "{bookmark_ids: [...]}", "{entries} in request order"),
        ep("GET", "/config", "", "models, pipeline settings, starter questions"),
        ep("GET", "/api-docs", "", "this document")}},
      {"chart_payload", "{chart_type, axis_bindings: {x, y, series, value}, columns: [{name, kind}], rows}"},
      {"stages", {"clarify", "decompose", "sql", "refine", "execute", "chart"}},
      {"errors", "{error: {code, message}}"}};
}

HttpApi::HttpApi(InsightService& service, json public_config)
    : service_(service), public_config_(std::move(public_config)) {}

void HttpApi::mount(httplib::Server& server) {
  auto& svc = service_;

  server.Post("/datasets", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    auto d = svc.register_dataset(required(body, "connection"), required(body, "name"));
    json j = d;
    j["table_count"] = d.schema.tables.size();
    send_json(res, 201, j);
  }));

  server.Get("/datasets", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& d : svc.datasets())
      list.push_back({{"id", d.id},
                      {"name", d.name},
                      {"hdc_state", to_string(d.hdc_state)},
                      {"table_count", d.schema.tables.size()}});
    send_json(res, 200, {{"datasets", list}});
  }));

  server.Get(R"(/datasets/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto d = svc.dataset(req.matches[1]);
    json j = d;
    if (d.hdc_state == HdcState::ready) j["hdc"] = hdc::to_document(svc.hdc_of(d.id));
    send_json(res, 200, j);
  }));

  server.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    send_json(res, 201, svc.create_session(required(body, "dataset"), body.value("model", std::string{})));
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.session(req.matches[1]));
  }));

  server.Post(R"(/sessions/([^/]+)/questions)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    std::string sid = req.matches[1];
    auto t = svc.start_question(sid, required(body, "text"));
    if (!body.value("wait", false)) {
      send_json(res, 202, t);
      return;
    }
    while (!t.finished() && t.status != TurnStatus::awaiting_confirmation)
      t = svc.wait_for_turn(sid, t.id, t.stage_events.size(), std::chrono::seconds(5));
    send_json(res, 200, t);
  }));

  server.Get(R"(/sessions/([^/]+)/turns/([^/]+))",
             guarded([this, &svc](const httplib::Request& req, httplib::Response& res) {
               std::string sid = req.matches[1], tid = req.matches[2];
               auto t = svc.turn(sid, tid);  // 404 before any streaming starts
               if (req.get_header_value("Accept").find("text/event-stream") == std::string::npos) {
                 send_json(res, 200, t);
                 return;
               }
               res.set_header("Cache-Control", "no-cache");
               auto poll = sse_poll;
               res.set_chunked_content_provider(
                   "text/event-stream",
                   [&svc, sid, tid, poll, seen = std::size_t{0}](std::size_t, httplib::DataSink& sink) mutable {
                     if (!sink.is_writable()) return false;
                     auto cur = svc.wait_for_turn(sid, tid, seen, poll);
                     std::string out;
                     for (; seen < cur.stage_events.size(); ++seen)
                       out += sse_event("stage", cur.stage_events[seen]);
                     bool end = cur.finished() || cur.status == TurnStatus::awaiting_confirmation;
                     if (end) out += sse_event("turn", cur);
                     if (out.empty()) out = ": keep-alive\n\n";
                     if (!sink.write(out.data(), out.size())) return false;
                     if (end) sink.done();
                     return true;
                   });
             }));

  server.Post(R"(/sessions/([^/]+)/turns/([^/]+)/confirm)",
              guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 202, svc.confirm_turn(req.matches[1], req.matches[2]));
              }));

  server.Post(R"(/sessions/([^/]+)/model)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    send_json(res, 200, svc.set_model(req.matches[1], required(body, "model")));
  }));

  server.Post("/bookmarks", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    if (!body.contains("sub_task_index") || !body["sub_task_index"].is_number_unsigned())
      throw Error(ErrorCode::InvalidArgument, "sub_task_index must be a non-negative integer");
    send_json(res, 201,
              svc.add_bookmark(required(body, "turn_id"), body["sub_task_index"].get<std::size_t>(),
                               body.value("label", std::string{})));
  }));

  server.Get("/bookmarks", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("session")) throw Error(ErrorCode::InvalidArgument, "query parameter session is required");
    send_json(res, 200, {{"bookmarks", svc.list_bookmarks(req.get_param_value("session"))}});
  }));

  server.Post("/bookmarks/compare", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    if (!body.contains("bookmark_ids") || !body["bookmark_ids"].is_array())
      throw Error(ErrorCode::InvalidArgument, "bookmark_ids must be a list");
    send_json(res, 200, svc.compare(body["bookmark_ids"].get<std::vector<std::string>>()));
  }));

  server.Get("/config", guarded([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, public_config_);
  }));

  server.Get("/api-docs", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, api_description());
  }));
}

}  // namespace insight::service
