#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "insight/catalog/engine.hpp"
#include "insight/catalog/hdc_store.hpp"
#include "insight/chart/chart.hpp"
#include "insight/error.hpp"
#include "insight/hdc/generator.hpp"
#include "insight/question/pipeline.hpp"
#include "insight/service/config.hpp"
#include "insight/service/http_api.hpp"
#include "insight/service/service.hpp"
#include "insight/tisql/pipeline.hpp"

namespace {

using namespace insight;
using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::string cassette;
  std::string mode;
  std::string model;
};

struct HdcOptions {
  std::string dataset;
  std::string out;
};

struct AskOptions {
  std::string dataset;
  std::string question;
  std::string hdc_file;
};

// A bare file path means an SQLite file.
std::string connection_spec(const std::string& dataset) {
  if (dataset.find(':') != std::string::npos && !std::filesystem::exists(dataset)) return dataset;
  return "sqlite:" + dataset;
}

service::ServiceConfig make_config(const CommonOptions& o) {
  service::ServiceConfig cfg =
      o.config_path.empty() ? service::ServiceConfig{} : service::load_service_config(o.config_path);
  if (!o.cassette.empty()) cfg.cassette_path = o.cassette;
  if (!o.mode.empty()) cfg.cassette_mode = llm::cassette_mode_from_string(o.mode);
  else if (o.config_path.empty() && cfg.cassette_path) cfg.cassette_mode = llm::CassetteMode::replay;
  return cfg;
}

std::unique_ptr<catalog::SqlEngine> open_dataset(const std::string& dataset, const hdc::PipelineConfig& p) {
  catalog::EngineOptions eo;
  eo.statement_timeout = std::chrono::milliseconds(p.statement_timeout_ms);
  return std::make_unique<catalog::ReadOnlyGuard>(catalog::open_engine(connection_spec(dataset), eo));
}

int run_hdc(const CommonOptions& common, const HdcOptions& o) {
  auto cfg = make_config(common);
  auto gateway = service::make_gateway(cfg);
  auto engine = open_dataset(o.dataset, cfg.pipeline);
  auto model = common.model.empty() ? cfg.gateway.default_model : common.model;
  auto h = hdc::generate_hdc(engine->introspect(), *engine, cfg.pipeline, hdc::LlmContext{*gateway, model});
  if (o.out.empty()) {
    std::cout << hdc::serialize(h) << "\n";
  } else {
    catalog::persist_hdc(h, o.out);
    std::cerr << "wrote " << o.out << "\n";
  }
  return 0;
}

int run_ask(const CommonOptions& common, const AskOptions& o) {
  auto cfg = make_config(common);
  auto gateway = service::make_gateway(cfg);
  auto engine = open_dataset(o.dataset, cfg.pipeline);
  auto model = common.model.empty() ? cfg.gateway.default_model : common.model;
  hdc::LlmContext llm{*gateway, model};
  auto h = o.hdc_file.empty() ? hdc::generate_hdc(engine->introspect(), *engine, cfg.pipeline, llm)
                              : catalog::load_hdc(o.hdc_file);
  if (service::is_overview_question(o.question)) {
    std::cout << hdc::to_document(h).dump(2) << "\n";
    return 0;
  }
  auto index = hdc::build_index(h, cfg.pipeline, *gateway);
  auto task = question::clarify(question::UserQuestion{o.question, "", model}, h, *gateway);
  task = question::decompose(std::move(task), h, cfg.pipeline, llm);
  json out{{"clarified", task}, {"results", json::array()}};
  if (!task.off_topic) {
    for (auto& a : tisql::answer_task(task, h, index, *engine, cfg.pipeline, llm)) {
      json r = a;
      if (a.ok()) {
        auto recs = chart::recommend(chart::classify_result(*a.result), *a.result, a.sub_task,
                                     cfg.pipeline.chart_tiebreak ? &llm : nullptr);
        r["recommendations"] = recs;
        r["chart"] = chart::chart_payload(recs.front(), *a.result);
      }
      out["results"].push_back(std::move(r));
    }
  }
  std::cout << out.dump(2) << "\n";
  bool any_ok = task.off_topic;
  for (const auto& r : out["results"]) any_ok = any_ok || r["error"].is_null();
  return any_ok ? 0 : 1;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int run_serve(const CommonOptions& common) {
  if (common.config_path.empty()) throw Error(ErrorCode::InvalidArgument, "serve needs --config");
  auto cfg = make_config(common);
  auto gateway = service::make_gateway(cfg);
  service::InsightService svc(service::ServiceOptions{cfg.state_dir, cfg.pipeline}, gateway);
  auto known = svc.datasets();
  for (const auto& d : cfg.datasets) {
    bool present = std::any_of(known.begin(), known.end(), [&](const auto& k) { return k.name == d.name; });
    if (!present) {
      auto ds = svc.register_dataset(d.engine, d.name);
      std::cerr << "registered " << ds.id << " (" << d.name << ")\n";
    }
  }
  httplib::Server server;
  service::HttpApi api(svc, service::public_config(cfg));
  api.mount(server);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
  if (!server.listen(cfg.host, cfg.port)) throw Error(ErrorCode::IoFailure, "cannot listen on port " + std::to_string(cfg.port));
  return 0;
}

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_path, "Service config file (JSON)");
  app.add_option("--cassette", o.cassette, "Cassette file (JSON lines)");
  app.add_option("--mode", o.mode, "Cassette mode")->check(CLI::IsMember({"record", "replay", "passthrough"}));
  app.add_option("--model", o.model, "Model id");
}

void add_hdc(CLI::App& parent, HdcOptions& o) {
  auto* cmd = parent.add_subcommand("hdc", "Generate the hierarchical data context of a dataset");
  cmd->add_option("dataset", o.dataset, "SQLite file or connection spec")->required();
  cmd->add_option("-o,--out", o.out, "Write the HDC document here instead of stdout");
}

void add_ask(CLI::App& parent, AskOptions& o) {
  auto* cmd = parent.add_subcommand("ask", "Answer one question against a dataset");
  cmd->add_option("dataset", o.dataset, "SQLite file or connection spec")->required();
  cmd->add_option("question", o.question, "Question text")->required();
  cmd->add_option("--hdc", o.hdc_file, "Use a stored HDC document instead of generating one");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated exploratory analysis over relational databases"};
  app.require_subcommand(1);
  CommonOptions common;
  add_common(app, common);

  HdcOptions hdc_opts;
  AskOptions ask_opts;
  add_hdc(app, hdc_opts);
  add_ask(app, ask_opts);
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  (void)serve;

  auto* record = app.add_subcommand("record", "Run hdc or ask with the gateway recording to a cassette");
  std::string record_cassette;
  record->add_option("--cassette", record_cassette, "Cassette file to record into")->required();
  record->require_subcommand(1);
  HdcOptions rec_hdc;
  AskOptions rec_ask;
  add_hdc(*record, rec_hdc);
  add_ask(*record, rec_ask);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("hdc")) return run_hdc(common, hdc_opts);
    if (app.got_subcommand("ask")) return run_ask(common, ask_opts);
    if (app.got_subcommand("serve")) return run_serve(common);
    if (app.got_subcommand("record")) {
      common.cassette = record_cassette;
      common.mode = "record";
      if (record->got_subcommand("hdc")) return run_hdc(common, rec_hdc);
      return run_ask(common, rec_ask);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
