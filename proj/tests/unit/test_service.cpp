#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <future>

#include "fixture_model.hpp"
#include "fixtures.hpp"
#include "insight/catalog/hdc_store.hpp"
#include "insight/error.hpp"
#include "insight/service/config.hpp"
#include "insight/service/service.hpp"
#include "insight/service/store.hpp"

using namespace insight;
using namespace insight::service;
using insight::testing::FixtureProvider;
using insight::testing::FunctionProvider;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::shared_ptr<FunctionProvider> counting_fixture() {
  return std::make_shared<FunctionProvider>([](const llm::LlmRequest& r) { return FixtureProvider::reply_for(r); });
}

struct Harness {
  testing::TempDir dir;
  std::shared_ptr<FunctionProvider> provider = counting_fixture();
  hdc::PipelineConfig pipeline;
  std::unique_ptr<InsightService> svc;

  explicit Harness(hdc::PipelineConfig p = {}) : pipeline(p) { start(); }

  void start() {
    svc.reset();
    svc = std::make_unique<InsightService>(ServiceOptions{dir.path(), pipeline},
                                           testing::provider_gateway(provider));
  }

  std::string ready_session(const std::string& fixture) {
    auto d = svc->register_dataset(testing::fixture_spec(fixture), fixture);
    auto view = svc->create_session(d.id);
    REQUIRE(svc->wait_for_hdc(d.id, std::chrono::seconds(30)) == HdcState::ready);
    return view.session.id;
  }
};

std::vector<std::string> stage_tags(const Turn& t) {
  std::vector<std::string> out;
  for (const auto& e : t.stage_events) out.push_back(e.stage);
  return out;
}

}  // namespace

TEST_CASE("service config resolves paths and validates") {
  auto cfg = parse_service_config(json::parse(R"({
      "state_dir": "st", "listen": {"port": 9001},
      "engine": "sqlite:data/financial.db",
      "datasets": [{"name": "bird", "engine": "sqlite:/abs/bird.db"}],
      "provider": {"base_url": "http://llm:1", "models": ["m1", "m2"], "embedding_model": "e"},
      "cassette": {"path": "c.jsonl", "mode": "record"},
      "pipeline": {"refine_max_rounds": 2}})"),
                                  "/base");
  CHECK(cfg.state_dir == "/base/st");
  CHECK(cfg.port == 9001);
  REQUIRE(cfg.datasets.size() == 2);
  CHECK(cfg.datasets[0].name == "financial");
  CHECK(cfg.datasets[0].engine == "sqlite:/base/data/financial.db");
  CHECK(cfg.datasets[1].engine == "sqlite:/abs/bird.db");
  CHECK(cfg.gateway.default_model == "m1");
  CHECK(*cfg.cassette_path == "/base/c.jsonl");
  CHECK(cfg.cassette_mode == llm::CassetteMode::record);
  CHECK(cfg.pipeline.refine_max_rounds == 2);

  CHECK(code_of([] { parse_service_config(json::parse(R"({"provider": {"models": []}})")); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_service_config(json::parse(R"({"pipeline": {"refine_max_rounds": "x"}})")); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { load_service_config("/nonexistent/insight.json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("the public config never carries the provider key") {
  ::setenv(kApiKeyEnv, "sk-test-very-secret", 1);
  ServiceConfig cfg;
  cfg.provider_base_url = "http://127.0.0.1:1";
  auto gw = make_gateway(cfg);
  auto text = public_config(cfg).dump();
  CHECK(text.find("sk-test-very-secret") == std::string::npos);
  std::function<void(const json&)> walk = [&](const json& j) {
    if (!j.is_object() && !j.is_array()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (j.is_object()) {
        auto k = it.key();
        for (std::string bad : {"api_key", "key", "secret", "token", "authorization", "password"})
          CHECK_MESSAGE(k != bad, "credential-like field " << k);
      }
      walk(*it);
    }
  };
  walk(public_config(cfg));
  ::unsetenv(kApiKeyEnv);

  ServiceConfig replay;
  replay.cassette_mode = llm::CassetteMode::replay;
  CHECK(code_of([&] { make_gateway(replay); }) == ErrorCode::InvalidArgument);
  ServiceConfig nourl;
  CHECK(code_of([&] { make_gateway(nourl); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("state store round trips every record") {
  testing::TempDir dir;
  auto path = dir.path() / "state.db";
  Dataset d{"", "fin", "sqlite:x.db", {}, HdcState::none, "", 11};
  d.schema.database_name = "fin";
  Session s;
  Turn t;
  Bookmark b;
  {
    StateStore store(path);
    d = store.insert_dataset(d);
    CHECK(d.id == "ds_1");
    CHECK(code_of([&] { store.insert_dataset(Dataset{"", "fin", "sqlite:y.db", {}, HdcState::none, "", 0}); }) ==
          ErrorCode::NameConflict);
    store.update_dataset_state(d.id, HdcState::failed, "boom");
    s = store.insert_session(Session{"", d.id, "m", 12});
    store.update_session_model(s.id, "m2");
    s.model_id = "m2";
    Turn draft;
    draft.session_id = s.id;
    draft.question = {"q?", s.id, "m2"};
    draft.clarified = question::ClarifiedTask{"q?", "q!", {"a"}, false, {}, false, ""};
    draft.stage_events = {{"clarify", 1}, {"decompose", 2}};
    draft.status = TurnStatus::done;
    draft.created_at = 13;
    tisql::TaskAnswer answer;
    answer.sub_task = "q!";
    answer.sql = tisql::SqlCandidate{"SELECT 1", "sqlite", 0};
    answer.result = tisql::QueryResult{{{"x", tisql::ColumnKind::numeric}}, {{std::int64_t{1}}}, false};
    draft.results = {TurnResult{answer, {{chart::ChartType::number_card, {{"value", "x"}}, 1, chart::Source::rule}}}};
    t = store.insert_turn(draft);
    CHECK(t.seq == 1);
    b = store.insert_bookmark(Bookmark{"", s.id, t.id, 0, "first", 14});
  }
  StateStore reopened(path);
  auto d2 = reopened.dataset(d.id);
  REQUIRE(d2);
  CHECK(d2->hdc_state == HdcState::failed);
  CHECK(d2->hdc_error == "boom");
  d2->hdc_state = d.hdc_state;
  d2->hdc_error = d.hdc_error;
  CHECK(*d2 == d);
  CHECK(*reopened.session(s.id) == s);
  CHECK(*reopened.turn(t.id) == t);
  CHECK(reopened.turns_of(s.id) == std::vector<Turn>{t});
  CHECK(reopened.turns_with_status(TurnStatus::done).size() == 1);
  CHECK(*reopened.bookmark(b.id) == b);
  CHECK(reopened.bookmarks_of(s.id) == std::vector<Bookmark>{b});
  CHECK_FALSE(reopened.session("s_99"));
}

TEST_CASE("dataset registration") {
  Harness h;
  auto d = h.svc->register_dataset(testing::fixture_spec("financial"), "  financial ");
  CHECK(d.name == "financial");
  CHECK(d.schema.tables.size() == 6);
  CHECK(code_of([&] { h.svc->register_dataset(testing::fixture_spec("bird"), "financial"); }) ==
        ErrorCode::NameConflict);
  CHECK(code_of([&] { h.svc->register_dataset("sqlite:/nonexistent/x.db", "x"); }) == ErrorCode::ConnectionFailed);
  CHECK(code_of([&] { h.svc->register_dataset("oracle://host/db", "y"); }) == ErrorCode::ConnectionFailed);
  CHECK(code_of([&] { h.svc->register_dataset(testing::fixture_spec("bird"), " "); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { h.svc->dataset("ds_9"); }) == ErrorCode::UnknownDataset);
  CHECK(h.svc->datasets().size() == 1);
}

TEST_CASE("sessions wait for the HDC and accept known models only") {
  Harness h;
  auto d = h.svc->register_dataset(testing::fixture_spec("bird"), "bird");
  CHECK(code_of([&] { h.svc->create_session(d.id, "gpt-unknown"); }) == ErrorCode::UnknownModel);
  CHECK(code_of([&] { h.svc->create_session("ds_404"); }) == ErrorCode::UnknownDataset);
  auto view = h.svc->create_session(d.id);
  CHECK(view.session.model_id == "fixture-large");
  CHECK(h.svc->wait_for_hdc(d.id, std::chrono::seconds(30)) == HdcState::ready);
  CHECK(h.svc->session(view.session.id).state == HdcState::ready);
  // A second session reuses the ready HDC.
  auto calls = h.provider->calls(llm::Purpose::table_description);
  h.svc->create_session(d.id);
  CHECK(h.provider->calls(llm::Purpose::table_description) == calls);
  CHECK(h.svc->sessions().size() == 2);
  CHECK(code_of([&] { h.svc->session("s_404"); }) == ErrorCode::UnknownSession);
}

TEST_CASE("questions are refused until the HDC is ready") {
  auto gate = std::make_shared<std::promise<void>>();
  auto opened = gate->get_future().share();
  auto provider = std::make_shared<FunctionProvider>([opened](const llm::LlmRequest& r) {
    opened.wait();
    return FixtureProvider::reply_for(r);
  });
  testing::TempDir dir;
  InsightService svc(ServiceOptions{dir.path(), {}}, testing::provider_gateway(provider));
  auto d = svc.register_dataset(testing::fixture_spec("bird"), "bird");
  auto view = svc.create_session(d.id);
  CHECK(view.state == HdcState::generating);
  CHECK(code_of([&] { svc.post_question(view.session.id, "List each test result."); }) == ErrorCode::SessionNotReady);
  CHECK(code_of([&] { svc.hdc_of(d.id); }) == ErrorCode::SessionNotReady);
  gate->set_value();
  CHECK(svc.wait_for_hdc(d.id, std::chrono::seconds(30)) == HdcState::ready);
}

TEST_CASE("a Bird question runs every stage and ends in a chart") {
  Harness h;
  auto sid = h.ready_session("bird");
  auto t = h.svc->post_question(sid, testing::kBirdQuestion);
  CHECK(t.status == TurnStatus::done);
  CHECK(stage_tags(t) == std::vector<std::string>{"clarify", "decompose", "sql", "refine", "execute", "chart"});
  for (std::size_t i = 1; i < t.stage_events.size(); ++i) CHECK(t.stage_events[i - 1].at <= t.stage_events[i].at);
  REQUIRE(t.results.size() == 1);
  const auto& r = t.results[0];
  REQUIRE(r.answer.ok());
  CHECK(r.recommendations.back().chart_type == chart::ChartType::table);
  CHECK(r.recommendations.front().chart_type == chart::ChartType::pie);
  json payload = r;
  CHECK(payload["chart"]["chart_type"] == "pie");
  CHECK(h.svc->session(sid).turns.size() == 1);
  CHECK(code_of([&] { h.svc->post_question(sid, "   "); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { h.svc->turn(sid, "t_77"); }) == ErrorCode::UnknownTurn);
}

TEST_CASE("the overview question returns the HDC without SQL") {
  Harness h;
  auto sid = h.ready_session("financial");
  auto before = h.provider->total_calls();
  auto t = h.svc->post_question(sid, "Get a quick understanding of this dataset.");
  CHECK(h.provider->total_calls() == before);
  CHECK(t.status == TurnStatus::done);
  CHECK(stage_tags(t) == std::vector<std::string>{"hdc"});
  REQUIRE(t.overview);
  CHECK((*t.overview)["tables"].size() == 6);
  CHECK((*t.overview)["relationships"].size() == 3);
  CHECK(is_overview_question("  GET a quick understanding of this   dataset!"));
  CHECK_FALSE(is_overview_question("understand this dataset"));
}

TEST_CASE("off-topic questions finish without results") {
  Harness h;
  auto sid = h.ready_session("financial");
  auto t = h.svc->post_question(sid, "Who won the 1998 world cup?");
  CHECK(t.status == TurnStatus::done);
  REQUIRE(t.clarified);
  CHECK(t.clarified->off_topic);
  CHECK(t.results.empty());
  CHECK(stage_tags(t) == std::vector<std::string>{"clarify", "decompose"});
}

TEST_CASE("switching the model applies to later turns") {
  Harness h;
  auto sid = h.ready_session("bird");
  CHECK(code_of([&] { h.svc->set_model(sid, "nope"); }) == ErrorCode::UnknownModel);
  CHECK(code_of([&] { h.svc->set_model("s_404", "fixture-small"); }) == ErrorCode::UnknownSession);
  CHECK(h.svc->set_model(sid, "fixture-small").model_id == "fixture-small");
  auto before = h.provider->requests().size();
  auto t = h.svc->post_question(sid, testing::kBirdQuestion);
  CHECK(t.question.model_id == "fixture-small");
  auto reqs = h.provider->requests();
  REQUIRE(reqs.size() > before);
  for (std::size_t i = before; i < reqs.size(); ++i) CHECK(reqs[i].model_id == "fixture-small");
}

TEST_CASE("confirmation holds the turn and the session") {
  hdc::PipelineConfig p;
  p.require_confirmation = true;
  Harness h(p);
  auto sid = h.ready_session("financial");
  auto held = h.svc->post_question(sid, testing::kGrowthQuestion);
  CHECK(held.status == TurnStatus::awaiting_confirmation);
  REQUIRE(held.clarified);
  CHECK(held.clarified->clarified == "What is the growth rate for the current year?");
  CHECK(held.results.empty());
  CHECK(code_of([&] { h.svc->post_question(sid, testing::kOilQuestion); }) == ErrorCode::SessionBusy);
  CHECK(code_of([&] { h.svc->confirm_turn(sid, "t_404"); }) == ErrorCode::UnknownTurn);
  auto done = h.svc->confirm_turn(sid, held.id, true);
  CHECK(done.status == TurnStatus::done);
  CHECK(stage_tags(done) == std::vector<std::string>{"clarify", "decompose", "sql", "refine", "execute", "chart"});
  CHECK(code_of([&] { h.svc->confirm_turn(sid, held.id, true); }) == ErrorCode::UnknownTurn);
  // The session is free again.
  CHECK(h.svc->post_question(sid, "Get a quick understanding of this dataset").status == TurnStatus::done);
}

TEST_CASE("background turns report progress and finish") {
  Harness h;
  auto sid = h.ready_session("bird");
  auto t = h.svc->start_question(sid, testing::kBirdQuestion);
  CHECK(t.status == TurnStatus::running);
  std::size_t seen = 0;
  while (!t.finished()) {
    t = h.svc->wait_for_turn(sid, t.id, seen, std::chrono::seconds(10));
    CHECK(t.stage_events.size() >= seen);
    seen = t.stage_events.size();
  }
  CHECK(t.status == TurnStatus::done);
  CHECK(stage_tags(t).size() == 6);
}

TEST_CASE("bookmarks and comparison") {
  Harness h;
  auto sid = h.ready_session("financial");
  auto fed = h.svc->post_question(sid, testing::kFedQuestion);
  REQUIRE(fed.status == TurnStatus::done);
  REQUIRE(fed.results.size() == 2);
  auto oil = h.svc->post_question(sid, testing::kOilQuestion);
  REQUIRE(oil.status == TurnStatus::done);

  auto b1 = h.svc->add_bookmark(oil.id, 0, "oil");
  auto b2 = h.svc->add_bookmark(fed.id, 1, "rates");
  CHECK(code_of([&] { h.svc->add_bookmark(fed.id, 2, "x"); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { h.svc->add_bookmark("t_404", 0, "x"); }) == ErrorCode::UnknownTurn);
  CHECK(h.svc->list_bookmarks(sid) == std::vector<Bookmark>{b1, b2});

  auto cmp = h.svc->compare({b2.id, b1.id});
  REQUIRE(cmp["entries"].size() == 2);
  CHECK(cmp["entries"][0]["bookmark"]["label"] == "rates");
  CHECK(cmp["entries"][0]["sub_task"] == fed.results[1].answer.sub_task);
  CHECK(cmp["entries"][1]["question"] == testing::kOilQuestion);
  for (const auto& e : cmp["entries"]) {
    CHECK(e.contains("sql"));
    CHECK(e.contains("result"));
    CHECK(e.contains("chart"));
  }
  CHECK(code_of([&] { h.svc->compare({"b_404"}); }) == ErrorCode::UnknownBookmark);
}

TEST_CASE("a restart keeps state and fails interrupted turns") {
  hdc::PipelineConfig p;
  p.require_confirmation = true;
  Harness h(p);
  auto sid = h.ready_session("financial");
  auto ds = h.svc->session(sid).session.dataset_id;
  auto held = h.svc->post_question(sid, testing::kOilQuestion);
  REQUIRE(held.status == TurnStatus::awaiting_confirmation);
  auto hdc_before = hdc::serialize(h.svc->hdc_of(ds));
  h.svc.reset();

  std::string running_id;
  {
    StateStore store(h.dir.path() / "state.db");
    Turn t;
    t.session_id = sid;
    t.question = {"half done", sid, "fixture-large"};
    t.status = TurnStatus::running;
    t.stage_events = {{"clarify", 1}};
    running_id = store.insert_turn(t).id;
  }

  auto descriptions_before = h.provider->calls(llm::Purpose::table_description);
  h.start();
  auto interrupted = h.svc->turn(sid, running_id);
  CHECK(interrupted.status == TurnStatus::failed);
  REQUIRE(interrupted.error);
  CHECK(interrupted.error->message.find("restart") != std::string::npos);

  CHECK(h.svc->dataset(ds).hdc_state == HdcState::ready);
  CHECK(hdc::serialize(h.svc->hdc_of(ds)) == hdc_before);
  CHECK(h.provider->calls(llm::Purpose::table_description) == descriptions_before);

  // The held turn survives and still blocks the session until confirmed.
  CHECK(h.svc->turn(sid, held.id).status == TurnStatus::awaiting_confirmation);
  CHECK(code_of([&] { h.svc->post_question(sid, testing::kGrowthQuestion); }) == ErrorCode::SessionBusy);
  CHECK(h.svc->confirm_turn(sid, held.id, true).status == TurnStatus::done);
}

TEST_CASE("a missing HDC file sends the dataset back to generation") {
  Harness h;
  auto sid = h.ready_session("bird");
  auto ds = h.svc->session(sid).session.dataset_id;
  h.svc.reset();
  std::filesystem::remove(h.dir.path() / "hdc" / (ds + ".json"));
  h.start();
  CHECK(h.svc->dataset(ds).hdc_state == HdcState::none);
  h.svc->create_session(ds);
  CHECK(h.svc->wait_for_hdc(ds, std::chrono::seconds(30)) == HdcState::ready);
}

TEST_CASE("failed HDC generation is reported on the dataset") {
  auto provider = std::make_shared<FunctionProvider>([](const llm::LlmRequest& r) {
    if (r.purpose == llm::Purpose::db_summary) return std::string("nonsense");
    return FixtureProvider::reply_for(r);
  });
  testing::TempDir dir;
  InsightService svc(ServiceOptions{dir.path(), {}}, testing::provider_gateway(provider));
  auto d = svc.register_dataset(testing::fixture_spec("bird"), "bird");
  auto view = svc.create_session(d.id);
  CHECK(svc.wait_for_hdc(d.id, std::chrono::seconds(30)) == HdcState::failed);
  auto failed = svc.session(view.session.id);
  CHECK(failed.state == HdcState::failed);
  CHECK(failed.state_error.find("db_summary") != std::string::npos);
}
