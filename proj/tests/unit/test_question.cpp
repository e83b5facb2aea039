#include <doctest.h>

#include "fixture_model.hpp"
#include "fixtures.hpp"
#include "insight/error.hpp"
#include "insight/question/pipeline.hpp"

using namespace insight;
using namespace insight::question;
using insight::testing::FixtureProvider;
using insight::testing::FunctionProvider;
using nlohmann::json;

namespace {

const hdc::HierarchicalDataContext& financial() { return testing::fixture_hdc("financial"); }

ClarifiedTask clarify_text(const std::string& text, llm::Gateway& gw) {
  return clarify(UserQuestion{text, "s_1", "fixture-large"}, financial(), gw);
}

}  // namespace

TEST_CASE("an under-specified trend question gains a time scope") {
  auto gw = testing::fixture_gateway();
  auto t = clarify_text("What is the growth rate?", *gw);
  CHECK(t.original == "What is the growth rate?");
  CHECK(t.clarified == "What is the growth rate for the current year?");
  CHECK(t.assumptions == std::vector<std::string>{"time scope defaulted to the current year"});
  CHECK_FALSE(t.off_topic);
  CHECK(gw->stats().calls(llm::Purpose::clarify) == 1);
}

TEST_CASE("a precise question is returned unchanged") {
  auto gw = testing::fixture_gateway();
  auto t = clarify_text("List each loan status and its count.", *gw);
  CHECK(t.clarified == t.original);
  CHECK(t.assumptions.empty());
}

TEST_CASE("questions outside the database are flagged with a suggestion") {
  auto gw = testing::fixture_gateway();
  auto t = clarify_text("Who won the 1998 world cup?", *gw);
  CHECK(t.off_topic);
  CHECK_FALSE(t.suggestion.empty());
  CHECK(t.clarified == t.original);
  CHECK(t.work_items() == std::vector<std::string>{t.original});

  // Decomposition makes no call for an off-topic task.
  auto d = decompose(t, financial(), {}, hdc::LlmContext{*gw, "fixture-large"});
  CHECK(gw->stats().calls(llm::Purpose::decompose) == 0);
  CHECK_FALSE(d.needs_decomposition);
}

TEST_CASE("empty questions never reach the model") {
  auto provider = std::make_shared<testing::PanicProvider>();
  auto gw = testing::provider_gateway(provider);
  try {
    clarify_text("  \n ", *gw);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("assumptions without a rewrite keep the original text") {
  auto provider = std::make_shared<FunctionProvider>([](const llm::LlmRequest&) {
    return json{{"clarified", ""}, {"assumptions", {"x"}}, {"off_topic", false}}.dump();
  });
  auto gw = testing::provider_gateway(provider);
  // An empty rewrite is refused once by the validator, repaired, refused again.
  CHECK_THROWS_AS(clarify_text("What is the growth rate?", *gw), Error);

  auto unchanged = std::make_shared<FunctionProvider>([](const llm::LlmRequest&) {
    return json{{"clarified", "Something else"}, {"assumptions", json::array()}}.dump();
  });
  auto gw2 = testing::provider_gateway(unchanged);
  auto t = clarify_text("What is the growth rate?", *gw2);
  CHECK(t.clarified == "What is the growth rate?");
}

TEST_CASE("decomposition") {
  auto gw = testing::fixture_gateway();
  hdc::LlmContext llm{*gw, "fixture-large"};

  auto fed = decompose(clarify_text("Identify the impact of Federal Reserve interest rate hikes.", *gw), financial(), {}, llm);
  CHECK(fed.needs_decomposition);
  REQUIRE(fed.sub_tasks.size() == 2);
  CHECK(fed.work_items() == fed.sub_tasks);
  CHECK_NOTHROW(fed.check_invariants(5));

  auto single = decompose(clarify_text("How did oil prices change?", *gw), financial(), {}, llm);
  CHECK_FALSE(single.needs_decomposition);
  CHECK(single.work_items() == std::vector<std::string>{single.clarified});
}

TEST_CASE("decomposition is capped and the cap is recorded") {
  auto provider = std::make_shared<FunctionProvider>([](const llm::LlmRequest& r) {
    CHECK(testing::request_input(r)["max_sub_tasks"] == 3);
    return json{{"needs_decomposition", true}, {"sub_tasks", {"a", "b", " ", "c", "d", "e"}}}.dump();
  });
  auto gw = testing::provider_gateway(provider);
  hdc::PipelineConfig cfg;
  cfg.decompose_max_subtasks = 3;
  ClarifiedTask t{"q", "q", {}, false, {}, false, ""};
  auto d = decompose(t, financial(), cfg, hdc::LlmContext{*gw, "fixture-large"});
  CHECK(d.sub_tasks == std::vector<std::string>{"a", "b", "c"});
  CHECK(d.assumptions.back() == "decomposition truncated from 5 to 3 sub-tasks");
  CHECK_NOTHROW(d.check_invariants(3));
}

TEST_CASE("a single sub-task is not a decomposition") {
  auto provider = std::make_shared<FunctionProvider>([](const llm::LlmRequest&) {
    return json{{"needs_decomposition", true}, {"sub_tasks", {"only"}}}.dump();
  });
  auto gw = testing::provider_gateway(provider);
  ClarifiedTask t{"q", "q", {}, false, {}, false, ""};
  auto d = decompose(t, financial(), {}, hdc::LlmContext{*gw, "fixture-large"});
  CHECK_FALSE(d.needs_decomposition);
  CHECK(d.sub_tasks.empty());
}

TEST_CASE("task invariants and JSON") {
  ClarifiedTask bad{"q", "q", {}, true, {}, false, ""};
  CHECK_THROWS_AS(bad.check_invariants(5), Error);
  ClarifiedTask too_many{"q", "q", {}, true, {"a", "b", "c"}, false, ""};
  CHECK_THROWS_AS(too_many.check_invariants(2), Error);
  ClarifiedTask flagless{"q", "q", {}, false, {"a", "b"}, false, ""};
  CHECK_THROWS_AS(flagless.check_invariants(5), Error);

  ClarifiedTask t{"orig", "clar", {"a1"}, true, {"s1", "s2"}, false, "sugg"};
  json j = t;
  CHECK(j.get<ClarifiedTask>() == t);
}
