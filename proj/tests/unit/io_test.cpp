#include "doctest.h"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/io/fingerprint.hpp"
#include "rtoslab/io/reports.hpp"
#include "rtoslab/io/scenario_io.hpp"

using namespace rtoslab;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "schema": "rtoslab.scenario/1",
    "name": "mini",
    "architecture": "strictly-atomic",
    "semaphores": [{"name": "s", "isrReleased": true}],
    "tasks": [{"name": "t", "priority": 1, "script": [{"op": "take", "semaphore": "s"}]}],
    "isrs": [{"name": "i", "priority": 2, "gives": ["s"]}]
  })");
}

std::string error_path(const json& j) {
  try {
    io::parse_scenario(j);
  } catch (const io::SchemaError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("a minimal scenario parses") {
  auto sc = io::parse_scenario(minimal());
  CHECK(sc.name == "mini");
  CHECK(sc.architectures == std::vector<std::string>{"strictly-atomic"});
  CHECK(sc.system.tasks.size() == 1);
  auto rep = explore::explore(io::make_factory(sc, "strictly-atomic"));
  CHECK(rep.violating_schedules == 0);
}

TEST_CASE("schema errors name the offending path") {
  auto j = minimal();
  j["tasks"][0]["script"][0]["op"] = "grab";
  CHECK(error_path(j) == "$.tasks[0].script[0].op");

  j = minimal();
  j["bogus"] = 1;
  CHECK(error_path(j) == "$.bogus");

  j = minimal();
  j["architecture"] = "defer-magic";
  CHECK(error_path(j) == "$.architecture");

  j = minimal();
  j["isrs"][0]["gives"][0] = "nope";
  CHECK(error_path(j).rfind("$.isrs[0].gives[0]", 0) == 0);

  j = minimal();
  j["schema"] = "something/2";
  CHECK(error_path(j) == "$.schema");
}

TEST_CASE("cost models round-trip and reject unknown keys") {
  sim::CostModel c;
  c.kernel_body = 321;
  c.loop_iteration = 3;
  auto back = io::cost_model_from_json(io::cost_model_to_json(c));
  CHECK(back.kernel_body == 321);
  CHECK(back.loop_iteration == 3);
  CHECK_THROWS_AS(io::cost_model_from_json(json{{"kernelBdy", 1}}), io::SchemaError);
}

TEST_CASE("traces round-trip through JSON") {
  auto sc = io::load_scenario(std::filesystem::path(RTOSLAB_SOURCE_DIR) / "scenarios" / "fig3_nonatomic.json");
  auto rep = explore::explore(io::make_factory(sc, "defer-semfifo"));
  REQUIRE_FALSE(rep.violations.empty());
  auto j = io::trace_to_json(rep.violations.front(), sc.name, "defer-semfifo", io::fingerprint(sc.source));
  auto t = io::trace_from_json(json::parse(j.dump()));
  CHECK(t.scenario == sc.name);
  CHECK(t.architecture == "defer-semfifo");
  CHECK(t.choices == rep.violations.front().choices);
  CHECK(t.outcome == rep.violations.front().outcome);
}

TEST_CASE("fingerprints ignore key order and see value changes") {
  auto a = json::parse(R"({"x": 1, "y": [1, 2]})");
  auto b = json::parse(R"({"y": [1, 2], "x": 1})");
  auto c = json::parse(R"({"y": [2, 1], "x": 1})");
  CHECK(io::fingerprint(a) == io::fingerprint(b));
  CHECK(io::fingerprint(a) != io::fingerprint(c));
  CHECK(io::fingerprint(a).size() == 16);
  // FNV-1a of the canonical dump "{}".
  CHECK(io::fingerprint(json::object()) == "08f44b07b5901a25");
}

TEST_CASE("footprint configs reject unknown keys") {
  auto c = io::footprint_config_from_json(json{{"tasks", 5}, {"isrSemaphores", 2}});
  CHECK(c.tasks == 5);
  CHECK(c.isr_semaphores == 2);
  CHECK_THROWS_AS(io::footprint_config_from_json(json{{"task", 5}}), io::SchemaError);
  CHECK_THROWS_AS(io::footprint_config_from_json(json{{"tasks", -1}}), io::SchemaError);
}
