#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/explore/subjects.hpp"
#include "rtoslab/scenario/system.hpp"

namespace rtoslab::io {

using nlohmann::json;

inline constexpr const char* kScenarioSchema = "rtoslab.scenario/1";
inline constexpr const char* kTraceSchema = "rtoslab.trace/1";

/// Malformed input. `path` points at the offending value, e.g.
/// "$.tasks[1].script[0].op".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class ScenarioKind { Kernel, ReadyList, DmaHandshake };

struct DmaHandshakeSpec {
  std::size_t bytes = 3;
  bool handshake = true;
  std::size_t capacity = 16;
};

/// A parsed scenario file. Kernel scenarios may name several architectures;
/// each is explored separately.
struct ScenarioFile {
  std::string name;
  ScenarioKind kind = ScenarioKind::Kernel;
  std::vector<std::string> architectures;
  scenario::SystemSpec system;  // arch filled per run
  explore::ReadyListScenario ready_list;
  DmaHandshakeSpec dma;
  std::uint64_t step_bound = 400;
  bool expect_violation = false;
  std::optional<std::string> expect_invariant;
  json source;  // canonical input, for fingerprints
};

ScenarioFile parse_scenario(const json& j);
/// Reads and parses a file; JSON syntax errors become SchemaError at "$".
ScenarioFile load_scenario(const std::filesystem::path& p);

/// Subject factory for one architecture of the scenario (ignored for
/// ready-list and DMA scenarios).
explore::Factory make_factory(const ScenarioFile& sc, const std::string& arch);
/// Kernel spec for one architecture, mutant applied.
scenario::SystemSpec system_for(const ScenarioFile& sc, const std::string& arch);

json cost_model_to_json(const sim::CostModel& c);
/// Reads a cost model object; missing keys keep their defaults.
sim::CostModel cost_model_from_json(const json& j, const std::string& path = "$");

json trace_to_json(const explore::Trace& t, const std::string& scenario, const std::string& arch,
                   const std::string& fingerprint);
struct TraceFile {
  std::string scenario;
  std::string architecture;
  std::string fingerprint;
  std::vector<explore::Choice> choices;
  std::optional<explore::Violation> outcome;
};
TraceFile trace_from_json(const json& j);

json report_to_json(const explore::ExplorationReport& r);

}  // namespace rtoslab::io
