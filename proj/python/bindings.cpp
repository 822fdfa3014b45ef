// Python module. Structured values cross the boundary as JSON text; the
// package wrapper converts them to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"
#include "rtoslab/bench/bench.hpp"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/explore/stress.hpp"
#include "rtoslab/hw/dma.hpp"
#include "rtoslab/hw/gpio.hpp"
#include "rtoslab/io/fingerprint.hpp"
#include "rtoslab/io/reports.hpp"
#include "rtoslab/io/scenario_io.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace rtoslab;

namespace {

kernel::ArchConfig arch_or_throw(const std::string& id) {
  auto a = kernel::parse_arch(id);
  if (!a) throw py::value_error("unknown architecture '" + id + "'");
  return *a;
}

sim::CostModel cost_of(const std::string& cost_json) {
  if (cost_json.empty()) return {};
  return io::cost_model_from_json(json::parse(cost_json), "$.costModel");
}

std::string explore_scenario(const std::string& scenario_json, const std::vector<std::string>& archs,
                             std::uint64_t step_bound, const std::string& cost_json) {
  auto sc = io::parse_scenario(json::parse(scenario_json));
  if (!cost_json.empty()) sc.system.cost = cost_of(cost_json);
  auto ids = archs.empty() ? sc.architectures : archs;
  json out = json::array();
  for (const auto& id : ids) {
    if (sc.kind == io::ScenarioKind::Kernel) arch_or_throw(id);
    explore::ExploreOptions opt;
    opt.step_bound = step_bound ? step_bound : sc.step_bound;
    explore::ExplorationReport rep;
    {
      py::gil_scoped_release nogil;
      rep = explore::explore(io::make_factory(sc, id), opt);
    }
    auto j = io::report_to_json(rep);
    j["scenario"] = sc.name;
    j["architecture"] = id;
    j["expect"] = sc.expect_violation ? "violation" : "pass";
    j["fingerprint"] = io::fingerprint(sc.source);
    json traces = json::array();
    for (const auto& t : rep.violations) traces.push_back(io::trace_to_json(t, sc.name, id, j["fingerprint"]));
    j["traces"] = traces;
    out.push_back(j);
  }
  return out.dump();
}

std::string replay_trace(const std::string& scenario_json, const std::string& trace_json, const std::string& cost_json) {
  auto sc = io::parse_scenario(json::parse(scenario_json));
  if (!cost_json.empty()) sc.system.cost = cost_of(cost_json);
  auto t = io::trace_from_json(json::parse(trace_json));
  auto r = explore::replay(io::make_factory(sc, t.architecture), t.choices);
  json j{{"labels", r.labels}, {"logicalState", r.logical_state}, {"reproduced", !r.error && r.outcome == t.outcome}};
  j["outcome"] = r.outcome ? json{{"invariant", r.outcome->invariant}, {"message", r.outcome->message}, {"step", r.outcome->step}}
                           : json(nullptr);
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  return j.dump();
}

std::string sweep(const std::string& id, const std::vector<int>& ns, const std::string& cost_json) {
  json out = json::array();
  for (const auto& p : bench::masked_interval_sweep(arch_or_throw(id), ns, cost_of(cost_json))) {
    out.push_back({{"n", p.n},
                   {"peripheralMax", p.peripheral_max},
                   {"peripheralKernelMax", p.peripheral_kernel_max},
                   {"softwareMax", p.software_max},
                   {"totalCycles", p.total_cycles},
                   {"readied", p.readied}});
  }
  return out.dump();
}

kernel::ReadyListKind ready_kind(const std::string& s) {
  if (s == "sorted-atomic") return kernel::ReadyListKind::SortedAtomic;
  if (s == "sorted-plain") return kernel::ReadyListKind::SortedPlain;
  if (s == "unsorted") return kernel::ReadyListKind::Unsorted;
  throw py::value_error("unknown ready-list variant '" + s + "'");
}

std::string footprint(const std::string& id, const std::string& config_json) {
  bench::FootprintConfig cfg;
  if (!config_json.empty()) cfg = io::footprint_config_from_json(json::parse(config_json));
  return io::to_json(bench::memory_footprint(arch_or_throw(id), cfg)).dump();
}

std::string latency(const std::string& id, const std::string& cost_json) {
  auto p = bench::latency_probe(arch_or_throw(id), cost_of(cost_json));
  return json{{"architecture", p.arch},
              {"giveToDispatch", p.give_to_dispatch},
              {"giveToUnblock", p.give_to_unblock},
              {"entriesToUnblock", p.entries_to_unblock},
              {"entriesToDispatch", p.entries_to_dispatch},
              {"loopIterations", p.loop_iterations}}
      .dump();
}

std::string dma(const std::optional<std::filesystem::path>& stream, sim::Cycles delay, const std::string& mode,
                std::size_t threshold, std::size_t capacity) {
  hw::DmaDemoOptions opt;
  opt.handler_delay = delay;
  opt.capacity = capacity;
  if (mode == "classic") {
    opt.mode = hw::DmaMode::ClassicThreshold;
    if (threshold == 0) throw py::value_error("classic mode needs a threshold");
    opt.threshold = threshold;
  } else if (mode != "circular") {
    throw py::value_error("mode must be 'circular' or 'classic'");
  }
  auto s = stream ? hw::load_stream(*stream) : hw::bundled_stream();
  return io::to_json(hw::dma_demo(s, opt)).dump();
}

std::string gpio(const std::string& id, int n, bool escape, std::uint64_t bytes, sim::Cycles byte_period,
                 sim::Cycles mask_period) {
  if (mask_period == 0 || byte_period == 0) throw py::value_error("periods must be positive");
  hw::GpioScenario sc;
  sc.bytes = bytes;
  sc.byte_period = byte_period;
  sc.escape = escape;
  sc.masks = hw::rtos_mask_pattern(arch_or_throw(id), n, mask_period,
                                   static_cast<int>(bytes * byte_period / mask_period + 1));
  return io::to_json(hw::gpio_escape(sc)).dump();
}

std::string stress(const std::string& variant, int inserters, int nodes, std::uint64_t seed) {
  explore::StressOptions opt;
  if (variant == "ktails") {
    opt.kind = kernel::ReadyListKind::SortedAtomic;
    opt.k_tails = 4;
  } else {
    opt.kind = ready_kind(variant);
  }
  opt.inserters = inserters;
  opt.nodes_per_inserter = nodes;
  opt.seed = seed;
  explore::StressReport r;
  {
    py::gil_scoped_release nogil;
    r = explore::stress_ready_list(opt);
  }
  json j{{"inserted", r.inserted}, {"extracted", r.extracted}, {"remaining", r.remaining}, {"restarts", r.restarts}};
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_rtoslab, m) {
  m.doc() = "RTOS interrupt-masking architectures: simulator, explorer and benchmarks";

  py::register_exception<io::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<kernel::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("architectures", &kernel::all_arch_ids);
  m.def("explore_scenario", &explore_scenario, py::arg("scenario_json"), py::arg("archs") = std::vector<std::string>{},
        py::arg("step_bound") = 0, py::arg("cost_json") = "");
  m.def("replay", &replay_trace, py::arg("scenario_json"), py::arg("trace_json"), py::arg("cost_json") = "");
  m.def("masked_interval_sweep", &sweep, py::arg("arch"), py::arg("ns"), py::arg("cost_json") = "");
  m.def(
      "ready_list_pathology",
      [](const std::string& variant, int n, int k_tails) { return bench::ready_list_pathology(ready_kind(variant), n, k_tails); },
      py::arg("variant"), py::arg("n"), py::arg("k_tails") = 1);
  m.def("memory_footprint", &footprint, py::arg("arch"), py::arg("config_json") = "");
  m.def("latency_probe", &latency, py::arg("arch"), py::arg("cost_json") = "");
  m.def(
      "systick_expiry",
      [](const std::string& id, int n, bool blocked) { return bench::systick_expiry(arch_or_throw(id), n, blocked); },
      py::arg("arch"), py::arg("n"), py::arg("blocked"));
  m.def(
      "bitmap_search",
      [](kernel::Word w) {
        int iters = 0;
        int bit = kernel::bitmap_search(w, &iters);
        return py::make_tuple(bit, iters);
      },
      py::arg("word"));
  m.def(
      "run_bench",
      [](const std::vector<std::string>& archs, const std::vector<int>& ns, const std::filesystem::path& out) {
        for (const auto& id : archs) arch_or_throw(id);
        bench::BenchOptions opt;
        opt.ns = ns;
        return bench::run_bench(archs, opt, out);
      },
      py::arg("archs"), py::arg("ns"), py::arg("out"));
  m.def("write_report", &bench::write_report, py::arg("out"));
  m.def("dma_demo", &dma, py::arg("stream") = std::nullopt, py::arg("delay") = 10'000, py::arg("mode") = "circular",
        py::arg("threshold") = 0, py::arg("capacity") = 1024);
  m.def("gpio_demo", &gpio, py::arg("arch") = "baseline", py::arg("n") = 32, py::arg("escape") = false,
        py::arg("bytes") = 200, py::arg("byte_period") = 200, py::arg("mask_period") = 2000);
  m.def("stress", &stress, py::arg("variant") = "sorted-atomic", py::arg("inserters") = 3, py::arg("nodes") = 200,
        py::arg("seed") = 1);
  m.def(
      "fingerprint", [](const std::string& j) { return io::fingerprint(json::parse(j)); }, py::arg("config_json"));
}
