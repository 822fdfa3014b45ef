#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtoslab/bench/bench.hpp"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/explore/stress.hpp"
#include "rtoslab/hw/dma.hpp"
#include "rtoslab/hw/gpio.hpp"
#include "rtoslab/io/fingerprint.hpp"
#include "rtoslab/io/reports.hpp"
#include "rtoslab/io/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtoslab;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path out_dir(const std::string& flag) {
  if (const char* env = std::getenv("RTOSLAB_OUT"); env && *env) return env;
  return flag;
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << "\n";
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw io::SchemaError("$", "cannot open " + p.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw io::SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> arch_list(const std::string& s) {
  if (s == "all") return kernel::all_arch_ids();
  auto ids = split(s, ',');
  if (ids.empty()) throw UsageError("empty architecture list");
  for (const auto& id : ids) {
    if (!kernel::parse_arch(id)) throw UsageError("unknown architecture '" + id + "'");
  }
  return ids;
}

/// "2,4,8" lists points; "a..b" doubles from a up to b; "a..b:s" steps by s.
std::vector<int> n_range(const std::string& s) {
  auto to_int = [&](const std::string& x) {
    try {
      std::size_t used = 0;
      int v = std::stoi(x, &used);
      if (used != x.size() || v < 1) throw std::invalid_argument(x);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad --n-range '" + s + "'");
    }
  };
  std::vector<int> ns;
  auto dots = s.find("..");
  if (dots == std::string::npos) {
    for (const auto& x : split(s, ',')) ns.push_back(to_int(x));
  } else {
    int lo = to_int(s.substr(0, dots));
    auto rest = s.substr(dots + 2);
    auto colon = rest.find(':');
    int hi = to_int(rest.substr(0, colon));
    if (hi < lo) throw UsageError("bad --n-range '" + s + "'");
    if (colon == std::string::npos) {
      for (long n = lo; n <= hi; n *= 2) ns.push_back(static_cast<int>(n));
    } else {
      int step = to_int(rest.substr(colon + 1));
      for (int n = lo; n <= hi; n += step) ns.push_back(n);
    }
  }
  if (ns.empty()) throw UsageError("empty --n-range");
  if (ns.back() > 64) throw UsageError("--n-range above 64 tasks");
  return ns;
}

sim::CostModel load_cost(const std::string& path) {
  if (path.empty()) return {};
  return io::cost_model_from_json(read_json(path));
}

std::string safe(const std::string& s) {
  std::string o = s;
  for (auto& c : o) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return o;
}

// explore

struct ExploreArgs {
  std::string scenario, arch, out = "out", cost;
  std::uint64_t step_bound = 0;
};

int cmd_explore(const ExploreArgs& a) {
  auto sc = io::load_scenario(a.scenario);
  if (!a.cost.empty()) sc.system.cost = load_cost(a.cost);
  if (a.step_bound) sc.step_bound = a.step_bound;
  auto archs = sc.architectures;
  if (!a.arch.empty()) {
    if (sc.kind != io::ScenarioKind::Kernel) throw UsageError("--arch applies to kernel scenarios only");
    archs = arch_list(a.arch);
  }
  fs::path dir = out_dir(a.out) / "explore";
  int status = kOk;
  for (const auto& arch : archs) {
    explore::ExploreOptions opt;
    opt.step_bound = sc.step_bound;
    auto rep = explore::explore(io::make_factory(sc, arch), opt);

    json config{{"scenario", sc.source},
                {"architecture", arch},
                {"costModel", io::cost_model_to_json(sc.system.cost)},
                {"stepBound", sc.step_bound}};
    auto fp = io::fingerprint(config);

    bool expected_hit = !sc.expect_invariant;
    for (const auto& t : rep.violations) {
      if (sc.expect_invariant && t.outcome && t.outcome->invariant == *sc.expect_invariant) expected_hit = true;
    }
    bool ok;
    if (rep.error) {
      ok = false;
    } else if (sc.expect_violation) {
      ok = rep.violating_schedules > 0 && expected_hit;
    } else {
      ok = rep.violating_schedules == 0;
    }

    std::string stem = safe(sc.name) + "." + safe(arch);
    json j = io::report_to_json(rep);
    j["scenario"] = sc.name;
    j["architecture"] = arch;
    j["expect"] = sc.expect_violation ? "violation" : "pass";
    j["fingerprint"] = fp;
    j["verdict"] = ok ? "as-expected" : "unexpected";
    json traces = json::array();
    for (std::size_t i = 0; i < rep.violations.size(); ++i) {
      auto tp = dir / (stem + ".trace" + std::to_string(i) + ".json");
      write_json(tp, io::trace_to_json(rep.violations[i], sc.name, arch, fp));
      traces.push_back(tp.filename().string());
    }
    j["traces"] = traces;
    write_json(dir / (stem + ".report.json"), j);

    std::cout << sc.name << " [" << arch << "] schedules=" << rep.schedules
              << " violating=" << rep.violating_schedules;
    if (!rep.violations.empty() && rep.violations[0].outcome) std::cout << " first=" << rep.violations[0].outcome->invariant;
    if (rep.error) std::cout << " error=\"" << *rep.error << "\"";
    std::cout << " -> " << (ok ? "ok" : "UNEXPECTED") << " fingerprint=" << fp << "\n";
    if (!ok) status = kViolation;
  }
  return status;
}

// replay

int cmd_replay(const std::string& scenario, const std::string& trace_path, const std::string& cost) {
  auto sc = io::load_scenario(scenario);
  if (!cost.empty()) sc.system.cost = load_cost(cost);
  auto tf = io::trace_from_json(read_json(trace_path));
  if (tf.scenario != sc.name) throw UsageError("trace belongs to scenario '" + tf.scenario + "'");
  if (sc.kind == io::ScenarioKind::Kernel && !kernel::parse_arch(tf.architecture)) {
    throw UsageError("trace names unknown architecture '" + tf.architecture + "'");
  }
  auto res = explore::replay(io::make_factory(sc, tf.architecture), tf.choices);
  if (res.error) throw UsageError("trace does not fit the scenario: " + *res.error);
  for (const auto& l : res.labels) std::cout << "  " << l << "\n";
  auto show = [](const std::optional<explore::Violation>& v) {
    return v ? v->invariant + " at step " + std::to_string(v->step) : std::string("pass");
  };
  std::cout << "recorded: " << show(tf.outcome) << "\nreplayed: " << show(res.outcome) << "\n";
  bool same = tf.outcome.has_value() == res.outcome.has_value() &&
              (!tf.outcome || (tf.outcome->invariant == res.outcome->invariant && tf.outcome->step == res.outcome->step));
  std::cout << (same ? "reproduced" : "DIVERGED") << "\n";
  return same ? kOk : kViolation;
}

// bench

int cmd_bench(const std::string& archs, const std::string& range, const std::string& out, const std::string& cost,
              double hz) {
  bench::BenchOptions opt;
  opt.ns = n_range(range);
  opt.cost = load_cost(cost);
  if (hz > 0) opt.frequency_hz = hz;
  auto files = bench::run_bench(arch_list(archs), opt, out_dir(out));
  for (const auto& f : files) std::cout << f.string() << "\n";
  return kOk;
}

// dma-demo

struct DmaArgs {
  std::string stream, out = "out", mode = "circular";
  std::uint64_t delay = 10'000, threshold = 0, capacity = 1024;
};

int cmd_dma(const DmaArgs& a) {
  hw::FrameStream s = a.stream.empty() ? hw::bundled_stream() : hw::load_stream(a.stream);
  hw::DmaDemoOptions opt;
  opt.handler_delay = a.delay;
  opt.capacity = a.capacity;
  if (a.mode == "classic") {
    opt.mode = hw::DmaMode::ClassicThreshold;
    if (a.threshold == 0) throw UsageError("--threshold required for classic mode");
    opt.threshold = a.threshold;
  } else if (a.mode != "circular") {
    throw UsageError("--mode must be circular or classic");
  }
  auto rep = hw::dma_demo(s, opt);
  json config{{"stream", a.stream.empty() ? "bundled" : fs::path(a.stream).filename().string()},
              {"streamBytes", s.total_bytes()},
              {"mode", a.mode},
              {"handlerDelay", opt.handler_delay},
              {"capacity", opt.capacity},
              {"threshold", opt.threshold},
              {"byteCycles", opt.byte_cycles}};
  json j = io::to_json(rep);
  j["config"] = config;
  j["fingerprint"] = io::fingerprint(config);
  std::string stem = a.stream.empty() ? "bundled" : fs::path(a.stream).stem().string();
  auto p = out_dir(a.out) / "hw" / ("dma-" + safe(stem) + "-" + a.mode + ".json");
  write_json(p, j);
  std::cout << "frames " << rep.frames_recovered << "/" << rep.frames_injected << " bytes " << rep.recovered_bytes << "/"
            << rep.injected_bytes << " lost=" << rep.lost << " intact=" << (rep.intact ? "yes" : "no") << " -> "
            << p.string() << "\n";
  return kOk;
}

// gpio-demo

int cmd_gpio(const std::string& arch, int n, bool escape, std::uint64_t bytes, std::uint64_t period,
             std::uint64_t mask_period, const std::string& out) {
  auto a = kernel::parse_arch(arch);
  if (!a) throw UsageError("unknown architecture '" + arch + "'");
  if (n < 1 || n > 64) throw UsageError("--n must be in 1..64");
  if (period == 0 || mask_period == 0) throw UsageError("periods must be positive");
  hw::GpioScenario sc;
  sc.bytes = bytes;
  sc.byte_period = period;
  sc.escape = escape;
  sc.masks = hw::rtos_mask_pattern(*a, n, mask_period, static_cast<int>(bytes * period / mask_period + 1));
  auto rep = hw::gpio_escape(sc);
  json config{{"architecture", arch}, {"n", n},         {"escape", escape},
              {"bytes", bytes},       {"bytePeriod", period}, {"maskPeriod", mask_period}};
  json j = io::to_json(rep);
  j["config"] = config;
  j["fingerprint"] = io::fingerprint(config);
  auto p = out_dir(out) / "hw" / ("gpio-" + safe(arch) + "-n" + std::to_string(n) + (escape ? "-escape" : "-direct") + ".json");
  write_json(p, j);
  std::cout << "bytes " << rep.received << "/" << rep.injected << " lost=" << rep.lost << " resources=" << rep.resources
            << " -> " << p.string() << "\n";
  return kOk;
}

// stress

int cmd_stress(const std::string& variant, std::uint64_t seed, int inserters, int nodes) {
  explore::StressOptions opt;
  if (variant == "sorted-atomic") {
    opt.kind = kernel::ReadyListKind::SortedAtomic;
  } else if (variant == "unsorted") {
    opt.kind = kernel::ReadyListKind::Unsorted;
  } else if (variant == "ktails") {
    opt.kind = kernel::ReadyListKind::Unsorted;
    opt.k_tails = 3;
  } else {
    throw UsageError("--variant must be sorted-atomic, unsorted or ktails");
  }
  if (inserters < 1 || nodes < 1) throw UsageError("--inserters and --nodes must be positive");
  opt.seed = seed;
  opt.inserters = inserters;
  opt.nodes_per_inserter = nodes;
  auto rep = explore::stress_ready_list(opt);
  std::cout << "inserted=" << rep.inserted << " extracted=" << rep.extracted << " remaining=" << rep.remaining
            << " restarts=" << rep.restarts << (rep.error ? " error=" + *rep.error : std::string(" ok")) << "\n";
  return rep.error ? kViolation : kOk;
}

// generate

/// Random ready-list scenario small enough for exhaustive exploration.
int cmd_generate(std::uint64_t seed, const std::string& variant, const std::string& file) {
  if (variant != "sorted-atomic" && variant != "unsorted") throw UsageError("--variant must be sorted-atomic or unsorted");
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int nodes = uni(3, 5);
  json prios = json::array();
  for (int i = 0; i < nodes; ++i) prios.push_back(uni(0, 3));
  std::vector<int> order(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  int initial = uni(0, nodes - 2);
  json init = json::array();
  std::size_t k = 0;
  for (; k < static_cast<std::size_t>(initial); ++k) init.push_back(order[k]);
  int n_ins = std::min(uni(1, 3), nodes - initial);
  json ins = json::array();
  for (int i = 0; i < n_ins; ++i) ins.push_back(json{{"name", "isr" + std::to_string(i)}, {"priority", i}, {"nodes", json::array()}});
  for (int i = 0; k < order.size(); ++k, ++i) ins[static_cast<std::size_t>(i % n_ins)]["nodes"].push_back(order[k]);
  json j{{"schema", io::kScenarioSchema},
         {"name", "generated-" + std::to_string(seed)},
         {"kind", "ready-list"},
         {"readyList", {{"variant", variant}, {"priorities", prios}, {"initial", init}, {"inserters", ins}, {"extractions", 1}}}};
  io::parse_scenario(j);
  if (file.empty() || file == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(file, j);
    std::cout << file << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and explorer for interrupt-masking-free RTOS kernel designs"};
  app.require_subcommand(1);

  ExploreArgs ex;
  auto* explore_cmd = app.add_subcommand("explore", "Exhaustively explore a scenario file");
  explore_cmd->add_option("--scenario", ex.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  explore_cmd->add_option("--arch", ex.arch, "Architecture ids (comma separated or 'all'); overrides the file");
  explore_cmd->add_option("--out", ex.out, "Output directory");
  explore_cmd->add_option("--cost-model", ex.cost, "Cost model JSON")->check(CLI::ExistingFile);
  explore_cmd->add_option("--step-bound", ex.step_bound, "Primitive steps per schedule");

  std::string rp_scenario, rp_trace, rp_cost;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a violation trace");
  replay_cmd->add_option("--scenario", rp_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--trace", rp_trace, "Trace JSON")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--cost-model", rp_cost, "Cost model JSON")->check(CLI::ExistingFile);

  std::string b_arch = "baseline,defer-bitmap,barriers-unsorted,strictly-atomic", b_range = "2..32", b_out = "out", b_cost;
  double b_hz = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Masked-interval sweeps and comparison tables");
  bench_cmd->add_option("--arch", b_arch, "Architecture ids (comma separated or 'all')");
  bench_cmd->add_option("--n-range", b_range, "Task counts: 2,4,8 or 2..32 (doubling) or 2..32:2");
  bench_cmd->add_option("--out", b_out, "Output directory");
  bench_cmd->add_option("--cost-model", b_cost, "Cost model JSON")->check(CLI::ExistingFile);
  bench_cmd->add_option("--frequency-hz", b_hz, "Core clock for Hz columns");

  DmaArgs dm;
  auto* dma_cmd = app.add_subcommand("dma-demo", "Feed a frame stream through the pause-capable DMA controller");
  dma_cmd->add_option("--stream", dm.stream, "Binary frame stream (default: bundled five-frame stream)")
      ->check(CLI::ExistingFile);
  dma_cmd->add_option("--out", dm.out, "Output directory");
  dma_cmd->add_option("--delay", dm.delay, "Software response delay in cycles");
  dma_cmd->add_option("--mode", dm.mode, "circular or classic");
  dma_cmd->add_option("--threshold", dm.threshold, "Bytes per interrupt in classic mode");
  dma_cmd->add_option("--capacity", dm.capacity, "Ring capacity in bytes");

  std::string g_arch = "baseline", g_out = "out";
  int g_n = 32;
  bool g_escape = false;
  std::uint64_t g_bytes = 200, g_period = 200, g_mask_period = 2000;
  auto* gpio_cmd = app.add_subcommand("gpio-demo", "Peripheral data loss under kernel masking, with or without GPIO escape");
  gpio_cmd->add_option("--arch", g_arch, "Architecture whose masking pattern is applied");
  gpio_cmd->add_option("--n", g_n, "Task count of the masking scenario");
  gpio_cmd->add_flag("--escape", g_escape, "Peripheral ISR above the ceiling, GPIO ISR gives");
  gpio_cmd->add_option("--bytes", g_bytes, "Bytes in the stream");
  gpio_cmd->add_option("--byte-period", g_period, "Cycles between bytes");
  gpio_cmd->add_option("--mask-period", g_mask_period, "Cycles between kernel mask windows");
  gpio_cmd->add_option("--out", g_out, "Output directory");

  std::string r_out = "out";
  auto* report_cmd = app.add_subcommand("report", "Aggregate outputs into report.md");
  report_cmd->add_option("--out", r_out, "Output directory");

  std::string s_variant = "sorted-atomic";
  std::uint64_t s_seed = 1;
  int s_inserters = 3, s_nodes = 200;
  auto* stress_cmd = app.add_subcommand("stress", "Ready-list operations from parallel host threads");
  stress_cmd->add_option("--variant", s_variant, "sorted-atomic, unsorted or ktails");
  stress_cmd->add_option("--seed", s_seed, "Node priority seed");
  stress_cmd->add_option("--inserters", s_inserters, "Inserting threads");
  stress_cmd->add_option("--nodes", s_nodes, "Nodes per inserting thread");

  std::string gen_variant = "sorted-atomic", gen_file;
  std::uint64_t gen_seed = 1;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random small ready-list scenario");
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_option("--variant", gen_variant, "sorted-atomic or unsorted");
  gen_cmd->add_option("--file", gen_file, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*explore_cmd) return cmd_explore(ex);
    if (*replay_cmd) return cmd_replay(rp_scenario, rp_trace, rp_cost);
    if (*bench_cmd) return cmd_bench(b_arch, b_range, b_out, b_cost, b_hz);
    if (*dma_cmd) return cmd_dma(dm);
    if (*gpio_cmd) return cmd_gpio(g_arch, g_n, g_escape, g_bytes, g_period, g_mask_period, g_out);
    if (*report_cmd) {
      auto p = bench::write_report(out_dir(r_out));
      std::cout << p.string() << "\n";
      return kOk;
    }
    if (*stress_cmd) return cmd_stress(s_variant, s_seed, s_inserters, s_nodes);
    if (*gen_cmd) return cmd_generate(gen_seed, gen_variant, gen_file);
  } catch (const io::SchemaError& e) {
    std::cerr << "schema error at " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const kernel::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const hw::ProtocolFault& e) {
    std::cerr << "protocol fault: " << e.what() << "\n";
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
