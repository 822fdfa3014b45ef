#include "rtoslab/bench/bench.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rtoslab/io/fingerprint.hpp"
#include "rtoslab/kernel/ready_list.hpp"
#include "rtoslab/sim/host_port.hpp"

namespace rtoslab::bench {

namespace fs = std::filesystem;
using nlohmann::json;
using scenario::IsrSpec;
using scenario::SemSpec;
using scenario::SystemSpec;
using scenario::TaskAction;
using scenario::TaskSpec;
using Kind = kernel::InitialTask::Kind;

namespace {

json cost_json(const CostModel& c) {
  return {{"primitive", c.primitive},
          {"loopIteration", c.loop_iteration},
          {"kernelBody", c.kernel_body},
          {"interruptLatency", c.interrupt_latency},
          {"sysTickQuantum", c.systick_quantum}};
}

const char* level_name(sim::MaskLevel l) { return l == sim::MaskLevel::Peripheral ? "peripheral" : "software"; }

void write_file(const fs::path& p, const std::string& text, std::vector<fs::path>& written) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  written.push_back(p);
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

// Masked-interval sweep.

SystemSpec sweep_scenario(const kernel::ArchConfig& arch, int n, const CostModel& cost) {
  if (n < 1) throw kernel::ConfigError("sweep needs at least one task");
  SystemSpec s;
  s.name = "masked-interval-n" + std::to_string(n);
  s.arch = arch;
  s.cost = cost;
  s.sems = {SemSpec{"rx", 1, 0, true}};
  for (int i = 0; i + 1 < n; ++i) s.tasks.push_back(TaskSpec{"ready" + std::to_string(i), i + 1, Kind::Ready, -1, {}, {}});
  s.tasks.push_back(TaskSpec{"waiter", n, Kind::Blocked, 0, {}, {}});
  IsrSpec isr;
  isr.name = "rx_isr";
  isr.priority = 0;
  isr.gives = {0};
  isr.at = {0};
  s.isrs = {isr};
  return s;
}

std::vector<SweepPoint> masked_interval_sweep(const kernel::ArchConfig& arch, const std::vector<int>& ns,
                                              const CostModel& cost) {
  std::vector<SweepPoint> out;
  for (int n : ns) {
    scenario::System sys(sweep_scenario(arch, n, cost));
    auto r = sys.run_timed();
    if (sys.violation()) throw std::runtime_error("sweep n=" + std::to_string(n) + ": " + sys.violation()->message);
    if (!r.completed) throw std::runtime_error("sweep n=" + std::to_string(n) + " did not complete");
    const auto& led = sys.machine().ledger();
    SweepPoint p;
    p.n = n;
    p.peripheral_max = led.max_masked(sim::MaskLevel::Peripheral);
    p.peripheral_kernel_max = led.max_masked(sim::MaskLevel::Peripheral, sim::MaskOrigin::Kernel);
    p.software_max = led.max_masked(sim::MaskLevel::Software);
    p.total_cycles = r.cycles;
    p.readied = sys.readied();
    out.push_back(std::move(p));
  }
  return out;
}

// Ready-list pathology.

Cycles ready_list_pathology(kernel::ReadyListKind kind, int n, int k_tails, const CostModel& cost) {
  if (n < 1) throw kernel::ConfigError("pathology needs at least one task");
  sim::AtomicMemory mem;
  kernel::NodeTable nodes;
  for (int i = 0; i < n; ++i) {
    nodes.priority.push_back(i);
    nodes.next.push_back(mem.allocate("node" + std::to_string(i) + ".next"));
  }
  kernel::ArchConfig arch;
  arch.ready = kind;
  arch.k_tails = k_tails;
  auto list = kernel::make_ready_list(arch, nodes);
  list->allocate(mem);
  sim::HostPort port(mem, 1);
  kernel::ListCtx ctx{&port, cost.loop_iteration, nullptr, true};
  for (int i = 0; i < n; ++i) sim::run_to_completion(list->insert(ctx, i));
  int first = sim::run_to_completion(list->extract_if_better(ctx, std::numeric_limits<int>::max()));
  if (first != 0) throw std::logic_error("pathology: most urgent task not extracted first");
  return port.cycles();
}

// Memory footprint.

Footprint memory_footprint(const kernel::ArchConfig& arch, const FootprintConfig& cfg) {
  Footprint f;
  f.arch = kernel::arch_id(arch);
  const long k = cfg.isr_semaphores;
  switch (arch.kind) {
    case kernel::ArchKind::Baseline:
      f.bytes = 0;
      f.formula = "0 (interrupts masked instead)";
      f.latency_class = "peripheral masking grows with task count";
      break;
    case kernel::ArchKind::Defer:
      switch (arch.defer) {
        case kernel::DeferVariant::SemCountsFifo:
          f.bytes = 4L * cfg.statics.num_isr_semphr_counts;
          f.formula = "4*NUM_ISR_SEMPHR_COUNTS";
          f.static_config = true;
          f.latency_class = "SWI hop when a waiter outranks, 1 fetch iteration";
          break;
        case kernel::DeferVariant::SemFifo:
          f.bytes = 4L * cfg.statics.num_isr_smphrs + 2 * k;
          f.formula = "4*NUM_ISR_SMPHRS + 2 per ISR semaphore";
          f.static_config = true;
          f.dynamic_config = true;
          f.latency_class = "SWI hop always, 1 fetch iteration";
          break;
        case kernel::DeferVariant::LinkedListFifo:
          f.bytes = (4 + 2) * k;
          f.formula = "(4 + 2) per ISR semaphore";
          f.dynamic_config = true;
          f.latency_class = "SWI hop always, 1 fetch iteration";
          break;
        case kernel::DeferVariant::BitmapFlags:
          f.bytes = 4 + 2 * k;
          f.formula = "4 + 2 per ISR semaphore";
          f.static_config = true;
          f.dynamic_config = true;
          f.latency_class = "SWI hop always, 5 search iterations";
          break;
      }
      break;
    case kernel::ArchKind::Barriers:
      f.bytes = 2 * k;
      f.formula = "2 per ISR semaphore";
      f.dynamic_config = true;
      f.latency_class = "inline unblock";
      break;
    case kernel::ArchKind::StrictlyAtomic:
      f.bytes = -4L * cfg.tasks;
      f.formula = "-4 per task against doubly-linked lists";
      f.latency_class = "inline unblock";
      break;
  }
  return f;
}

// Latency probe.

LatencyProbe latency_probe(const kernel::ArchConfig& arch, const CostModel& cost) {
  SystemSpec s;
  s.name = "latency-probe";
  s.arch = arch;
  s.cost = cost;
  s.sems = {SemSpec{"rx", 1, 0, true}};
  s.tasks = {TaskSpec{"high", 0, Kind::Blocked, 0, {}, {}},
             TaskSpec{"low", 5, Kind::Ready, -1, {}, {TaskAction{TaskAction::Kind::Compute, -1, {}, 5000}}}};
  IsrSpec isr;
  isr.name = "rx_isr";
  isr.priority = 0;
  isr.gives = {0};
  isr.at = {1000};
  s.isrs = {isr};
  scenario::System sys(s);
  auto r = sys.run_timed();
  if (sys.violation() || !r.completed) throw std::runtime_error("latency probe did not complete cleanly");

  Cycles raised = 0;
  bool found = false;
  for (const auto& sp : sys.machine().handler_spans()) {
    if (sp.name == "rx_isr") {
      raised = sp.raised;
      found = true;
      break;
    }
  }
  if (!found) throw std::runtime_error("latency probe: interrupt never dispatched");
  Cycles unblock = 0;
  for (const auto& e : sys.kernel().events()) {
    if (e.kind == kernel::EventKind::Give && e.task == 0) {
      unblock = e.at;
      break;
    }
  }
  auto dispatch = sys.first_dispatch(0);
  if (!dispatch) throw std::runtime_error("latency probe: woken task never ran");

  LatencyProbe p;
  p.arch = kernel::arch_id(arch);
  p.give_to_unblock = unblock - raised;
  p.give_to_dispatch = *dispatch - raised;
  for (const auto& sp : sys.machine().handler_spans()) {
    if (sp.entered < raised) continue;
    if (sp.entered < unblock) ++p.entries_to_unblock;
    if (sp.entered <= *dispatch) ++p.entries_to_dispatch;
  }
  p.loop_iterations = sys.kernel().stats().iterations;
  return p;
}

// SysTick worst case.

Cycles systick_expiry(const kernel::ArchConfig& arch, int n, bool blocked, const CostModel& cost) {
  SystemSpec s;
  s.name = "systick-expiry";
  s.arch = arch;
  s.cost = cost;
  s.periodic_systick = true;
  s.sems = {SemSpec{"never", 1, 0, false}};
  s.tasks.push_back(TaskSpec{"high", 0, Kind::Ready, -1, {}, {TaskAction{TaskAction::Kind::Compute, -1, {},
                                                                         static_cast<kernel::Word>(cost.systick_quantum * 2)}}});
  // Equal wake ticks keep id order in the Delayed List; reversed priorities
  // put that order at the far end of the Blocked List.
  for (int i = 0; i < n; ++i) {
    TaskSpec t{"t" + std::to_string(i), n - i, blocked ? Kind::Blocked : Kind::Delayed, blocked ? 0 : -1, 1, {}};
    s.tasks.push_back(t);
  }
  scenario::System sys(s);
  auto r = sys.run_timed();
  if (sys.violation() || !r.completed) throw std::runtime_error("systick expiry run did not complete cleanly");
  for (const auto& sp : sys.machine().handler_spans()) {
    if (sp.kind == sim::ContextKind::SysTickIrq) return sp.finished - sp.entered;
  }
  throw std::runtime_error("systick expiry: no tick dispatched");
}

// Reports.

std::vector<fs::path> run_bench(const std::vector<std::string>& arch_ids, const BenchOptions& opt, const fs::path& out) {
  std::vector<fs::path> written;
  std::ostringstream cmp;
  cmp << "# Architecture comparison\n\n"
      << "| architecture | latency | memory (bytes) | static config | dynamic config | give to dispatch (cycles) "
         "| peripheral masked at n=" << (opt.ns.empty() ? 0 : opt.ns.back()) << " |\n"
      << "|---|---|---|---|---|---|---|\n";
  json summary = json::array();

  for (const auto& id : arch_ids) {
    auto arch = kernel::parse_arch(id);
    if (!arch) throw kernel::ConfigError("unknown architecture '" + id + "'");
    json config = {{"arch", id}, {"ns", opt.ns}, {"cost", cost_json(opt.cost)}};
    if (opt.frequency_hz) config["frequencyHz"] = *opt.frequency_hz;
    const std::string fp = io::fingerprint(config);

    auto points = masked_interval_sweep(*arch, opt.ns, opt.cost);
    auto foot = memory_footprint(*arch, opt.footprint);
    auto lat = latency_probe(*arch, opt.cost);
    const auto rl_kind = arch->ready;
    std::vector<std::pair<int, Cycles>> patho;
    for (int n : opt.ns) patho.emplace_back(n, ready_list_pathology(rl_kind, n, arch->k_tails, opt.cost));

    std::ostringstream csv;
    csv << "n,peripheral_max,peripheral_kernel_max,software_max,total_cycles";
    if (opt.frequency_hz) csv << ",peripheral_max_us";
    csv << "\n";
    for (const auto& p : points) {
      csv << p.n << ',' << p.peripheral_max << ',' << p.peripheral_kernel_max << ',' << p.software_max << ','
          << p.total_cycles;
      if (opt.frequency_hz) csv << ',' << static_cast<double>(p.peripheral_max) * 1e6 / *opt.frequency_hz;
      csv << "\n";
    }
    write_file(out / "bench" / id / "masked_interval.csv", csv.str(), written);

    std::ostringstream pcsv;
    pcsv << "n,loop_cycles\n";
    for (const auto& [n, c] : patho) pcsv << n << ',' << c << "\n";
    write_file(out / "bench" / id / "ready_list_pathology.csv", pcsv.str(), written);

    json raw = {{"fingerprint", fp}, {"config", config}, {"points", json::array()}};
    for (const auto& p : points) {
      scenario::System sys(sweep_scenario(*arch, p.n, opt.cost));
      sys.run_timed();
      json iv = json::array();
      for (const auto& m : sys.machine().ledger().intervals()) {
        iv.push_back({{"level", level_name(m.level)},
                      {"origin", m.origin == sim::MaskOrigin::Kernel ? "kernel" : "application"},
                      {"start", m.start},
                      {"end", m.end}});
      }
      raw["points"].push_back({{"n", p.n},
                               {"peripheralMax", p.peripheral_max},
                               {"peripheralKernelMax", p.peripheral_kernel_max},
                               {"softwareMax", p.software_max},
                               {"totalCycles", p.total_cycles},
                               {"readied", p.readied},
                               {"intervals", iv}});
    }
    raw["pathology"] = json::array();
    for (const auto& [n, c] : patho) raw["pathology"].push_back({{"n", n}, {"loopCycles", c}});
    raw["footprint"] = {{"bytes", foot.bytes},
                        {"formula", foot.formula},
                        {"staticConfig", foot.static_config},
                        {"dynamicConfig", foot.dynamic_config},
                        {"latencyClass", foot.latency_class}};
    raw["latency"] = {{"giveToUnblock", lat.give_to_unblock},
                      {"giveToDispatch", lat.give_to_dispatch},
                      {"entriesToUnblock", lat.entries_to_unblock},
                      {"entriesToDispatch", lat.entries_to_dispatch}};
    write_file(out / "bench" / id / "masked_interval.json", raw.dump(2) + "\n", written);

    std::ostringstream md;
    md << "# " << id << "\n\nconfig fingerprint `" << fp << "`\n\n## Masked intervals\n\n"
       << "| n | peripheral max | kernel peripheral max | software max |\n|---|---|---|---|\n";
    for (const auto& p : points)
      md << "| " << p.n << " | " << p.peripheral_max << " | " << p.peripheral_kernel_max << " | " << p.software_max
         << " |\n";
    md << "\n## Ready list pathology\n\n| n | loop cycles |\n|---|---|\n";
    for (const auto& [n, c] : patho) md << "| " << n << " | " << c << " |\n";
    md << "\n## Give latency\n\n"
       << "- assertion to token hand-over: " << lat.give_to_unblock << " cycles, " << lat.entries_to_unblock
       << " interrupt entries\n"
       << "- assertion to dispatch: " << lat.give_to_dispatch << " cycles, " << lat.entries_to_dispatch
       << " interrupt entries\n"
       << "\n## Memory\n\n" << foot.bytes << " bytes (" << foot.formula << ")\n";
    write_file(out / "bench" / id / "report.md", md.str(), written);

    const Cycles last_masked = points.empty() ? 0 : points.back().peripheral_max;
    cmp << "| " << id << " | " << foot.latency_class << " | " << foot.bytes << " | " << yes_no(foot.static_config)
        << " | " << yes_no(foot.dynamic_config) << " | " << lat.give_to_dispatch << " | " << last_masked << " |\n";
    summary.push_back({{"arch", id},
                       {"fingerprint", fp},
                       {"latencyClass", foot.latency_class},
                       {"bytes", foot.bytes},
                       {"staticConfig", foot.static_config},
                       {"dynamicConfig", foot.dynamic_config},
                       {"giveToDispatch", lat.give_to_dispatch},
                       {"peripheralMaskedAtMaxN", last_masked}});
  }
  write_file(out / "bench" / "comparison.md", cmp.str(), written);
  write_file(out / "bench" / "summary.json", summary.dump(2) + "\n", written);
  return written;
}

fs::path write_report(const fs::path& out) {
  std::ostringstream md;
  bool any = false;
  md << "# rtoslab report\n\n";
  auto read_text = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  if (fs::exists(out / "bench" / "comparison.md")) {
    any = true;
    md << read_text(out / "bench" / "comparison.md") << "\n";
  }
  std::vector<fs::path> explore_reports;
  if (fs::is_directory(out / "explore")) {
    for (const auto& e : fs::directory_iterator(out / "explore")) {
      if (e.path().extension() == ".json" && e.path().filename().string().ends_with(".report.json"))
        explore_reports.push_back(e.path());
    }
  }
  std::sort(explore_reports.begin(), explore_reports.end());
  if (!explore_reports.empty()) {
    any = true;
    md << "# Explorations\n\n| scenario | architecture | schedules | violating | exhaustive | expected |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& p : explore_reports) {
      auto j = json::parse(read_text(p), nullptr, false);
      if (j.is_discarded()) continue;
      md << "| " << j.value("scenario", "?") << " | " << j.value("architecture", "-") << " | "
         << j.value("schedules", 0) << " | " << j.value("violatingSchedules", 0) << " | "
         << (j.value("exhaustive", false) ? "yes" : "no") << " | " << j.value("expect", "pass") << " |\n";
    }
    md << "\n";
  }
  std::vector<fs::path> dma_reports;
  if (fs::is_directory(out / "hw")) {
    for (const auto& e : fs::directory_iterator(out / "hw")) {
      if (e.path().extension() == ".json") dma_reports.push_back(e.path());
    }
  }
  std::sort(dma_reports.begin(), dma_reports.end());
  if (!dma_reports.empty()) {
    any = true;
    md << "# Hardware demos\n\n| report | injected bytes | recovered bytes | lost |\n|---|---|---|---|\n";
    for (const auto& p : dma_reports) {
      auto j = json::parse(read_text(p), nullptr, false);
      if (j.is_discarded()) continue;
      md << "| " << p.filename().string() << " | " << j.value("injectedBytes", 0) << " | "
         << j.value("recoveredBytes", 0) << " | " << j.value("lost", 0) << " |\n";
    }
    md << "\n";
  }
  if (!any) throw std::runtime_error("nothing to report under " + out.string());
  fs::path p = out / "report.md";
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << md.str();
  return p;
}

}  // namespace rtoslab::bench
