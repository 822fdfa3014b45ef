// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtoslab/bench/bench.hpp"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/hw/dma.hpp"
#include "rtoslab/hw/gpio.hpp"
#include "rtoslab/io/reports.hpp"
#include "rtoslab/io/scenario_io.hpp"
#include "rtoslab/kernel/kernel.hpp"
#include "rtoslab/scenario/system.hpp"

namespace fs = std::filesystem;
using namespace rtoslab;
using sim::Cycles;

namespace {

const fs::path kRoot = RTOSLAB_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<io::ScenarioFile> bundled(io::ScenarioKind kind) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kRoot / "scenarios")) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<io::ScenarioFile> out;
  for (const auto& f : files) {
    auto sc = io::load_scenario(f);
    if (sc.kind == kind) out.push_back(std::move(sc));
  }
  return out;
}

bool is_mutant(const io::ScenarioFile& sc) { return sc.source.contains("mutant") || sc.expect_violation; }

std::vector<std::string> new_archs() {
  std::vector<std::string> ids;
  for (const auto& id : kernel::all_arch_ids()) {
    if (id != "baseline") ids.push_back(id);
  }
  return ids;
}

explore::ExplorationReport run_spec(const scenario::SystemSpec& spec, std::uint64_t bound) {
  explore::ExploreOptions opt;
  opt.step_bound = bound;
  return explore::explore([spec] { return std::make_unique<scenario::System>(spec); }, opt);
}

// 1
Outcome baseline_slope() {
  auto t0 = std::chrono::steady_clock::now();
  sim::CostModel cost;
  const std::vector<int> ns{2, 4, 8, 16, 32};
  auto pts = bench::masked_interval_sweep(*kernel::parse_arch("baseline"), ns, cost);
  std::ostringstream d;
  bool ok = pts.size() == ns.size();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Cycles want = cost.kernel_body + 8 * static_cast<Cycles>(ns[i] - 1);
    d << "n=" << ns[i] << ":" << pts[i].peripheral_kernel_max << (pts[i].peripheral_kernel_max == want ? "" : "!") << " ";
    ok = ok && pts[i].peripheral_kernel_max == want;
  }
  double s = seconds_since(t0);
  ok = ok && s < 5.0;
  d << "(" << s << " s)";
  return {ok, d.str()};
}

// 2
Outcome zero_peripheral_masking() {
  auto kernels = bundled(io::ScenarioKind::Kernel);
  std::ostringstream d;
  bool ok = true;
  std::uint64_t schedules = 0;
  double worst = 0;
  for (const auto& id : new_archs()) {
    auto t0 = std::chrono::steady_clock::now();
    auto arch = *kernel::parse_arch(id);
    for (const auto& sc : kernels) {
      auto spec = io::system_for(sc, id);
      spec.checks = {scenario::Check::NoPeripheralMask};
      auto rep = run_spec(spec, sc.step_bound);
      schedules += rep.schedules;
      if (rep.error || rep.violating_schedules) {
        ok = false;
        d << id << "/" << sc.name << " masked ";
      }
    }
    for (const auto& p : bench::masked_interval_sweep(arch, {2, 4, 8, 16, 32}, {})) {
      if (p.peripheral_kernel_max != 0) {
        ok = false;
        d << id << "/sweep n=" << p.n << " ";
      }
    }
    double s = seconds_since(t0);
    worst = std::max(worst, s);
    if (s >= 60.0) ok = false;
  }
  d << new_archs().size() << " architectures, " << kernels.size() << " scenarios, " << schedules
    << " schedules, slowest architecture " << worst << " s";
  return {ok, d.str()};
}

// 3
Outcome fifo_insert_bug() {
  auto atomic = io::load_scenario(kRoot / "scenarios" / "fig3_fifo_insert.json");
  auto mutant = io::load_scenario(kRoot / "scenarios" / "fig3_nonatomic.json");
  const std::string arch = "defer-semfifo";
  explore::ExploreOptions opt;
  opt.step_bound = atomic.step_bound;
  opt.max_violations = 1000;
  auto a = explore::explore(io::make_factory(atomic, arch), opt);
  auto m = explore::explore(io::make_factory(mutant, arch), opt);
  std::uint64_t lost = 0;
  for (const auto& t : m.violations) {
    if (t.outcome && t.outcome->message.find("lost an entry") != std::string::npos) ++lost;
  }
  bool ok = !a.error && !m.error && a.violating_schedules == 0 && lost >= 1 && a.schedules == m.schedules;
  std::ostringstream d;
  d << "atomic " << a.violating_schedules << "/" << a.schedules << " violating, non-atomic " << m.violating_schedules
    << "/" << m.schedules << " violating, " << lost << " with a lost ring entry";
  return {ok, d.str()};
}

// 4
Outcome ordering() {
  std::vector<io::ScenarioFile> scs{io::load_scenario(kRoot / "scenarios" / "give_order.json"),
                                    io::load_scenario(kRoot / "scenarios" / "give_order_repeat.json")};
  bool ok = true;
  std::uint64_t schedules = 0;
  std::ostringstream d;
  for (const auto& id : new_archs()) {
    for (const auto& sc : scs) {
      auto spec = io::system_for(sc, id);
      bool has = std::find(spec.checks.begin(), spec.checks.end(), scenario::Check::GiveOrder) != spec.checks.end();
      if (!has) spec.checks.push_back(scenario::Check::GiveOrder);
      auto rep = run_spec(spec, sc.step_bound);
      schedules += rep.schedules;
      if (rep.error || rep.violating_schedules) {
        ok = false;
        d << id << "/" << sc.name << " ";
      }
    }
  }
  d << schedules << " schedules over " << new_archs().size() << " architectures";
  return {ok, d.str()};
}

// 5
Outcome pathology() {
  bool ok = true;
  std::ostringstream d;
  std::vector<std::pair<int, Cycles>> unsorted;
  for (int n : {2, 4, 8, 16}) {
    long m = n - 1;
    Cycles want = static_cast<Cycles>(8 * (m * m + m) / 2);
    Cycles got = bench::ready_list_pathology(kernel::ReadyListKind::SortedAtomic, n);
    ok = ok && got == want;
    d << "sorted n=" << n << ":" << got << " ";
    unsorted.emplace_back(n, bench::ready_list_pathology(kernel::ReadyListKind::Unsorted, n));
  }
  // Affine fit through the first and last points, residual at every point.
  const auto [n0, c0] = unsorted.front();
  const auto [n1, c1] = unsorted.back();
  double slope = static_cast<double>(static_cast<long>(c1) - static_cast<long>(c0)) / (n1 - n0);
  double icpt = static_cast<double>(c0) - slope * n0;
  double residual = 0;
  for (const auto& [n, c] : unsorted) residual += std::abs(static_cast<double>(c) - (slope * n + icpt));
  ok = ok && residual == 0.0;
  d << "unsorted " << slope << "n" << (icpt < 0 ? "" : "+") << icpt << " residual " << residual;
  return {ok, d.str()};
}

// 6
Outcome systick_worst_case() {
  auto arch = *kernel::parse_arch("strictly-atomic");
  Cycles blocked = bench::systick_expiry(arch, 16, true);
  Cycles delayed = bench::systick_expiry(arch, 16, false);
  long extra = static_cast<long>(blocked) - static_cast<long>(delayed);
  bool ok = extra >= 850 && extra <= 1150;
  std::ostringstream d;
  d << "16 blocked-delayed expiries cost " << extra << " extra cycles (" << blocked << " vs " << delayed
    << "), target 1000 +/-15%";
  return {ok, d.str()};
}

// 7
Outcome bitmap_search() {
  bool ok = true;
  int worst = 0;
  for (int bit = 0; bit < 32; ++bit) {
    int iters = 0;
    int got = kernel::bitmap_search(sim::Word{1} << bit, &iters);
    worst = std::max(worst, iters);
    ok = ok && got == bit && iters <= 5;
  }
  return {ok, "32 single-bit words located, at most " + std::to_string(worst) + " iterations"};
}

// 8
Outcome footprint() {
  bool ok = true;
  std::ostringstream d;
  int configs = 0;
  for (const char* name : {"footprint_small.json", "footprint_medium.json", "footprint_large.json"}) {
    std::ifstream f(kRoot / "configs" / name);
    auto cfg = io::footprint_config_from_json(nlohmann::json::parse(f));
    ++configs;
    const long k = cfg.isr_semaphores;
    const std::map<std::string, long> want{
        {"baseline", 0},
        {"defer-semcounts", cfg.statics.num_isr_semphr_counts << 2},
        {"defer-semfifo", 4L * cfg.statics.num_isr_smphrs + 2 * k},
        {"defer-linkedlist", 4 * k + 2 * k},
        {"defer-bitmap", 4 + 2 * k},
        {"barriers-sorted", 2 * k},
        {"barriers-unsorted", 2 * k},
        {"barriers-ktails", 2 * k},
        {"strictly-atomic", -4L * cfg.tasks},
        {"strictly-atomic-unsorted", -4L * cfg.tasks},
        {"strictly-atomic-ktails", -4L * cfg.tasks},
    };
    for (const auto& [id, bytes] : want) {
      auto fp = bench::memory_footprint(*kernel::parse_arch(id), cfg);
      if (fp.bytes != bytes) {
        ok = false;
        d << name << "/" << id << " " << fp.bytes << "!=" << bytes << " ";
      }
    }
  }
  d << configs << " configurations x " << kernel::all_arch_ids().size() << " architectures";
  return {ok, d.str()};
}

// 9
Outcome linearizability() {
  auto t0 = std::chrono::steady_clock::now();
  auto sc = io::load_scenario(kRoot / "scenarios" / "ready_list_sorted_atomic.json");
  const auto& rl = sc.ready_list;
  bool in_scope = rl.inserters.size() <= 3 && rl.priorities.size() <= 5 && rl.extractions >= 1 &&
                  rl.kind == kernel::ReadyListKind::SortedAtomic;
  explore::ExploreOptions opt;
  opt.step_bound = sc.step_bound;
  auto rep = explore::explore(io::make_factory(sc, ""), opt);
  double s = seconds_since(t0);
  bool ok = in_scope && !rep.error && rep.violating_schedules == 0 && s < 120.0;
  std::ostringstream d;
  d << rl.inserters.size() << " inserters + 1 extractor, " << rl.priorities.size() << " nodes, " << rep.schedules
    << " schedules, " << rep.violating_schedules << " violating (" << s << " s)";
  return {ok, d.str()};
}

// 10
Outcome hardware() {
  auto stream = hw::load_stream(kRoot / "streams" / "five_frames.bin");
  hw::DmaDemoOptions opt;
  opt.handler_delay = 10'000;
  auto dma = hw::dma_demo(stream, opt);
  bool bytes_exact = dma.intact && dma.lost == 0 && dma.recovered_bytes == stream.total_bytes() && dma.frames_recovered == 5;

  auto hs = io::load_scenario(kRoot / "scenarios" / "dma_handshake.json");
  explore::ExploreOptions eo;
  eo.step_bound = hs.step_bound;
  auto rep = explore::explore(io::make_factory(hs, ""), eo);
  bool no_torn = !rep.error && rep.violating_schedules == 0;

  hw::GpioScenario g;
  g.masks = hw::rtos_mask_pattern(*kernel::parse_arch("baseline"), 32, 2000, 21);
  auto direct = hw::gpio_escape(g);
  g.escape = true;
  auto escaped = hw::gpio_escape(g);
  bool gpio = direct.lost > 0 && escaped.lost == 0 && escaped.gpio_lines == 1;

  std::ostringstream d;
  d << "dma " << dma.recovered_bytes << "/" << stream.total_bytes() << " bytes intact=" << dma.intact << ", handshake "
    << rep.violating_schedules << "/" << rep.schedules << " torn, gpio lost " << direct.lost << " -> " << escaped.lost;
  return {bytes_exact && no_torn && gpio, d.str()};
}

// 11
Outcome cross_arch() {
  bool ok = true;
  std::ostringstream d;
  int checked = 0;
  for (const auto& sc : bundled(io::ScenarioKind::Kernel)) {
    if (is_mutant(sc)) continue;
    std::optional<std::vector<int>> ref;
    for (const auto& id : kernel::all_arch_ids()) {
      scenario::System sys(io::system_for(sc, id));
      auto r = sys.run_timed();
      auto order = sys.readied();
      if (!r.completed || sys.violation()) {
        ok = false;
        d << sc.name << "/" << id << " incomplete ";
        continue;
      }
      if (!ref) {
        ref = order;
      } else if (order != *ref) {
        ok = false;
        d << sc.name << "/" << id << " differs ";
      }
    }
    ++checked;
  }
  d << checked << " scenarios x " << kernel::all_arch_ids().size() << " architectures";
  return {ok && checked > 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"baseline masked interval grows 8 cycles per task", baseline_slope},
      {"zero kernel peripheral masking", zero_peripheral_masking},
      {"non-atomic ring insert loses entries, atomic does not", fifo_insert_bug},
      {"equal-priority tasks readied in give order", ordering},
      {"ready-list insertion cost, sorted quadratic and unsorted affine", pathology},
      {"SysTick expiry of blocked-delayed tasks", systick_worst_case},
      {"bitmap search within 5 iterations", bitmap_search},
      {"memory footprint closed forms", footprint},
      {"sorted atomic insertion linearizable", linearizability},
      {"DMA and GPIO escape lossless", hardware},
      {"cross-architecture readied order", cross_arch},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu %s: %s [%s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
