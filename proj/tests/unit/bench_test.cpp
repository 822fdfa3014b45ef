#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rtoslab/bench/bench.hpp"
#include "rtoslab/kernel/types.hpp"

using namespace rtoslab;
namespace fs = std::filesystem;

namespace {

kernel::ArchConfig arch(const char* id) { return *kernel::parse_arch(id); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("baseline kernel masking grows by one loop iteration per ready task") {
  sim::CostModel cost;
  cost.kernel_body = 100;
  cost.loop_iteration = 5;
  std::vector<int> ns{2, 3, 5, 9};
  auto pts = bench::masked_interval_sweep(arch("baseline"), ns, cost);
  REQUIRE(pts.size() == ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK(pts[i].peripheral_kernel_max == 100 + 5 * static_cast<sim::Cycles>(ns[i] - 1));
  }
}

TEST_CASE("no other architecture masks peripheral interrupts in the kernel") {
  for (const auto& id : kernel::all_arch_ids()) {
    if (id == "baseline") continue;
    CAPTURE(id);
    for (const auto& p : bench::masked_interval_sweep(arch(id.c_str()), {2, 8, 16})) {
      CHECK(p.peripheral_kernel_max == 0);
    }
  }
}

TEST_CASE("ready-list pathology costs") {
  for (int n = 2; n <= 12; ++n) {
    long m = n - 1;
    CHECK(bench::ready_list_pathology(kernel::ReadyListKind::SortedAtomic, n) == static_cast<sim::Cycles>(4 * (m * m + m)));
    CHECK(bench::ready_list_pathology(kernel::ReadyListKind::Unsorted, n) == static_cast<sim::Cycles>(8 * n - 8));
  }
}

TEST_CASE("bitmap latency exceeds SemFifo by its search iterations") {
  auto bm = bench::latency_probe(arch("defer-bitmap"));
  auto ff = bench::latency_probe(arch("defer-semfifo"));
  CHECK(bm.give_to_dispatch > ff.give_to_dispatch);
  CHECK(bm.give_to_dispatch - ff.give_to_dispatch <= 5 * 8);
}

TEST_CASE("blocked-delayed SysTick expiry costs more than plain delay expiry") {
  auto a = arch("strictly-atomic");
  for (int n : {1, 4, 16}) {
    CHECK(bench::systick_expiry(a, n, true) > bench::systick_expiry(a, n, false));
  }
}

TEST_CASE("footprint sign and configuration kind") {
  bench::FootprintConfig cfg;
  CHECK(bench::memory_footprint(arch("strictly-atomic"), cfg).bytes < 0);
  CHECK(bench::memory_footprint(arch("baseline"), cfg).bytes == 0);
  CHECK(bench::memory_footprint(arch("defer-semcounts"), cfg).static_config);
  CHECK_FALSE(bench::memory_footprint(arch("defer-semcounts"), cfg).dynamic_config);
  CHECK(bench::memory_footprint(arch("defer-linkedlist"), cfg).dynamic_config);
}

TEST_CASE("bench output is byte-for-byte deterministic") {
  auto base = fs::temp_directory_path() / "rtoslab_bench_det";
  fs::remove_all(base);
  bench::BenchOptions opt;
  opt.ns = {2, 4};
  auto a = bench::run_bench({"baseline", "defer-bitmap"}, opt, base / "a");
  auto b = bench::run_bench({"baseline", "defer-bitmap"}, opt, base / "b");
  REQUIRE(a.size() == b.size());
  REQUIRE_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(fs::relative(a[i], base / "a") == fs::relative(b[i], base / "b"));
    CHECK(slurp(a[i]) == slurp(b[i]));
  }
  CHECK(fs::exists(bench::write_report(base / "a")));
  fs::remove_all(base);
}

TEST_CASE("report on an empty directory throws") {
  auto d = fs::temp_directory_path() / "rtoslab_empty_report";
  fs::remove_all(d);
  fs::create_directories(d);
  CHECK_THROWS_AS(bench::write_report(d), std::runtime_error);
  fs::remove_all(d);
}
