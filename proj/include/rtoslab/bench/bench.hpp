#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/types.hpp"
#include "rtoslab/scenario/system.hpp"
#include "rtoslab/sim/cost_model.hpp"

namespace rtoslab::bench {

using sim::Cycles;
using sim::CostModel;

// Masked-interval sweep.

struct SweepPoint {
  int n = 0;
  Cycles peripheral_max = 0;         // any origin
  Cycles peripheral_kernel_max = 0;  // kernel-originated only
  Cycles software_max = 0;
  Cycles total_cycles = 0;
  std::vector<int> readied;
};

/// Worst case for list walks under a lock: one ISR give readies the
/// lowest-priority task while the other n-1 tasks are already ready.
scenario::SystemSpec sweep_scenario(const kernel::ArchConfig& arch, int n, const CostModel& cost);
std::vector<SweepPoint> masked_interval_sweep(const kernel::ArchConfig& arch, const std::vector<int>& ns,
                                              const CostModel& cost = {});

// Ready-list pathology.

/// Loop cycles to ready the most urgent task first and then every other
/// task in decreasing urgency, plus one extraction of the most urgent.
Cycles ready_list_pathology(kernel::ReadyListKind kind, int n, int k_tails = 1, const CostModel& cost = {});

// Memory footprint.

struct FootprintConfig {
  kernel::StaticConfig statics;
  int isr_semaphores = 3;
  int tasks = 8;
};

struct Footprint {
  std::string arch;
  long bytes = 0;           // defer structure and per-semaphore extras, or per-task delta
  std::string formula;
  bool static_config = false;   // needs a compile-time size
  bool dynamic_config = false;  // needs a per-semaphore creation flag
  std::string latency_class;
};

Footprint memory_footprint(const kernel::ArchConfig& arch, const FootprintConfig& cfg);

// Latency probe.

struct LatencyProbe {
  std::string arch;
  Cycles give_to_dispatch = 0;     // ISR assertion to first instruction of the woken task
  Cycles give_to_unblock = 0;      // ISR assertion to the token hand-over
  int entries_to_unblock = 0;      // interrupt entries up to the hand-over
  int entries_to_dispatch = 0;     // interrupt entries up to the dispatch
  std::uint64_t loop_iterations = 0;
};

LatencyProbe latency_probe(const kernel::ArchConfig& arch, const CostModel& cost = {});

// SysTick worst case.

/// Duration of the SysTick handler that expires `n` tasks at once. With
/// `blocked`, each task also waits on one semaphore, ordered so that the
/// handler removes them from the end of the Blocked List first.
Cycles systick_expiry(const kernel::ArchConfig& arch, int n, bool blocked, const CostModel& cost = {});

// Reports.

struct BenchOptions {
  std::vector<int> ns{2, 4, 8, 16, 32};
  CostModel cost;
  std::optional<double> frequency_hz;  // adds Hz-based columns when set
  FootprintConfig footprint;
};

/// Writes bench/<arch>/masked_interval.csv, .json and report.md under `out`
/// for each architecture, plus a top-level comparison. Returns the files
/// written.
std::vector<std::filesystem::path> run_bench(const std::vector<std::string>& arch_ids, const BenchOptions& opt,
                                             const std::filesystem::path& out);

/// Aggregates every bench and exploration output under `out` into
/// out/report.md. Throws std::runtime_error when there is nothing to report.
std::filesystem::path write_report(const std::filesystem::path& out);

}  // namespace rtoslab::bench
