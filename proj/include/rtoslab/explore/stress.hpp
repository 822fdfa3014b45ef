#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rtoslab/kernel/types.hpp"

namespace rtoslab::explore {

struct StressOptions {
  kernel::ReadyListKind kind = kernel::ReadyListKind::SortedAtomic;
  int k_tails = 1;
  int inserters = 3;
  int nodes_per_inserter = 200;
  int priority_levels = 8;
  bool extractor = true;
  std::uint64_t seed = 1;  // node priorities only
};

struct StressReport {
  std::uint64_t inserted = 0;
  std::uint64_t extracted = 0;
  std::uint64_t remaining = 0;
  std::uint64_t restarts = 0;
  std::optional<std::string> error;  // lost, duplicated or misplaced nodes
};

/// Drives the ready-list insert and extract code from genuinely parallel
/// host threads sharing one memory with a single exclusive monitor.
StressReport stress_ready_list(const StressOptions& opt);

}  // namespace rtoslab::explore
