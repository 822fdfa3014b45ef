#include "rtoslab/kernel/types.hpp"

#include <array>
#include <utility>

namespace rtoslab::kernel {

const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::Dormant: return "Dormant";
    case TaskState::Running: return "Running";
    case TaskState::Ready: return "Ready";
    case TaskState::Blocked: return "Blocked";
    case TaskState::Delayed: return "Delayed";
    case TaskState::BlockedDelayed: return "BlockedDelayed";
    case TaskState::ReadyDelayed: return "ReadyDelayed";
  }
  return "?";
}

namespace {

ArchConfig make(ArchKind kind, ReadyListKind ready, int k = 1, DeferVariant d = DeferVariant::SemFifo) {
  ArchConfig a;
  a.kind = kind;
  a.ready = ready;
  a.k_tails = k;
  a.defer = d;
  return a;
}

const std::array<std::pair<const char*, ArchConfig>, 11>& table() {
  static const std::array<std::pair<const char*, ArchConfig>, 11> t{{
      {"baseline", make(ArchKind::Baseline, ReadyListKind::SortedPlain)},
      {"defer-semcounts", make(ArchKind::Defer, ReadyListKind::SortedPlain, 1, DeferVariant::SemCountsFifo)},
      {"defer-semfifo", make(ArchKind::Defer, ReadyListKind::SortedPlain, 1, DeferVariant::SemFifo)},
      {"defer-linkedlist", make(ArchKind::Defer, ReadyListKind::SortedPlain, 1, DeferVariant::LinkedListFifo)},
      {"defer-bitmap", make(ArchKind::Defer, ReadyListKind::SortedPlain, 1, DeferVariant::BitmapFlags)},
      {"barriers-sorted", make(ArchKind::Barriers, ReadyListKind::SortedAtomic)},
      {"barriers-unsorted", make(ArchKind::Barriers, ReadyListKind::Unsorted, 1)},
      {"barriers-ktails", make(ArchKind::Barriers, ReadyListKind::Unsorted, 3)},
      {"strictly-atomic", make(ArchKind::StrictlyAtomic, ReadyListKind::SortedAtomic)},
      {"strictly-atomic-unsorted", make(ArchKind::StrictlyAtomic, ReadyListKind::Unsorted, 1)},
      {"strictly-atomic-ktails", make(ArchKind::StrictlyAtomic, ReadyListKind::Unsorted, 3)},
  }};
  return t;
}

}  // namespace

std::optional<ArchConfig> parse_arch(std::string_view id) {
  for (const auto& [name, cfg] : table()) {
    if (id == name) return cfg;
  }
  return std::nullopt;
}

std::string arch_id(const ArchConfig& a) {
  for (const auto& [name, cfg] : table()) {
    if (cfg.kind != a.kind || cfg.ready != a.ready) continue;
    if (a.kind == ArchKind::Defer && cfg.defer != a.defer) continue;
    if (a.ready == ReadyListKind::Unsorted && (cfg.k_tails > 1) != (a.k_tails > 1)) continue;
    return name;
  }
  return "custom";
}

std::vector<std::string> all_arch_ids() {
  std::vector<std::string> out;
  for (const auto& [name, cfg] : table()) out.emplace_back(name);
  return out;
}

}  // namespace rtoslab::kernel
