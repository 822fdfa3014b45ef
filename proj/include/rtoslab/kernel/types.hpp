#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rtoslab/sim/types.hpp"

namespace rtoslab::kernel {

using sim::CellId;
using sim::Word;

using TaskId = int;
using SemId = int;

/// Rejected kernel configuration (semaphore budget, bitmap width, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Links are three-valued: absent (not in the list), self (last element) or
/// another node. Node n is encoded as n + 1 so that zero stays absent.
inline constexpr Word kAbsent = 0;
inline constexpr Word link_to(int node) { return static_cast<Word>(node + 1); }
inline constexpr int node_of(Word link) { return static_cast<int>(link) - 1; }
inline constexpr bool is_self(Word link, int node) { return link == link_to(node); }

enum class TaskState : Word {
  Dormant = 0,
  Running,
  Ready,
  Blocked,
  Delayed,
  BlockedDelayed,
  ReadyDelayed,
};

enum class WakeReason : Word { None = 0, Acquired, TimedOut, Retry };

enum class TakeOutcome { Acquired, TimedOut };

const char* to_string(TaskState s);

struct TaskCells {
  CellId next_blocked;
  CellId next_ready;
  CellId next_delayed;
  CellId state;
  CellId wake_tick;
  CellId wake_reason;
  CellId blocked_on;  // semaphore link while in a Blocked List
};

struct TaskRecord {
  TaskId id = 0;
  std::string name;
  int priority = 0;
  TaskCells cells{};
};

struct SemCells {
  CellId count;
  CellId blocked_head;
  std::optional<CellId> unblock_count;  // defer variants with per-semaphore multiplicity
  std::optional<CellId> barrier;        // combined barrier and request count
  std::optional<CellId> defer_next;     // linked-list defer structure
};

struct SemRecord {
  SemId id = 0;
  std::string name;
  Word max_count = 1;
  bool isr_released = false;
  std::optional<int> bitmap_index;
  SemCells cells{};
};

enum class ArchKind { Baseline, Defer, Barriers, StrictlyAtomic };
enum class DeferVariant { SemCountsFifo, SemFifo, LinkedListFifo, BitmapFlags };
enum class ReadyListKind { SortedPlain, SortedAtomic, Unsorted };

/// How "exclusive" read-modify-write sequences are realised: a load/store
/// exclusive pair or a plain load followed by compare-exchange.
enum class AtomicFlavor { LoadStoreExclusive, CompareExchange };

/// Deliberately broken variants used to show that the explorer finds the
/// bugs the atomic algorithms exist to prevent.
enum class Mutant {
  None,
  NonAtomicFifoInsert,  // ring insert as a plain read/store/increment
  NoHeadTouch,          // sorted atomic insert skips the head refresh
  ConditionalSwi,       // unblock-count defer structures assert SWI only for outranking waiters
};

struct ArchConfig {
  ArchKind kind = ArchKind::Baseline;
  DeferVariant defer = DeferVariant::SemFifo;
  ReadyListKind ready = ReadyListKind::SortedPlain;
  int k_tails = 1;
  AtomicFlavor flavor = AtomicFlavor::LoadStoreExclusive;
  Mutant mutant = Mutant::None;
};

/// Statically configured kernel limits.
struct StaticConfig {
  int num_isr_semphr_counts = 16;  // SemCountsFifo ring size
  int num_isr_smphrs = 8;          // SemFifo ring size, bitmap array size
  int semaphore_budget = 64;
};

/// Parses an architecture id such as "defer-bitmap" or "barriers-ktails".
std::optional<ArchConfig> parse_arch(std::string_view id);
std::string arch_id(const ArchConfig& a);
std::vector<std::string> all_arch_ids();

}  // namespace rtoslab::kernel
