#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rtoslab::sim {

using Word = std::uint32_t;
using CellId = std::uint32_t;
using Cycles = std::uint64_t;

/// Raised for conditions the simulated hardware or kernel treats as fatal:
/// unknown cells, unbalanced masks, overflowed defer structures and the like.
class SimFault : public std::runtime_error {
 public:
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};

enum class ContextKind : std::uint8_t { Task, PeripheralIsr, SoftwareIrq, SysTickIrq };

/// Identity of an execution context. Priority 0 is the most urgent within a
/// kind; across kinds, every peripheral ISR outranks the software-level
/// interrupts, which outrank every task.
struct ContextId {
  ContextKind kind = ContextKind::Task;
  int priority = 0;
  int index = 0;

  friend bool operator==(const ContextId&, const ContextId&) = default;
};

/// Interrupt mask levels. Peripheral masking implies software masking.
enum class MaskLevel : std::uint8_t { Software = 0, Peripheral = 1 };

enum class MaskOrigin : std::uint8_t { Kernel, Application };

enum class ReservationMode : std::uint8_t {
  ClearedOnPreemption,
  SurvivesPreemption,
};

// Urgency is the dispatch ordering key: larger preempts smaller.
inline constexpr int kTaskUrgency = 0;
inline constexpr int kSoftwareUrgency = 1;
inline constexpr int kPeripheralBase = 1000;
inline constexpr int kAboveCeilingBase = 2000;

inline int peripheral_urgency(int priority, bool above_ceiling = false) {
  return (above_ceiling ? kAboveCeilingBase : kPeripheralBase) - priority;
}

inline const char* to_string(ContextKind k) {
  switch (k) {
    case ContextKind::Task: return "task";
    case ContextKind::PeripheralIsr: return "isr";
    case ContextKind::SoftwareIrq: return "swi";
    case ContextKind::SysTickIrq: return "systick";
  }
  return "?";
}

}  // namespace rtoslab::sim
