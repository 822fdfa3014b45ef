#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/types.hpp"

namespace rtoslab::kernel {

enum class EventKind {
  GiveCall,  // a give was invoked (ISR or task); not yet effective
  Give,      // the give takes effect: token to `task`, or count + 1 when task < 0
  Acquire,   // a take consumed a count
  Block,     // a task became visible in a Blocked List
  Cancel,    // a blocked task withdrew itself (reinsertion rule)
  Timeout,   // SysTick removed a blocked task
  Overflow,  // give at maxCount with nobody waiting
  Request,   // ISR recorded a request behind a barrier
};

const char* to_string(EventKind k);

struct Event {
  EventKind kind;
  int task = -1;
  int sem = -1;
  int source = -1;  // ISR index for ISR-originated gives, -1 otherwise
  sim::Cycles at = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Reference semaphore semantics, driven by the effective events only: per
/// semaphore a count and a priority-ordered (FIFO within priority) queue of
/// waiters. Every Give must go to the waiter this model says is next.
class TokenOracle {
 public:
  TokenOracle() = default;
  TokenOracle(std::vector<int> priorities, std::vector<Word> counts);

  void add_waiter(SemId s, TaskId t);
  std::optional<std::string> apply(const Event& e);

  Word count(SemId s) const { return counts_[static_cast<std::size_t>(s)]; }
  const std::vector<TaskId>& waiters(SemId s) const { return waiters_[static_cast<std::size_t>(s)]; }

 private:
  std::vector<int> prio_;
  std::vector<Word> counts_;
  std::vector<std::vector<TaskId>> waiters_;
};

}  // namespace rtoslab::kernel
