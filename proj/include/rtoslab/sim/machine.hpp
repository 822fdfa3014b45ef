#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/sim/ledger.hpp"
#include "rtoslab/sim/memory.hpp"
#include "rtoslab/sim/port.hpp"
#include "rtoslab/sim/proc.hpp"

namespace rtoslab::sim {

using SourceId = int;

/// An interrupt line: peripheral, software or SysTick. Each dispatch runs a
/// fresh handler coroutine.
struct InterruptSource {
  std::string name;
  ContextKind kind = ContextKind::PeripheralIsr;
  int priority = 0;
  bool above_ceiling = false;  // priority above what the kernel can mask
  std::function<Proc<void>()> handler;
};

/// One completed interrupt handler run, for latency accounting.
struct HandlerSpan {
  std::string name;
  ContextKind kind = ContextKind::PeripheralIsr;
  int source = -1;
  Cycles raised = 0;   // most recent assertion before dispatch
  Cycles entered = 0;  // dispatch, before the entry latency
  Cycles finished = 0;
  std::uint64_t serial = 0;
};

struct Context {
  int serial = 0;
  std::string name;
  ContextId id;
  int urgency = 0;
  SourceId source = -1;
  int task = -1;
  Proc<void> root;
  std::coroutine_handle<> resume_point;
  std::optional<OpDesc> pending;
  bool finished = false;
  std::array<int, 2> masks{0, 0};
  std::uint64_t steps = 0;
  Cycles raised = 0;
  Cycles entered = 0;
};

/// Which task context is dispatched at base level, supplied by the kernel.
struct BaseSelector {
  std::function<int()> running;              // task slot or -1 when idle
  std::function<bool(int)> may_resume_wait;  // task slot parked on WaitDispatch may continue
};

enum class Discipline { Priority, Free };

/// Single-core abstract machine. Contexts are coroutines that park before
/// each primitive operation; `step()` dispatches any eligible interrupt and
/// then executes exactly one operation of the most urgent runnable context.
///
/// In Free discipline there is no interrupt controller: independent threads
/// are stepped in whatever order the caller chooses, which models parallel
/// executors under sequential consistency.
class Machine final : public Port {
 public:
  explicit Machine(CostModel cost = {}, ReservationMode mode = ReservationMode::ClearedOnPreemption,
                   Discipline discipline = Discipline::Priority);
  ~Machine() override;
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  /// Destroys every context frame. Call before destroying objects that
  /// suspended frames still reference.
  void shutdown();

  AtomicMemory& memory() { return memory_; }
  const AtomicMemory& memory() const { return memory_; }
  CycleLedger& ledger() { return ledger_; }
  const CycleLedger& ledger() const { return ledger_; }
  const CostModel& cost() const { return ledger_.cost(); }
  Discipline discipline() const { return discipline_; }

  // Interrupt controller.
  SourceId add_source(InterruptSource src);
  void set_swi_source(SourceId s) { swi_ = s; }
  SourceId swi_source() const { return swi_; }
  void raise(SourceId s);
  bool pending(SourceId s) const { return sources_.at(s).pending; }
  bool masked(int urgency) const;
  std::size_t source_count() const { return sources_.size(); }
  const InterruptSource& source(SourceId s) const { return sources_.at(s).spec; }
  std::uint64_t dispatch_count(SourceId s) const { return sources_.at(s).dispatched; }
  std::uint64_t raise_count(SourceId s) const { return sources_.at(s).raised; }
  std::uint64_t interrupt_entries() const { return entries_; }
  const std::vector<HandlerSpan>& handler_spans() const { return spans_; }

  // Base-level tasks (Priority) or threads (Free).
  int add_task(std::string name, int priority, Proc<void> root);
  void set_base_selector(BaseSelector sel) { selector_ = std::move(sel); }
  const Context& task_context(int slot) const { return *tasks_.at(slot); }
  std::size_t task_count() const { return tasks_.size(); }

  enum class StepStatus { Executed, Idle };
  StepStatus step();
  bool runnable();
  StepStatus step_thread(int slot);
  bool thread_done(int slot) const { return tasks_.at(slot)->finished; }

  struct StepInfo {
    std::string name;
    ContextId id;
    std::uint64_t context_step = 0;  // index of the step within its context
  };
  /// Context that executed the most recent step.
  const StepInfo& last() const { return last_; }
  std::size_t nesting() const { return stack_.size(); }
  const Context* current() const { return cur_; }
  std::uint64_t steps() const { return steps_; }

  // Port
  bool immediate() const override { return false; }
  void park(std::coroutine_handle<> h, const OpDesc& d) override;
  OpResult perform(const OpDesc& d) override;
  void charge(Cycles c) override { ledger_.advance(c); }

 private:
  struct SourceState {
    InterruptSource spec;
    int urgency = 0;
    bool pending = false;
    std::uint64_t raised = 0;
    std::uint64_t dispatched = 0;
    Cycles raised_at = 0;
  };

  void dispatch_pending();
  Context* base_context();
  void prime(Context& c);
  void run_one(Context& c);
  void finish(Context& c);

  AtomicMemory memory_;
  CycleLedger ledger_;
  Discipline discipline_;
  std::vector<SourceState> sources_;
  SourceId swi_ = -1;
  std::vector<std::unique_ptr<Context>> tasks_;
  std::vector<std::unique_ptr<Context>> stack_;
  BaseSelector selector_;
  Context* cur_ = nullptr;
  StepInfo last_;
  int last_base_ = -1;
  int next_serial_ = 1;
  std::uint64_t steps_ = 0;
  std::uint64_t entries_ = 0;
  std::vector<HandlerSpan> spans_;
};

}  // namespace rtoslab::sim
