#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/events.hpp"
#include "rtoslab/kernel/lists.hpp"
#include "rtoslab/kernel/ready_list.hpp"
#include "rtoslab/kernel/types.hpp"
#include "rtoslab/sim/machine.hpp"

namespace rtoslab::kernel {

/// Where a task starts.
struct InitialTask {
  enum class Kind { Ready, Blocked, Delayed, Dormant } kind = Kind::Ready;
  SemId sem = -1;
  std::optional<Word> timeout;  // ticks; optional for Blocked, required for Delayed
};

/// Kernel state and services shared by every architecture. Architectures
/// override the semaphore paths, the SWI body and the parts of SysTick that
/// touch Blocked Lists.
///
/// All services are coroutines run inside simulated contexts. Each entry
/// point charges the kernel body constant once; list walks charge per
/// iteration.
class Kernel {
 public:
  Kernel(sim::Machine& m, ArchConfig arch, StaticConfig statics);
  virtual ~Kernel() = default;
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  // Setup, before start().
  TaskId add_task(std::string name, int priority);
  SemId create_semaphore(std::string name, Word max_count, Word initial, bool isr_released);
  /// Seeds every list directly in memory. `init` is indexed by task id.
  void start(const std::vector<InitialTask>& init);

  // Services.
  virtual Proc<TakeOutcome> take(TaskId t, SemId s, std::optional<Word> timeout) = 0;
  virtual Proc<void> give(TaskId t, SemId s) = 0;
  virtual Proc<void> give_from_isr(SemId s, int isr) = 0;
  virtual Proc<void> swi() = 0;
  Proc<void> systick();
  Proc<void> delay(TaskId t, Word ticks);
  Proc<void> exit(TaskId t);
  /// Parks the caller until it is dispatched again and consumes its wake reason.
  Proc<WakeReason> wait_wake(TaskId t);

  // Inspection.
  const ArchConfig& arch() const { return arch_; }
  const StaticConfig& statics() const { return statics_; }
  sim::Machine& machine() { return m_; }
  const sim::Machine& machine() const { return m_; }
  const std::vector<TaskRecord>& tasks() const { return tasks_; }
  const std::vector<SemRecord>& semaphores() const { return sems_; }
  const std::vector<Event>& events() const { return events_; }
  const ListStats& stats() const { return stats_; }
  ReadyList& ready_list() { return *ready_; }
  const ReadyList& ready_list() const { return *ready_; }
  CellId running_cell() const { return running_; }
  CellId tick_cell() const { return tick_; }
  CellId delayed_head() const { return delayed_head_; }
  int running() const;
  TaskState state(TaskId t) const;
  Word count(SemId s) const;
  std::vector<TaskId> blocked_list(SemId s) const;
  std::vector<TaskId> delayed_list() const;
  std::vector<TaskId> ready_members() const;
  /// State implied by link values alone (absent = not a member, self = last).
  std::optional<TaskState> deduce_state(TaskId t) const;
  /// True when no kernel service is part-way through in any context.
  bool quiescent() const { return in_kernel_ == 0; }
  /// Checks that hold after every primitive step.
  virtual std::optional<std::string> check_step() const;
  /// Checks that hold whenever no service is in flight.
  virtual std::optional<std::string> check_quiescent() const;
  /// Pending releases recorded but not yet applied (defer structures).
  virtual bool releases_pending() const { return false; }
  /// Gives to `s` already counted but not yet applied to its Blocked List.
  virtual Word pending_releases(SemId) const { return 0; }

 protected:
  struct Section {
    explicit Section(Kernel& k) : k_(&k) { ++k_->in_kernel_; }
    ~Section() { --k_->in_kernel_; }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;
    Kernel* k_;
  };

  virtual void on_semaphore_created(SemRecord& s);
  virtual void on_start() {}
  /// Mask level for task-side critical sections.
  virtual sim::MaskLevel lock_level() const { return sim::MaskLevel::Software; }
  /// Runs at the start of SysTick (defer structures drain here).
  virtual Proc<void> systick_prologue();
  /// Removes an expired BlockedDelayed task from its Blocked List. Returns
  /// false if it had already been handed a token.
  virtual Proc<bool> remove_expired(TaskId t, SemId s) = 0;

  sim::Port& port() { return m_; }
  ListCtx ctx() { return ListCtx{&m_, m_.cost().loop_iteration, &stats_, arch_.flavor == AtomicFlavor::LoadStoreExclusive}; }
  bool exclusive() const { return arch_.flavor == AtomicFlavor::LoadStoreExclusive; }
  sim::Cycles body() const { return m_.cost().kernel_body; }
  void log(EventKind k, int task, int sem, int source = -1);

  ListRef blocked_ref(SemId s) const;
  ListRef delayed_ref() const;
  int prio(TaskId t) const { return tasks_[static_cast<std::size_t>(t)].priority; }
  const TaskCells& cells(TaskId t) const { return tasks_[static_cast<std::size_t>(t)].cells; }
  const SemCells& scells(SemId s) const { return sems_[static_cast<std::size_t>(s)].cells; }
  SemRecord& sem(SemId s) { return sems_[static_cast<std::size_t>(s)]; }
  const SemRecord& sem(SemId s) const { return sems_[static_cast<std::size_t>(s)]; }

  /// Switches to the best ready task if it outranks the running one.
  Proc<void> switch_core();
  /// Readies a task that has just left a Blocked List with a token.
  Proc<void> ready_after_unblock(TaskId t);
  /// Shared by ISR and task gives in kernels where ISRs touch Blocked Lists
  /// directly: takes the head atomically or counts the give. Returns the
  /// readied task or -1.
  Proc<int> unblock_one_atomic(SemId s);
  /// Asserts SWI if `t` outranks the running task (or nothing runs).
  Proc<void> swi_if_outranks(TaskId t);
  /// Decrements the count if positive; atomic against ISR increments.
  Proc<bool> try_acquire(TaskId t, SemId s);
  /// Removes the caller from the head of its Blocked List if the count is
  /// nonzero (reinsertion rule). Returns true if it withdrew.
  Proc<bool> withdraw_if_head(TaskId t, SemId s, bool has_timeout);

  sim::Machine& m_;
  ArchConfig arch_;
  StaticConfig statics_;
  std::vector<TaskRecord> tasks_;
  std::vector<SemRecord> sems_;
  NodeTable ready_nodes_;
  std::vector<int> prios_;
  std::vector<CellId> blocked_next_;
  std::vector<CellId> delayed_next_;
  std::vector<CellId> wake_ticks_;
  std::unique_ptr<ReadyList> ready_;
  CellId running_ = 0;
  CellId tick_ = 0;
  CellId delayed_head_ = 0;
  std::vector<Event> events_;
  ListStats stats_;
  int in_kernel_ = 0;
  bool started_ = false;
  int isr_released_ = 0;
  Word isr_count_total_ = 0;
};

std::unique_ptr<Kernel> make_kernel(sim::Machine& m, const ArchConfig& arch, const StaticConfig& statics);

/// Lowest set bit by a fixed five-step binary search over halves of width
/// 16, 8, 4, 2, 1. `iterations` receives the number of steps taken.
int bitmap_search(Word w, int* iterations = nullptr);

}  // namespace rtoslab::kernel
