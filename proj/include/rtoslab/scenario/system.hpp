#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/explore/subject.hpp"
#include "rtoslab/kernel/kernel.hpp"

namespace rtoslab::scenario {

using kernel::Word;
using sim::Cycles;

struct TaskAction {
  enum class Kind { Take, Give, Compute, Delay, Exit };
  Kind kind = Kind::Compute;
  int sem = -1;
  std::optional<Word> timeout;  // ticks, Take only
  Word amount = 0;              // cycles for Compute, ticks for Delay
};

struct TaskSpec {
  std::string name;
  int priority = 0;
  kernel::InitialTask::Kind start = kernel::InitialTask::Kind::Ready;
  int start_sem = -1;
  std::optional<Word> start_timeout;
  std::vector<TaskAction> script;
};

/// Where the explorer (or a timed run) may place a raise of an interrupt.
/// TaskLevel: only while no interrupt is active or pending and no kernel
/// service is in progress.
enum class RaiseAt { Anywhere, TaskLevel };

struct IsrSpec {
  std::string name;
  int priority = 0;
  bool above_ceiling = false;
  Word compute = 0;        // handler cycles before the gives
  std::vector<int> gives;  // semaphores released per dispatch
  int raises = 1;          // placements the explorer enumerates
  std::vector<Cycles> at;  // raise times for timed runs
  RaiseAt raise_at = RaiseAt::Anywhere;
};

struct SemSpec {
  std::string name;
  Word max_count = 1;
  Word initial = 0;
  bool isr_released = false;
};

/// Invariant groups a scenario can select.
enum class Check { Structure, Oracle, GiveOrder, Final, NoPeripheralMask };

struct SystemSpec {
  std::string name;
  kernel::ArchConfig arch;
  kernel::StaticConfig statics;
  sim::CostModel cost;
  sim::ReservationMode reservation = sim::ReservationMode::ClearedOnPreemption;
  std::vector<SemSpec> sems;
  std::vector<TaskSpec> tasks;
  std::vector<IsrSpec> isrs;
  int systick_raises = 0;         // SysTick placements for the explorer
  bool periodic_systick = false;  // timed runs: tick every cost.systick_quantum
  std::vector<Check> checks{Check::Structure, Check::Oracle, Check::Final};
};

/// Kernel plus simulated tasks and interrupts built from a SystemSpec, with
/// the invariant library evaluated after every primitive step.
class System final : public explore::Subject {
 public:
  enum ChoiceKind { kStep = 0, kRaise = 1 };

  explicit System(const SystemSpec& spec);
  ~System() override;
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  // Subject
  std::vector<explore::Choice> choices() override;
  void apply(const explore::Choice& c) override;
  void finish() override;
  const std::optional<explore::Violation>& violation() const override { return violation_; }
  std::uint64_t steps() const override { return machine_->steps(); }
  std::string label(const explore::Choice& c) const override;
  std::string logical_state() const override;

  struct TimedResult {
    bool completed = false;  // ran to idle with every raise delivered
    Cycles cycles = 0;
    std::uint64_t steps = 0;
  };
  /// Runs with raises at their configured cycle times and, if enabled, a
  /// periodic SysTick. Stops when idle with nothing left to deliver.
  TimedResult run_timed(Cycles max_cycles = 100'000'000, std::uint64_t max_steps = 10'000'000);

  const SystemSpec& spec() const { return spec_; }
  sim::Machine& machine() { return *machine_; }
  const sim::Machine& machine() const { return *machine_; }
  kernel::Kernel& kernel() { return *kernel_; }
  const kernel::Kernel& kernel() const { return *kernel_; }
  sim::SourceId isr_source(int i) const { return isr_sources_.at(static_cast<std::size_t>(i)); }
  sim::SourceId systick_source() const { return systick_; }
  sim::SourceId swi_source() const { return swi_; }

  /// Tasks handed a token, in linearization order.
  std::vector<int> readied() const;
  /// Outcomes of every completed take, per task.
  const std::vector<std::vector<kernel::TakeOutcome>>& outcomes() const { return outcomes_; }
  /// Cycle at which task `t` first ran its script, if it has.
  std::optional<Cycles> first_dispatch(int t) const { return first_dispatch_.at(static_cast<std::size_t>(t)); }
  bool task_finished(int t) const { return machine_->thread_done(t); }

 private:
  struct Raisable {
    sim::SourceId source;
    int remaining;
    RaiseAt at;
    std::string name;
  };

  sim::Proc<void> task_main(int t);
  sim::Proc<void> isr_main(int i);
  bool raise_allowed(const Raisable& r) const;
  bool any_pending() const;
  bool checking(Check c) const;
  void step_checked();
  void after_step();
  void fail(std::string invariant, std::string message);

  SystemSpec spec_;
  std::unique_ptr<sim::Machine> machine_;
  std::unique_ptr<kernel::Kernel> kernel_;
  std::vector<sim::SourceId> isr_sources_;
  sim::SourceId swi_ = -1;
  sim::SourceId systick_ = -1;
  std::vector<Raisable> raisables_;  // ISRs in spec order, then SysTick
  kernel::TokenOracle oracle_;
  std::size_t events_seen_ = 0;
  std::vector<std::vector<std::uint64_t>> calls_;  // per semaphore, unresolved give-call ordinals
  std::vector<std::size_t> call_head_;
  std::uint64_t next_call_ = 0;
  std::map<int, std::uint64_t> last_call_by_prio_;
  std::vector<std::vector<kernel::TakeOutcome>> outcomes_;
  std::vector<std::optional<Cycles>> first_dispatch_;
  std::optional<explore::Violation> violation_;
  bool finished_ = false;
};

/// Validates cross references and limits; throws kernel::ConfigError.
void validate(const SystemSpec& spec);

}  // namespace rtoslab::scenario
