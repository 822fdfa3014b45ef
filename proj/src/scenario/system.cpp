#include "rtoslab/scenario/system.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace rtoslab::scenario {

using explore::Choice;
using kernel::ConfigError;
using kernel::EventKind;
using kernel::InitialTask;

void validate(const SystemSpec& spec) {
  const int ns = static_cast<int>(spec.sems.size());
  auto sem_ok = [&](int s) { return s >= 0 && s < ns; };
  for (const auto& s : spec.sems) {
    if (s.max_count < 1) throw ConfigError("semaphore '" + s.name + "': maxCount must be positive");
    if (s.initial > s.max_count) throw ConfigError("semaphore '" + s.name + "': initial count exceeds maxCount");
  }
  for (const auto& t : spec.tasks) {
    if (t.priority < 0 || t.priority > 255) throw ConfigError("task '" + t.name + "': priority out of range");
    if (t.start == InitialTask::Kind::Blocked && !sem_ok(t.start_sem))
      throw ConfigError("task '" + t.name + "': starts blocked on an unknown semaphore");
    if (t.start == InitialTask::Kind::Delayed && !t.start_timeout)
      throw ConfigError("task '" + t.name + "': starts delayed without a timeout");
    for (const auto& a : t.script) {
      bool needs_sem = a.kind == TaskAction::Kind::Take || a.kind == TaskAction::Kind::Give;
      if (needs_sem && !sem_ok(a.sem)) throw ConfigError("task '" + t.name + "': action names an unknown semaphore");
    }
  }
  for (const auto& i : spec.isrs) {
    if (i.priority < 0 || i.priority > 255) throw ConfigError("isr '" + i.name + "': priority out of range");
    if (i.above_ceiling && !i.gives.empty())
      throw ConfigError("isr '" + i.name + "': an interrupt above the kernel ceiling cannot call kernel services");
    if (i.raises < 0) throw ConfigError("isr '" + i.name + "': negative raise count");
    for (int s : i.gives) {
      if (!sem_ok(s)) throw ConfigError("isr '" + i.name + "': gives an unknown semaphore");
      if (!spec.sems[static_cast<std::size_t>(s)].isr_released)
        throw ConfigError("isr '" + i.name + "': semaphore '" + spec.sems[static_cast<std::size_t>(s)].name +
                          "' is not declared ISR-released");
    }
  }
  if (spec.systick_raises < 0) throw ConfigError("negative SysTick raise count");
}

System::System(const SystemSpec& spec) : spec_(spec) {
  validate(spec_);
  machine_ = std::make_unique<sim::Machine>(spec_.cost, spec_.reservation, sim::Discipline::Priority);
  kernel_ = kernel::make_kernel(*machine_, spec_.arch, spec_.statics);
  auto& m = *machine_;

  swi_ = m.add_source({"swi", sim::ContextKind::SoftwareIrq, 0, false, [this] { return kernel_->swi(); }});
  m.set_swi_source(swi_);
  systick_ = m.add_source({"systick", sim::ContextKind::SysTickIrq, 0, false, [this] { return kernel_->systick(); }});

  for (const auto& s : spec_.sems) kernel_->create_semaphore(s.name, s.max_count, s.initial, s.isr_released);
  for (std::size_t i = 0; i < spec_.isrs.size(); ++i) {
    const auto& is = spec_.isrs[i];
    int idx = static_cast<int>(i);
    auto src = m.add_source(
        {is.name, sim::ContextKind::PeripheralIsr, is.priority, is.above_ceiling, [this, idx] { return isr_main(idx); }});
    isr_sources_.push_back(src);
    raisables_.push_back({src, is.raises, is.raise_at, is.name});
  }
  raisables_.push_back({systick_, spec_.systick_raises, RaiseAt::Anywhere, "systick"});

  std::vector<InitialTask> init;
  std::vector<int> prios;
  outcomes_.resize(spec_.tasks.size());
  first_dispatch_.resize(spec_.tasks.size());
  for (std::size_t t = 0; t < spec_.tasks.size(); ++t) {
    const auto& ts = spec_.tasks[t];
    kernel_->add_task(ts.name, ts.priority);
    m.add_task(ts.name, ts.priority, task_main(static_cast<int>(t)));
    init.push_back({ts.start, ts.start_sem, ts.start_timeout});
    prios.push_back(ts.priority);
  }
  kernel_->start(init);

  std::vector<Word> counts;
  for (const auto& s : spec_.sems) counts.push_back(s.initial);
  oracle_ = kernel::TokenOracle(prios, counts);
  for (std::size_t t = 0; t < spec_.tasks.size(); ++t) {
    if (spec_.tasks[t].start == InitialTask::Kind::Blocked) oracle_.add_waiter(spec_.tasks[t].start_sem, static_cast<int>(t));
  }
  calls_.resize(spec_.sems.size());
  call_head_.assign(spec_.sems.size(), 0);

  m.set_base_selector({[this] { return kernel_->running(); },
                       [this](int t) {
                         return kernel_->running() == t && kernel_->state(t) == kernel::TaskState::Running;
                       }});
  m.raise(swi_);
}

System::~System() {
  machine_->shutdown();
  kernel_.reset();
  machine_.reset();
}

sim::Proc<void> System::task_main(int t) {
  co_await kernel_->wait_wake(t);
  first_dispatch_[static_cast<std::size_t>(t)] = machine_->ledger().now();
  for (const auto& a : spec_.tasks[static_cast<std::size_t>(t)].script) {
    switch (a.kind) {
      case TaskAction::Kind::Take:
        outcomes_[static_cast<std::size_t>(t)].push_back(co_await kernel_->take(t, a.sem, a.timeout));
        break;
      case TaskAction::Kind::Give:
        co_await kernel_->give(t, a.sem);
        break;
      case TaskAction::Kind::Compute:
        co_await machine_->compute(a.amount);
        break;
      case TaskAction::Kind::Delay:
        co_await kernel_->delay(t, a.amount);
        break;
      case TaskAction::Kind::Exit:
        co_await kernel_->exit(t);
        co_return;
    }
  }
  co_await kernel_->exit(t);
}

sim::Proc<void> System::isr_main(int i) {
  const auto& is = spec_.isrs[static_cast<std::size_t>(i)];
  if (is.compute > 0) co_await machine_->compute(is.compute);
  for (int s : is.gives) co_await kernel_->give_from_isr(s, i);
}

bool System::any_pending() const {
  for (std::size_t s = 0; s < machine_->source_count(); ++s) {
    if (machine_->pending(static_cast<sim::SourceId>(s))) return true;
  }
  return false;
}

bool System::raise_allowed(const Raisable& r) const {
  if (machine_->pending(r.source)) return false;
  if (r.at == RaiseAt::Anywhere) return true;
  return machine_->nesting() == 0 && kernel_->quiescent() && !any_pending();
}

bool System::checking(Check c) const { return std::find(spec_.checks.begin(), spec_.checks.end(), c) != spec_.checks.end(); }

std::vector<Choice> System::choices() {
  std::vector<Choice> out;
  if (finished_ || violation_) return out;
  if (machine_->runnable()) out.push_back({kStep, 0});
  for (std::size_t i = 0; i < raisables_.size(); ++i) {
    if (raisables_[i].remaining > 0 && raise_allowed(raisables_[i])) out.push_back({kRaise, static_cast<int>(i)});
  }
  return out;
}

void System::fail(std::string invariant, std::string message) {
  if (violation_) return;
  violation_ = explore::Violation{std::move(invariant), std::move(message), machine_->steps()};
}

void System::apply(const Choice& c) {
  try {
    if (c.kind == kRaise) {
      auto& r = raisables_.at(static_cast<std::size_t>(c.arg));
      if (r.remaining <= 0) throw sim::SimFault("raise of '" + r.name + "' not available");
      --r.remaining;
      machine_->raise(r.source);
      if (machine_->runnable()) step_checked();
    } else {
      step_checked();
    }
  } catch (const sim::SimFault& e) {
    fail("fault", e.what());
  } catch (const ConfigError& e) {
    fail("fault", e.what());
  }
}

void System::step_checked() {
  machine_->step();
  after_step();
}

void System::after_step() {
  auto& k = *kernel_;
  if (checking(Check::Structure)) {
    if (auto e = k.check_step()) return fail("structure", *e);
    if (k.quiescent()) {
      if (auto e = k.check_quiescent()) return fail("structure", *e);
    }
  }
  if (checking(Check::NoPeripheralMask)) {
    const auto& led = machine_->ledger();
    if (led.depth(sim::MaskLevel::Peripheral) > 0 || led.count(sim::MaskLevel::Peripheral, sim::MaskOrigin::Kernel) > 0)
      return fail("no-peripheral-mask", "kernel masked peripheral interrupts");
  }
  const auto& ev = k.events();
  for (; events_seen_ < ev.size(); ++events_seen_) {
    const auto& e = ev[events_seen_];
    if (checking(Check::Oracle)) {
      if (auto msg = oracle_.apply(e)) return fail("oracle", *msg);
    }
    auto s = static_cast<std::size_t>(e.sem);
    if (e.kind == EventKind::GiveCall) {
      calls_[s].push_back(next_call_++);
    } else if (e.kind == EventKind::Give || e.kind == EventKind::Overflow) {
      if (call_head_[s] >= calls_[s].size()) continue;
      std::uint64_t ord = calls_[s][call_head_[s]++];
      if (e.kind != EventKind::Give || e.task < 0) continue;
      int prio = spec_.tasks[static_cast<std::size_t>(e.task)].priority;
      auto it = last_call_by_prio_.find(prio);
      if (checking(Check::GiveOrder) && it != last_call_by_prio_.end() && it->second > ord) {
        return fail("give-order", "task '" + spec_.tasks[static_cast<std::size_t>(e.task)].name +
                                      "' was readied out of give order among priority " + std::to_string(prio));
      }
      last_call_by_prio_[prio] = ord;
    }
  }
}

void System::finish() {
  if (finished_) return;
  finished_ = true;
  if (violation_ || !checking(Check::Final)) return;
  auto& k = *kernel_;
  if (!k.quiescent()) return fail("final", "a kernel service was left in progress");
  for (std::size_t s = 0; s < spec_.sems.size(); ++s) {
    const auto sid = static_cast<int>(s);
    const auto& name = spec_.sems[s].name;
    Word want = oracle_.count(sid) + k.pending_releases(sid);
    if (k.count(sid) != want)
      return fail("final", "semaphore '" + name + "' count " + std::to_string(k.count(sid)) + ", reference " +
                               std::to_string(want));
    if (k.pending_releases(sid) == 0 && k.blocked_list(sid) != oracle_.waiters(sid))
      return fail("final", "semaphore '" + name + "' waiters differ from the reference");
  }
}

std::string System::label(const Choice& c) const {
  const auto& last = machine_->last();
  std::string who = last.name + "#" + std::to_string(last.context_step);
  if (c.kind == kRaise) return "raise " + raisables_.at(static_cast<std::size_t>(c.arg)).name + ", " + who;
  return who;
}

std::string System::logical_state() const {
  std::ostringstream os;
  for (Word w : machine_->memory().snapshot()) os << w << ',';
  os << '|';
  for (const auto& e : kernel_->events()) os << static_cast<int>(e.kind) << ':' << e.task << ':' << e.sem << ';';
  os << '|';
  for (const auto& v : outcomes_) {
    for (auto o : v) os << static_cast<int>(o);
    os << ';';
  }
  if (violation_) os << '|' << violation_->invariant << ':' << violation_->message;
  return os.str();
}

std::vector<int> System::readied() const {
  std::vector<int> out;
  for (const auto& e : kernel_->events()) {
    if (e.kind == EventKind::Give && e.task >= 0) out.push_back(e.task);
  }
  return out;
}

System::TimedResult System::run_timed(Cycles max_cycles, std::uint64_t max_steps) {
  struct Timed {
    Cycles at;
    std::size_t raisable;
  };
  std::vector<Timed> timed;
  for (std::size_t i = 0; i < spec_.isrs.size(); ++i) {
    for (Cycles at : spec_.isrs[i].at) timed.push_back({at, i});
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) { return a.at < b.at; });
  std::vector<std::size_t> due;
  std::size_t next = 0;
  const Cycles quantum = spec_.cost.systick_quantum;
  Cycles next_tick = quantum;
  auto& m = *machine_;
  TimedResult res;
  try {
    while (!violation_) {
      Cycles now = m.ledger().now();
      while (next < timed.size() && timed[next].at <= now) due.push_back(timed[next++].raisable);
      for (auto it = due.begin(); it != due.end();) {
        if (raise_allowed(raisables_[*it])) {
          m.raise(raisables_[*it].source);
          it = due.erase(it);
        } else {
          ++it;
        }
      }
      if (spec_.periodic_systick && quantum > 0 && now >= next_tick) {
        m.raise(systick_);
        while (next_tick <= now) next_tick += quantum;
      }
      if (m.runnable()) {
        if (m.steps() >= max_steps) break;
        step_checked();
        continue;
      }
      if (!due.empty()) {
        // Nothing runs but a restricted raise is waiting; it becomes legal now.
        bool raised = false;
        for (auto it = due.begin(); it != due.end();) {
          if (!m.pending(raisables_[*it].source)) {
            m.raise(raisables_[*it].source);
            it = due.erase(it);
            raised = true;
          } else {
            ++it;
          }
        }
        if (raised) continue;
      }
      Cycles target = std::numeric_limits<Cycles>::max();
      if (next < timed.size()) target = timed[next].at;
      if (spec_.periodic_systick && quantum > 0 && !kernel_->delayed_list().empty()) target = std::min(target, next_tick);
      if (target == std::numeric_limits<Cycles>::max()) {
        res.completed = true;
        break;
      }
      if (target > max_cycles) break;
      m.ledger().advance_to(target);
    }
  } catch (const sim::SimFault& e) {
    fail("fault", e.what());
  }
  if (res.completed) finish();
  res.cycles = m.ledger().now();
  res.steps = m.steps();
  return res;
}

}  // namespace rtoslab::scenario
