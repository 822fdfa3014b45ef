#include "rtoslab/kernel/kernel.hpp"

#include <algorithm>
#include <climits>
#include <set>

namespace rtoslab::kernel {

using sim::MaskLevel;

Kernel::Kernel(sim::Machine& m, ArchConfig arch, StaticConfig statics) : m_(m), arch_(arch), statics_(statics) {
  auto& mem = m_.memory();
  running_ = mem.allocate("kernel.running");
  tick_ = mem.allocate("kernel.tick");
  delayed_head_ = mem.allocate("kernel.delayed.head");
  ready_ = make_ready_list(arch_, ready_nodes_);
  ready_->allocate(mem);
}

TaskId Kernel::add_task(std::string name, int priority) {
  if (started_) throw ConfigError("tasks must be created before the kernel starts");
  if (priority < 0 || priority > 255) throw ConfigError("task priority out of range: " + std::to_string(priority));
  auto& mem = m_.memory();
  TaskRecord t;
  t.id = static_cast<TaskId>(tasks_.size());
  t.name = std::move(name);
  t.priority = priority;
  const std::string p = "task." + t.name + ".";
  t.cells.next_blocked = mem.allocate(p + "nextBlocked");
  t.cells.next_ready = mem.allocate(p + "nextReady");
  t.cells.next_delayed = mem.allocate(p + "nextDelayed");
  t.cells.state = mem.allocate(p + "state");
  t.cells.wake_tick = mem.allocate(p + "wakeTick");
  t.cells.wake_reason = mem.allocate(p + "wakeReason");
  t.cells.blocked_on = mem.allocate(p + "blockedOn");
  ready_nodes_.priority.push_back(priority);
  ready_nodes_.next.push_back(t.cells.next_ready);
  prios_.push_back(priority);
  blocked_next_.push_back(t.cells.next_blocked);
  delayed_next_.push_back(t.cells.next_delayed);
  wake_ticks_.push_back(t.cells.wake_tick);
  tasks_.push_back(std::move(t));
  return tasks_.back().id;
}

SemId Kernel::create_semaphore(std::string name, Word max_count, Word initial, bool isr_released) {
  if (started_) throw ConfigError("semaphores must be created before the kernel starts");
  if (max_count < 1) throw ConfigError("semaphore '" + name + "': maxCount must be positive");
  if (initial > max_count) throw ConfigError("semaphore '" + name + "': initial count exceeds maxCount");
  if (static_cast<int>(sems_.size()) >= statics_.semaphore_budget)
    throw ConfigError("semaphore budget of " + std::to_string(statics_.semaphore_budget) + " exhausted");
  if (arch_.kind == ArchKind::Barriers && max_count > 65534)
    throw ConfigError("semaphore '" + name + "': maxCount above 65534 does not fit the barrier word");
  if (isr_released && arch_.kind == ArchKind::Defer) {
    switch (arch_.defer) {
      case DeferVariant::BitmapFlags:
        if (isr_released_ >= 32) throw ConfigError("NUM_ISR_SMPHRS<=32 exceeded: bitmap holds 32 semaphores");
        [[fallthrough]];
      case DeferVariant::SemFifo:
        if (isr_released_ >= statics_.num_isr_smphrs)
          throw ConfigError("NUM_ISR_SMPHRS (" + std::to_string(statics_.num_isr_smphrs) + ") exceeded");
        break;
      case DeferVariant::SemCountsFifo:
        if (static_cast<std::uint64_t>(isr_count_total_) + max_count >
            static_cast<std::uint64_t>(statics_.num_isr_semphr_counts))
          throw ConfigError("NUM_ISR_SEMPHR_COUNTS (" + std::to_string(statics_.num_isr_semphr_counts) +
                            ") cannot cover the counts of ISR-released semaphores");
        break;
      case DeferVariant::LinkedListFifo:
        break;
    }
  }
  auto& mem = m_.memory();
  SemRecord s;
  s.id = static_cast<SemId>(sems_.size());
  s.name = std::move(name);
  s.max_count = max_count;
  s.isr_released = isr_released;
  s.cells.count = mem.allocate("sem." + s.name + ".count", initial);
  s.cells.blocked_head = mem.allocate("sem." + s.name + ".blockedHead");
  on_semaphore_created(s);
  if (isr_released) {
    ++isr_released_;
    isr_count_total_ += max_count;
  }
  sems_.push_back(std::move(s));
  return sems_.back().id;
}

void Kernel::on_semaphore_created(SemRecord&) {}

void Kernel::start(const std::vector<InitialTask>& init) {
  if (started_) throw ConfigError("kernel already started");
  if (init.size() != tasks_.size()) throw ConfigError("initial state must name every task");
  auto& mem = m_.memory();
  std::vector<int> ready;
  std::vector<std::vector<int>> blocked(sems_.size());
  std::vector<int> delayed;
  for (std::size_t i = 0; i < init.size(); ++i) {
    const auto& in = init[i];
    const auto& c = tasks_[i].cells;
    int t = static_cast<int>(i);
    switch (in.kind) {
      case InitialTask::Kind::Ready:
        ready.push_back(t);
        mem.poke(c.state, static_cast<Word>(TaskState::Ready));
        break;
      case InitialTask::Kind::Blocked: {
        if (in.sem < 0 || in.sem >= static_cast<int>(sems_.size()))
          throw ConfigError("task '" + tasks_[i].name + "' blocked on an unknown semaphore");
        if (mem.peek(sem(in.sem).cells.count) != 0)
          throw ConfigError("task '" + tasks_[i].name + "' cannot start blocked on a semaphore with tokens");
        blocked[static_cast<std::size_t>(in.sem)].push_back(t);
        mem.poke(c.blocked_on, link_to(in.sem));
        if (in.timeout) {
          mem.poke(c.wake_tick, *in.timeout);
          delayed.push_back(t);
          mem.poke(c.state, static_cast<Word>(TaskState::BlockedDelayed));
        } else {
          mem.poke(c.state, static_cast<Word>(TaskState::Blocked));
        }
        break;
      }
      case InitialTask::Kind::Delayed:
        if (!in.timeout) throw ConfigError("task '" + tasks_[i].name + "' starts delayed without a wake tick");
        mem.poke(c.wake_tick, *in.timeout);
        delayed.push_back(t);
        mem.poke(c.state, static_cast<Word>(TaskState::Delayed));
        break;
      case InitialTask::Kind::Dormant:
        mem.poke(c.state, static_cast<Word>(TaskState::Dormant));
        break;
    }
  }
  ready_->seed(mem, ready);
  auto chain = [&](CellId head, const std::vector<CellId>& next, const std::vector<int>& v) {
    mem.poke(head, v.empty() ? kAbsent : link_to(v.front()));
    for (std::size_t i = 0; i < v.size(); ++i)
      mem.poke(next[static_cast<std::size_t>(v[i])], i + 1 < v.size() ? link_to(v[i + 1]) : link_to(v[i]));
  };
  for (std::size_t s = 0; s < sems_.size(); ++s) {
    auto v = blocked[s];
    std::stable_sort(v.begin(), v.end(), [&](int a, int b) { return prio(a) < prio(b); });
    chain(sems_[s].cells.blocked_head, blocked_next_, v);
  }
  std::stable_sort(delayed.begin(), delayed.end(),
                   [&](int a, int b) { return mem.peek(wake_ticks_[a]) < mem.peek(wake_ticks_[b]); });
  chain(delayed_head_, delayed_next_, delayed);
  mem.poke(running_, kAbsent);
  on_start();
  started_ = true;
}

void Kernel::log(EventKind k, int task, int sem, int source) {
  events_.push_back(Event{k, task, sem, source, m_.ledger().now()});
}

ListRef Kernel::blocked_ref(SemId s) const {
  return ListRef{scells(s).blocked_head, &blocked_next_, NodeKey{&prios_, nullptr}};
}

ListRef Kernel::delayed_ref() const { return ListRef{delayed_head_, &delayed_next_, NodeKey{nullptr, &wake_ticks_}}; }

Proc<void> Kernel::systick_prologue() { co_return; }

Proc<void> Kernel::systick() {
  Section sec(*this);
  const bool masks = arch_.kind == ArchKind::Baseline;
  sim::Port& p = port();
  if (masks) co_await p.mask(MaskLevel::Peripheral);
  p.charge(body());
  co_await systick_prologue();
  Word now = co_await p.load(tick_) + 1;
  co_await p.store(tick_, now);
  bool readied = false;
  for (;;) {
    Word h = co_await p.load(delayed_head_);
    if (h == kAbsent) break;
    int t = node_of(h);
    if (co_await p.load(cells(t).wake_tick) > now) break;
    co_await plain_extract_head(ctx(), delayed_ref());
    auto st = static_cast<TaskState>(co_await p.load(cells(t).state));
    if (st == TaskState::BlockedDelayed) {
      SemId s = node_of(co_await p.load(cells(t).blocked_on));
      if (co_await remove_expired(t, s)) {
        co_await p.store(cells(t).wake_reason, static_cast<Word>(WakeReason::TimedOut));
        co_await p.store(cells(t).state, static_cast<Word>(TaskState::Ready));
        co_await ready_->insert(ctx(), t);
      } else {
        co_await p.store(cells(t).state, static_cast<Word>(TaskState::Ready));
      }
    } else if (st == TaskState::ReadyDelayed) {
      co_await p.store(cells(t).state, static_cast<Word>(TaskState::Ready));
    } else {
      co_await p.store(cells(t).state, static_cast<Word>(TaskState::Ready));
      co_await ready_->insert(ctx(), t);
    }
    readied = true;
  }
  if (readied) co_await p.assert_swi();
  if (masks) co_await p.unmask(MaskLevel::Peripheral);
}

Proc<void> Kernel::delay(TaskId t, Word ticks) {
  {
    Section sec(*this);
    sim::Port& p = port();
    co_await p.mask(lock_level());
    p.charge(body());
    Word now = co_await p.load(tick_);
    co_await p.store(cells(t).wake_tick, now + ticks);
    co_await p.store(cells(t).state, static_cast<Word>(TaskState::Delayed));
    co_await plain_insert_sorted(ctx(), delayed_ref(), t);
    co_await p.assert_swi();
    co_await p.unmask(lock_level());
  }
  co_await wait_wake(t);
}

Proc<void> Kernel::exit(TaskId t) {
  Section sec(*this);
  sim::Port& p = port();
  co_await p.mask(lock_level());
  p.charge(body());
  co_await p.store(cells(t).state, static_cast<Word>(TaskState::Dormant));
  co_await p.assert_swi();
  co_await p.unmask(lock_level());
}

Proc<WakeReason> Kernel::wait_wake(TaskId t) {
  sim::Port& p = port();
  co_await p.wait_dispatch();
  Section sec(*this);
  Word r = co_await p.load(cells(t).wake_reason);
  co_await p.store(cells(t).wake_reason, static_cast<Word>(WakeReason::None));
  co_return static_cast<WakeReason>(r);
}

Proc<void> Kernel::switch_core() {
  sim::Port& p = port();
  Word r = co_await p.load(running_);
  int cur = r == kAbsent ? -1 : node_of(r);
  bool keep = false;
  if (cur >= 0) keep = static_cast<TaskState>(co_await p.load(cells(cur).state)) == TaskState::Running;
  int bound = keep ? prio(cur) : INT_MAX;
  int next = co_await ready_->extract_if_better(ctx(), bound);
  if (next < 0) {
    if (!keep && r != kAbsent) co_await p.store(running_, kAbsent);
    co_return;
  }
  if (keep) {
    co_await p.store(cells(cur).state, static_cast<Word>(TaskState::Ready));
    co_await ready_->insert(ctx(), cur);
  }
  if (static_cast<TaskState>(co_await p.load(cells(next).state)) == TaskState::ReadyDelayed) {
    co_await plain_remove(ctx(), delayed_ref(), next);
  }
  co_await p.store(cells(next).state, static_cast<Word>(TaskState::Running));
  co_await p.store(running_, link_to(next));
}

Proc<void> Kernel::ready_after_unblock(TaskId t) {
  sim::Port& p = port();
  co_await p.store(cells(t).wake_reason, static_cast<Word>(WakeReason::Acquired));
  auto st = static_cast<TaskState>(co_await p.load(cells(t).state));
  const bool isr_safe = arch_.kind == ArchKind::Barriers || arch_.kind == ArchKind::StrictlyAtomic;
  if (st == TaskState::BlockedDelayed && !isr_safe) {
    co_await plain_remove(ctx(), delayed_ref(), t);
    st = TaskState::Blocked;
  }
  TaskState to = st == TaskState::BlockedDelayed ? TaskState::ReadyDelayed : TaskState::Ready;
  co_await p.store(cells(t).state, static_cast<Word>(to));
  co_await ready_->insert(ctx(), t);
}

Proc<int> Kernel::unblock_one_atomic(SemId s) {
  sim::Port& p = port();
  int n = co_await atomic_extract_head(ctx(), blocked_ref(s), [this, s](int t) { log(EventKind::Give, t, s); });
  if (n >= 0) {
    co_await ready_after_unblock(n);
    co_return n;
  }
  const CellId cnt = scells(s).count;
  for (;;) {
    Word c = co_await p.xread(cnt, exclusive());
    if (c >= sem(s).max_count) {
      log(EventKind::Overflow, -1, s);
      co_return -1;
    }
    if (co_await p.xwrite(cnt, c, c + 1, exclusive())) {
      log(EventKind::Give, -1, s);
      co_return -1;
    }
    ctx().restart();
  }
}

Proc<void> Kernel::swi_if_outranks(TaskId t) {
  sim::Port& p = port();
  Word r = co_await p.load(running_);
  if (r == kAbsent || prio(t) < prio(node_of(r))) co_await p.assert_swi();
}

Proc<bool> Kernel::try_acquire(TaskId t, SemId s) {
  sim::Port& p = port();
  const CellId cnt = scells(s).count;
  for (;;) {
    Word c = co_await p.xread(cnt, exclusive());
    if (c == 0) co_return false;
    if (co_await p.xwrite(cnt, c, c - 1, exclusive())) {
      log(EventKind::Acquire, t, s);
      co_return true;
    }
    ctx().restart();
  }
}

Proc<bool> Kernel::withdraw_if_head(TaskId t, SemId s, bool has_timeout) {
  sim::Port& p = port();
  const CellId head = scells(s).blocked_head;
  for (;;) {
    Word h = co_await p.xread(head, exclusive());
    if (h != link_to(t)) co_return false;
    if (co_await p.load(scells(s).count) == 0) co_return false;
    Word nx = co_await p.load(cells(t).next_blocked);
    if (nx == kAbsent) co_return false;
    if (co_await p.xwrite(head, h, is_self(nx, t) ? kAbsent : nx, exclusive())) {
      log(EventKind::Cancel, t, s);
      break;
    }
    ctx().restart();
  }
  co_await p.store(cells(t).next_blocked, kAbsent);
  if (has_timeout) co_await plain_remove(ctx(), delayed_ref(), t);
  co_await p.store(cells(t).state, static_cast<Word>(TaskState::Running));
  co_return true;
}

// Inspection.

int Kernel::running() const {
  Word r = m_.memory().peek(running_);
  return r == kAbsent ? -1 : node_of(r);
}

TaskState Kernel::state(TaskId t) const { return static_cast<TaskState>(m_.memory().peek(cells(t).state)); }

Word Kernel::count(SemId s) const { return m_.memory().peek(scells(s).count); }

std::vector<TaskId> Kernel::blocked_list(SemId s) const {
  return walk(m_.memory(), scells(s).blocked_head, blocked_next_, tasks_.size()).nodes;
}

std::vector<TaskId> Kernel::delayed_list() const {
  return walk(m_.memory(), delayed_head_, delayed_next_, tasks_.size()).nodes;
}

std::vector<TaskId> Kernel::ready_members() const { return ready_->members(m_.memory()); }

std::optional<TaskState> Kernel::deduce_state(TaskId t) const {
  const auto& mem = m_.memory();
  const auto& c = cells(t);
  bool b = mem.peek(c.next_blocked) != kAbsent;
  bool r = mem.peek(c.next_ready) != kAbsent;
  bool d = mem.peek(c.next_delayed) != kAbsent;
  if (b && r) return std::nullopt;
  if (b) return d ? TaskState::BlockedDelayed : TaskState::Blocked;
  if (r) return d ? TaskState::ReadyDelayed : TaskState::Ready;
  if (d) return TaskState::Delayed;
  return running() == t ? TaskState::Running : TaskState::Dormant;
}

std::optional<std::string> Kernel::check_step() const {
  const auto& mem = m_.memory();
  std::vector<int> where(tasks_.size(), -1);
  for (const auto& s : sems_) {
    auto w = walk(mem, s.cells.blocked_head, blocked_next_, tasks_.size());
    if (w.error) return "blocked list of '" + s.name + "': " + *w.error;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
      int t = w.nodes[i];
      if (where[static_cast<std::size_t>(t)] >= 0)
        return "task '" + tasks_[static_cast<std::size_t>(t)].name + "' is in two blocked lists";
      where[static_cast<std::size_t>(t)] = s.id;
      if (i > 0 && prio(t) < prio(w.nodes[i - 1])) return "blocked list of '" + s.name + "' is not sorted";
    }
    Word c = mem.peek(s.cells.count);
    if (c > s.max_count) return "semaphore '" + s.name + "' count " + std::to_string(c) + " exceeds maxCount";
  }
  if (auto e = ready_->check(mem)) return e;
  for (int t : ready_->members(mem)) {
    if (where[static_cast<std::size_t>(t)] >= 0)
      return "task '" + tasks_[static_cast<std::size_t>(t)].name + "' is in a blocked list and the ready list";
  }
  auto d = walk(mem, delayed_head_, delayed_next_, tasks_.size());
  if (d.error) return "delayed list: " + *d.error;
  for (std::size_t i = 1; i < d.nodes.size(); ++i) {
    if (mem.peek(wake_ticks_[d.nodes[i]]) < mem.peek(wake_ticks_[d.nodes[i - 1]])) return "delayed list is not sorted";
  }
  if (arch_.kind != ArchKind::Baseline &&
      m_.ledger().count(MaskLevel::Peripheral, sim::MaskOrigin::Kernel) != 0)
    return "kernel masked peripheral interrupts";
  return std::nullopt;
}

std::optional<std::string> Kernel::check_quiescent() const {
  const auto& mem = m_.memory();
  if (auto e = ready_->check_quiescent(mem)) return e;
  const std::size_t n = tasks_.size();
  std::vector<int> blocked_on(n, -1);
  for (const auto& s : sems_) {
    for (int t : blocked_list(s.id)) blocked_on[static_cast<std::size_t>(t)] = s.id;
  }
  std::vector<bool> in_ready(n, false), in_delayed(n, false);
  for (int t : ready_members()) in_ready[static_cast<std::size_t>(t)] = true;
  for (int t : delayed_list()) in_delayed[static_cast<std::size_t>(t)] = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = tasks_[i];
    const auto& c = rec.cells;
    const std::string who = "task '" + rec.name + "'";
    const bool b = blocked_on[i] >= 0;
    if ((mem.peek(c.next_blocked) != kAbsent) != b) return who + ": blocked link disagrees with membership";
    if ((mem.peek(c.next_ready) != kAbsent) != in_ready[i]) return who + ": ready link disagrees with membership";
    if ((mem.peek(c.next_delayed) != kAbsent) != in_delayed[i]) return who + ": delayed link disagrees with membership";
    TaskState st = state(static_cast<TaskId>(i));
    bool ok = false;
    switch (st) {
      case TaskState::Running: ok = !b && !in_ready[i] && !in_delayed[i] && running() == static_cast<int>(i); break;
      case TaskState::Ready: ok = !b && in_ready[i] && !in_delayed[i]; break;
      case TaskState::ReadyDelayed: ok = !b && in_ready[i] && in_delayed[i]; break;
      case TaskState::Blocked: ok = b && !in_ready[i] && !in_delayed[i]; break;
      case TaskState::BlockedDelayed: ok = b && !in_ready[i] && in_delayed[i]; break;
      case TaskState::Delayed: ok = !b && !in_ready[i] && in_delayed[i]; break;
      case TaskState::Dormant: ok = !b && !in_ready[i] && !in_delayed[i]; break;
    }
    if (!ok) return who + ": state " + to_string(st) + " disagrees with list membership";
    if (b && node_of(mem.peek(c.blocked_on)) != blocked_on[i]) return who + ": blocked on the wrong semaphore";
    if (st != TaskState::Dormant) {
      auto ded = deduce_state(static_cast<TaskId>(i));
      if (!ded || *ded != st) return who + ": links imply a different state than " + std::string(to_string(st));
    }
  }
  if (!releases_pending()) {
    for (const auto& s : sems_) {
      if (mem.peek(s.cells.count) > 0 && mem.peek(s.cells.blocked_head) != kAbsent)
        return "semaphore '" + s.name + "' has tokens and waiters (lost wakeup)";
    }
  }
  return std::nullopt;
}

}  // namespace rtoslab::kernel
