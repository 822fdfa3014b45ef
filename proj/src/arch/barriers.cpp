#include "rtoslab/arch/architectures.hpp"

namespace rtoslab::arch {

using kernel::EventKind;
using kernel::link_to;
using kernel::TaskState;
using kernel::WakeReason;
using sim::MaskLevel;

namespace {
constexpr Word kBarrierMax = 0xFFFF;
}

void BarriersKernel::on_semaphore_created(kernel::SemRecord& s) {
  if (s.isr_released) s.cells.barrier = m_.memory().allocate("sem." + s.name + ".barrier");
}

Proc<void> BarriersKernel::release_barrier(SemId s) {
  sim::Port& p = port();
  const CellId b = *scells(s).barrier;
  Word v = 0;
  for (;;) {
    v = co_await p.xread(b, exclusive());
    if (co_await p.xwrite(b, v, 0, exclusive())) break;
    ctx().restart();
  }
  for (Word i = 1; i < v; ++i) {
    ++served_;
    int n = co_await unblock_one_atomic(s);
    if (n >= 0) co_await swi_if_outranks(n);
  }
}

Proc<TakeOutcome> BarriersKernel::take(TaskId t, SemId s, std::optional<Word> timeout) {
  {
    Section sec(*this);
    sim::Port& p = port();
    co_await p.mask(MaskLevel::Software);
    p.charge(body());
    const auto barrier = scells(s).barrier;
    for (;;) {
      if (co_await try_acquire(t, s)) {
        co_await p.unmask(MaskLevel::Software);
        co_return TakeOutcome::Acquired;
      }
      if (barrier) {
        if (co_await p.load(*barrier) != 0) throw sim::SimFault("barrier of '" + sem(s).name + "' already set");
        co_await p.store(*barrier, 1);
      }
      co_await p.store(cells(t).blocked_on, link_to(s));
      if (timeout) {
        Word now = co_await p.load(tick_);
        co_await p.store(cells(t).wake_tick, now + *timeout);
        co_await p.store(cells(t).state, static_cast<Word>(TaskState::BlockedDelayed));
        co_await kernel::plain_insert_sorted(ctx(), delayed_ref(), t);
      } else {
        co_await p.store(cells(t).state, static_cast<Word>(TaskState::Blocked));
      }
      co_await kernel::plain_insert_sorted(ctx(), blocked_ref(s), t);
      log(EventKind::Block, t, s);
      if (barrier) co_await release_barrier(s);
      if (!co_await withdraw_if_head(t, s, timeout.has_value())) break;
    }
    co_await p.assert_swi();
    co_await p.unmask(MaskLevel::Software);
  }
  WakeReason r = co_await wait_wake(t);
  co_return r == WakeReason::TimedOut ? TakeOutcome::TimedOut : TakeOutcome::Acquired;
}

Proc<void> BarriersKernel::give(TaskId t, SemId s) {
  Section sec(*this);
  log(EventKind::GiveCall, t, s);
  sim::Port& p = port();
  co_await p.mask(MaskLevel::Software);
  p.charge(body());
  int n = co_await unblock_one_atomic(s);
  if (n >= 0) co_await swi_if_outranks(n);
  co_await p.unmask(MaskLevel::Software);
}

Proc<void> BarriersKernel::give_from_isr(SemId s, int isr) {
  Section sec(*this);
  sim::Port& p = port();
  log(EventKind::GiveCall, -1, s, isr);
  if (!scells(s).barrier) throw sim::SimFault("semaphore '" + sem(s).name + "' was not declared ISR-released");
  p.charge(body());
  const CellId b = *scells(s).barrier;
  for (;;) {
    Word w = co_await p.xread(b, exclusive());
    if (w == 0) break;
    if (w >= kBarrierMax) throw sim::SimFault("request count of '" + sem(s).name + "' saturated");
    if (co_await p.xwrite(b, w, w + 1, exclusive())) {
      ++requests_;
      log(EventKind::Request, -1, s, isr);
      co_return;
    }
    ctx().restart();
  }
  int n = co_await unblock_one_atomic(s);
  if (n >= 0) co_await swi_if_outranks(n);
}

Proc<void> BarriersKernel::swi() {
  Section sec(*this);
  port().charge(body());
  co_await switch_core();
}

Proc<bool> BarriersKernel::remove_expired(TaskId t, SemId s) {
  sim::Port& p = port();
  const auto barrier = scells(s).barrier;
  if (barrier) co_await p.store(*barrier, 1);
  bool removed = false;
  // An ISR may have handed the task a token since SysTick looked at it.
  if (static_cast<TaskState>(co_await p.load(cells(t).state)) == TaskState::BlockedDelayed) {
    removed = co_await kernel::plain_remove(ctx(), blocked_ref(s), t);
    if (removed) log(EventKind::Timeout, t, s);
  }
  if (barrier) co_await release_barrier(s);
  co_return removed;
}

std::optional<std::string> BarriersKernel::check_quiescent() const {
  if (auto e = Kernel::check_quiescent()) return e;
  for (const auto& s : sems_) {
    if (s.cells.barrier && m_.memory().peek(*s.cells.barrier) != 0)
      return "barrier of '" + s.name + "' left set";
  }
  if (requests_ != served_)
    return std::to_string(requests_) + " requests recorded but " + std::to_string(served_) + " served";
  return std::nullopt;
}

}  // namespace rtoslab::arch
