#include "rtoslab/arch/architectures.hpp"

namespace rtoslab::arch {

using kernel::EventKind;
using kernel::kAbsent;
using kernel::link_to;
using kernel::TaskState;
using kernel::WakeReason;
using sim::MaskLevel;

Proc<int> BaselineKernel::unblock_one(SemId s) {
  sim::Port& p = port();
  if (co_await p.load(scells(s).blocked_head) == kAbsent) {
    Word c = co_await p.load(scells(s).count);
    if (c >= sem(s).max_count) {
      log(EventKind::Overflow, -1, s);
    } else {
      co_await p.store(scells(s).count, c + 1);
      log(EventKind::Give, -1, s);
    }
    co_return -1;
  }
  int n = co_await kernel::plain_extract_head(ctx(), blocked_ref(s));
  log(EventKind::Give, n, s);
  co_await ready_after_unblock(n);
  co_return n;
}

Proc<TakeOutcome> BaselineKernel::take(TaskId t, SemId s, std::optional<Word> timeout) {
  {
    Section sec(*this);
    sim::Port& p = port();
    co_await p.mask(MaskLevel::Peripheral);
    p.charge(body());
    Word c = co_await p.load(scells(s).count);
    if (c > 0) {
      co_await p.store(scells(s).count, c - 1);
      log(EventKind::Acquire, t, s);
      co_await p.unmask(MaskLevel::Peripheral);
      co_return TakeOutcome::Acquired;
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
    co_await p.assert_swi();
    co_await p.unmask(MaskLevel::Peripheral);
  }
  WakeReason r = co_await wait_wake(t);
  co_return r == WakeReason::TimedOut ? TakeOutcome::TimedOut : TakeOutcome::Acquired;
}

Proc<void> BaselineKernel::give(TaskId t, SemId s) {
  Section sec(*this);
  log(EventKind::GiveCall, t, s);
  sim::Port& p = port();
  co_await p.mask(MaskLevel::Peripheral);
  p.charge(body());
  int n = co_await unblock_one(s);
  if (n >= 0) co_await swi_if_outranks(n);
  co_await p.unmask(MaskLevel::Peripheral);
}

Proc<void> BaselineKernel::give_from_isr(SemId s, int isr) {
  Section sec(*this);
  sim::Port& p = port();
  log(EventKind::GiveCall, -1, s, isr);
  co_await p.mask(MaskLevel::Peripheral);
  p.charge(body());
  int n = co_await unblock_one(s);
  if (n >= 0) co_await swi_if_outranks(n);
  co_await p.unmask(MaskLevel::Peripheral);
}

Proc<void> BaselineKernel::swi() {
  Section sec(*this);
  sim::Port& p = port();
  co_await p.mask(MaskLevel::Peripheral);
  p.charge(body());
  co_await switch_core();
  co_await p.unmask(MaskLevel::Peripheral);
}

Proc<bool> BaselineKernel::remove_expired(TaskId t, SemId s) {
  bool removed = co_await kernel::plain_remove(ctx(), blocked_ref(s), t);
  if (removed) log(EventKind::Timeout, t, s);
  co_return removed;
}

}  // namespace rtoslab::arch
