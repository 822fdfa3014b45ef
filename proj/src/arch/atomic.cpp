#include "rtoslab/arch/architectures.hpp"

namespace rtoslab::arch {

using kernel::EventKind;
using kernel::link_to;
using kernel::TaskState;
using kernel::WakeReason;
using sim::MaskLevel;

Proc<TakeOutcome> AtomicKernel::take(TaskId t, SemId s, std::optional<Word> timeout) {
  {
    Section sec(*this);
    sim::Port& p = port();
    co_await p.mask(MaskLevel::Software);
    p.charge(body());
    for (;;) {
      if (co_await try_acquire(t, s)) {
        co_await p.unmask(MaskLevel::Software);
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
      co_await kernel::atomic_insert_sorted(ctx(), blocked_ref(s), t, [this, t, s] { log(EventKind::Block, t, s); });
      if (!co_await withdraw_if_head(t, s, timeout.has_value())) break;
    }
    co_await p.assert_swi();
    co_await p.unmask(MaskLevel::Software);
  }
  WakeReason r = co_await wait_wake(t);
  co_return r == WakeReason::TimedOut ? TakeOutcome::TimedOut : TakeOutcome::Acquired;
}

Proc<void> AtomicKernel::give(TaskId t, SemId s) {
  Section sec(*this);
  log(EventKind::GiveCall, t, s);
  sim::Port& p = port();
  co_await p.mask(MaskLevel::Software);
  p.charge(body());
  int n = co_await unblock_one_atomic(s);
  if (n >= 0) co_await swi_if_outranks(n);
  co_await p.unmask(MaskLevel::Software);
}

Proc<void> AtomicKernel::give_from_isr(SemId s, int isr) {
  Section sec(*this);
  log(EventKind::GiveCall, -1, s, isr);
  port().charge(body());
  int n = co_await unblock_one_atomic(s);
  if (n >= 0) co_await swi_if_outranks(n);
}

Proc<void> AtomicKernel::swi() {
  Section sec(*this);
  port().charge(body());
  co_await switch_core();
}

Proc<bool> AtomicKernel::remove_expired(TaskId t, SemId s) {
  co_return co_await kernel::atomic_remove(ctx(), blocked_ref(s), t, [this, t, s] { log(EventKind::Timeout, t, s); });
}

}  // namespace rtoslab::arch
