#include <algorithm>
#include <bit>

#include "rtoslab/arch/architectures.hpp"

namespace rtoslab::arch {

using kernel::DeferVariant;
using kernel::EventKind;
using kernel::is_self;
using kernel::kAbsent;
using kernel::link_to;
using kernel::Mutant;
using kernel::node_of;
using kernel::TaskState;
using kernel::WakeReason;
using sim::MaskLevel;

namespace {
constexpr Word kUnblockCountMax = 0xFFFF;
}

void DeferKernel::on_semaphore_created(kernel::SemRecord& s) {
  auto& mem = m_.memory();
  defer_next_.push_back(0);
  if (!s.isr_released) return;
  if (uses_unblock_count()) s.cells.unblock_count = mem.allocate("sem." + s.name + ".unblockCount");
  if (arch_.defer == DeferVariant::LinkedListFifo) {
    s.cells.defer_next = mem.allocate("sem." + s.name + ".deferNext");
    defer_next_.back() = *s.cells.defer_next;
  }
  if (arch_.defer == DeferVariant::BitmapFlags) {
    s.bitmap_index = static_cast<int>(bitmap_owner_.size());
    bitmap_owner_.push_back(s.id);
  }
}

void DeferKernel::on_start() {
  auto& mem = m_.memory();
  switch (arch_.defer) {
    case DeferVariant::SemCountsFifo:
    case DeferVariant::SemFifo: {
      ring_limit_ = arch_.defer == DeferVariant::SemCountsFifo ? statics_.num_isr_semphr_counts : statics_.num_isr_smphrs;
      auto cap = std::bit_ceil(static_cast<unsigned>(ring_limit_ < 1 ? 1 : ring_limit_));
      ring_mask_ = cap - 1;
      for (unsigned i = 0; i < cap; ++i) ring_.push_back(mem.allocate("defer.ring[" + std::to_string(i) + "]"));
      ring_head_ = mem.allocate("defer.head");
      ring_tail_ = mem.allocate("defer.tail");
      break;
    }
    case DeferVariant::LinkedListFifo: {
      int sentinel = static_cast<int>(sems_.size());
      CellId sn = mem.allocate("defer.sentinel.deferNext", link_to(sentinel));
      defer_next_.push_back(sn);
      ll_head_ = mem.allocate("defer.head", link_to(sentinel));
      ll_tail_ = mem.allocate("defer.tail", link_to(sentinel));
      break;
    }
    case DeferVariant::BitmapFlags:
      bitmap_ = mem.allocate("defer.bitmap");
      break;
  }
}

Proc<bool> DeferKernel::count_up(SemId s) {
  sim::Port& p = port();
  const CellId cnt = scells(s).count;
  for (;;) {
    Word c = co_await p.xread(cnt, exclusive());
    if (c >= sem(s).max_count) {
      log(EventKind::Overflow, -1, s);
      co_return false;
    }
    if (co_await p.xwrite(cnt, c, c + 1, exclusive())) co_return true;
    ctx().restart();
  }
}

Proc<void> DeferKernel::ring_push(SemId s) {
  sim::Port& p = port();
  Word h = 0;
  Word t = 0;
  if (arch_.mutant == Mutant::NonAtomicFifoInsert) {
    h = co_await p.load(ring_head_);
    t = co_await p.load(ring_tail_);
    if (h - t >= static_cast<Word>(ring_limit_)) throw sim::SimFault("defer ring overflow");
    co_await p.store(ring_[h & ring_mask_], link_to(s));
    co_await p.store(ring_head_, h + 1);
  } else {
    // Claim the slot first, then fill it: a nested give claims the next one.
    for (;;) {
      h = co_await p.xread(ring_head_, exclusive());
      t = co_await p.load(ring_tail_);
      if (h - t >= static_cast<Word>(ring_limit_)) throw sim::SimFault("defer ring overflow");
      if (co_await p.xwrite(ring_head_, h, h + 1, exclusive())) break;
      ctx().restart();
    }
    co_await p.store(ring_[h & ring_mask_], link_to(s));
  }
  ++pushes_;
  if (h + 1 - t > max_occupancy_) max_occupancy_ = h + 1 - t;
}

Proc<void> DeferKernel::ll_enqueue(int node) {
  sim::Port& p = port();
  const bool ex = exclusive();
  auto nxt = [this](int n) { return defer_next_[static_cast<std::size_t>(n)]; };
  co_await p.store(nxt(node), link_to(node));
  int t = 0;
  for (;;) {
    t = node_of(co_await p.load(ll_tail_));
    Word nx = co_await p.xread(nxt(t), ex);
    if (nx == kAbsent) {
      ctx().restart();
      continue;
    }
    if (!is_self(nx, t)) {
      // Tail lags behind an enqueue that was preempted before swinging it.
      Word tw = co_await p.xread(ll_tail_, ex);
      if (tw == link_to(t)) co_await p.xwrite(ll_tail_, tw, nx, ex);
      ctx().restart();
      continue;
    }
    if (co_await p.xwrite(nxt(t), nx, link_to(node), ex)) break;
    ctx().restart();
  }
  for (;;) {
    Word tw = co_await p.xread(ll_tail_, ex);
    if (tw != link_to(t)) break;
    if (co_await p.xwrite(ll_tail_, tw, link_to(node), ex)) break;
  }
}

Proc<int> DeferKernel::ll_dequeue() {
  sim::Port& p = port();
  const int sn = sentinel();
  for (;;) {
    int h = node_of(co_await p.load(ll_head_));
    Word nx = co_await p.load(defer_next_[static_cast<std::size_t>(h)]);
    if (is_self(nx, h)) {
      if (h == sn) co_return -1;
      // Last real entry: park the sentinel behind it so the head can move.
      co_await ll_enqueue(sn);
      continue;
    }
    co_await p.store(ll_head_, nx);
    co_await p.store(defer_next_[static_cast<std::size_t>(h)], kAbsent);
    if (h == sn) continue;
    co_return h;
  }
}

Proc<void> DeferKernel::record(SemId s) {
  sim::Port& p = port();
  switch (arch_.defer) {
    case DeferVariant::SemCountsFifo:
    case DeferVariant::SemFifo:
      co_await ring_push(s);
      break;
    case DeferVariant::LinkedListFifo:
      co_await ll_enqueue(s);
      ++pushes_;
      break;
    case DeferVariant::BitmapFlags: {
      Word bit = Word{1} << *sem(s).bitmap_index;
      for (;;) {
        Word w = co_await p.xread(bitmap_, exclusive());
        if (co_await p.xwrite(bitmap_, w, w | bit, exclusive())) break;
        ctx().restart();
      }
      ++pushes_;
      break;
    }
  }
}

Proc<int> DeferKernel::fetch() {
  sim::Port& p = port();
  switch (arch_.defer) {
    case DeferVariant::SemCountsFifo:
    case DeferVariant::SemFifo: {
      Word t = co_await p.load(ring_tail_);
      Word h = co_await p.load(ring_head_);
      if (t == h) co_return -1;
      ctx().iterate();
      Word v = co_await p.load(ring_[t & ring_mask_]);
      co_await p.store(ring_tail_, t + 1);
      ++pops_;
      if (v == kAbsent) throw sim::SimFault("defer ring slot read before it was filled");
      co_return node_of(v);
    }
    case DeferVariant::LinkedListFifo: {
      int s = co_await ll_dequeue();
      if (s < 0) co_return -1;
      ctx().iterate();
      ++pops_;
      co_return s;
    }
    case DeferVariant::BitmapFlags: {
      Word w = co_await p.load(bitmap_);
      if (w == 0) co_return -1;
      int iterations = 0;
      int idx = kernel::bitmap_search(w, &iterations);
      for (int i = 0; i < iterations; ++i) ctx().iterate();
      Word bit = Word{1} << idx;
      for (;;) {
        Word cur = co_await p.xread(bitmap_, exclusive());
        if (co_await p.xwrite(bitmap_, cur, cur & ~bit, exclusive())) break;
        ctx().restart();
      }
      ++pops_;
      co_return bitmap_owner_[static_cast<std::size_t>(idx)];
    }
  }
  co_return -1;
}

Proc<bool> DeferKernel::structure_empty() {
  sim::Port& p = port();
  switch (arch_.defer) {
    case DeferVariant::SemCountsFifo:
    case DeferVariant::SemFifo:
      co_return co_await p.load(ring_tail_) == co_await p.load(ring_head_);
    case DeferVariant::LinkedListFifo: {
      Word h = co_await p.load(ll_head_);
      if (h != link_to(sentinel())) co_return false;
      co_return is_self(co_await p.load(defer_next_.back()), sentinel());
    }
    case DeferVariant::BitmapFlags:
      co_return co_await p.load(bitmap_) == 0;
  }
  co_return true;
}

Proc<void> DeferKernel::process_one(SemId s) {
  sim::Port& p = port();
  if (co_await p.load(scells(s).blocked_head) == kAbsent) {
    log(EventKind::Give, -1, s);
    co_return;
  }
  // The ISR already counted this release; hand the count to the waiter.
  const CellId cnt = scells(s).count;
  for (;;) {
    Word c = co_await p.xread(cnt, exclusive());
    if (c == 0) throw sim::SimFault("deferred release without a count on '" + sem(s).name + "'");
    if (co_await p.xwrite(cnt, c, c - 1, exclusive())) break;
    ctx().restart();
  }
  int n = co_await kernel::plain_extract_head(ctx(), blocked_ref(s));
  log(EventKind::Give, n, s);
  co_await ready_after_unblock(n);
}

Proc<void> DeferKernel::drain() {
  sim::Port& p = port();
  for (;;) {
    int s = co_await fetch();
    if (s < 0) break;
    Word n = 1;
    if (uses_unblock_count()) {
      const CellId u = *scells(s).unblock_count;
      for (;;) {
        n = co_await p.xread(u, exclusive());
        if (co_await p.xwrite(u, n, 0, exclusive())) break;
        ctx().restart();
      }
    }
    for (Word i = 0; i < n; ++i) co_await process_one(s);
  }
}

Proc<void> DeferKernel::systick_prologue() { co_await drain(); }

Proc<TakeOutcome> DeferKernel::take(TaskId t, SemId s, std::optional<Word> timeout) {
  {
    Section sec(*this);
    sim::Port& p = port();
    co_await p.mask(MaskLevel::Software);
    p.charge(body());
    const CellId cnt = scells(s).count;
    for (;;) {
      co_await drain();
      Word c = co_await p.xread(cnt, exclusive());
      // A release recorded after the drain is already in the count but has
      // not taken effect; process it first.
      if (!co_await structure_empty()) {
        ctx().restart();
        continue;
      }
      if (c == 0) break;
      if (co_await p.xwrite(cnt, c, c - 1, exclusive())) {
        log(EventKind::Acquire, t, s);
        co_await p.assert_swi();
        co_await p.unmask(MaskLevel::Software);
        co_return TakeOutcome::Acquired;
      }
      ctx().restart();
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
    co_await p.unmask(MaskLevel::Software);
  }
  WakeReason r = co_await wait_wake(t);
  co_return r == WakeReason::TimedOut ? TakeOutcome::TimedOut : TakeOutcome::Acquired;
}

Proc<void> DeferKernel::give(TaskId t, SemId s) {
  Section sec(*this);
  log(EventKind::GiveCall, t, s);
  sim::Port& p = port();
  co_await p.mask(MaskLevel::Software);
  p.charge(body());
  co_await drain();
  if (co_await p.load(scells(s).blocked_head) == kAbsent) {
    if (co_await count_up(s)) log(EventKind::Give, -1, s);
  } else {
    int n = co_await kernel::plain_extract_head(ctx(), blocked_ref(s));
    log(EventKind::Give, n, s);
    co_await ready_after_unblock(n);
  }
  // Anything readied here or by the drain may outrank the caller.
  co_await p.assert_swi();
  co_await p.unmask(MaskLevel::Software);
}

Proc<void> DeferKernel::give_from_isr(SemId s, int isr) {
  Section sec(*this);
  sim::Port& p = port();
  log(EventKind::GiveCall, -1, s, isr);
  if (!sem(s).isr_released)
    throw sim::SimFault("semaphore '" + sem(s).name + "' was not declared ISR-released");
  p.charge(body());
  if (!co_await count_up(s)) co_return;
  if (!uses_unblock_count()) {
    co_await ring_push(s);
    Word h = co_await p.load(scells(s).blocked_head);
    if (h != kAbsent) co_await swi_if_outranks(node_of(h));
    co_return;
  }
  const CellId u = *scells(s).unblock_count;
  Word prev = 0;
  for (;;) {
    prev = co_await p.xread(u, exclusive());
    if (prev >= kUnblockCountMax) throw sim::SimFault("unblock count of '" + sem(s).name + "' saturated");
    if (co_await p.xwrite(u, prev, prev + 1, exclusive())) break;
    ctx().restart();
  }
  if (prev == 0) co_await record(s);
  if (arch_.mutant == Mutant::ConditionalSwi) {
    Word h = co_await p.load(scells(s).blocked_head);
    if (h != kAbsent) co_await swi_if_outranks(node_of(h));
  } else {
    co_await p.assert_swi();
  }
}

Proc<void> DeferKernel::swi() {
  Section sec(*this);
  port().charge(body());
  co_await drain();
  co_await switch_core();
}

Proc<bool> DeferKernel::remove_expired(TaskId t, SemId s) {
  bool removed = co_await kernel::plain_remove(ctx(), blocked_ref(s), t);
  if (removed) log(EventKind::Timeout, t, s);
  co_return removed;
}

Word DeferKernel::ring_occupancy() const {
  if (!uses_ring()) return 0;
  const auto& mem = m_.memory();
  return mem.peek(ring_head_) - mem.peek(ring_tail_);
}

std::vector<SemId> DeferKernel::recorded() const {
  const auto& mem = m_.memory();
  std::vector<SemId> out;
  switch (arch_.defer) {
    case DeferVariant::SemCountsFifo:
    case DeferVariant::SemFifo:
      for (Word i = mem.peek(ring_tail_); i != mem.peek(ring_head_); ++i) {
        Word v = mem.peek(ring_[i & ring_mask_]);
        if (v != kAbsent) out.push_back(node_of(v));
      }
      break;
    case DeferVariant::LinkedListFifo: {
      int n = node_of(mem.peek(ll_head_));
      for (std::size_t guard = 0; guard <= defer_next_.size(); ++guard) {
        if (n != sentinel()) out.push_back(n);
        Word nx = mem.peek(defer_next_[static_cast<std::size_t>(n)]);
        if (nx == kAbsent || is_self(nx, n)) break;
        n = node_of(nx);
      }
      break;
    }
    case DeferVariant::BitmapFlags: {
      Word w = mem.peek(bitmap_);
      while (w != 0) {
        int idx = kernel::bitmap_search(w);
        out.push_back(bitmap_owner_[static_cast<std::size_t>(idx)]);
        w &= ~(Word{1} << idx);
      }
      break;
    }
  }
  return out;
}

bool DeferKernel::releases_pending() const {
  if (!recorded().empty()) return true;
  if (uses_ring() && ring_occupancy() != 0) return true;
  const auto& mem = m_.memory();
  for (const auto& s : sems_) {
    if (s.cells.unblock_count && mem.peek(*s.cells.unblock_count) != 0) return true;
  }
  return false;
}

Word DeferKernel::pending_releases(SemId s) const {
  if (const auto& u = scells(s).unblock_count) return m_.memory().peek(*u);
  auto rec = recorded();
  return static_cast<Word>(std::count(rec.begin(), rec.end(), s));
}

std::optional<std::string> DeferKernel::check_step() const {
  if (auto e = Kernel::check_step()) return e;
  if (uses_ring() && ring_occupancy() > static_cast<Word>(ring_limit_))
    return "defer ring holds " + std::to_string(ring_occupancy()) + " entries, limit " + std::to_string(ring_limit_);
  return std::nullopt;
}

std::optional<std::string> DeferKernel::check_quiescent() const {
  if (auto e = Kernel::check_quiescent()) return e;
  const auto& mem = m_.memory();
  if (uses_ring() && ring_occupancy() != pushes_ - pops_)
    return "defer ring lost an entry: " + std::to_string(pushes_ - pops_) + " recorded, " +
           std::to_string(ring_occupancy()) + " present";
  if (uses_unblock_count()) {
    auto rec = recorded();
    for (const auto& s : sems_) {
      if (!s.cells.unblock_count) continue;
      Word u = mem.peek(*s.cells.unblock_count);
      auto times = std::count(rec.begin(), rec.end(), s.id);
      if (times > 1) return "semaphore '" + s.name + "' recorded more than once";
      if ((u > 0) != (times == 1))
        return "semaphore '" + s.name + "' unblock count " + std::to_string(u) + " disagrees with the defer structure";
    }
  }
  return std::nullopt;
}

}  // namespace rtoslab::arch

namespace rtoslab::kernel {

int bitmap_search(Word w, int* iterations) {
  if (iterations) *iterations = 0;
  if (w == 0) return -1;
  int pos = 0;
  for (int width = 16; width >= 1; width /= 2) {
    if (iterations) ++*iterations;
    Word half = (Word{1} << width) - 1;
    if (((w >> pos) & half) == 0) pos += width;
  }
  return pos;
}

}  // namespace rtoslab::kernel
