#pragma once

#include <coroutine>
#include <type_traits>

#include "rtoslab/sim/types.hpp"

namespace rtoslab::sim {

enum class OpKind : std::uint8_t {
  Load,
  Store,
  LoadExclusive,
  StoreExclusive,
  CompareExchange,
  Mask,
  Unmask,
  AssertSwi,
  Compute,
  WaitDispatch,
};

struct OpDesc {
  OpKind kind;
  CellId cell = 0;
  Word a = 0;  // store value / expected / mask level / cycles
  Word b = 0;  // desired / mask origin
};

struct OpResult {
  Word value = 0;
  bool ok = true;
};

struct CasResult {
  bool ok;
  Word observed;
};

/// Execution port for simulated code. Every shared-memory access and every
/// interrupt-controller interaction is one primitive step; a preemption can
/// land between any two steps. The machine parks the coroutine at each step
/// and resumes it when the scheduler picks it; a host port runs straight
/// through.
class Port {
 public:
  virtual ~Port() = default;

  virtual bool immediate() const = 0;
  virtual void park(std::coroutine_handle<> h, const OpDesc& d) = 0;
  virtual OpResult perform(const OpDesc& d) = 0;
  /// Accounts cycles for local work between steps (no preemption point).
  virtual void charge(Cycles c) = 0;

  template <class R>
  struct Awaitable {
    Port* port;
    OpDesc desc;
    bool await_ready() const { return port->immediate(); }
    void await_suspend(std::coroutine_handle<> h) { port->park(h, desc); }
    R await_resume() {
      OpResult r = port->perform(desc);
      if constexpr (std::is_same_v<R, Word>) {
        return r.value;
      } else if constexpr (std::is_same_v<R, bool>) {
        return r.ok;
      } else if constexpr (std::is_same_v<R, CasResult>) {
        return CasResult{r.ok, r.value};
      } else {
        static_assert(std::is_void_v<R>);
      }
    }
  };

  Awaitable<Word> load(CellId c) { return {this, {OpKind::Load, c}}; }
  Awaitable<void> store(CellId c, Word v) { return {this, {OpKind::Store, c, v}}; }
  Awaitable<Word> load_exclusive(CellId c) { return {this, {OpKind::LoadExclusive, c}}; }
  Awaitable<bool> store_exclusive(CellId c, Word v) { return {this, {OpKind::StoreExclusive, c, v}}; }
  Awaitable<CasResult> compare_exchange(CellId c, Word expected, Word desired) {
    return {this, {OpKind::CompareExchange, c, expected, desired}};
  }
  // Read-modify-write pair realised either as load/store exclusive or as a
  // plain load followed by compare-exchange against the value read.
  Awaitable<Word> xread(CellId c, bool exclusive) {
    return {this, {exclusive ? OpKind::LoadExclusive : OpKind::Load, c}};
  }
  Awaitable<bool> xwrite(CellId c, Word seen, Word v, bool exclusive) {
    if (exclusive) return {this, {OpKind::StoreExclusive, c, v}};
    return {this, {OpKind::CompareExchange, c, seen, v}};
  }
  Awaitable<void> mask(MaskLevel l, MaskOrigin o = MaskOrigin::Kernel) {
    return {this, {OpKind::Mask, 0, static_cast<Word>(l), static_cast<Word>(o)}};
  }
  Awaitable<void> unmask(MaskLevel l) { return {this, {OpKind::Unmask, 0, static_cast<Word>(l)}}; }
  Awaitable<void> assert_swi() { return {this, {OpKind::AssertSwi}}; }
  Awaitable<void> compute(Word cycles) { return {this, {OpKind::Compute, 0, cycles}}; }
  Awaitable<void> wait_dispatch() { return {this, {OpKind::WaitDispatch}}; }
};

}  // namespace rtoslab::sim
