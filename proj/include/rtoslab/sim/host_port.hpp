#pragma once

#include <mutex>

#include "rtoslab/sim/memory.hpp"
#include "rtoslab/sim/port.hpp"
#include "rtoslab/sim/proc.hpp"

namespace rtoslab::sim {

/// Runs simulated code straight through against a memory, with no
/// preemption points. With a mutex, several host threads may share one
/// memory: each primitive operation is then atomic and sequentially
/// consistent, and the single reservation is contended for real.
class HostPort final : public Port {
 public:
  HostPort(AtomicMemory& memory, int context, std::mutex* lock = nullptr)
      : memory_(memory), context_(context), lock_(lock) {}

  bool immediate() const override { return true; }
  void park(std::coroutine_handle<>, const OpDesc&) override { throw SimFault("host port cannot park"); }
  OpResult perform(const OpDesc& d) override;
  void charge(Cycles c) override { cycles_ += c; }

  Cycles cycles() const { return cycles_; }

 private:
  AtomicMemory& memory_;
  int context_;
  std::mutex* lock_;
  Cycles cycles_ = 0;
};

/// Runs a procedure whose operations all complete immediately.
template <class T>
T run_to_completion(Proc<T> p) {
  p.handle().resume();
  if (!p.done()) throw SimFault("procedure suspended outside the machine");
  return p.result();
}

}  // namespace rtoslab::sim
