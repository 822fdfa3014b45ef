#include "rtoslab/sim/host_port.hpp"

namespace rtoslab::sim {

OpResult HostPort::perform(const OpDesc& d) {
  std::unique_lock<std::mutex> guard;
  if (lock_) guard = std::unique_lock<std::mutex>(*lock_);
  switch (d.kind) {
    case OpKind::Load:
      return {memory_.load(d.cell), true};
    case OpKind::Store:
      memory_.store(d.cell, d.a);
      return {};
    case OpKind::LoadExclusive:
      return {memory_.load_exclusive(context_, d.cell), true};
    case OpKind::StoreExclusive:
      return {0, memory_.store_exclusive(context_, d.cell, d.a)};
    case OpKind::CompareExchange: {
      auto r = memory_.compare_exchange(d.cell, d.a, d.b);
      return {r.observed, r.ok};
    }
    case OpKind::Compute:
      cycles_ += d.a;
      return {};
    case OpKind::Mask:
    case OpKind::Unmask:
    case OpKind::AssertSwi:
    case OpKind::WaitDispatch:
      throw SimFault("interrupt-controller operation on a host port");
  }
  return {};
}

}  // namespace rtoslab::sim
