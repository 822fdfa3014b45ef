#pragma once

#include "rtoslab/sim/types.hpp"

namespace rtoslab::sim {

/// Cycle prices for the abstract machine.
///
/// Straight-line kernel work inside one kernel entry point is priced as a
/// single `kernel_body` block (the ISR constant). Every list traversal, ring
/// fetch, bitmap search step or atomic retry is one loop iteration.
/// Application-level primitive steps cost `primitive` each.
struct CostModel {
  Cycles primitive = 1;
  Cycles loop_iteration = 8;
  Cycles kernel_body = 150;
  Cycles interrupt_latency = 12;
  Cycles systick_quantum = 1000;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

}  // namespace rtoslab::sim
