#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtoslab/kernel/types.hpp"
#include "rtoslab/sim/cost_model.hpp"

namespace rtoslab::hw {

using sim::Cycles;

/// Interval in which the RTOS masks kernel-level interrupts.
struct MaskWindow {
  Cycles start = 0;
  Cycles end = 0;  // exclusive
};

struct GpioScenario {
  Cycles byte_period = 200;  // one byte reaches the peripheral every period
  std::uint64_t bytes = 200;
  Cycles first_arrival = 0;
  std::size_t fifo_depth = 1;  // peripheral receive buffer
  std::vector<MaskWindow> masks;
  bool escape = false;                     // peripheral ISR above the ceiling, GPIO ISR gives
  bool above_ceiling_calls_kernel = false;  // misconfiguration under test
  Cycles interrupt_latency = 12;
  Cycles give_body = 150;   // kernel-level handler that gives the semaphore
  Cycles escape_body = 20;  // drain the peripheral and flip the GPIO line
};

struct GpioReport {
  std::uint64_t injected = 0;
  std::uint64_t received = 0;
  std::uint64_t lost = 0;  // bytes overwritten in the peripheral buffer
  std::uint64_t gives = 0;
  Cycles max_give_delay = 0;  // escape: GPIO flip to completed give
  int gpio_lines = 0;         // sacrificed pins
  std::string resources;
};

GpioReport gpio_escape(const GpioScenario& sc);

/// Longest kernel-originated peripheral mask of the masked-interval scenario
/// for `arch` with `n` tasks, repeated every `period` cycles.
std::vector<MaskWindow> rtos_mask_pattern(const kernel::ArchConfig& arch, int n, Cycles period, int repeats,
                                          const sim::CostModel& cost = {});

}  // namespace rtoslab::hw
