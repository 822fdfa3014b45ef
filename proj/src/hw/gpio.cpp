#include "rtoslab/hw/gpio.hpp"

#include <algorithm>
#include <optional>

#include "rtoslab/bench/bench.hpp"

namespace rtoslab::hw {

namespace {

bool masked_at(const std::vector<MaskWindow>& w, Cycles t) {
  return std::any_of(w.begin(), w.end(), [t](const MaskWindow& m) { return t >= m.start && t < m.end; });
}

}  // namespace

GpioReport gpio_escape(const GpioScenario& sc) {
  if (sc.escape && sc.above_ceiling_calls_kernel)
    throw kernel::ConfigError("an interrupt above the kernel ceiling cannot call kernel services");
  if (sc.fifo_depth == 0 || sc.byte_period == 0) throw kernel::ConfigError("peripheral needs a buffer and a byte period");

  GpioReport rep;
  rep.injected = sc.bytes;
  rep.gpio_lines = sc.escape ? 1 : 0;
  rep.resources = sc.escape ? "1 GPIO line" : "none";

  std::size_t fifo = 0;
  std::uint64_t arrived = 0;
  // Peripheral handler: kernel level without escape, above the ceiling with it.
  bool per_running = false;
  Cycles per_drain_at = 0, per_end_at = 0;
  // GPIO handler (escape only), preempted by the peripheral handler.
  bool gpio_pending = false, gpio_running = false;
  Cycles gpio_flip_at = 0, gpio_left = 0, gpio_since = 0;

  const Cycles last_arrival = sc.first_arrival + (sc.bytes ? (sc.bytes - 1) * sc.byte_period : 0);
  for (Cycles t = 0;; ++t) {
    if (arrived < sc.bytes && t == sc.first_arrival + arrived * sc.byte_period) {
      ++arrived;
      if (fifo == sc.fifo_depth) {
        ++rep.lost;
      } else {
        ++fifo;
      }
    }

    if (per_running) {
      if (t == per_drain_at) {
        rep.received += fifo;
        fifo = 0;
      }
      if (t >= per_end_at) {
        per_running = false;
        if (sc.escape) {
          if (!gpio_pending) gpio_flip_at = t;
          gpio_pending = true;
        } else {
          ++rep.gives;
        }
      }
    }
    if (!per_running && fifo > 0 && (sc.escape || !masked_at(sc.masks, t))) {
      per_running = true;
      per_drain_at = t + sc.interrupt_latency;
      per_end_at = per_drain_at + (sc.escape ? sc.escape_body : sc.give_body);
    }

    if (sc.escape) {
      if (gpio_running && !per_running) {
        if (gpio_left > 0) --gpio_left;
        if (gpio_left == 0) {
          gpio_running = false;
          ++rep.gives;
          rep.max_give_delay = std::max(rep.max_give_delay, t - gpio_since);
        }
      }
      if (!gpio_running && gpio_pending && !per_running && !masked_at(sc.masks, t)) {
        gpio_pending = false;
        gpio_running = true;
        gpio_since = gpio_flip_at;
        gpio_left = sc.interrupt_latency + sc.give_body;
      }
    }

    bool idle = !per_running && !gpio_running && !gpio_pending && fifo == 0;
    if (arrived == sc.bytes && t >= last_arrival && idle) break;
  }
  return rep;
}

std::vector<MaskWindow> rtos_mask_pattern(const kernel::ArchConfig& arch, int n, Cycles period, int repeats,
                                          const sim::CostModel& cost) {
  scenario::System sys(bench::sweep_scenario(arch, n, cost));
  sys.run_timed();
  std::optional<MaskWindow> worst;
  for (const auto& iv : sys.machine().ledger().intervals()) {
    if (iv.level != sim::MaskLevel::Peripheral || iv.origin != sim::MaskOrigin::Kernel) continue;
    if (!worst || iv.length() > worst->end - worst->start) worst = MaskWindow{iv.start, iv.end};
  }
  std::vector<MaskWindow> out;
  if (!worst) return out;
  for (int r = 0; r < repeats; ++r) {
    Cycles off = period * static_cast<Cycles>(r);
    out.push_back({worst->start + off, worst->end + off});
  }
  return out;
}

}  // namespace rtoslab::hw
