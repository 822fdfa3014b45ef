#include <filesystem>
#include <random>

#include "doctest.h"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/hw/dma.hpp"
#include "rtoslab/hw/gpio.hpp"
#include "rtoslab/kernel/types.hpp"

using namespace rtoslab;
using namespace rtoslab::hw;

namespace {

FrameStream random_stream(std::uint64_t seed, int frames, std::size_t max_len) {
  std::mt19937_64 rng(seed);
  FrameStream s;
  Cycles at = 50;
  for (int i = 0; i < frames; ++i) {
    Frame f;
    f.arrival = at;
    std::size_t len = 1 + rng() % max_len;
    for (std::size_t j = 0; j < len; ++j) f.payload.push_back(static_cast<std::uint8_t>(rng()));
    at += (kHeaderBytes + len) * 4 + rng() % 200;
    s.frames.push_back(std::move(f));
  }
  return s;
}

}  // namespace

TEST_CASE("pause is granted only between byte moves") {
  DmaController dc(8);
  CHECK(dc.step(std::uint8_t{0xAA}));  // data write
  CHECK(dc.transferring());
  dc.request_pause();
  dc.step(std::nullopt);  // status update finishes the move
  CHECK_FALSE(dc.paused());
  CHECK(dc.write_index() == 1);
  dc.step(std::nullopt);
  CHECK(dc.paused());
  CHECK_FALSE(dc.can_step(true));
  dc.configure_interrupt(3);
  CHECK(dc.torn_writes() == 0);
  dc.release_pause();
  CHECK(dc.can_step(true));
}

TEST_CASE("strict controller rejects configuration while running") {
  DmaController dc(8);
  CHECK_THROWS_AS(dc.configure_interrupt(1), ProtocolFault);
  DmaController lax(8, false);
  lax.step(std::uint8_t{1});
  lax.configure_interrupt(1);
  CHECK(lax.torn_writes() == 1);
}

TEST_CASE("interrupt fires when the write index reaches the programmed position") {
  DmaController dc(4, false);
  dc.configure_interrupt(6);  // modulo capacity
  for (int i = 0; i < 2; ++i) {
    dc.step(std::uint8_t(i));
    dc.step(std::nullopt);
  }
  CHECK(dc.take_interrupt());
  CHECK_FALSE(dc.take_interrupt());
}

TEST_CASE("stream files round-trip") {
  auto s = random_stream(3, 6, 90);
  auto p = std::filesystem::temp_directory_path() / "rtoslab_stream_rt.bin";
  save_stream(s, p);
  auto back = load_stream(p);
  REQUIRE(back.frames.size() == s.frames.size());
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    CHECK(back.frames[i].arrival == s.frames[i].arrival);
    CHECK(back.frames[i].payload == s.frames[i].payload);
  }
  std::filesystem::remove(p);
}

TEST_CASE("circular mode with interrupts recovers random streams intact") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = random_stream(seed, 8, 120);
    DmaDemoOptions opt;
    opt.handler_delay = 10'000;
    auto r = dma_demo(s, opt);
    CAPTURE(seed);
    CHECK(r.lost == 0);
    CHECK(r.intact);
    CHECK(r.torn_writes == 0);
    CHECK(r.injected_bytes == s.total_bytes());
    CHECK(r.frames_recovered == s.frames.size());
  }
}

TEST_CASE("classic threshold mode loses a variable-length tail") {
  FrameStream fixed;
  Cycles at = 100;
  for (int i = 0; i < 5; ++i) {
    Frame f;
    f.arrival = at;
    f.payload.assign(64, static_cast<std::uint8_t>(i));
    at += 66 * 4 + 40;
    fixed.frames.push_back(std::move(f));
  }
  DmaDemoOptions opt;
  opt.mode = DmaMode::ClassicThreshold;
  opt.threshold = 66;
  auto ok = dma_demo(fixed, opt);
  CHECK(ok.lost == 0);
  CHECK(ok.intact);

  auto bad = dma_demo(bundled_stream(), opt);
  CHECK(bad.lost > 0);
  CHECK_FALSE(bad.intact);
}

TEST_CASE("handshake exploration: torn writes only without the pause") {
  auto with = explore::explore([] { return std::make_unique<DmaHandshakeSubject>(3, true); });
  auto without = explore::explore([] { return std::make_unique<DmaHandshakeSubject>(3, false); });
  CHECK(with.violating_schedules == 0);
  REQUIRE(without.violating_schedules > 0);
  CHECK(without.violations.front().outcome->invariant == "torn-state");
}

TEST_CASE("GPIO escape is lossless under every mask pattern that drops bytes directly") {
  auto base = *kernel::parse_arch("baseline");
  for (int n : {16, 32}) {
    for (Cycles period : {1000, 2000, 5000}) {
      GpioScenario g;
      g.masks = rtos_mask_pattern(base, n, period, static_cast<int>(g.bytes * g.byte_period / period) + 1);
      auto direct = gpio_escape(g);
      g.escape = true;
      auto esc = gpio_escape(g);
      CAPTURE(n);
      CAPTURE(period);
      CHECK(esc.lost == 0);
      CHECK(esc.received == g.bytes);
      CHECK(esc.gpio_lines == 1);
      CHECK(direct.lost + direct.received == g.bytes);
    }
  }
}

TEST_CASE("GPIO direct reception drops bytes under the baseline mask") {
  GpioScenario g;
  g.masks = rtos_mask_pattern(*kernel::parse_arch("baseline"), 32, 2000, 21);
  CHECK(gpio_escape(g).lost > 0);
  g.masks = rtos_mask_pattern(*kernel::parse_arch("strictly-atomic"), 32, 2000, 21);
  CHECK(gpio_escape(g).lost == 0);
}

TEST_CASE("an above-ceiling handler calling the kernel is a configuration error") {
  GpioScenario g;
  g.escape = true;
  g.above_ceiling_calls_kernel = true;
  CHECK_THROWS_AS(gpio_escape(g), kernel::ConfigError);
}
