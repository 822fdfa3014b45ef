#include "doctest.h"
#include "rtoslab/sim/ledger.hpp"
#include "rtoslab/sim/memory.hpp"

using namespace rtoslab::sim;

TEST_CASE("store-exclusive succeeds only with a live reservation") {
  AtomicMemory m;
  auto a = m.allocate("a", 5);
  CHECK_FALSE(m.store_exclusive(0, a, 1));
  CHECK(m.load_exclusive(0, a) == 5);
  CHECK(m.store_exclusive(0, a, 6));
  CHECK(m.peek(a) == 6);
  CHECK_FALSE(m.store_exclusive(0, a, 7));  // consumed
}

TEST_CASE("a plain write to the reserved cell clears the monitor") {
  AtomicMemory m;
  auto a = m.allocate("a");
  m.load_exclusive(0, a);
  m.store(a, 3);
  CHECK_FALSE(m.store_exclusive(0, a, 4));
  CHECK(m.peek(a) == 3);
}

TEST_CASE("another context's load-exclusive displaces the reservation") {
  AtomicMemory m;
  auto a = m.allocate("a");
  auto b = m.allocate("b");
  m.load_exclusive(0, a);
  m.load_exclusive(1, b);
  CHECK_FALSE(m.store_exclusive(0, a, 1));
  // Any store-exclusive, failed or not, clears the monitor.
  CHECK_FALSE(m.store_exclusive(1, b, 1));
  m.load_exclusive(1, b);
  CHECK(m.store_exclusive(1, b, 1));
}

TEST_CASE("preemption clears the reservation only in the clearing mode") {
  AtomicMemory cleared(ReservationMode::ClearedOnPreemption);
  auto a = cleared.allocate("a");
  cleared.load_exclusive(0, a);
  cleared.preemption_event();
  CHECK_FALSE(cleared.store_exclusive(0, a, 1));

  AtomicMemory kept(ReservationMode::SurvivesPreemption);
  auto b = kept.allocate("b");
  kept.load_exclusive(0, b);
  kept.preemption_event();
  CHECK(kept.store_exclusive(0, b, 1));
}

TEST_CASE("compare-exchange reports the observed value") {
  AtomicMemory m;
  auto a = m.allocate("a", 2);
  auto r = m.compare_exchange(a, 3, 9);
  CHECK_FALSE(r.ok);
  CHECK(r.observed == 2);
  r = m.compare_exchange(a, 2, 9);
  CHECK(r.ok);
  CHECK(m.peek(a) == 9);
}

TEST_CASE("unknown cells fault") {
  AtomicMemory m;
  CHECK_THROWS_AS(m.load(3), SimFault);
}

TEST_CASE("nested masks record one interval") {
  CycleLedger l;
  l.advance(10);
  l.open(MaskLevel::Peripheral, MaskOrigin::Kernel);
  l.advance(5);
  l.open(MaskLevel::Peripheral, MaskOrigin::Kernel);
  l.advance(5);
  l.close(MaskLevel::Peripheral);
  CHECK(l.depth(MaskLevel::Peripheral) == 1);
  l.advance(5);
  l.close(MaskLevel::Peripheral);
  REQUIRE(l.intervals().size() == 1);
  CHECK(l.intervals()[0].start == 10);
  CHECK(l.intervals()[0].length() == 15);
  CHECK(l.all_closed());
}

TEST_CASE("ledger filters by origin") {
  CycleLedger l;
  l.open(MaskLevel::Software, MaskOrigin::Application);
  l.advance(40);
  l.close(MaskLevel::Software);
  l.open(MaskLevel::Software, MaskOrigin::Kernel);
  l.advance(7);
  l.close(MaskLevel::Software);
  CHECK(l.max_masked(MaskLevel::Software) == 40);
  CHECK(l.max_masked(MaskLevel::Software, MaskOrigin::Kernel) == 7);
  CHECK(l.total_masked(MaskLevel::Software) == 47);
  CHECK(l.count(MaskLevel::Peripheral) == 0);
}

TEST_CASE("closing an unopened level faults") {
  CycleLedger l;
  CHECK_THROWS_AS(l.close(MaskLevel::Software), SimFault);
}
