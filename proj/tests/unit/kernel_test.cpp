#include <bit>
#include <random>

#include "doctest.h"
#include "rtoslab/kernel/kernel.hpp"

using namespace rtoslab::kernel;

TEST_CASE("bitmap search finds the lowest set bit") {
  std::mt19937 rng(7);
  for (int i = 0; i < 5000; ++i) {
    Word w = static_cast<Word>(rng());
    if (w == 0) continue;
    int iters = 0;
    CHECK(bitmap_search(w, &iters) == std::countr_zero(w));
    CHECK(iters <= 5);
  }
}

TEST_CASE("architecture ids round-trip") {
  auto ids = all_arch_ids();
  CHECK(ids.size() == 11);
  for (const auto& id : ids) {
    auto a = parse_arch(id);
    REQUIRE(a.has_value());
    CHECK(arch_id(*a) == id);
  }
  CHECK_FALSE(parse_arch("defer-nothing").has_value());
  CHECK_FALSE(parse_arch("").has_value());
}

TEST_CASE("link encoding keeps zero for absent") {
  CHECK(link_to(0) == 1);
  CHECK(node_of(link_to(41)) == 41);
  CHECK(is_self(link_to(3), 3));
  CHECK_FALSE(is_self(kAbsent, 0));
}
