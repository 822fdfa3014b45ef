#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/io/scenario_io.hpp"

using namespace rtoslab;
namespace fs = std::filesystem;

TEST_CASE("every bundled scenario gives its expected verdict") {
  int files = 0;
  for (const auto& e : fs::directory_iterator(fs::path(RTOSLAB_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".json") continue;
    ++files;
    auto sc = io::load_scenario(e.path());
    for (const auto& arch : sc.architectures) {
      CAPTURE(e.path().filename().string());
      CAPTURE(arch);
      explore::ExploreOptions opt;
      opt.step_bound = sc.step_bound;
      auto rep = explore::explore(io::make_factory(sc, arch), opt);
      REQUIRE_FALSE(rep.error);
      CHECK(rep.exhaustive);
      if (sc.expect_violation) {
        CHECK(rep.violating_schedules > 0);
        if (sc.expect_invariant) {
          bool seen = std::any_of(rep.violations.begin(), rep.violations.end(),
                                  [&](const auto& t) { return t.outcome->invariant == *sc.expect_invariant; });
          CHECK(seen);
        }
      } else {
        CHECK(rep.violating_schedules == 0);
      }
    }
  }
  CHECK(files >= 10);
}

TEST_CASE("the conditional-SWI mutant breaks give order on the unblock-count variants") {
  auto sc = io::load_scenario(fs::path(RTOSLAB_SOURCE_DIR) / "scenarios" / "give_order_conditional_swi.json");
  for (const char* arch : {"defer-semfifo", "defer-linkedlist", "defer-bitmap"}) {
    auto rep = explore::explore(io::make_factory(sc, arch));
    CAPTURE(arch);
    REQUIRE_FALSE(rep.violations.empty());
    CHECK(rep.violations.front().outcome->invariant == "give-order");
  }
}
