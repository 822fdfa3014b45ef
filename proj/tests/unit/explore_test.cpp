#include <functional>
#include <map>

#include "doctest.h"
#include "rtoslab/explore/explorer.hpp"
#include "rtoslab/explore/subjects.hpp"
#include "rtoslab/io/scenario_io.hpp"
#include "rtoslab/scenario/system.hpp"

using namespace rtoslab;
using explore::Choice;
using explore::ExploreOptions;
using explore::Factory;
using explore::ReadyListScenario;
using explore::ReadyListSubject;
using explore::StraightLineSubject;
using explore::replay;
using explore::binomial;

namespace {

// Lattice-path count: interleavings of threads with the given remaining lengths.
std::uint64_t interleavings(std::vector<int> left) {
  std::map<std::vector<int>, std::uint64_t> memo;
  std::function<std::uint64_t(std::vector<int>&)> go = [&](std::vector<int>& v) -> std::uint64_t {
    if (auto it = memo.find(v); it != memo.end()) return it->second;
    std::uint64_t total = 0;
    bool any = false;
    for (auto& x : v) {
      if (x == 0) continue;
      any = true;
      --x;
      total += go(v);
      ++x;
    }
    if (!any) total = 1;
    memo[v] = total;
    return total;
  };
  return go(left);
}

Factory straight(std::vector<int> lengths) {
  return [lengths] { return std::make_unique<StraightLineSubject>(lengths); };
}

io::ScenarioFile bundled(const char* name) {
  return io::load_scenario(std::filesystem::path(RTOSLAB_SOURCE_DIR) / "scenarios" / name);
}

}  // namespace

TEST_CASE("straight-line threads give the multinomial schedule count") {
  for (auto lengths : std::vector<std::vector<int>>{{1}, {2, 2}, {3, 1}, {2, 2, 2}, {4, 3}, {1, 1, 1, 1}}) {
    auto rep = explore::explore(straight(lengths));
    CAPTURE(lengths.size());
    CHECK_FALSE(rep.error);
    CHECK(rep.exhaustive);
    CHECK(rep.schedules == interleavings(lengths));
    CHECK(rep.violating_schedules == 0);
  }
}

TEST_CASE("binomial matches Pascal's rule") {
  for (unsigned n = 1; n < 30; ++n) {
    CHECK(binomial(n, 0) == 1);
    CHECK(binomial(n, n) == 1);
    for (unsigned k = 1; k < n; ++k) CHECK(binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k));
  }
  CHECK(binomial(3, 5) == 0);
}

TEST_CASE("a subject without choices has exactly one schedule") {
  auto rep = explore::explore(straight({}));
  CHECK(rep.schedules == 1);
  CHECK(rep.max_depth == 0);
}

TEST_CASE("exceeding the step bound is reported as partial coverage") {
  ExploreOptions opt;
  opt.step_bound = 3;
  auto rep = explore::explore(straight({4, 4}), opt);
  CHECK(rep.error.has_value());
  CHECK_FALSE(rep.exhaustive);
}

TEST_CASE("exploration is deterministic") {
  auto sc = bundled("fig3_nonatomic.json");
  auto f = io::make_factory(sc, "defer-semfifo");
  auto a = explore::explore(f);
  auto b = explore::explore(f);
  CHECK(a.schedules == b.schedules);
  CHECK(a.violating_schedules == b.violating_schedules);
  REQUIRE(a.violations.size() == b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    CHECK(a.violations[i].choices == b.violations[i].choices);
    CHECK(a.violations[i].outcome == b.violations[i].outcome);
  }
}

TEST_CASE("replaying a violating trace reproduces the violation") {
  auto sc = bundled("fig3_nonatomic.json");
  auto f = io::make_factory(sc, "defer-semfifo");
  ExploreOptions opt;
  opt.stop_at_first = true;
  auto rep = explore::explore(f, opt);
  REQUIRE_FALSE(rep.violations.empty());
  const auto& t = rep.violations.front();
  auto r = replay(f, t.choices);
  CHECK_FALSE(r.error);
  REQUIRE(r.outcome.has_value());
  CHECK(*r.outcome == *t.outcome);
  CHECK(r.labels == t.labels);
}

TEST_CASE("the logical end state does not depend on the cost model") {
  auto sc = bundled("task_handoff.json");
  ExploreOptions opt;
  opt.max_violations = 0;
  auto spec = io::system_for(sc, "strictly-atomic");
  auto slow = spec;
  slow.cost.kernel_body = 900;
  slow.cost.loop_iteration = 31;
  Factory fast_f = [spec] { return std::make_unique<scenario::System>(spec); };
  Factory slow_f = [slow] { return std::make_unique<scenario::System>(slow); };
  // Walk the first schedule of the default-cost run and replay it at the other cost.
  scenario::System sys(spec);
  std::vector<Choice> path;
  while (true) {
    auto cs = sys.choices();
    if (cs.empty()) break;
    path.push_back(cs.back());
    sys.apply(cs.back());
  }
  auto a = replay(fast_f, path);
  auto b = replay(slow_f, path);
  CHECK_FALSE(a.error);
  CHECK_FALSE(b.error);
  CHECK(a.logical_state == b.logical_state);
  CHECK(a.logical_state == sys.logical_state());
}

TEST_CASE("a trace that does not fit is rejected") {
  auto r = replay(straight({1}), {Choice{0, 0}, Choice{0, 0}, Choice{0, 0}});
  CHECK(r.error.has_value());
}

TEST_CASE("the non-atomic ring insert mutant is found and the atomic insert is clean") {
  auto ok = explore::explore(io::make_factory(bundled("fig3_fifo_insert.json"), "defer-semfifo"));
  auto bad = explore::explore(io::make_factory(bundled("fig3_nonatomic.json"), "defer-semfifo"));
  CHECK(ok.violating_schedules == 0);
  CHECK(bad.violating_schedules > 0);
  CHECK(ok.schedules == bad.schedules);
  REQUIRE_FALSE(bad.violations.empty());
  CHECK(bad.violations.front().outcome->invariant == "structure");
}

TEST_CASE("ready-list subjects: sorted atomic and unsorted linearize, the compare-exchange flavor does not") {
  ReadyListScenario sc;
  sc.priorities = {2, 1, 3, 0};
  sc.initial = {0};
  sc.inserters = {{"a", 2, {1}}, {"b", 1, {2, 3}}};
  for (auto kind : {kernel::ReadyListKind::SortedAtomic, kernel::ReadyListKind::Unsorted}) {
    sc.kind = kind;
    auto rep = explore::explore([sc] { return std::make_unique<ReadyListSubject>(sc); });
    CHECK_FALSE(rep.error);
    CHECK(rep.violating_schedules == 0);
  }
  sc.kind = kernel::ReadyListKind::SortedAtomic;
  sc.flavor = kernel::AtomicFlavor::CompareExchange;
  auto cas = explore::explore([sc] { return std::make_unique<ReadyListSubject>(sc); });
  CHECK(cas.violating_schedules > 0);
}
