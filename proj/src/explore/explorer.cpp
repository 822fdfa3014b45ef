#include "rtoslab/explore/explorer.hpp"

#include <algorithm>

namespace rtoslab::explore {

namespace {

struct Frame {
  std::size_t index;
  std::size_t count;
};

}  // namespace

ExplorationReport explore(const Factory& make, const ExploreOptions& opt) {
  ExplorationReport rep;
  std::vector<Frame> path;
  for (;;) {
    if (rep.schedules >= opt.max_schedules) {
      rep.exhaustive = false;
      rep.error = "schedule limit of " + std::to_string(opt.max_schedules) + " reached";
      break;
    }
    auto s = make();
    Trace trace;
    std::size_t depth = 0;
    bool overflow = false;
    for (;;) {
      auto menu = s->choices();
      if (menu.empty()) {
        if (!s->violation()) s->finish();
        break;
      }
      if (depth == path.size()) path.push_back({0, menu.size()});
      const auto& f = path[depth];
      if (f.count != menu.size()) {
        rep.error = "nondeterministic subject: decision menu changed on re-execution";
        rep.exhaustive = false;
        return rep;
      }
      Choice c = menu[f.index];
      s->apply(c);
      trace.choices.push_back(c);
      ++depth;
      if (s->violation()) break;
      if (s->steps() > opt.step_bound) {
        overflow = true;
        break;
      }
    }
    // Frames beyond this depth belong to a previous, longer schedule.
    path.resize(depth);
    ++rep.schedules;
    rep.max_steps = std::max(rep.max_steps, s->steps());
    rep.max_depth = std::max<std::uint64_t>(rep.max_depth, depth);
    if (overflow) {
      rep.exhaustive = false;
      rep.error = "step bound of " + std::to_string(opt.step_bound) + " exceeded; coverage is partial";
      break;
    }
    if (s->violation()) {
      ++rep.violating_schedules;
      if (rep.violations.size() < opt.max_violations) {
        auto r = replay(make, trace.choices);
        trace.labels = std::move(r.labels);
        trace.outcome = s->violation();
        rep.violations.push_back(std::move(trace));
      }
      if (opt.stop_at_first) {
        rep.exhaustive = false;
        break;
      }
    }
    while (!path.empty() && path.back().index + 1 >= path.back().count) path.pop_back();
    if (path.empty()) break;
    ++path.back().index;
  }
  return rep;
}

ReplayResult replay(const Factory& make, const std::vector<Choice>& choices) {
  ReplayResult r;
  auto s = make();
  for (std::size_t i = 0; i < choices.size(); ++i) {
    auto menu = s->choices();
    if (std::find(menu.begin(), menu.end(), choices[i]) == menu.end()) {
      r.error = "decision " + std::to_string(i) + " is not legal in this scenario";
      return r;
    }
    s->apply(choices[i]);
    r.labels.push_back(s->label(choices[i]));
    if (s->violation() && i + 1 < choices.size()) {
      r.error = "trace continues past a violation";
      return r;
    }
  }
  if (!s->violation() && s->choices().empty()) s->finish();
  r.outcome = s->violation();
  r.logical_state = s->logical_state();
  return r;
}

std::uint64_t binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace rtoslab::explore
