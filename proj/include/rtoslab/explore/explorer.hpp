#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/explore/subject.hpp"

namespace rtoslab::explore {

using Factory = std::function<std::unique_ptr<Subject>()>;

struct ExploreOptions {
  std::uint64_t step_bound = 400;          // per schedule; exceeding it is an error
  std::uint64_t max_schedules = 20'000'000;
  std::size_t max_violations = 8;          // traces kept; counting continues
  bool stop_at_first = false;
};

struct Trace {
  std::vector<Choice> choices;
  std::vector<std::string> labels;
  std::optional<Violation> outcome;  // empty = pass
};

struct ExplorationReport {
  std::uint64_t schedules = 0;
  std::uint64_t violating_schedules = 0;
  std::vector<Trace> violations;
  std::uint64_t max_steps = 0;  // longest schedule seen, in primitive steps
  std::uint64_t max_depth = 0;  // longest schedule seen, in decisions
  bool exhaustive = true;
  std::optional<std::string> error;  // partial coverage
};

/// Depth-first enumeration of every decision sequence. Each schedule
/// re-executes a fresh subject from the start, so the subject needs no
/// snapshot support.
ExplorationReport explore(const Factory& make, const ExploreOptions& opt = {});

struct ReplayResult {
  std::optional<Violation> outcome;
  std::string logical_state;
  std::vector<std::string> labels;
  std::optional<std::string> error;  // trace does not fit the subject
};

/// Re-executes one trace. The final decision may be followed by the end of
/// the run or by a violation; either way the outcome is reported.
ReplayResult replay(const Factory& make, const std::vector<Choice>& choices);

/// Binomial coefficient, for the closed-form schedule count of straight-line
/// threads.
std::uint64_t binomial(unsigned n, unsigned k);

}  // namespace rtoslab::explore
