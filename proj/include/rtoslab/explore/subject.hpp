#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rtoslab::explore {

/// One scheduling decision. `kind` and `arg` are interpreted by the subject;
/// the explorer only enumerates and replays them.
struct Choice {
  int kind = 0;
  int arg = 0;

  friend bool operator==(const Choice&, const Choice&) = default;
};

struct Violation {
  std::string invariant;
  std::string message;
  std::uint64_t step = 0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Something the explorer can drive: a fresh instance per schedule, a menu
/// of legal decisions at each point, and its own invariant checks.
class Subject {
 public:
  virtual ~Subject() = default;

  /// Legal decisions now; empty when the run is over.
  virtual std::vector<Choice> choices() = 0;
  /// Executes one decision. Afterwards `violation()` reports any broken
  /// invariant; a subject with a violation offers no further choices.
  virtual void apply(const Choice& c) = 0;
  /// Checks that apply only to completed runs. Called once when `choices()`
  /// comes back empty.
  virtual void finish() = 0;
  virtual const std::optional<Violation>& violation() const = 0;
  /// Primitive steps executed so far.
  virtual std::uint64_t steps() const = 0;
  /// Human-readable label for the decision just applied, naming the context
  /// that executed and its step index.
  virtual std::string label(const Choice& c) const = 0;
  /// Digest of the logical end state (excludes cycle counts).
  virtual std::string logical_state() const = 0;
};

}  // namespace rtoslab::explore
