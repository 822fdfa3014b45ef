#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rtoslab/sim/cost_model.hpp"
#include "rtoslab/sim/types.hpp"

namespace rtoslab::sim {

struct MaskedInterval {
  MaskLevel level;
  MaskOrigin origin;
  Cycles start;
  Cycles end;

  Cycles length() const { return end - start; }
};

/// Cycle clock plus the record of every masked interval. Nested masking at
/// the same level is depth-counted; only the outermost pair opens and closes
/// an interval.
class CycleLedger {
 public:
  explicit CycleLedger(CostModel cost = {}) : cost_(cost) {}

  const CostModel& cost() const { return cost_; }
  Cycles now() const { return now_; }
  void advance(Cycles c) { now_ += c; }
  void advance_to(Cycles t) {
    if (t > now_) now_ = t;
  }

  void open(MaskLevel level, MaskOrigin origin);
  void close(MaskLevel level);

  int depth(MaskLevel level) const { return depth_[index(level)]; }
  bool all_closed() const { return depth_[0] == 0 && depth_[1] == 0; }

  const std::vector<MaskedInterval>& intervals() const { return intervals_; }

  Cycles max_masked(MaskLevel level, std::optional<MaskOrigin> origin = std::nullopt) const;
  Cycles total_masked(MaskLevel level, std::optional<MaskOrigin> origin = std::nullopt) const;
  std::size_t count(MaskLevel level, std::optional<MaskOrigin> origin = std::nullopt) const;

 private:
  static std::size_t index(MaskLevel l) { return static_cast<std::size_t>(l); }

  CostModel cost_;
  Cycles now_ = 0;
  std::array<int, 2> depth_{0, 0};
  std::array<Cycles, 2> open_start_{0, 0};
  std::array<MaskOrigin, 2> open_origin_{MaskOrigin::Kernel, MaskOrigin::Kernel};
  std::vector<MaskedInterval> intervals_;
};

}  // namespace rtoslab::sim
