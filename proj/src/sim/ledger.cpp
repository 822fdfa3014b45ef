#include "rtoslab/sim/ledger.hpp"

#include <algorithm>

namespace rtoslab::sim {

void CycleLedger::open(MaskLevel level, MaskOrigin origin) {
  auto i = index(level);
  if (depth_[i]++ == 0) {
    open_start_[i] = now_;
    open_origin_[i] = origin;
  }
}

void CycleLedger::close(MaskLevel level) {
  auto i = index(level);
  if (depth_[i] == 0) throw SimFault("unmask without matching mask");
  if (--depth_[i] == 0) {
    intervals_.push_back({level, open_origin_[i], open_start_[i], now_});
  }
}

Cycles CycleLedger::max_masked(MaskLevel level, std::optional<MaskOrigin> origin) const {
  Cycles best = 0;
  for (const auto& iv : intervals_) {
    if (iv.level != level) continue;
    if (origin && iv.origin != *origin) continue;
    best = std::max(best, iv.length());
  }
  return best;
}

Cycles CycleLedger::total_masked(MaskLevel level, std::optional<MaskOrigin> origin) const {
  Cycles sum = 0;
  for (const auto& iv : intervals_) {
    if (iv.level == level && (!origin || iv.origin == *origin)) sum += iv.length();
  }
  return sum;
}

std::size_t CycleLedger::count(MaskLevel level, std::optional<MaskOrigin> origin) const {
  return static_cast<std::size_t>(std::count_if(intervals_.begin(), intervals_.end(), [&](const MaskedInterval& iv) {
    return iv.level == level && (!origin || iv.origin == *origin);
  }));
}

}  // namespace rtoslab::sim
