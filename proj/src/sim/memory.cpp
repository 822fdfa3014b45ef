#include "rtoslab/sim/memory.hpp"

namespace rtoslab::sim {

CellId AtomicMemory::allocate(std::string name, Word initial) {
  cells_.push_back(initial);
  names_.push_back(std::move(name));
  return static_cast<CellId>(cells_.size() - 1);
}

void AtomicMemory::check(CellId c) const {
  if (c >= cells_.size()) throw SimFault("access to unknown cell " + std::to_string(c));
}

const std::string& AtomicMemory::name(CellId c) const {
  check(c);
  return names_[c];
}

Word AtomicMemory::peek(CellId c) const {
  check(c);
  return cells_[c];
}

void AtomicMemory::poke(CellId c, Word v) {
  check(c);
  cells_[c] = v;
}

Word AtomicMemory::load(CellId c) const {
  check(c);
  return cells_[c];
}

void AtomicMemory::store(CellId c, Word v) {
  check(c);
  cells_[c] = v;
  written(c);
}

Word AtomicMemory::load_exclusive(int ctx, CellId c) {
  check(c);
  reservation_ = Reservation{ctx, c};
  return cells_[c];
}

bool AtomicMemory::store_exclusive(int ctx, CellId c, Word v) {
  check(c);
  bool ok = reservation_ && reservation_->context == ctx && reservation_->cell == c;
  reservation_.reset();
  if (ok) cells_[c] = v;
  return ok;
}

CasResult AtomicMemory::compare_exchange(CellId c, Word expected, Word desired) {
  check(c);
  Word observed = cells_[c];
  if (observed != expected) return {false, observed};
  cells_[c] = desired;
  written(c);
  return {true, observed};
}

void AtomicMemory::preemption_event() {
  if (mode_ == ReservationMode::ClearedOnPreemption) reservation_.reset();
}

}  // namespace rtoslab::sim
