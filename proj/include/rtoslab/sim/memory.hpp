#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtoslab/sim/port.hpp"
#include "rtoslab/sim/types.hpp"

namespace rtoslab::sim {

struct Reservation {
  int context;  // context instance serial
  CellId cell;

  friend bool operator==(const Reservation&, const Reservation&) = default;
};

/// Word-addressed shared memory with a single exclusive monitor.
///
/// At most one reservation is live. A load-exclusive installs it (displacing
/// any other), any write to the reserved cell clears it, and in
/// ClearedOnPreemption mode the machine also clears it on every interrupt
/// entry, exception return and task switch.
class AtomicMemory {
 public:
  explicit AtomicMemory(ReservationMode mode = ReservationMode::ClearedOnPreemption) : mode_(mode) {}

  CellId allocate(std::string name, Word initial = 0);
  std::size_t size() const { return cells_.size(); }
  const std::string& name(CellId c) const;

  // Inspection and setup; no monitor side effects.
  Word peek(CellId c) const;
  void poke(CellId c, Word v);

  Word load(CellId c) const;
  void store(CellId c, Word v);
  Word load_exclusive(int ctx, CellId c);
  bool store_exclusive(int ctx, CellId c, Word v);
  CasResult compare_exchange(CellId c, Word expected, Word desired);

  /// Invalidating event for the active mode (interrupt entry, exception
  /// return, task switch).
  void preemption_event();
  void clear_reservation() { reservation_.reset(); }

  ReservationMode mode() const { return mode_; }
  void set_mode(ReservationMode m) { mode_ = m; }
  const std::optional<Reservation>& reservation() const { return reservation_; }

  const std::vector<Word>& snapshot() const { return cells_; }

 private:
  void check(CellId c) const;
  void written(CellId c) {
    if (reservation_ && reservation_->cell == c) reservation_.reset();
  }

  ReservationMode mode_;
  std::vector<Word> cells_;
  std::vector<std::string> names_;
  std::optional<Reservation> reservation_;
};

}  // namespace rtoslab::sim
