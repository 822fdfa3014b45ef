#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/kernel.hpp"

namespace rtoslab::arch {

using kernel::ArchConfig;
using kernel::Proc;
using kernel::SemId;
using kernel::StaticConfig;
using kernel::TakeOutcome;
using kernel::TaskId;
using kernel::Word;
using sim::CellId;

/// ISRs and tasks manipulate the sorted lists directly with peripheral
/// interrupts masked for the whole critical section.
class BaselineKernel final : public kernel::Kernel {
 public:
  BaselineKernel(sim::Machine& m, ArchConfig a, StaticConfig s) : Kernel(m, a, s) {}

  Proc<TakeOutcome> take(TaskId t, SemId s, std::optional<Word> timeout) override;
  Proc<void> give(TaskId t, SemId s) override;
  Proc<void> give_from_isr(SemId s, int isr) override;
  Proc<void> swi() override;

 protected:
  sim::MaskLevel lock_level() const override { return sim::MaskLevel::Peripheral; }
  Proc<bool> remove_expired(TaskId t, SemId s) override;

 private:
  Proc<int> unblock_one(SemId s);
};

/// ISRs record releases in a defer structure; only the SWI handler and
/// task-level code (with SWI and SysTick masked) touch kernel lists.
class DeferKernel final : public kernel::Kernel {
 public:
  DeferKernel(sim::Machine& m, ArchConfig a, StaticConfig s) : Kernel(m, a, s) {}

  Proc<TakeOutcome> take(TaskId t, SemId s, std::optional<Word> timeout) override;
  Proc<void> give(TaskId t, SemId s) override;
  Proc<void> give_from_isr(SemId s, int isr) override;
  Proc<void> swi() override;

  bool releases_pending() const override;
  Word pending_releases(SemId s) const override;
  std::optional<std::string> check_step() const override;
  std::optional<std::string> check_quiescent() const override;

  /// Ring slots actually allocated (power of two), 0 for non-ring variants.
  int ring_capacity() const { return static_cast<int>(ring_.size()); }
  /// Ring entries the configuration allows to be outstanding.
  int ring_limit() const { return ring_limit_; }
  Word ring_occupancy() const;
  Word max_ring_occupancy() const { return max_occupancy_; }
  CellId bitmap_cell() const { return bitmap_; }
  int sentinel() const { return static_cast<int>(sems_.size()); }
  /// Semaphores currently recorded in the structure, in processing order.
  std::vector<SemId> recorded() const;
  std::uint64_t pushes() const { return pushes_; }
  std::uint64_t pops() const { return pops_; }

 protected:
  void on_semaphore_created(kernel::SemRecord& s) override;
  void on_start() override;
  Proc<void> systick_prologue() override;
  Proc<bool> remove_expired(TaskId t, SemId s) override;

 private:
  bool uses_unblock_count() const { return arch_.defer != kernel::DeferVariant::SemCountsFifo; }
  bool uses_ring() const {
    return arch_.defer == kernel::DeferVariant::SemCountsFifo || arch_.defer == kernel::DeferVariant::SemFifo;
  }

  Proc<void> record(SemId s);
  Proc<void> ring_push(SemId s);
  Proc<int> fetch();
  Proc<bool> structure_empty();
  Proc<void> drain();
  Proc<void> process_one(SemId s);
  Proc<void> ll_enqueue(int node);
  Proc<int> ll_dequeue();
  Proc<bool> count_up(SemId s);

  std::vector<CellId> ring_;
  Word ring_mask_ = 0;
  int ring_limit_ = 0;
  CellId ring_head_ = 0;
  CellId ring_tail_ = 0;
  CellId bitmap_ = 0;
  CellId ll_head_ = 0;
  CellId ll_tail_ = 0;
  std::vector<CellId> defer_next_;  // indexed by semaphore id; the sentinel is last
  std::vector<SemId> bitmap_owner_;
  std::uint64_t pushes_ = 0;
  std::uint64_t pops_ = 0;
  Word max_occupancy_ = 0;
};

/// ISRs unblock directly with atomic list operations unless the task side
/// holds the semaphore's barrier, in which case they leave a request.
class BarriersKernel final : public kernel::Kernel {
 public:
  BarriersKernel(sim::Machine& m, ArchConfig a, StaticConfig s) : Kernel(m, a, s) {}

  Proc<TakeOutcome> take(TaskId t, SemId s, std::optional<Word> timeout) override;
  Proc<void> give(TaskId t, SemId s) override;
  Proc<void> give_from_isr(SemId s, int isr) override;
  Proc<void> swi() override;

  std::optional<std::string> check_quiescent() const override;
  std::uint64_t requests_recorded() const { return requests_; }
  std::uint64_t requests_served() const { return served_; }

 protected:
  void on_semaphore_created(kernel::SemRecord& s) override;
  Proc<bool> remove_expired(TaskId t, SemId s) override;

 private:
  Proc<void> release_barrier(SemId s);

  std::uint64_t requests_ = 0;
  std::uint64_t served_ = 0;
};

/// Blocked Lists are manipulated by lock-free algorithms on both sides;
/// membership is encoded in the links.
class AtomicKernel final : public kernel::Kernel {
 public:
  AtomicKernel(sim::Machine& m, ArchConfig a, StaticConfig s) : Kernel(m, a, s) {}

  Proc<TakeOutcome> take(TaskId t, SemId s, std::optional<Word> timeout) override;
  Proc<void> give(TaskId t, SemId s) override;
  Proc<void> give_from_isr(SemId s, int isr) override;
  Proc<void> swi() override;

 protected:
  Proc<bool> remove_expired(TaskId t, SemId s) override;
};

}  // namespace rtoslab::arch
