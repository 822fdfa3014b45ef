#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/explore/subject.hpp"
#include "rtoslab/kernel/ready_list.hpp"
#include "rtoslab/sim/machine.hpp"

namespace rtoslab::explore {

/// Concurrent ready-list operations: one extracting task below any number
/// of inserting interrupts, each raised once at every possible point.
struct ReadyListScenario {
  std::string name;
  kernel::ReadyListKind kind = kernel::ReadyListKind::SortedAtomic;
  int k_tails = 1;
  kernel::AtomicFlavor flavor = kernel::AtomicFlavor::LoadStoreExclusive;
  kernel::Mutant mutant = kernel::Mutant::None;
  sim::ReservationMode reservation = sim::ReservationMode::ClearedOnPreemption;
  std::vector<int> priorities;  // one entry per node
  std::vector<int> initial;     // nodes linked before the run
  struct Inserter {
    std::string name;
    int priority = 0;  // interrupt priority, 0 most urgent
    std::vector<int> nodes;
  };
  std::vector<Inserter> inserters;
  int extractions = 1;
};

class ReadyListSubject final : public Subject {
 public:
  explicit ReadyListSubject(const ReadyListScenario& sc);
  ~ReadyListSubject() override;

  std::vector<Choice> choices() override;
  void apply(const Choice& c) override;
  void finish() override;
  const std::optional<Violation>& violation() const override { return violation_; }
  std::uint64_t steps() const override { return machine_->steps(); }
  std::string label(const Choice& c) const override;
  std::string logical_state() const override;

  const std::vector<int>& extracted() const { return extracted_; }
  std::vector<int> members() const { return list_->members(machine_->memory()); }

 private:
  sim::Proc<void> extractor();
  sim::Proc<void> inserter(int i);
  void fail(std::string inv, std::string msg);

  ReadyListScenario sc_;
  kernel::NodeTable nodes_;
  std::unique_ptr<sim::Machine> machine_;
  std::unique_ptr<kernel::ReadyList> list_;
  kernel::ListStats stats_;
  std::vector<sim::SourceId> sources_;
  std::vector<bool> raised_;
  std::vector<int> extracted_;
  std::vector<int> inserted_;
  std::optional<Violation> violation_;
  bool finished_ = false;
};

/// Independent straight-line threads under free interleaving; the number of
/// schedules is the multinomial coefficient of their lengths.
class StraightLineSubject final : public Subject {
 public:
  explicit StraightLineSubject(std::vector<int> lengths);
  ~StraightLineSubject() override;

  std::vector<Choice> choices() override;
  void apply(const Choice& c) override;
  void finish() override {}
  const std::optional<Violation>& violation() const override { return violation_; }
  std::uint64_t steps() const override { return machine_->steps(); }
  std::string label(const Choice& c) const override;
  std::string logical_state() const override;

 private:
  std::unique_ptr<sim::Machine> machine_;
  std::vector<sim::CellId> cells_;
  std::optional<Violation> violation_;
};

}  // namespace rtoslab::explore
