#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/lists.hpp"

namespace rtoslab::kernel {

/// Task nodes as seen by a ready list: static priorities and the next-ready
/// link cell of each node.
struct NodeTable {
  std::vector<int> priority;
  std::vector<CellId> next;
};

class ReadyList {
 public:
  explicit ReadyList(const NodeTable& nodes) : nodes_(nodes) {}
  virtual ~ReadyList() = default;

  virtual ReadyListKind kind() const = 0;
  virtual void allocate(sim::AtomicMemory& m) = 0;
  /// Links `order` directly into memory; equal priorities keep their order.
  virtual void seed(sim::AtomicMemory& m, const std::vector<int>& order) const = 0;

  virtual Proc<void> insert(ListCtx c, int node) = 0;
  /// Removes the most urgent node if its priority value is below `bound`;
  /// otherwise returns -1 and leaves the list untouched.
  virtual Proc<int> extract_if_better(ListCtx c, int bound) = 0;

  /// Members in extraction order (ties in insertion order).
  virtual std::vector<int> members(const sim::AtomicMemory& m) const = 0;
  /// Well-formedness that holds after every step.
  virtual std::optional<std::string> check(const sim::AtomicMemory& m) const = 0;
  /// Extra consistency that only holds when no list operation is in flight.
  virtual std::optional<std::string> check_quiescent(const sim::AtomicMemory& m) const { return check(m); }

 protected:
  int prio(int n) const { return nodes_.priority[static_cast<std::size_t>(n)]; }
  CellId next(int n) const { return nodes_.next[static_cast<std::size_t>(n)]; }
  ListRef ref(CellId head) const { return ListRef{head, &nodes_.next, NodeKey{&nodes_.priority, nullptr}}; }

  const NodeTable& nodes_;
};

/// Sorted list, single mutator at a time (baseline and defer kernels).
class SortedPlainReadyList final : public ReadyList {
 public:
  using ReadyList::ReadyList;
  ReadyListKind kind() const override { return ReadyListKind::SortedPlain; }
  void allocate(sim::AtomicMemory& m) override;
  void seed(sim::AtomicMemory& m, const std::vector<int>& order) const override;
  Proc<void> insert(ListCtx c, int node) override;
  Proc<int> extract_if_better(ListCtx c, int bound) override;
  std::vector<int> members(const sim::AtomicMemory& m) const override;
  std::optional<std::string> check(const sim::AtomicMemory& m) const override;

  CellId head() const { return head_; }

 private:
  CellId head_ = 0;
};

/// Sorted list with many concurrent inserters and one extractor that runs
/// below all of them.
class SortedAtomicReadyList final : public ReadyList {
 public:
  SortedAtomicReadyList(const NodeTable& nodes, bool touch_head) : ReadyList(nodes), touch_head_(touch_head) {}
  ReadyListKind kind() const override { return ReadyListKind::SortedAtomic; }
  void allocate(sim::AtomicMemory& m) override;
  void seed(sim::AtomicMemory& m, const std::vector<int>& order) const override;
  Proc<void> insert(ListCtx c, int node) override;
  Proc<int> extract_if_better(ListCtx c, int bound) override;
  std::vector<int> members(const sim::AtomicMemory& m) const override;
  std::optional<std::string> check(const sim::AtomicMemory& m) const override;

  CellId head() const { return head_; }

 private:
  CellId head_ = 0;
  bool touch_head_;
};

/// Unsorted FIFO lists, one per slot. Slots 0..k-2 hold exactly that
/// priority; slot k-1 holds everything else. Insertion swings the slot tail
/// and then links the old tail; extraction scans for the minimum.
class UnsortedReadyList final : public ReadyList {
 public:
  UnsortedReadyList(const NodeTable& nodes, int k) : ReadyList(nodes), k_(k < 1 ? 1 : k) {}
  ReadyListKind kind() const override { return ReadyListKind::Unsorted; }
  void allocate(sim::AtomicMemory& m) override;
  void seed(sim::AtomicMemory& m, const std::vector<int>& order) const override;
  Proc<void> insert(ListCtx c, int node) override;
  Proc<int> extract_if_better(ListCtx c, int bound) override;
  std::vector<int> members(const sim::AtomicMemory& m) const override;
  std::optional<std::string> check(const sim::AtomicMemory& m) const override;
  std::optional<std::string> check_quiescent(const sim::AtomicMemory& m) const override;

  int slots() const { return k_; }
  int slot_of(int priority) const { return priority < k_ - 1 ? priority : k_ - 1; }
  CellId head(int slot) const { return heads_[static_cast<std::size_t>(slot)]; }
  CellId tail(int slot) const { return tails_[static_cast<std::size_t>(slot)]; }

 private:
  Proc<void> unlink(ListCtx c, int slot, int pred, int node);

  int k_;
  std::vector<CellId> heads_;
  std::vector<CellId> tails_;
};

std::unique_ptr<ReadyList> make_ready_list(const ArchConfig& arch, const NodeTable& nodes);

}  // namespace rtoslab::kernel
