#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/kernel/types.hpp"
#include "rtoslab/sim/memory.hpp"
#include "rtoslab/sim/port.hpp"
#include "rtoslab/sim/proc.hpp"

namespace rtoslab::kernel {

using sim::Proc;

struct ListStats {
  std::uint64_t iterations = 0;
  std::uint64_t restarts = 0;
};

/// Everything a list algorithm needs besides the list itself: where to run,
/// what one loop iteration costs and which read-modify-write flavor to use.
struct ListCtx {
  sim::Port* port = nullptr;
  sim::Cycles loop_cost = 8;
  ListStats* stats = nullptr;
  bool exclusive = true;  // load/store exclusive, otherwise compare-exchange

  void iterate() const {
    port->charge(loop_cost);
    if (stats) ++stats->iterations;
  }
  void restart() const {
    if (stats) ++stats->restarts;
  }
};

/// Sort key of a list node: a fixed priority or a value held in memory.
struct NodeKey {
  const std::vector<int>* fixed = nullptr;
  const std::vector<CellId>* cells = nullptr;
};

/// Intrusive singly-linked list: one head cell and one next cell per node.
struct ListRef {
  CellId head;
  const std::vector<CellId>* next;
  NodeKey key;
};

using LinkedHook = std::function<void()>;

// Plain algorithms; the caller excludes every other mutator.

/// Sorted by key, equal keys keep insertion order. One iteration per node passed.
Proc<void> plain_insert_sorted(ListCtx c, ListRef l, int node);
/// Faults on an empty list.
Proc<int> plain_extract_head(ListCtx c, ListRef l);
/// Removes `node` wherever it is; one iteration per node examined.
Proc<bool> plain_remove(ListCtx c, ListRef l, int node);

// Atomic algorithms over the same representation.

/// Unlinks the head with a read-modify-write on the head cell, then marks the
/// node absent. Returns -1 on an empty list. `on_unlinked` runs in the same
/// step as the successful write.
Proc<int> atomic_extract_head(ListCtx c, ListRef l, std::function<void(int)> on_unlinked = {});

/// Sorted insertion that revalidates every hop with an exclusive read of the
/// next link and restarts from the head when it reads an absent link. With
/// `touch_head`, an insertion right behind the head finishes with a
/// compare-exchange of the head against its own value so that a concurrent
/// head extraction holding a reservation on it is forced to retry.
Proc<void> atomic_insert_sorted(ListCtx c, ListRef l, int node, LinkedHook on_linked = {}, bool touch_head = false);

/// Arbitrary-position extraction with the same restart discipline. Returns
/// false when the node is not (or no longer) in the list.
Proc<bool> atomic_remove(ListCtx c, ListRef l, int node, LinkedHook on_unlinked = {});

/// Walks a list without side effects. Reports a cycle, an out-of-range link,
/// or (when `sorted`) a key inversion.
struct WalkResult {
  std::vector<int> nodes;
  std::optional<std::string> error;
};
WalkResult walk(const sim::AtomicMemory& m, CellId head, const std::vector<CellId>& next, std::size_t node_count);
bool sorted_by(const std::vector<int>& nodes, const std::vector<Word>& keys);

}  // namespace rtoslab::kernel
