#include "rtoslab/kernel/ready_list.hpp"

#include <algorithm>

namespace rtoslab::kernel {

namespace {

std::vector<int> stable_by_priority(const std::vector<int>& order, const std::vector<int>& prio) {
  std::vector<int> v = order;
  std::stable_sort(v.begin(), v.end(), [&](int a, int b) {
    return prio[static_cast<std::size_t>(a)] < prio[static_cast<std::size_t>(b)];
  });
  return v;
}

void link_chain(sim::AtomicMemory& m, CellId head, const std::vector<CellId>& next, const std::vector<int>& v) {
  m.poke(head, v.empty() ? kAbsent : link_to(v.front()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    int n = v[i];
    m.poke(next[static_cast<std::size_t>(n)], i + 1 < v.size() ? link_to(v[i + 1]) : link_to(n));
  }
}

std::optional<std::string> check_sorted(const sim::AtomicMemory& m, CellId head, const NodeTable& nodes,
                                        const char* what) {
  auto w = walk(m, head, nodes.next, nodes.next.size());
  if (w.error) return std::string(what) + ": " + *w.error;
  for (std::size_t i = 1; i < w.nodes.size(); ++i) {
    if (nodes.priority[static_cast<std::size_t>(w.nodes[i])] < nodes.priority[static_cast<std::size_t>(w.nodes[i - 1])])
      return std::string(what) + ": priority order broken at node " + std::to_string(w.nodes[i]);
  }
  return std::nullopt;
}

}  // namespace

// Sorted, plain.

void SortedPlainReadyList::allocate(sim::AtomicMemory& m) { head_ = m.allocate("ready.head"); }

void SortedPlainReadyList::seed(sim::AtomicMemory& m, const std::vector<int>& order) const {
  link_chain(m, head_, nodes_.next, stable_by_priority(order, nodes_.priority));
}

Proc<void> SortedPlainReadyList::insert(ListCtx c, int node) { co_await plain_insert_sorted(c, ref(head_), node); }

Proc<int> SortedPlainReadyList::extract_if_better(ListCtx c, int bound) {
  Word h = co_await c.port->load(head_);
  if (h == kAbsent || prio(node_of(h)) >= bound) co_return -1;
  co_return co_await plain_extract_head(c, ref(head_));
}

std::vector<int> SortedPlainReadyList::members(const sim::AtomicMemory& m) const {
  return walk(m, head_, nodes_.next, nodes_.next.size()).nodes;
}

std::optional<std::string> SortedPlainReadyList::check(const sim::AtomicMemory& m) const {
  return check_sorted(m, head_, nodes_, "ready list");
}

// Sorted, atomic.

void SortedAtomicReadyList::allocate(sim::AtomicMemory& m) { head_ = m.allocate("ready.head"); }

void SortedAtomicReadyList::seed(sim::AtomicMemory& m, const std::vector<int>& order) const {
  link_chain(m, head_, nodes_.next, stable_by_priority(order, nodes_.priority));
}

Proc<void> SortedAtomicReadyList::insert(ListCtx c, int node) {
  co_await atomic_insert_sorted(c, ref(head_), node, {}, touch_head_);
}

Proc<int> SortedAtomicReadyList::extract_if_better(ListCtx c, int bound) {
  sim::Port& p = *c.port;
  for (;;) {
    Word h = co_await p.xread(head_, c.exclusive);
    if (h == kAbsent) co_return -1;
    int n = node_of(h);
    if (prio(n) >= bound) co_return -1;
    Word nx = co_await p.load(next(n));
    if (nx != kAbsent && co_await p.xwrite(head_, h, is_self(nx, n) ? kAbsent : nx, c.exclusive)) {
      co_await p.store(next(n), kAbsent);
      co_return n;
    }
    c.restart();
  }
}

std::vector<int> SortedAtomicReadyList::members(const sim::AtomicMemory& m) const {
  return walk(m, head_, nodes_.next, nodes_.next.size()).nodes;
}

std::optional<std::string> SortedAtomicReadyList::check(const sim::AtomicMemory& m) const {
  return check_sorted(m, head_, nodes_, "ready list");
}

// Unsorted with k tails.

void UnsortedReadyList::allocate(sim::AtomicMemory& m) {
  heads_.clear();
  tails_.clear();
  for (int j = 0; j < k_; ++j) {
    heads_.push_back(m.allocate("ready.head[" + std::to_string(j) + "]"));
    tails_.push_back(m.allocate("ready.tail[" + std::to_string(j) + "]"));
  }
}

void UnsortedReadyList::seed(sim::AtomicMemory& m, const std::vector<int>& order) const {
  for (int j = 0; j < k_; ++j) {
    std::vector<int> v;
    for (int n : order) {
      if (slot_of(prio(n)) == j) v.push_back(n);
    }
    link_chain(m, head(j), nodes_.next, v);
    m.poke(tail(j), v.empty() ? kAbsent : link_to(v.back()));
  }
}

Proc<void> UnsortedReadyList::insert(ListCtx c, int node) {
  sim::Port& p = *c.port;
  int j = slot_of(prio(node));
  co_await p.store(next(node), link_to(node));
  Word old = kAbsent;
  for (;;) {
    old = co_await p.xread(tail(j), c.exclusive);
    if (co_await p.xwrite(tail(j), old, link_to(node), c.exclusive)) break;
    c.restart();
  }
  if (old == kAbsent) {
    co_await p.store(head(j), link_to(node));
  } else {
    co_await p.store(next(node_of(old)), link_to(node));
  }
}

Proc<void> UnsortedReadyList::unlink(ListCtx c, int slot, int pred, int node) {
  sim::Port& p = *c.port;
  Word nx = co_await p.load(next(node));
  if (!is_self(nx, node)) {
    if (pred < 0) {
      co_await p.store(head(slot), nx);
    } else {
      co_await p.store(next(pred), nx);
    }
    co_await p.store(next(node), kAbsent);
    co_return;
  }
  // Last node: detach it from its predecessor first, then move the tail
  // back. If an inserter has already swung the tail past it, wait for that
  // inserter's link and splice the newcomer in instead.
  if (pred < 0) {
    co_await p.store(head(slot), kAbsent);
  } else {
    co_await p.store(next(pred), link_to(pred));
  }
  Word repl = pred < 0 ? kAbsent : link_to(pred);
  for (;;) {
    Word t = co_await p.xread(tail(slot), c.exclusive);
    if (t != link_to(node)) break;
    if (co_await p.xwrite(tail(slot), t, repl, c.exclusive)) {
      co_await p.store(next(node), kAbsent);
      co_return;
    }
    c.restart();
  }
  do {
    nx = co_await p.load(next(node));
  } while (is_self(nx, node));
  if (pred < 0) {
    co_await p.store(head(slot), nx);
  } else {
    co_await p.store(next(pred), nx);
  }
  co_await p.store(next(node), kAbsent);
}

Proc<int> UnsortedReadyList::extract_if_better(ListCtx c, int bound) {
  sim::Port& p = *c.port;
  const int dedicated = k_ - 1;
  const int watched = std::min(dedicated, 2);
  for (;;) {
    for (int j = 0; j < dedicated; ++j) {
      Word h = co_await p.load(head(j));
      if (h == kAbsent) continue;
      if (j >= bound) co_return -1;
      int n = node_of(h);
      co_await unlink(c, j, -1, n);
      co_return n;
    }
    const int s = k_ - 1;
    Word h = co_await p.load(head(s));
    if (h == kAbsent) co_return -1;
    int best = node_of(h);
    int best_pred = -1;
    int cur = best;
    bool preempted = false;
    for (;;) {
      Word nx = co_await p.load(next(cur));
      if (nx == kAbsent || is_self(nx, cur)) break;
      int n = node_of(nx);
      c.iterate();
      for (int j = 0; j < watched && !preempted; ++j) {
        preempted = co_await p.load(head(j)) != kAbsent;
      }
      if (preempted) break;
      if (prio(n) < prio(best)) {
        best = n;
        best_pred = cur;
      }
      cur = n;
    }
    if (preempted) {
      c.restart();
      continue;
    }
    if (prio(best) >= bound) co_return -1;
    co_await unlink(c, s, best_pred, best);
    co_return best;
  }
}

std::vector<int> UnsortedReadyList::members(const sim::AtomicMemory& m) const {
  // Extraction order: dedicated slots first, then the shared slot by
  // priority with ties in list order.
  std::vector<int> out;
  for (int j = 0; j < k_; ++j) {
    auto w = walk(m, head(j), nodes_.next, nodes_.next.size()).nodes;
    if (j == k_ - 1) w = stable_by_priority(w, nodes_.priority);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

std::optional<std::string> UnsortedReadyList::check(const sim::AtomicMemory& m) const {
  for (int j = 0; j < k_; ++j) {
    auto w = walk(m, head(j), nodes_.next, nodes_.next.size());
    if (w.error) return "ready slot " + std::to_string(j) + ": " + *w.error;
    for (int n : w.nodes) {
      if (slot_of(prio(n)) != j) return "node " + std::to_string(n) + " in wrong ready slot " + std::to_string(j);
    }
  }
  return std::nullopt;
}

std::optional<std::string> UnsortedReadyList::check_quiescent(const sim::AtomicMemory& m) const {
  if (auto e = check(m)) return e;
  for (int j = 0; j < k_; ++j) {
    auto w = walk(m, head(j), nodes_.next, nodes_.next.size());
    Word want = w.nodes.empty() ? kAbsent : link_to(w.nodes.back());
    if (m.peek(tail(j)) != want) return "ready slot " + std::to_string(j) + " tail does not designate its last node";
  }
  return std::nullopt;
}

std::unique_ptr<ReadyList> make_ready_list(const ArchConfig& arch, const NodeTable& nodes) {
  switch (arch.ready) {
    case ReadyListKind::SortedPlain:
      return std::make_unique<SortedPlainReadyList>(nodes);
    case ReadyListKind::SortedAtomic:
      return std::make_unique<SortedAtomicReadyList>(nodes, arch.mutant != Mutant::NoHeadTouch);
    case ReadyListKind::Unsorted:
      return std::make_unique<UnsortedReadyList>(nodes, arch.k_tails);
  }
  return nullptr;
}

}  // namespace rtoslab::kernel
