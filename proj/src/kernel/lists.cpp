#include "rtoslab/kernel/lists.hpp"

#include <unordered_set>

namespace rtoslab::kernel {

namespace {

Proc<Word> read_key(sim::Port& p, NodeKey k, int n) {
  if (k.fixed) co_return static_cast<Word>((*k.fixed)[static_cast<std::size_t>(n)]);
  co_return co_await p.load((*k.cells)[static_cast<std::size_t>(n)]);
}

CellId next_of(const ListRef& l, int n) { return (*l.next)[static_cast<std::size_t>(n)]; }

}  // namespace

Proc<void> plain_insert_sorted(ListCtx c, ListRef l, int node) {
  sim::Port& p = *c.port;
  Word k = co_await read_key(p, l.key, node);
  int prev = -1;
  Word cur = co_await p.load(l.head);
  while (cur != kAbsent) {
    int n = node_of(cur);
    Word kn = co_await read_key(p, l.key, n);
    if (k < kn) break;
    c.iterate();
    prev = n;
    Word nx = co_await p.load(next_of(l, n));
    cur = is_self(nx, n) ? kAbsent : nx;
  }
  co_await p.store(next_of(l, node), cur == kAbsent ? link_to(node) : cur);
  if (prev < 0) {
    co_await p.store(l.head, link_to(node));
  } else {
    co_await p.store(next_of(l, prev), link_to(node));
  }
}

Proc<int> plain_extract_head(ListCtx c, ListRef l) {
  sim::Port& p = *c.port;
  Word h = co_await p.load(l.head);
  if (h == kAbsent) throw sim::SimFault("extract from an empty list");
  int n = node_of(h);
  Word nx = co_await p.load(next_of(l, n));
  co_await p.store(l.head, is_self(nx, n) ? kAbsent : nx);
  co_await p.store(next_of(l, n), kAbsent);
  co_return n;
}

Proc<bool> plain_remove(ListCtx c, ListRef l, int node) {
  sim::Port& p = *c.port;
  int prev = -1;
  Word cur = co_await p.load(l.head);
  while (cur != kAbsent) {
    int n = node_of(cur);
    c.iterate();
    Word nx = co_await p.load(next_of(l, n));
    if (n == node) {
      Word after = is_self(nx, n) ? kAbsent : nx;
      if (prev < 0) {
        co_await p.store(l.head, after);
      } else {
        co_await p.store(next_of(l, prev), after == kAbsent ? link_to(prev) : after);
      }
      co_await p.store(next_of(l, n), kAbsent);
      co_return true;
    }
    prev = n;
    cur = is_self(nx, n) ? kAbsent : nx;
  }
  co_return false;
}

Proc<int> atomic_extract_head(ListCtx c, ListRef l, std::function<void(int)> on_unlinked) {
  sim::Port& p = *c.port;
  for (;;) {
    Word h = co_await p.xread(l.head, c.exclusive);
    if (h == kAbsent) co_return -1;
    int n = node_of(h);
    Word nx = co_await p.load(next_of(l, n));
    if (nx != kAbsent) {
      Word after = is_self(nx, n) ? kAbsent : nx;
      if (co_await p.xwrite(l.head, h, after, c.exclusive)) {
        if (on_unlinked) on_unlinked(n);
        co_await p.store(next_of(l, n), kAbsent);
        co_return n;
      }
    }
    c.restart();
  }
}

Proc<void> atomic_insert_sorted(ListCtx c, ListRef l, int node, LinkedHook on_linked, bool touch_head) {
  sim::Port& p = *c.port;
  Word k = co_await read_key(p, l.key, node);
  for (;;) {
    Word h = co_await p.xread(l.head, c.exclusive);
    bool before_head = h == kAbsent;
    if (!before_head) before_head = k < co_await read_key(p, l.key, node_of(h));
    if (before_head) {
      co_await p.store(next_of(l, node), h == kAbsent ? link_to(node) : h);
      if (co_await p.xwrite(l.head, h, link_to(node), c.exclusive)) {
        if (on_linked) on_linked();
        co_return;
      }
      c.restart();
      continue;
    }
    int cur = node_of(h);
    for (;;) {
      c.iterate();
      Word nx = co_await p.xread(next_of(l, cur), c.exclusive);
      if (nx == kAbsent) break;  // cur was unlinked under us
      bool end = is_self(nx, cur);
      if (!end && !(k < co_await read_key(p, l.key, node_of(nx)))) {
        cur = node_of(nx);
        continue;
      }
      co_await p.store(next_of(l, node), end ? link_to(node) : nx);
      if (co_await p.xwrite(next_of(l, cur), nx, link_to(node), c.exclusive)) {
        if (on_linked) on_linked();
        if (touch_head && link_to(cur) == h) co_await p.compare_exchange(l.head, h, h);
        co_return;
      }
    }
    c.restart();
  }
}

Proc<bool> atomic_remove(ListCtx c, ListRef l, int node, LinkedHook on_unlinked) {
  sim::Port& p = *c.port;
  for (;;) {
    Word h = co_await p.xread(l.head, c.exclusive);
    if (h == kAbsent) co_return false;
    int prev = node_of(h);
    c.iterate();
    if (prev == node) {
      Word nx = co_await p.load(next_of(l, node));
      if (nx != kAbsent && co_await p.xwrite(l.head, h, is_self(nx, node) ? kAbsent : nx, c.exclusive)) {
        if (on_unlinked) on_unlinked();
        co_await p.store(next_of(l, node), kAbsent);
        co_return true;
      }
      c.restart();
      continue;
    }
    for (;;) {
      Word nx = co_await p.xread(next_of(l, prev), c.exclusive);
      if (nx == kAbsent) break;  // prev was extracted; start over
      if (is_self(nx, prev)) co_return false;
      int n = node_of(nx);
      c.iterate();
      if (n != node) {
        prev = n;
        continue;
      }
      Word tn = co_await p.load(next_of(l, node));
      if (tn == kAbsent) break;
      Word repl = is_self(tn, node) ? link_to(prev) : tn;
      if (co_await p.xwrite(next_of(l, prev), nx, repl, c.exclusive)) {
        if (on_unlinked) on_unlinked();
        co_await p.store(next_of(l, node), kAbsent);
        co_return true;
      }
    }
    c.restart();
  }
}

WalkResult walk(const sim::AtomicMemory& m, CellId head, const std::vector<CellId>& next, std::size_t node_count) {
  WalkResult r;
  Word cur = m.peek(head);
  std::unordered_set<int> seen;
  while (cur != kAbsent) {
    int n = node_of(cur);
    if (n < 0 || static_cast<std::size_t>(n) >= node_count) {
      r.error = "link to unknown node " + std::to_string(n);
      return r;
    }
    if (!seen.insert(n).second) {
      r.error = "cycle through node " + std::to_string(n);
      return r;
    }
    r.nodes.push_back(n);
    Word nx = m.peek(next[static_cast<std::size_t>(n)]);
    if (nx == kAbsent) {
      r.error = "reachable node " + std::to_string(n) + " has an absent link";
      return r;
    }
    cur = is_self(nx, n) ? kAbsent : nx;
  }
  return r;
}

bool sorted_by(const std::vector<int>& nodes, const std::vector<Word>& keys) {
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (keys[static_cast<std::size_t>(nodes[i])] < keys[static_cast<std::size_t>(nodes[i - 1])]) return false;
  }
  return true;
}

}  // namespace rtoslab::kernel
