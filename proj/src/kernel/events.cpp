#include "rtoslab/kernel/events.hpp"

#include <algorithm>

namespace rtoslab::kernel {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::GiveCall: return "give-call";
    case EventKind::Give: return "give";
    case EventKind::Acquire: return "acquire";
    case EventKind::Block: return "block";
    case EventKind::Cancel: return "cancel";
    case EventKind::Timeout: return "timeout";
    case EventKind::Overflow: return "overflow";
    case EventKind::Request: return "request";
  }
  return "?";
}

TokenOracle::TokenOracle(std::vector<int> priorities, std::vector<Word> counts)
    : prio_(std::move(priorities)), counts_(std::move(counts)), waiters_(counts_.size()) {}

void TokenOracle::add_waiter(SemId s, TaskId t) {
  auto& w = waiters_[static_cast<std::size_t>(s)];
  auto pos = std::find_if(w.begin(), w.end(), [&](TaskId o) {
    return prio_[static_cast<std::size_t>(t)] < prio_[static_cast<std::size_t>(o)];
  });
  w.insert(pos, t);
}

std::optional<std::string> TokenOracle::apply(const Event& e) {
  auto who = [](int t) { return "task " + std::to_string(t); };
  auto sem = [&] { return "semaphore " + std::to_string(e.sem); };
  switch (e.kind) {
    case EventKind::Give: {
      auto& w = waiters_[static_cast<std::size_t>(e.sem)];
      if (e.task < 0) {
        if (!w.empty()) return sem() + " counted a give while " + who(w.front()) + " was waiting";
        ++counts_[static_cast<std::size_t>(e.sem)];
        return std::nullopt;
      }
      if (w.empty()) return sem() + " handed a token to " + who(e.task) + " with no waiter";
      if (w.front() != e.task)
        return sem() + " handed a token to " + who(e.task) + " but " + who(w.front()) + " was next";
      w.erase(w.begin());
      return std::nullopt;
    }
    case EventKind::Acquire: {
      auto& c = counts_[static_cast<std::size_t>(e.sem)];
      if (c == 0) return who(e.task) + " acquired " + sem() + " with no token available";
      --c;
      return std::nullopt;
    }
    case EventKind::Block:
      add_waiter(e.sem, e.task);
      return std::nullopt;
    case EventKind::Cancel:
    case EventKind::Timeout: {
      auto& w = waiters_[static_cast<std::size_t>(e.sem)];
      auto it = std::find(w.begin(), w.end(), e.task);
      if (it == w.end()) return who(e.task) + " left " + sem() + " without waiting on it";
      w.erase(it);
      return std::nullopt;
    }
    case EventKind::GiveCall:
    case EventKind::Overflow:
    case EventKind::Request:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace rtoslab::kernel
