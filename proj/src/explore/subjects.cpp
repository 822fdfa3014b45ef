#include "rtoslab/explore/subjects.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

namespace rtoslab::explore {

namespace {

constexpr int kStep = 0;
constexpr int kRaise = 1;

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

kernel::ListCtx make_ctx(sim::Machine& m, kernel::ListStats* stats, kernel::AtomicFlavor f) {
  return kernel::ListCtx{&m, m.cost().loop_iteration, stats, f == kernel::AtomicFlavor::LoadStoreExclusive};
}

}  // namespace

ReadyListSubject::ReadyListSubject(const ReadyListScenario& sc) : sc_(sc) {
  const int n = static_cast<int>(sc_.priorities.size());
  auto node_ok = [&](int x) { return x >= 0 && x < n; };
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (int x : sc_.initial) {
    if (!node_ok(x)) throw kernel::ConfigError("initial node out of range");
    ++seen[static_cast<std::size_t>(x)];
  }
  for (const auto& in : sc_.inserters) {
    for (int x : in.nodes) {
      if (!node_ok(x)) throw kernel::ConfigError("inserter '" + in.name + "' names an unknown node");
      ++seen[static_cast<std::size_t>(x)];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c > 1; }))
    throw kernel::ConfigError("a node is inserted more than once");
  if (sc_.kind == kernel::ReadyListKind::SortedPlain)
    throw kernel::ConfigError("the plain sorted list has no concurrent insert");

  machine_ = std::make_unique<sim::Machine>(sim::CostModel{}, sc_.reservation, sim::Discipline::Priority);
  auto& m = *machine_;
  nodes_.priority = sc_.priorities;
  for (int i = 0; i < n; ++i) nodes_.next.push_back(m.memory().allocate("node" + std::to_string(i) + ".next"));
  kernel::ArchConfig arch;
  arch.ready = sc_.kind;
  arch.k_tails = sc_.k_tails;
  arch.flavor = sc_.flavor;
  arch.mutant = sc_.mutant;
  list_ = kernel::make_ready_list(arch, nodes_);
  list_->allocate(m.memory());
  list_->seed(m.memory(), sc_.initial);

  for (std::size_t i = 0; i < sc_.inserters.size(); ++i) {
    const auto& in = sc_.inserters[i];
    int idx = static_cast<int>(i);
    sources_.push_back(m.add_source(
        {in.name, sim::ContextKind::PeripheralIsr, in.priority, false, [this, idx] { return inserter(idx); }}));
  }
  raised_.assign(sources_.size(), false);
  m.add_task("extractor", 0, extractor());
  m.set_base_selector({[] { return 0; }, {}});
}

ReadyListSubject::~ReadyListSubject() {
  machine_->shutdown();
  list_.reset();
  machine_.reset();
}

sim::Proc<void> ReadyListSubject::extractor() {
  for (int e = 0; e < sc_.extractions; ++e) {
    // Inserters run to completion above the extractor, so the list is
    // between operations whenever this code runs.
    auto before = list_->members(machine_->memory());
    int n = co_await list_->extract_if_better(make_ctx(*machine_, &stats_, sc_.flavor),
                                              std::numeric_limits<int>::max());
    if (n < 0) {
      if (!before.empty()) fail("linearizability", "extraction found nothing while the list held " + join(before));
      continue;
    }
    extracted_.push_back(n);
    for (int x : before) {
      if (x != n && sc_.priorities[static_cast<std::size_t>(x)] < sc_.priorities[static_cast<std::size_t>(n)]) {
        fail("linearizability", "extracted node " + std::to_string(n) + " while more urgent node " +
                                    std::to_string(x) + " was present throughout");
      }
    }
  }
}

sim::Proc<void> ReadyListSubject::inserter(int i) {
  for (int x : sc_.inserters[static_cast<std::size_t>(i)].nodes) {
    co_await list_->insert(make_ctx(*machine_, &stats_, sc_.flavor), x);
    inserted_.push_back(x);
  }
}

void ReadyListSubject::fail(std::string inv, std::string msg) {
  if (violation_) return;
  violation_ = Violation{std::move(inv), std::move(msg), machine_->steps()};
}

std::vector<Choice> ReadyListSubject::choices() {
  std::vector<Choice> out;
  if (finished_ || violation_) return out;
  if (machine_->runnable()) out.push_back({kStep, 0});
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (!raised_[i]) out.push_back({kRaise, static_cast<int>(i)});
  }
  return out;
}

void ReadyListSubject::apply(const Choice& c) {
  try {
    if (c.kind == kRaise) {
      auto i = static_cast<std::size_t>(c.arg);
      if (i >= raised_.size() || raised_[i]) throw sim::SimFault("raise not available");
      raised_[i] = true;
      machine_->raise(sources_[i]);
      if (!machine_->runnable()) return;
    }
    machine_->step();
    if (auto e = list_->check(machine_->memory())) fail("structure", *e);
  } catch (const sim::SimFault& e) {
    fail("fault", e.what());
  }
}

void ReadyListSubject::finish() {
  if (finished_) return;
  finished_ = true;
  if (violation_) return;
  const auto& mem = machine_->memory();
  if (auto e = list_->check_quiescent(mem)) return fail("structure", *e);
  std::multiset<int> have;
  for (int x : list_->members(mem)) have.insert(x);
  for (int x : extracted_) have.insert(x);
  std::multiset<int> want(sc_.initial.begin(), sc_.initial.end());
  want.insert(inserted_.begin(), inserted_.end());
  for (int x : want) {
    if (have.count(x) == 0) return fail("linearizability", "node " + std::to_string(x) + " was lost");
  }
  for (int x : have) {
    if (have.count(x) > 1) return fail("linearizability", "node " + std::to_string(x) + " appears twice");
    if (want.count(x) == 0) return fail("linearizability", "node " + std::to_string(x) + " appeared from nowhere");
  }
}

std::string ReadyListSubject::label(const Choice& c) const {
  const auto& last = machine_->last();
  std::string who = last.name + "#" + std::to_string(last.context_step);
  if (c.kind == kRaise) return "raise " + sc_.inserters.at(static_cast<std::size_t>(c.arg)).name + ", " + who;
  return who;
}

std::string ReadyListSubject::logical_state() const {
  std::ostringstream os;
  os << "list=" << join(list_->members(machine_->memory())) << "|extracted=" << join(extracted_);
  if (violation_) os << '|' << violation_->invariant << ':' << violation_->message;
  return os.str();
}

// Straight-line threads.

namespace {

sim::Proc<void> straight_line(sim::Machine& m, sim::CellId cell, int length) {
  for (int i = 0; i < length; ++i) co_await m.store(cell, static_cast<sim::Word>(i + 1));
}

}  // namespace

StraightLineSubject::StraightLineSubject(std::vector<int> lengths) {
  machine_ = std::make_unique<sim::Machine>(sim::CostModel{}, sim::ReservationMode::ClearedOnPreemption,
                                            sim::Discipline::Free);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw kernel::ConfigError("thread length must be positive");
    auto cell = machine_->memory().allocate("t" + std::to_string(i));
    cells_.push_back(cell);
    machine_->add_task("t" + std::to_string(i), 0, straight_line(*machine_, cell, lengths[i]));
  }
}

StraightLineSubject::~StraightLineSubject() { machine_->shutdown(); }

std::vector<Choice> StraightLineSubject::choices() {
  std::vector<Choice> out;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!machine_->thread_done(static_cast<int>(i))) out.push_back({kStep, static_cast<int>(i)});
  }
  return out;
}

void StraightLineSubject::apply(const Choice& c) { machine_->step_thread(c.arg); }

std::string StraightLineSubject::label(const Choice&) const {
  const auto& last = machine_->last();
  return last.name + "#" + std::to_string(last.context_step);
}

std::string StraightLineSubject::logical_state() const {
  std::ostringstream os;
  for (auto c : cells_) os << machine_->memory().peek(c) << ',';
  return os.str();
}

}  // namespace rtoslab::explore
