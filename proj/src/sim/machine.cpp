#include "rtoslab/sim/machine.hpp"

#include <algorithm>

namespace rtoslab::sim {

Machine::Machine(CostModel cost, ReservationMode mode, Discipline discipline)
    : memory_(mode), ledger_(cost), discipline_(discipline) {}

Machine::~Machine() { shutdown(); }

void Machine::shutdown() {
  // Interrupt contexts first; they may hold frames that reference task state.
  while (!stack_.empty()) stack_.pop_back();
  tasks_.clear();
  cur_ = nullptr;
}

SourceId Machine::add_source(InterruptSource src) {
  SourceState st;
  switch (src.kind) {
    case ContextKind::PeripheralIsr:
      st.urgency = peripheral_urgency(src.priority, src.above_ceiling);
      break;
    case ContextKind::SoftwareIrq:
    case ContextKind::SysTickIrq:
      st.urgency = kSoftwareUrgency;
      break;
    case ContextKind::Task:
      throw SimFault("a task is not an interrupt source");
  }
  st.spec = std::move(src);
  sources_.push_back(std::move(st));
  return static_cast<SourceId>(sources_.size() - 1);
}

void Machine::raise(SourceId s) {
  auto& src = sources_.at(s);
  if (!src.pending) src.raised_at = ledger_.now();
  src.pending = true;
  ++src.raised;
}

bool Machine::masked(int urgency) const {
  if (urgency >= kAboveCeilingBase - 255) return false;
  if (urgency <= kTaskUrgency) return false;
  if (ledger_.depth(MaskLevel::Peripheral) > 0) return true;
  return urgency == kSoftwareUrgency && ledger_.depth(MaskLevel::Software) > 0;
}

int Machine::add_task(std::string name, int priority, Proc<void> root) {
  auto c = std::make_unique<Context>();
  c->serial = next_serial_++;
  c->name = std::move(name);
  c->id = {ContextKind::Task, priority, static_cast<int>(tasks_.size())};
  c->urgency = kTaskUrgency;
  c->task = static_cast<int>(tasks_.size());
  c->root = std::move(root);
  tasks_.push_back(std::move(c));
  prime(*tasks_.back());
  return tasks_.back()->task;
}

void Machine::prime(Context& c) {
  // Runs local code up to the first primitive operation; executes none.
  Context* saved = cur_;
  cur_ = &c;
  c.resume_point = c.root.handle();
  c.resume_point.resume();
  cur_ = saved;
  if (c.root.done()) {
    c.root.rethrow_if_failed();
    c.finished = true;
  }
}

void Machine::dispatch_pending() {
  int current = stack_.empty() ? kTaskUrgency : stack_.back()->urgency;
  SourceId best = -1;
  for (SourceId s = 0; s < static_cast<SourceId>(sources_.size()); ++s) {
    const auto& src = sources_[s];
    if (!src.pending || src.urgency <= current || masked(src.urgency)) continue;
    // Ties at the same level go to the lower source id (SWI before SysTick).
    if (best < 0 || src.urgency > sources_[best].urgency) best = s;
  }
  if (best < 0) return;

  auto& src = sources_[best];
  src.pending = false;
  ++src.dispatched;
  ++entries_;
  Cycles entered = ledger_.now();
  ledger_.advance(ledger_.cost().interrupt_latency);
  memory_.preemption_event();

  auto c = std::make_unique<Context>();
  c->serial = next_serial_++;
  c->name = src.spec.name;
  c->id = {src.spec.kind, src.spec.priority, best};
  c->urgency = src.urgency;
  c->source = best;
  c->raised = src.raised_at;
  c->entered = entered;
  c->root = src.spec.handler();
  stack_.push_back(std::move(c));
  prime(*stack_.back());
  if (stack_.back()->finished) finish(*stack_.back());
}

Context* Machine::base_context() {
  if (!selector_.running) return nullptr;
  int slot = selector_.running();
  if (slot < 0 || slot >= static_cast<int>(tasks_.size())) return nullptr;
  Context* c = tasks_[slot].get();
  if (c->finished) return nullptr;
  if (c->pending && c->pending->kind == OpKind::WaitDispatch) {
    if (!selector_.may_resume_wait || !selector_.may_resume_wait(slot)) return nullptr;
  }
  return c;
}

bool Machine::runnable() {
  if (discipline_ == Discipline::Free) {
    return std::any_of(tasks_.begin(), tasks_.end(), [](const auto& t) { return !t->finished; });
  }
  int current = stack_.empty() ? kTaskUrgency : stack_.back()->urgency;
  for (const auto& src : sources_) {
    if (src.pending && src.urgency > current && !masked(src.urgency)) return true;
  }
  return !stack_.empty() || base_context() != nullptr;
}

Machine::StepStatus Machine::step() {
  if (discipline_ != Discipline::Priority) throw SimFault("step() requires priority discipline");
  // A dispatched handler may finish without any operation; keep dispatching.
  for (std::size_t guard = 0; guard < sources_.size() + 1; ++guard) {
    auto before = entries_;
    dispatch_pending();
    if (entries_ == before) break;
    if (!stack_.empty()) break;
  }
  Context* c = nullptr;
  if (!stack_.empty()) {
    c = stack_.back().get();
  } else {
    c = base_context();
    if (c && c->task != last_base_) {
      if (last_base_ >= 0) memory_.preemption_event();
      last_base_ = c->task;
    }
  }
  if (!c) return StepStatus::Idle;
  run_one(*c);
  return StepStatus::Executed;
}

Machine::StepStatus Machine::step_thread(int slot) {
  if (discipline_ != Discipline::Free) throw SimFault("step_thread() requires free discipline");
  Context& c = *tasks_.at(slot);
  if (c.finished) return StepStatus::Idle;
  if (last_base_ >= 0 && last_base_ != slot) memory_.preemption_event();
  last_base_ = slot;
  run_one(c);
  return StepStatus::Executed;
}

void Machine::run_one(Context& c) {
  cur_ = &c;
  last_ = {c.name, c.id, c.steps};
  ++steps_;
  ++c.steps;
  auto h = c.resume_point;
  h.resume();
  cur_ = nullptr;
  if (c.root.done()) finish(c);
}

void Machine::finish(Context& c) {
  c.finished = true;
  c.root.rethrow_if_failed();
  if (c.task >= 0) return;
  if (c.masks[0] != 0 || c.masks[1] != 0) throw SimFault("interrupt handler '" + c.name + "' returned with interrupts masked");
  spans_.push_back({c.name, c.id.kind, c.source, c.raised, c.entered, ledger_.now(), static_cast<std::uint64_t>(c.serial)});
  // Exception return.
  memory_.preemption_event();
  if (!stack_.empty() && stack_.back().get() == &c) stack_.pop_back();
}

void Machine::park(std::coroutine_handle<> h, const OpDesc& d) {
  if (!cur_) throw SimFault("operation issued outside a context");
  cur_->resume_point = h;
  cur_->pending = d;
}

OpResult Machine::perform(const OpDesc& d) {
  Context* c = cur_;
  if (!c) throw SimFault("operation performed outside a context");
  c->pending.reset();
  switch (d.kind) {
    case OpKind::Load:
      return {memory_.load(d.cell), true};
    case OpKind::Store:
      memory_.store(d.cell, d.a);
      return {};
    case OpKind::LoadExclusive:
      return {memory_.load_exclusive(c->serial, d.cell), true};
    case OpKind::StoreExclusive:
      return {0, memory_.store_exclusive(c->serial, d.cell, d.a)};
    case OpKind::CompareExchange: {
      auto r = memory_.compare_exchange(d.cell, d.a, d.b);
      return {r.observed, r.ok};
    }
    case OpKind::Mask: {
      if (discipline_ == Discipline::Free) throw SimFault("masking has no meaning for free threads");
      auto level = static_cast<MaskLevel>(d.a);
      ++c->masks[static_cast<std::size_t>(level)];
      ledger_.open(level, static_cast<MaskOrigin>(d.b));
      return {};
    }
    case OpKind::Unmask: {
      auto level = static_cast<MaskLevel>(d.a);
      auto& depth = c->masks[static_cast<std::size_t>(level)];
      if (depth == 0) throw SimFault("unmask without mask in context '" + c->name + "'");
      --depth;
      ledger_.close(level);
      return {};
    }
    case OpKind::AssertSwi:
      if (swi_ < 0) throw SimFault("no software interrupt configured");
      raise(swi_);
      return {};
    case OpKind::Compute:
      ledger_.advance(d.a);
      return {};
    case OpKind::WaitDispatch:
      return {};
  }
  return {};
}

}  // namespace rtoslab::sim
