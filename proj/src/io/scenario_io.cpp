#include "rtoslab/io/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "rtoslab/hw/dma.hpp"

namespace rtoslab::io {

namespace {

using sim::Cycles;
using sim::Word;

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Object view that rejects keys outside `allowed` and tracks value paths.
class Obj {
 public:
  Obj(const json& j, std::string path, std::initializer_list<const char*> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw SchemaError(path_, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
      if (!ok.count(k)) throw SchemaError(sub(k), "unknown key");
    }
  }

  std::string sub(const std::string& k) const { return path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) const {
    if (!j_.contains(k)) throw SchemaError(sub(k), "required key missing");
    return j_.at(k);
  }

  std::string str(const std::string& k) const {
    const auto& v = at(k);
    if (!v.is_string()) throw SchemaError(sub(k), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }

  std::int64_t integer(const std::string& k, std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) const {
    const auto& v = at(k);
    if (!v.is_number_integer()) throw SchemaError(sub(k), "expected an integer");
    auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
      throw SchemaError(sub(k), "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return x;
  }
  std::int64_t integer(const std::string& k, std::int64_t def, std::int64_t lo, std::int64_t hi) const {
    return has(k) ? integer(k, lo, hi) : def;
  }

  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_boolean()) throw SchemaError(sub(k), "expected a boolean");
    return v.get<bool>();
  }

  const json& array(const std::string& k) const {
    const auto& v = at(k);
    if (!v.is_array()) throw SchemaError(sub(k), "expected an array");
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

template <class E>
E pick(const std::string& path, const std::string& v, const std::map<std::string, E>& options) {
  auto it = options.find(v);
  if (it != options.end()) return it->second;
  std::string list;
  for (const auto& [k, _] : options) list += (list.empty() ? "" : ", ") + k;
  throw SchemaError(path, "unknown value '" + v + "' (expected one of: " + list + ")");
}

const std::map<std::string, kernel::Mutant> kMutants = {
    {"none", kernel::Mutant::None},
    {"non-atomic-fifo-insert", kernel::Mutant::NonAtomicFifoInsert},
    {"no-head-touch", kernel::Mutant::NoHeadTouch},
    {"conditional-swi", kernel::Mutant::ConditionalSwi},
};
const std::map<std::string, sim::ReservationMode> kReservations = {
    {"cleared-on-preemption", sim::ReservationMode::ClearedOnPreemption},
    {"survives-preemption", sim::ReservationMode::SurvivesPreemption},
};
const std::map<std::string, kernel::AtomicFlavor> kFlavors = {
    {"load-store-exclusive", kernel::AtomicFlavor::LoadStoreExclusive},
    {"compare-exchange", kernel::AtomicFlavor::CompareExchange},
};
const std::map<std::string, kernel::ReadyListKind> kReadyKinds = {
    {"sorted-plain", kernel::ReadyListKind::SortedPlain},
    {"sorted-atomic", kernel::ReadyListKind::SortedAtomic},
    {"unsorted", kernel::ReadyListKind::Unsorted},
};
const std::map<std::string, scenario::Check> kChecks = {
    {"structure", scenario::Check::Structure},
    {"oracle", scenario::Check::Oracle},
    {"give-order", scenario::Check::GiveOrder},
    {"final", scenario::Check::Final},
    {"no-peripheral-mask", scenario::Check::NoPeripheralMask},
};
const std::map<std::string, kernel::InitialTask::Kind> kStarts = {
    {"ready", kernel::InitialTask::Kind::Ready},
    {"blocked", kernel::InitialTask::Kind::Blocked},
    {"delayed", kernel::InitialTask::Kind::Delayed},
    {"dormant", kernel::InitialTask::Kind::Dormant},
};

int sem_ref(const json& v, const std::string& path, const std::vector<scenario::SemSpec>& sems) {
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0 || i >= static_cast<std::int64_t>(sems.size())) throw SchemaError(path, "semaphore index out of range");
    return static_cast<int>(i);
  }
  if (v.is_string()) {
    auto name = v.get<std::string>();
    for (std::size_t i = 0; i < sems.size(); ++i) {
      if (sems[i].name == name) return static_cast<int>(i);
    }
    throw SchemaError(path, "unknown semaphore '" + name + "'");
  }
  throw SchemaError(path, "expected a semaphore name or index");
}

std::vector<int> int_list(const json& a, const std::string& path, int lo, int hi) {
  std::vector<int> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number_integer()) throw SchemaError(idx(path, i), "expected an integer");
    auto x = a[i].get<std::int64_t>();
    if (x < lo || x > hi) throw SchemaError(idx(path, i), "out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

void parse_kernel(const Obj& o, ScenarioFile& sc) {
  auto& sys = sc.system;
  if (o.has("semaphores")) {
    const auto& a = o.array("semaphores");
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto p = idx(o.sub("semaphores"), i);
      Obj s(a[i], p, {"name", "maxCount", "initial", "isrReleased"});
      scenario::SemSpec sem;
      sem.name = s.str("name", "sem" + std::to_string(i));
      sem.max_count = static_cast<Word>(s.integer("maxCount", 1, 1, 1 << 20));
      sem.initial = static_cast<Word>(s.integer("initial", 0, 0, 1 << 20));
      sem.isr_released = s.boolean("isrReleased", false);
      sys.sems.push_back(sem);
    }
  }
  if (o.has("tasks")) {
    const auto& a = o.array("tasks");
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto p = idx(o.sub("tasks"), i);
      Obj t(a[i], p, {"name", "priority", "start", "startSemaphore", "startTimeout", "script"});
      scenario::TaskSpec task;
      task.name = t.str("name", "task" + std::to_string(i));
      task.priority = static_cast<int>(t.integer("priority", 0, 255));
      task.start = pick(t.sub("start"), t.str("start", "ready"), kStarts);
      if (t.has("startSemaphore")) task.start_sem = sem_ref(t.at("startSemaphore"), t.sub("startSemaphore"), sys.sems);
      if (t.has("startTimeout")) task.start_timeout = static_cast<Word>(t.integer("startTimeout", 1, 1 << 20));
      if (t.has("script")) {
        const auto& sa = t.array("script");
        for (std::size_t k = 0; k < sa.size(); ++k) {
          auto sp = idx(t.sub("script"), k);
          Obj st(sa[k], sp, {"op", "semaphore", "timeout", "cycles", "ticks"});
          scenario::TaskAction act;
          auto op = st.str("op");
          if (op == "take") {
            act.kind = scenario::TaskAction::Kind::Take;
            act.sem = sem_ref(st.at("semaphore"), st.sub("semaphore"), sys.sems);
            if (st.has("timeout")) act.timeout = static_cast<Word>(st.integer("timeout", 1, 1 << 20));
          } else if (op == "give") {
            act.kind = scenario::TaskAction::Kind::Give;
            act.sem = sem_ref(st.at("semaphore"), st.sub("semaphore"), sys.sems);
          } else if (op == "compute") {
            act.kind = scenario::TaskAction::Kind::Compute;
            act.amount = static_cast<Word>(st.integer("cycles", 0, 1 << 30));
          } else if (op == "delay") {
            act.kind = scenario::TaskAction::Kind::Delay;
            act.amount = static_cast<Word>(st.integer("ticks", 1, 1 << 20));
          } else if (op == "exit") {
            act.kind = scenario::TaskAction::Kind::Exit;
          } else {
            throw SchemaError(st.sub("op"), "unknown op '" + op + "' (expected take, give, compute, delay, exit)");
          }
          task.script.push_back(act);
        }
      }
      sys.tasks.push_back(std::move(task));
    }
  }
  if (o.has("isrs")) {
    const auto& a = o.array("isrs");
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto p = idx(o.sub("isrs"), i);
      Obj r(a[i], p, {"name", "priority", "aboveCeiling", "compute", "gives", "raises", "at", "raiseAt"});
      scenario::IsrSpec isr;
      isr.name = r.str("name", "isr" + std::to_string(i));
      isr.priority = static_cast<int>(r.integer("priority", 0, 255));
      isr.above_ceiling = r.boolean("aboveCeiling", false);
      isr.compute = static_cast<Word>(r.integer("compute", 0, 0, 1 << 30));
      if (r.has("gives")) {
        const auto& g = r.array("gives");
        for (std::size_t k = 0; k < g.size(); ++k) isr.gives.push_back(sem_ref(g[k], idx(r.sub("gives"), k), sys.sems));
      }
      isr.raises = static_cast<int>(r.integer("raises", 1, 0, 16));
      if (r.has("at")) {
        for (int x : int_list(r.array("at"), r.sub("at"), 0, std::numeric_limits<int>::max())) isr.at.push_back(static_cast<Cycles>(x));
      }
      isr.raise_at = pick(r.sub("raiseAt"), r.str("raiseAt", "anywhere"),
                          std::map<std::string, scenario::RaiseAt>{{"anywhere", scenario::RaiseAt::Anywhere},
                                                                   {"task-level", scenario::RaiseAt::TaskLevel}});
      sys.isrs.push_back(std::move(isr));
    }
  }
  if (o.has("sysTick")) {
    Obj s(o.at("sysTick"), o.sub("sysTick"), {"raises", "periodic"});
    sys.systick_raises = static_cast<int>(s.integer("raises", 0, 0, 16));
    sys.periodic_systick = s.boolean("periodic", false);
  }
  if (o.has("invariants")) {
    const auto& a = o.array("invariants");
    sys.checks.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_string()) throw SchemaError(idx(o.sub("invariants"), i), "expected a string");
      sys.checks.push_back(pick(idx(o.sub("invariants"), i), a[i].get<std::string>(), kChecks));
    }
  }
  if (o.has("statics")) {
    Obj s(o.at("statics"), o.sub("statics"), {"numIsrSemphrCounts", "numIsrSmphrs", "semaphoreBudget"});
    sys.statics.num_isr_semphr_counts = static_cast<int>(s.integer("numIsrSemphrCounts", sys.statics.num_isr_semphr_counts, 1, 1 << 16));
    sys.statics.num_isr_smphrs = static_cast<int>(s.integer("numIsrSmphrs", sys.statics.num_isr_smphrs, 1, 1 << 16));
    sys.statics.semaphore_budget = static_cast<int>(s.integer("semaphoreBudget", sys.statics.semaphore_budget, 1, 1 << 16));
  }
  sys.reservation = pick(o.sub("reservation"), o.str("reservation", "cleared-on-preemption"), kReservations);

  // Architecture list.
  if (!o.has("architecture")) throw SchemaError(o.sub("architecture"), "required key missing");
  const auto& av = o.at("architecture");
  std::vector<std::string> ids;
  if (av.is_string() && av.get<std::string>() == "all") {
    ids = kernel::all_arch_ids();
  } else if (av.is_string()) {
    ids.push_back(av.get<std::string>());
  } else if (av.is_array()) {
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (!av[i].is_string()) throw SchemaError(idx(o.sub("architecture"), i), "expected an architecture id");
      ids.push_back(av[i].get<std::string>());
    }
  } else {
    throw SchemaError(o.sub("architecture"), "expected an architecture id, a list of ids or \"all\"");
  }
  if (ids.empty()) throw SchemaError(o.sub("architecture"), "no architecture given");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!kernel::parse_arch(ids[i])) {
      throw SchemaError(av.is_array() ? idx(o.sub("architecture"), i) : o.sub("architecture"),
                        "unknown architecture '" + ids[i] + "'");
    }
  }
  sc.architectures = ids;
}

void parse_ready_list(const Obj& o, ScenarioFile& sc) {
  Obj r(o.at("readyList"), o.sub("readyList"), {"variant", "kTails", "priorities", "initial", "inserters", "extractions"});
  auto& rl = sc.ready_list;
  rl.name = sc.name;
  auto variant = r.str("variant", "sorted-atomic");
  rl.kind = pick(r.sub("variant"), variant, kReadyKinds);
  rl.k_tails = static_cast<int>(r.integer("kTails", 1, 1, 8));
  rl.priorities = int_list(r.array("priorities"), r.sub("priorities"), 0, 255);
  const int n = static_cast<int>(rl.priorities.size());
  if (n == 0) throw SchemaError(r.sub("priorities"), "at least one node required");
  if (r.has("initial")) rl.initial = int_list(r.array("initial"), r.sub("initial"), 0, n - 1);
  const auto& ins = r.array("inserters");
  std::set<int> used(rl.initial.begin(), rl.initial.end());
  if (used.size() != rl.initial.size()) throw SchemaError(r.sub("initial"), "node listed twice");
  for (std::size_t i = 0; i < ins.size(); ++i) {
    auto p = idx(r.sub("inserters"), i);
    Obj e(ins[i], p, {"name", "priority", "nodes"});
    explore::ReadyListScenario::Inserter in;
    in.name = e.str("name", "isr" + std::to_string(i));
    in.priority = static_cast<int>(e.integer("priority", 0, 255));
    in.nodes = int_list(e.array("nodes"), e.sub("nodes"), 0, n - 1);
    for (int x : in.nodes) {
      if (!used.insert(x).second) throw SchemaError(e.sub("nodes"), "node " + std::to_string(x) + " used twice");
    }
    rl.inserters.push_back(std::move(in));
  }
  rl.extractions = static_cast<int>(r.integer("extractions", 1, 0, 16));
  rl.mutant = pick(o.sub("mutant"), o.str("mutant", "none"), kMutants);
  rl.reservation = pick(o.sub("reservation"), o.str("reservation", "cleared-on-preemption"), kReservations);
  rl.flavor = pick(o.sub("atomicFlavor"), o.str("atomicFlavor", "load-store-exclusive"), kFlavors);
  sc.architectures = {"ready-list-" + variant};
}

void parse_dma(const Obj& o, ScenarioFile& sc) {
  Obj d(o.at("dma"), o.sub("dma"), {"bytes", "handshake", "capacity"});
  sc.dma.bytes = static_cast<std::size_t>(d.integer("bytes", 3, 1, 64));
  sc.dma.handshake = d.boolean("handshake", true);
  sc.dma.capacity = static_cast<std::size_t>(d.integer("capacity", 16, 2, 1 << 16));
  sc.architectures = {sc.dma.handshake ? "dma-pause-handshake" : "dma-no-handshake"};
}

}  // namespace

json cost_model_to_json(const sim::CostModel& c) {
  return json{{"primitive", c.primitive},
              {"loopIteration", c.loop_iteration},
              {"kernelBody", c.kernel_body},
              {"interruptLatency", c.interrupt_latency},
              {"systickQuantum", c.systick_quantum}};
}

sim::CostModel cost_model_from_json(const json& j, const std::string& path) {
  Obj o(j, path, {"primitive", "loopIteration", "kernelBody", "interruptLatency", "systickQuantum"});
  sim::CostModel c;
  constexpr std::int64_t hi = 1 << 30;
  c.primitive = static_cast<Cycles>(o.integer("primitive", static_cast<std::int64_t>(c.primitive), 0, hi));
  c.loop_iteration = static_cast<Cycles>(o.integer("loopIteration", static_cast<std::int64_t>(c.loop_iteration), 0, hi));
  c.kernel_body = static_cast<Cycles>(o.integer("kernelBody", static_cast<std::int64_t>(c.kernel_body), 0, hi));
  c.interrupt_latency =
      static_cast<Cycles>(o.integer("interruptLatency", static_cast<std::int64_t>(c.interrupt_latency), 0, hi));
  c.systick_quantum = static_cast<Cycles>(o.integer("systickQuantum", static_cast<std::int64_t>(c.systick_quantum), 1, hi));
  return c;
}

ScenarioFile parse_scenario(const json& j) {
  Obj o(j, "$",
        {"schema", "name", "description", "kind", "architecture", "costModel", "semaphores", "tasks", "isrs", "sysTick",
         "stepBound", "invariants", "expect", "expectInvariant", "mutant", "reservation", "atomicFlavor", "statics",
         "readyList", "dma"});
  auto schema = o.str("schema", kScenarioSchema);
  if (schema != kScenarioSchema) throw SchemaError(o.sub("schema"), "unsupported schema '" + schema + "'");

  ScenarioFile sc;
  sc.source = j;
  sc.name = o.str("name", "unnamed");
  sc.system.name = sc.name;
  sc.kind = pick(o.sub("kind"), o.str("kind", "kernel"),
                 std::map<std::string, ScenarioKind>{{"kernel", ScenarioKind::Kernel},
                                                     {"ready-list", ScenarioKind::ReadyList},
                                                     {"dma-handshake", ScenarioKind::DmaHandshake}});
  if (o.has("costModel")) sc.system.cost = cost_model_from_json(o.at("costModel"), o.sub("costModel"));
  sc.step_bound = static_cast<std::uint64_t>(o.integer("stepBound", 400, 1, 1'000'000));
  auto expect = o.str("expect", "pass");
  if (expect != "pass" && expect != "violation") throw SchemaError(o.sub("expect"), "expected \"pass\" or \"violation\"");
  sc.expect_violation = expect == "violation";
  if (o.has("expectInvariant")) sc.expect_invariant = o.str("expectInvariant");

  auto only = [&](ScenarioKind k, std::initializer_list<const char*> keys) {
    if (sc.kind == k) return;
    for (const char* key : keys) {
      if (o.has(key)) throw SchemaError(o.sub(key), "not valid for this scenario kind");
    }
  };
  only(ScenarioKind::Kernel, {"architecture", "semaphores", "tasks", "isrs", "sysTick", "invariants", "statics"});
  only(ScenarioKind::ReadyList, {"readyList", "atomicFlavor"});
  only(ScenarioKind::DmaHandshake, {"dma"});

  switch (sc.kind) {
    case ScenarioKind::Kernel:
      parse_kernel(o, sc);
      if (o.has("mutant")) pick(o.sub("mutant"), o.str("mutant"), kMutants);
      try {
        for (const auto& id : sc.architectures) scenario::validate(system_for(sc, id));
      } catch (const kernel::ConfigError& e) {
        throw SchemaError("$", e.what());
      }
      break;
    case ScenarioKind::ReadyList:
      parse_ready_list(o, sc);
      break;
    case ScenarioKind::DmaHandshake:
      if (o.has("mutant")) throw SchemaError(o.sub("mutant"), "use dma.handshake=false for the unsafe handler");
      parse_dma(o, sc);
      break;
  }
  return sc;
}

ScenarioFile load_scenario(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw SchemaError("$", "cannot open " + p.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

scenario::SystemSpec system_for(const ScenarioFile& sc, const std::string& arch) {
  auto a = kernel::parse_arch(arch);
  if (!a) throw SchemaError("$.architecture", "unknown architecture '" + arch + "'");
  scenario::SystemSpec s = sc.system;
  s.arch = *a;
  if (sc.source.contains("mutant")) s.arch.mutant = kMutants.at(sc.source.at("mutant").get<std::string>());
  return s;
}

explore::Factory make_factory(const ScenarioFile& sc, const std::string& arch) {
  switch (sc.kind) {
    case ScenarioKind::Kernel: {
      auto spec = system_for(sc, arch);
      return [spec] { return std::make_unique<scenario::System>(spec); };
    }
    case ScenarioKind::ReadyList: {
      auto rl = sc.ready_list;
      return [rl] { return std::make_unique<explore::ReadyListSubject>(rl); };
    }
    case ScenarioKind::DmaHandshake: {
      auto d = sc.dma;
      return [d] { return std::make_unique<hw::DmaHandshakeSubject>(d.bytes, d.handshake, d.capacity); };
    }
  }
  throw std::logic_error("unreachable");
}

json trace_to_json(const explore::Trace& t, const std::string& scenario, const std::string& arch,
                   const std::string& fingerprint) {
  json choices = json::array();
  for (const auto& c : t.choices) choices.push_back(json::array({c.kind, c.arg}));
  json outcome = nullptr;
  if (t.outcome) {
    outcome = json{{"invariant", t.outcome->invariant}, {"message", t.outcome->message}, {"step", t.outcome->step}};
  }
  return json{{"schema", kTraceSchema}, {"scenario", scenario},  {"architecture", arch}, {"fingerprint", fingerprint},
              {"choices", choices},     {"labels", t.labels}, {"outcome", outcome}};
}

TraceFile trace_from_json(const json& j) {
  Obj o(j, "$", {"schema", "scenario", "architecture", "fingerprint", "choices", "labels", "outcome"});
  if (o.str("schema") != kTraceSchema) throw SchemaError(o.sub("schema"), "not a trace file");
  TraceFile t;
  t.scenario = o.str("scenario");
  t.architecture = o.str("architecture");
  t.fingerprint = o.str("fingerprint", "");
  const auto& a = o.array("choices");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& c = a[i];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
      throw SchemaError(idx(o.sub("choices"), i), "expected [kind, arg]");
    }
    t.choices.push_back({c[0].get<int>(), c[1].get<int>()});
  }
  if (o.has("outcome") && !o.at("outcome").is_null()) {
    Obj v(o.at("outcome"), o.sub("outcome"), {"invariant", "message", "step"});
    t.outcome = explore::Violation{v.str("invariant"), v.str("message", ""),
                                   static_cast<std::uint64_t>(v.integer("step", 0, std::numeric_limits<std::int64_t>::max()))};
  }
  return t;
}

json report_to_json(const explore::ExplorationReport& r) {
  json j{{"schedules", r.schedules},
         {"violatingSchedules", r.violating_schedules},
         {"maxSteps", r.max_steps},
         {"maxDepth", r.max_depth},
         {"exhaustive", r.exhaustive}};
  if (r.error) j["error"] = *r.error;
  json invs = json::object();
  for (const auto& t : r.violations) {
    if (t.outcome) invs[t.outcome->invariant] = invs.value(t.outcome->invariant, 0) + 1;
  }
  j["keptViolationsByInvariant"] = invs;
  return j;
}

}  // namespace rtoslab::io
