#include "rtoslab/io/reports.hpp"

#include "rtoslab/io/scenario_io.hpp"

namespace rtoslab::io {

nlohmann::json to_json(const hw::LossReport& r) {
  return {{"framesInjected", r.frames_injected},
          {"framesRecovered", r.frames_recovered},
          {"injectedBytes", r.injected_bytes},
          {"recoveredBytes", r.recovered_bytes},
          {"lost", r.lost},
          {"overruns", r.overruns},
          {"interrupts", r.interrupts},
          {"handshakes", r.handshakes},
          {"tornWrites", r.torn_writes},
          {"intact", r.intact},
          {"finishedAt", r.finished_at},
          {"resources", r.resources}};
}

nlohmann::json to_json(const hw::GpioReport& r) {
  return {{"injectedBytes", r.injected},
          {"recoveredBytes", r.received},
          {"lost", r.lost},
          {"gives", r.gives},
          {"maxGiveDelay", r.max_give_delay},
          {"gpioLines", r.gpio_lines},
          {"resources", r.resources}};
}

nlohmann::json to_json(const bench::Footprint& f) {
  return {{"architecture", f.arch},       {"bytes", f.bytes},
          {"formula", f.formula},         {"staticConfig", f.static_config},
          {"dynamicConfig", f.dynamic_config}, {"latencyClass", f.latency_class}};
}

bench::FootprintConfig footprint_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  bench::FootprintConfig c;
  auto get = [&](const char* key, int def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() > (1 << 20)) {
      throw SchemaError(std::string("$.") + key, "expected a non-negative integer");
    }
    return v.get<int>();
  };
  for (const auto& [k, v] : j.items()) {
    if (k != "numIsrSemphrCounts" && k != "numIsrSmphrs" && k != "isrSemaphores" && k != "tasks")
      throw SchemaError("$." + k, "unknown key");
  }
  c.statics.num_isr_semphr_counts = get("numIsrSemphrCounts", c.statics.num_isr_semphr_counts);
  c.statics.num_isr_smphrs = get("numIsrSmphrs", c.statics.num_isr_smphrs);
  c.isr_semaphores = get("isrSemaphores", c.isr_semaphores);
  c.tasks = get("tasks", c.tasks);
  return c;
}

}  // namespace rtoslab::io
