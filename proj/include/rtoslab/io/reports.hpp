#pragma once

#include "json.hpp"
#include "rtoslab/bench/bench.hpp"
#include "rtoslab/hw/dma.hpp"
#include "rtoslab/hw/gpio.hpp"

namespace rtoslab::io {

nlohmann::json to_json(const hw::LossReport& r);
/// Uses the same byte keys as the DMA report so both aggregate together.
nlohmann::json to_json(const hw::GpioReport& r);
nlohmann::json to_json(const bench::Footprint& f);

/// Keys: numIsrSemphrCounts, numIsrSmphrs, isrSemaphores, tasks.
bench::FootprintConfig footprint_config_from_json(const nlohmann::json& j);

}  // namespace rtoslab::io
