#include "rtoslab/io/fingerprint.hpp"

#include <cstdint>
#include <cstdio>

namespace rtoslab::io {

std::string fingerprint(const nlohmann::json& config) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rtoslab::io
