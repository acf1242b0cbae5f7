#ifndef RDC_RUNTIME_CONFIG_HPP
#define RDC_RUNTIME_CONFIG_HPP

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <string>

#include "rdc/errors.hpp"

namespace rdc {

enum class TransportKind { InProc, Proc };

struct RuntimeConfig {
  std::uint32_t places = 1;
  std::uint32_t workers = 2;  // worker threads per place
  TransportKind transport = TransportKind::InProc;
  std::chrono::milliseconds collectiveTimeout = std::chrono::milliseconds(30000);

  void validate() const {
    if (places == 0) throw ConfigError("places must be at least 1");
    if (workers == 0) throw ConfigError("workers must be at least 1");
  }

  static std::chrono::milliseconds collectiveTimeoutFromEnv() {
    if (const char* s = std::getenv("RDC_COLLECTIVE_TIMEOUT_MS")) {
      char* end = nullptr;
      long v = std::strtol(s, &end, 10);
      if (end && *end == '\0' && v > 0) return std::chrono::milliseconds(v);
    }
    return std::chrono::milliseconds(30000);
  }
};

}  // namespace rdc

#endif  // RDC_RUNTIME_CONFIG_HPP
