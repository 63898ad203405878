// SPDX-License-Identifier: Apache-2.0
#include "duel/harness/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace duel::harness {

bool set_log_level(std::string_view level) {
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "warn") spdlog::set_level(spdlog::level::warn);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else return false;
  return true;
}

void configure_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("duelalign"));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    done = true;
  }
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("DUEL_ALIGN_LOG_LEVEL");
  if (env && !set_log_level(env))
    spdlog::warn("ignoring DUEL_ALIGN_LOG_LEVEL='{}' (expected error, warn, info or debug)", env);
}

}  // namespace duel::harness
