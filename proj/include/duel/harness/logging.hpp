// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace duel::harness {

/// Points the default spdlog logger at stderr with the level taken from
/// DUEL_ALIGN_LOG_LEVEL (error, warn, info, debug; default warn). Unknown
/// values fall back to the default with a warning.
void configure_logging();

/// Same, from an explicit level name. Returns false for an unknown name.
bool set_log_level(std::string_view level);

}  // namespace duel::harness
