// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace duel {

/// Caller supplied arguments that violate an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operation invoked on an object whose state cannot serve it (e.g. empty buffer).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

/// Outcome of in-place updates that degrade to a no-op instead of throwing.
enum class UpdateStatus { Ok, SkippedEmpty };

}  // namespace duel
