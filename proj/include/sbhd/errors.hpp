#pragma once

#include <stdexcept>
#include <string>

namespace sbhd {

// Error categories map one-to-one onto CLI exit codes (see exit_code()).

/// Malformed input: bad shapes, non-watertight meshes, unknown config keys.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is well formed but outside an operation's mathematical domain.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExitCode : int { kOk = 0, kBadInput = 2, kDomain = 3, kIo = 4 };

ExitCode exit_code(const std::exception& e);
std::string error_kind(const std::exception& e);

}  // namespace sbhd
