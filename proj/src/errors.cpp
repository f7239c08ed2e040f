#include "sbhd/errors.hpp"

#include <filesystem>

namespace sbhd {

ExitCode exit_code(const std::exception& e) {
  if (dynamic_cast<const DomainError*>(&e)) return ExitCode::kDomain;
  if (dynamic_cast<const IoError*>(&e)) return ExitCode::kIo;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return ExitCode::kIo;
  return ExitCode::kBadInput;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const StructuralError*>(&e)) return "structural";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return "io";
  return "input";
}

}  // namespace sbhd
