#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace numarck {

enum class ErrorCode {
  invalid_argument,
  degenerate_input,
  out_of_range,
  io,
  bad_magic,
  version_mismatch,
  truncated,
  invariant_violation,
  corrupt_block,
  internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace numarck
