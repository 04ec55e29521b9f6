#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace kz {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  NegativeWeight,
  OutOfGrid,
  Truncated,
  Corrupt,
  HeaderMismatch,
  Precondition,
  Capacity,
  Io,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::uint64_t> bit_offset = std::nullopt)
      : std::runtime_error(what), code_(code), bit_offset_(bit_offset) {}

  ErrorCode code() const { return code_; }
  // Set for decode failures: position in the bit stream where reading stopped.
  std::optional<std::uint64_t> bit_offset() const { return bit_offset_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> bit_offset_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::NegativeWeight: return "negative_weight";
    case ErrorCode::OutOfGrid: return "out_of_grid";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::Corrupt: return "corrupt";
    case ErrorCode::HeaderMismatch: return "header_mismatch";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Capacity: return "capacity";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace kz
