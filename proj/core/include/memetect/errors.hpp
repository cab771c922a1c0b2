#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memetect {

// Machine-readable error categories. The CLI maps these onto exit codes and the
// HTTP service onto status codes, so keep the set small and stable.
enum class ErrorCode {
  InvalidInput,         // malformed files, manifests, arguments
  DecodeFailed,         // image bytes could not be decoded
  PayloadTooLarge,
  BackendMissing,       // text-extraction backend not available
  ContractViolation,    // operation called outside its precondition
  NothingLeft,          // crop would remove (nearly) everything
  InsufficientFeatures, // image too small for keypoint matching
  ProviderUnavailable,  // search provider network failure / quota
  FormatVersion,        // persisted file written by another format version
  NotFound,
  Conflict,
  InvalidState,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace memetect
