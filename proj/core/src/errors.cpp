#include "memetect/errors.hpp"

namespace memetect {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::DecodeFailed: return "decode_failed";
    case ErrorCode::PayloadTooLarge: return "payload_too_large";
    case ErrorCode::BackendMissing: return "backend_missing";
    case ErrorCode::ContractViolation: return "contract_violation";
    case ErrorCode::NothingLeft: return "nothing_left";
    case ErrorCode::InsufficientFeatures: return "insufficient_features";
    case ErrorCode::ProviderUnavailable: return "provider_unavailable";
    case ErrorCode::FormatVersion: return "format_version";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::InvalidState: return "invalid_state";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

}  // namespace memetect
