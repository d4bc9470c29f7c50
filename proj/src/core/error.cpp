#include "covertmail/error.hpp"

namespace covertmail {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MissingBoundary: return "MissingBoundary";
    case ErrorCode::UnterminatedPart: return "UnterminatedPart";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::InvalidBase64: return "InvalidBase64";
    case ErrorCode::BoundaryCollision: return "BoundaryCollision";
    case ErrorCode::EmptyRecipients: return "EmptyRecipients";
    case ErrorCode::InvalidKeyRef: return "InvalidKeyRef";
    case ErrorCode::NotCiphertext: return "NotCiphertext";
    case ErrorCode::NoMatchingKey: return "NoMatchingKey";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::IncompatibleMethod: return "IncompatibleMethod";
    case ErrorCode::InvalidCiphertext: return "InvalidCiphertext";
    case ErrorCode::EmptyCovertText: return "EmptyCovertText";
    case ErrorCode::UnknownProperty: return "UnknownProperty";
    case ErrorCode::NotSigned: return "NotSigned";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace covertmail
