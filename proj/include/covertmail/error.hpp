#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covertmail {

enum class ErrorCode {
  // mime
  MalformedHeader = 1,
  MissingBoundary,
  UnterminatedPart,
  DepthExceeded,
  UnsupportedEncoding,
  InvalidBase64,
  BoundaryCollision,
  // crypto
  EmptyRecipients,
  InvalidKeyRef,
  NotCiphertext,
  NoMatchingKey,
  CorruptPayload,
  // forge
  IncompatibleMethod,
  InvalidCiphertext,
  EmptyCovertText,
  UnknownProperty,
  // simulate / guard
  NotSigned,
  InvalidProfile,
  InvalidPolicy,
  // general
  InvalidArgument,
  Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace covertmail
