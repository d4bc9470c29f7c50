#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covertmail/crypto.hpp"
#include "covertmail/mime.hpp"

// Countermeasures: a static analyzer for covert-content structure, the
// all-or-nothing decryption policy, a reply sanitizer and a signature
// coverage check.
namespace covertmail::guard {

enum class FindingKind {
  PartialEncryption,
  BlindingCss,
  ConditionalCss,
  ProprietaryConditional,
  HiddenContainerBeforeCiphertext,
  CiphertextBehindCid,
  MultipleInlineArmors,
  SignatureNotCoveringRoot,
  StyleRetainedInReply,
};

enum class Severity { Info, Medium, High };

std::string_view finding_kind_name(FindingKind k) noexcept;
std::string_view severity_name(Severity s) noexcept;
Severity default_severity(FindingKind k) noexcept;

inline constexpr std::size_t kMaxEvidence = 200;

struct Finding {
  FindingKind kind;
  Severity severity;
  mime::EntityPath path;
  std::string evidence;  // at most kMaxEvidence bytes

  bool operator==(const Finding&) const = default;
};

struct PolicyConfig {
  enum class Mode { Strict, Audit };
  Mode mode = Mode::Strict;
  // Findings at or above this severity reject in strict mode.
  Severity reject_at = Severity::High;
};

// `mode=strict|audit`, `reject_severity=info|medium|high`, `#` comments.
// Throws InvalidPolicy.
PolicyConfig parse_policy(std::string_view text);

struct PolicyDecision {
  bool accept = true;
  std::vector<Finding> reasons;
};

// Findings sorted by (path, kind). Never decrypts.
std::vector<Finding> analyze(const mime::MimeEntity& message);

// Applies `policy` to a finding list.
PolicyDecision decide(std::vector<Finding> findings, const PolicyConfig& policy);

// Rejects any message that mixes ciphertext with other parts.
PolicyDecision enforce_all_or_nothing(const mime::MimeEntity& message,
                                      const PolicyConfig& policy = {});

inline constexpr std::string_view kOmittedMarker = "[undecrypted part omitted]";

// Plain-text quote. Only a wholly encrypted root is decrypted; every other
// ciphertext is replaced by kOmittedMarker and cid references are not
// followed.
std::string sanitize_for_reply(const mime::MimeEntity& message, const crypto::Keyring& keyring);

// Extra verifier, e.g. for protected headers. A returned finding rejects.
using CoverageHook = std::function<std::optional<Finding>(const mime::MimeEntity&)>;

// Accepts only a valid multipart/signed root with no nested signature layers.
PolicyDecision check_signature_coverage(const mime::MimeEntity& message,
                                        const CoverageHook& hook = {});

}  // namespace covertmail::guard
