#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covertmail/crypto.hpp"
#include "covertmail/html_css.hpp"
#include "covertmail/mime.hpp"

// Behavioral model of an email client: how it displays a (partially)
// encrypted message and what it puts into a reply.
namespace covertmail::client {

enum class Verdict { NoLeak, MergedLeak, HiddenLeak };

// "no-leak", "merged-leak", "hidden-leak".
std::string_view verdict_name(Verdict v) noexcept;
// ○ ◐ ●
std::string_view verdict_symbol(Verdict v) noexcept;
Verdict parse_verdict(std::string_view text);

struct ClientProfile {
  std::string name;
  std::string description;
  bool merges_parts = true;
  bool decrypts_subparts = true;
  bool resolves_cid = true;
  bool html_view = true;
  bool html_reply = true;
  bool keeps_internal_styles_in_reply = true;
  bool inlines_styles_in_reply = false;
  // Builds the quote with the guard sanitizer instead of the rendered view.
  bool quote_sanitized = false;
  html::DeviceProfile device;
  std::string quote_prefix = "> ";
  std::string attribution_line = "On <date>, <from> wrote:";
  // Declared outcome per hiding method name; "default" applies to the rest.
  std::map<std::string, Verdict> expectations;

  std::optional<Verdict> expected_verdict(std::string_view method) const;
  // Throws InvalidProfile.
  void validate() const;
};

// `key=value` lines, `#` comments, optional double quotes around values.
// Throws InvalidProfile.
ClientProfile parse_profile(std::string_view text);
std::string format_profile(const ClientProfile& profile);

struct QuoteSource {
  mime::EntityPath path;
  bool html = false;
  std::string content;
};

inline constexpr std::string_view kDecryptFailedPlaceholder = "[unable to decrypt this part]";

struct RenderedDocument {
  // What the user sees, whitespace-collapsed.
  std::string visible;
  // Displayed parts in order, after decryption.
  std::vector<QuoteSource> parts;
  // Merged HTML source handed to the layout step.
  std::string merged_html;
  // Merged DOM with cid content attached to referencing elements.
  html::DomNode dom;
  // Plain-text conversion used for non-HTML replies.
  std::string text_quote;
  std::vector<mime::EntityPath> decrypted_paths;
  std::vector<std::string> errors;
};

RenderedDocument render(const mime::MimeEntity& message, const ClientProfile& profile,
                        const crypto::Keyring& keyring);

struct ReplyOptions {
  std::string date = "01/05/19 08:27";
  // Encrypt the reply to its recipient when their key is in `recipient_keys`.
  bool reencrypt = false;
  Scheme reencrypt_scheme = Scheme::PgpMime;
  crypto::Keyring recipient_keys;
};

struct ReplyOutcome {
  mime::MimeEntity message;
  RenderedDocument rendered;
  bool encrypted = false;
  // Re-encryption was requested but no key for the recipient was available.
  bool reencryption_skipped = false;
};

ReplyOutcome compose_reply(const mime::MimeEntity& message, const ClientProfile& profile,
                           const crypto::Keyring& keyring, std::string_view reply_body,
                           const ReplyOptions& options = {});

mime::MimeEntity reply(const mime::MimeEntity& message, const ClientProfile& profile,
                       const crypto::Keyring& keyring, std::string_view reply_body,
                       const ReplyOptions& options = {});

struct SecretResult {
  bool leaked_in_reply = false;
  bool visible_to_victim = false;
};

struct LeakReport {
  std::vector<SecretResult> secrets;
  Verdict verdict = Verdict::NoLeak;
  bool reply_encrypted = false;
  bool reencryption_skipped = false;
  std::string reply_text;
  RenderedDocument rendered;
};

// `attacker_keys` decrypts a re-encrypted reply before searching it.
LeakReport leak_check(const mime::MimeEntity& message, const std::vector<std::string>& secrets,
                      const ClientProfile& profile, const crypto::Keyring& keyring,
                      std::string_view reply_body, const ReplyOptions& options = {},
                      const crypto::Keyring& attacker_keys = {});

// A reply signed by `signer`; re-encryption is not applied.
mime::MimeEntity sign_reply(const mime::MimeEntity& message, const ClientProfile& profile,
                            const crypto::Keyring& keyring, const crypto::KeyRef& signer,
                            std::string_view reply_body, const ReplyOptions& options = {});

struct DivergenceResult {
  crypto::SignatureStatus status;
  std::optional<crypto::KeyRef> signer;
  std::vector<std::pair<std::string, std::string>> views;  // profile name, visible text
  bool diverges = false;
};

// Throws NotSigned when `signed_message` carries no signature.
DivergenceResult divergence_check(const mime::MimeEntity& signed_message,
                                  const std::vector<ClientProfile>& profiles);

// Plaintexts of every ciphertext in `message` that `keyring` opens, one per
// envelope or armor block, in document order.
std::vector<std::string> embedded_secrets(const mime::MimeEntity& message,
                                          const crypto::Keyring& keyring);

// Display name of a From value, or the bare address.
std::string display_name(std::string_view from);
std::string bare_address(std::string_view addr);

}  // namespace covertmail::client
