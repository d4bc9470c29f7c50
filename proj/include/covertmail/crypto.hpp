#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "covertmail/mime.hpp"

// Mock OpenPGP / S/MIME provider. Ciphertexts are magic-prefixed,
// NUL-separated payloads so tests can audit every byte; the Provider
// interface is where a real backend would plug in.
namespace covertmail::crypto {

// Key identifier, `[A-Za-z0-9_.@-]{1,64}`.
class KeyRef {
 public:
  explicit KeyRef(std::string id);

  const std::string& id() const noexcept { return id_; }
  static bool is_valid(std::string_view id) noexcept;

  auto operator<=>(const KeyRef&) const = default;

 private:
  std::string id_;
};

using Keyring = std::set<KeyRef>;

// One key id per line. Blank lines and lines starting with '#' are skipped.
Keyring parse_keyring(std::string_view text);

struct CipherEnvelope {
  Scheme scheme;
  std::vector<KeyRef> recipients;
  std::string plaintext;
};

enum class SignatureStatus { Valid, DigestMismatch, NotSigned };

std::string_view signature_status_name(SignatureStatus s) noexcept;

struct Verification {
  SignatureStatus status = SignatureStatus::NotSigned;
  std::optional<KeyRef> signer;
  std::string digest;  // digest carried by the signature part, if any
};

class Provider {
 public:
  virtual ~Provider() = default;

  virtual mime::MimeEntity encrypt(std::string_view plaintext,
                                   const std::vector<KeyRef>& recipients,
                                   Scheme scheme) const = 0;
  virtual std::string decrypt(const mime::MimeEntity& entity, const Keyring& keyring) const = 0;
  virtual std::string decrypt(std::string_view armor_text, const Keyring& keyring) const = 0;
  virtual mime::MimeEntity sign(const mime::MimeEntity& content, const KeyRef& signer) const = 0;
  virtual Verification verify(const mime::MimeEntity& entity) const = 0;
};

class MockProvider final : public Provider {
 public:
  mime::MimeEntity encrypt(std::string_view plaintext, const std::vector<KeyRef>& recipients,
                           Scheme scheme) const override;
  std::string decrypt(const mime::MimeEntity& entity, const Keyring& keyring) const override;
  std::string decrypt(std::string_view armor_text, const Keyring& keyring) const override;
  mime::MimeEntity sign(const mime::MimeEntity& content, const KeyRef& signer) const override;
  Verification verify(const mime::MimeEntity& entity) const override;
};

const Provider& mock_provider();

inline constexpr std::string_view kSmimeMagic{"MOCK-P7M\0", 9};
inline constexpr std::string_view kPgpMagic{"MOCK-PGP\0", 9};
inline constexpr std::string_view kSignatureMagic{"MOCK-SIG\0", 9};

// Convenience wrappers over mock_provider().
mime::MimeEntity encrypt(std::string_view plaintext, const std::vector<KeyRef>& recipients,
                         Scheme scheme);
std::string decrypt(const mime::MimeEntity& entity, const Keyring& keyring);
std::string decrypt(std::string_view armor_text, const Keyring& keyring);
mime::MimeEntity sign(const mime::MimeEntity& content, const KeyRef& signer);
// Parses `content` as a MIME entity first.
mime::MimeEntity sign(std::string_view content, const KeyRef& signer);
Verification verify(const mime::MimeEntity& entity);

// Parses a mock ciphertext without checking any keyring.
CipherEnvelope open_envelope(const mime::MimeEntity& entity);

// `-----BEGIN PGP MESSAGE-----` CRLF base64(76 cols) CRLF `-----END PGP MESSAGE-----`.
std::string armor(std::string_view payload);

struct ArmorBlock {
  std::size_t offset;
  std::size_t length;  // through the end marker
};

// Complete BEGIN..END blocks in document order. An unterminated BEGIN is not
// reported.
std::vector<ArmorBlock> find_armor_blocks(std::string_view text);

// Line endings normalised to CRLF; nothing else is touched.
std::string canonicalize(std::string_view bytes);

}  // namespace covertmail::crypto
