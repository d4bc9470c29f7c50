#include "covertmail/crypto.hpp"

#include <algorithm>
#include <cctype>

#include "covertmail/codec.hpp"
#include "covertmail/error.hpp"

namespace covertmail::crypto {

using mime::ContentType;
using mime::HeaderField;
using mime::MimeEntity;

namespace {

std::string join_recipients(const std::vector<KeyRef>& recipients) {
  std::string out;
  for (const auto& r : recipients) {
    if (!out.empty()) out.push_back(',');
    out += r.id();
  }
  return out;
}

std::string build_payload(std::string_view magic, const std::vector<KeyRef>& recipients,
                          std::string_view plaintext) {
  std::string out(magic);
  out += join_recipients(recipients);
  out.push_back('\0');
  out.append(plaintext);
  return out;
}

struct Payload {
  std::vector<KeyRef> recipients;
  std::string plaintext;
};

Payload open_payload(std::string_view payload, std::string_view magic) {
  if (!payload.starts_with(magic))
    throw Error(ErrorCode::CorruptPayload, "ciphertext payload lacks the mock magic prefix");
  payload.remove_prefix(magic.size());
  std::size_t nul = payload.find('\0');
  if (nul == std::string_view::npos)
    throw Error(ErrorCode::CorruptPayload, "ciphertext payload lacks the recipient separator");

  Payload out;
  std::string_view list = payload.substr(0, nul);
  while (!list.empty()) {
    std::size_t comma = list.find(',');
    std::string_view id = list.substr(0, comma);
    if (!KeyRef::is_valid(id))
      throw Error(ErrorCode::CorruptPayload, "ciphertext payload has a malformed recipient");
    out.recipients.emplace_back(std::string(id));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.recipients.empty())
    throw Error(ErrorCode::CorruptPayload, "ciphertext payload has no recipients");
  out.plaintext = std::string(payload.substr(nul + 1));
  return out;
}

std::string armor_payload(std::string_view armor_text) {
  auto blocks = find_armor_blocks(armor_text);
  if (blocks.empty()) {
    if (armor_text.find(kArmorBegin) != std::string_view::npos)
      throw Error(ErrorCode::CorruptPayload, "armor block has no end marker");
    throw Error(ErrorCode::NotCiphertext, "no PGP armor block found");
  }
  std::string_view block = armor_text.substr(blocks.front().offset, blocks.front().length);
  block.remove_prefix(kArmorBegin.size());
  block.remove_suffix(kArmorEnd.size());
  try {
    return codec::base64_decode(block);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptPayload, std::string("armor payload: ") + e.what());
  }
}

std::string plaintext_for(const Payload& p, const Keyring& keyring) {
  bool match = std::any_of(p.recipients.begin(), p.recipients.end(),
                           [&](const KeyRef& r) { return keyring.contains(r); });
  if (!match) throw Error(ErrorCode::NoMatchingKey, "keyring holds none of the recipients");
  return p.plaintext;
}

const MimeEntity* pgp_mime_payload_part(const MimeEntity& e) {
  for (const auto& c : e.children()) {
    if (!c.is_multipart() && c.content_type().is("application", "octet-stream")) return &c;
  }
  return nullptr;
}

CipherEnvelope envelope_of(const MimeEntity& entity) {
  auto hit = mime::encrypted_node(entity);
  if (!hit) throw Error(ErrorCode::NotCiphertext, "entity is not a recognised ciphertext");

  CipherEnvelope env{hit->scheme, {}, {}};
  Payload p;
  switch (hit->scheme) {
    case Scheme::SmimeEnveloped:
      p = open_payload(entity.content(), kSmimeMagic);
      break;
    case Scheme::PgpMime: {
      const MimeEntity* part = pgp_mime_payload_part(entity);
      if (!part) throw Error(ErrorCode::CorruptPayload, "multipart/encrypted without payload part");
      p = open_payload(armor_payload(part->content()), kPgpMagic);
      break;
    }
    case Scheme::PgpInline:
      p = open_payload(armor_payload(entity.content()), kPgpMagic);
      break;
  }
  env.recipients = std::move(p.recipients);
  env.plaintext = std::move(p.plaintext);
  return env;
}

const std::vector<std::string_view> kEnvelopeHeaders = {
    "From", "To", "Cc", "Reply-To", "Subject", "Date", "In-Reply-To", "References"};

}  // namespace

KeyRef::KeyRef(std::string id) : id_(std::move(id)) {
  if (!is_valid(id_)) throw Error(ErrorCode::InvalidKeyRef, "invalid key id: \"" + id_ + "\"");
}

bool KeyRef::is_valid(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '@' ||
           c == '-';
  });
}

Keyring parse_keyring(std::string_view text) {
  Keyring ring;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        codec::trim(text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos));
    if (!line.empty() && line.front() != '#') ring.emplace(std::string(line));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return ring;
}

std::string_view signature_status_name(SignatureStatus s) noexcept {
  switch (s) {
    case SignatureStatus::Valid: return "valid";
    case SignatureStatus::DigestMismatch: return "digest-mismatch";
    case SignatureStatus::NotSigned: return "not-signed";
  }
  return "unknown";
}

MimeEntity MockProvider::encrypt(std::string_view plaintext, const std::vector<KeyRef>& recipients,
                                 Scheme scheme) const {
  if (recipients.empty()) throw Error(ErrorCode::EmptyRecipients, "encrypt needs at least one recipient");

  switch (scheme) {
    case Scheme::SmimeEnveloped:
      return MimeEntity::leaf(
          {{"Content-Type", "application/pkcs7-mime; smime-type=enveloped-data; name=\"smime.p7m\""},
           {"Content-Transfer-Encoding", "base64"}},
          build_payload(kSmimeMagic, recipients, plaintext));
    case Scheme::PgpMime: {
      std::vector<MimeEntity> children;
      children.push_back(
          MimeEntity::leaf({{"Content-Type", "application/pgp-encrypted"}}, "Version: 1"));
      children.push_back(MimeEntity::leaf(
          {{"Content-Type", "application/octet-stream; name=\"encrypted.asc\""},
           {"Content-Disposition", "inline; filename=\"encrypted.asc\""}},
          armor(build_payload(kPgpMagic, recipients, plaintext))));
      return MimeEntity::multipart(
          {{"Content-Type",
            "multipart/encrypted; protocol=\"application/pgp-encrypted\"; boundary=\"PGPMIME\""}},
          std::move(children));
    }
    case Scheme::PgpInline:
      return MimeEntity::leaf({{"Content-Type", "text/plain"}},
                              armor(build_payload(kPgpMagic, recipients, plaintext)));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme");
}

std::string MockProvider::decrypt(const MimeEntity& entity, const Keyring& keyring) const {
  CipherEnvelope env = envelope_of(entity);
  return plaintext_for(Payload{std::move(env.recipients), std::move(env.plaintext)}, keyring);
}

std::string MockProvider::decrypt(std::string_view armor_text, const Keyring& keyring) const {
  return plaintext_for(open_payload(armor_payload(armor_text), kPgpMagic), keyring);
}

MimeEntity MockProvider::sign(const MimeEntity& content, const KeyRef& signer) const {
  const std::string digest = codec::sha256_hex(canonicalize(mime::serialize_message(content)));

  std::string sig(kSignatureMagic);
  sig += signer.id();
  sig.push_back('\0');
  sig += digest;

  std::vector<MimeEntity> children;
  children.push_back(content);
  children.push_back(MimeEntity::leaf(
      {{"Content-Type", "application/pkcs7-signature; name=\"smime.p7s\""},
       {"Content-Transfer-Encoding", "base64"},
       {"Content-Disposition", "attachment; filename=\"smime.p7s\""}},
      std::move(sig)));

  std::vector<HeaderField> headers;
  for (auto name : kEnvelopeHeaders) {
    if (auto v = content.header(name)) headers.push_back({std::string(name), std::string(*v)});
  }
  ContentType ct;
  ct.primary = "multipart";
  ct.sub = "signed";
  ct.params = {{"protocol", "application/pkcs7-signature"},
               {"micalg", "sha-256"},
               {"boundary", mime::make_boundary(0, 0, children)}};
  headers.push_back({"Content-Type", ct.to_string()});
  return MimeEntity::multipart(std::move(headers), std::move(children));
}

Verification MockProvider::verify(const MimeEntity& entity) const {
  Verification out;
  if (!entity.is_multipart() || !entity.content_type().is("multipart", "signed")) return out;
  const auto& children = entity.children();
  if (children.size() != 2 || children[1].is_multipart()) return out;
  ContentType sct = children[1].content_type();
  if (!(sct.is("application", "pkcs7-signature") || sct.is("application", "x-pkcs7-signature")))
    return out;

  std::string_view sig = children[1].content();
  if (!sig.starts_with(kSignatureMagic)) return out;
  sig.remove_prefix(kSignatureMagic.size());
  std::size_t nul = sig.find('\0');
  if (nul == std::string_view::npos || !KeyRef::is_valid(sig.substr(0, nul))) return out;

  out.signer = KeyRef(std::string(sig.substr(0, nul)));
  out.digest = std::string(sig.substr(nul + 1));
  const std::string actual = codec::sha256_hex(canonicalize(mime::serialize_message(children[0])));
  out.status = actual == out.digest ? SignatureStatus::Valid : SignatureStatus::DigestMismatch;
  return out;
}

const Provider& mock_provider() {
  static const MockProvider provider;
  return provider;
}

MimeEntity encrypt(std::string_view plaintext, const std::vector<KeyRef>& recipients, Scheme scheme) {
  return mock_provider().encrypt(plaintext, recipients, scheme);
}

std::string decrypt(const MimeEntity& entity, const Keyring& keyring) {
  return mock_provider().decrypt(entity, keyring);
}

std::string decrypt(std::string_view armor_text, const Keyring& keyring) {
  return mock_provider().decrypt(armor_text, keyring);
}

MimeEntity sign(const MimeEntity& content, const KeyRef& signer) {
  return mock_provider().sign(content, signer);
}

MimeEntity sign(std::string_view content, const KeyRef& signer) {
  return mock_provider().sign(mime::parse_message(content), signer);
}

Verification verify(const MimeEntity& entity) { return mock_provider().verify(entity); }

CipherEnvelope open_envelope(const MimeEntity& entity) { return envelope_of(entity); }

std::string armor(std::string_view payload) {
  std::string out(kArmorBegin);
  out += "\r\n";
  out += codec::base64_wrapped(payload);
  out += "\r\n";
  out += kArmorEnd;
  return out;
}

std::vector<ArmorBlock> find_armor_blocks(std::string_view text) {
  std::vector<ArmorBlock> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t begin = text.find(kArmorBegin, pos);
    if (begin == std::string_view::npos) break;
    std::size_t end = text.find(kArmorEnd, begin + kArmorBegin.size());
    if (end == std::string_view::npos) break;
    // A second BEGIN before the END means the first block is unterminated.
    std::size_t again = text.find(kArmorBegin, begin + kArmorBegin.size());
    if (again != std::string_view::npos && again < end) {
      pos = again;
      continue;
    }
    out.push_back({begin, end + kArmorEnd.size() - begin});
    pos = end + kArmorEnd.size();
  }
  return out;
}

std::string canonicalize(std::string_view bytes) { return codec::normalize_crlf(bytes); }

}  // namespace covertmail::crypto
