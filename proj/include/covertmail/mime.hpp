#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace covertmail {

// Encryption flavors recognised in a MIME tree.
enum class Scheme { SmimeEnveloped, PgpMime, PgpInline };

std::string_view scheme_name(Scheme s) noexcept;

inline constexpr std::string_view kArmorBegin = "-----BEGIN PGP MESSAGE-----";
inline constexpr std::string_view kArmorEnd = "-----END PGP MESSAGE-----";

namespace mime {

inline constexpr int kMaxDepth = 32;

struct HeaderField {
  std::string name;
  std::string value;

  bool operator==(const HeaderField&) const = default;
};

using ParamList = std::vector<std::pair<std::string, std::string>>;

// Splits a structured header value (`token; a=b; c="d"`) into its leading
// token and an ordered parameter list. Parameter names are lowercased.
std::pair<std::string, ParamList> parse_structured_value(std::string_view value);

struct ContentType {
  std::string primary = "text";
  std::string sub = "plain";
  ParamList params;

  static ContentType parse(std::string_view value);

  std::string mime_type() const { return primary + "/" + sub; }
  bool is(std::string_view primary_type, std::string_view sub_type) const;
  bool is_multipart() const { return primary == "multipart"; }
  bool is_text() const { return primary == "text"; }
  std::optional<std::string> param(std::string_view name) const;

  // Header value form. `boundary`, `name`, `filename` and `protocol` are always
  // quoted; other values only when they contain tspecials.
  std::string to_string() const;
};

enum class TransferEncoding { Identity, Base64 };

struct EntityPath {
  std::vector<std::size_t> indices;

  bool is_root() const { return indices.empty(); }
  EntityPath child(std::size_t i) const;
  // "/" for the root, "/1/0" otherwise (zero-based).
  std::string to_string() const;

  auto operator<=>(const EntityPath&) const = default;
};

class MimeEntity {
 public:
  struct Multipart {
    std::vector<MimeEntity> children;
    std::string preamble;
    std::string epilogue;

    bool operator==(const Multipart&) const = default;
  };

  MimeEntity() = default;

  // `content` is the decoded body; Content-Transfer-Encoding decides how it is
  // written out.
  static MimeEntity leaf(std::vector<HeaderField> headers, std::string content);
  // Throws MissingBoundary if the Content-Type is not multipart with a boundary.
  static MimeEntity multipart(std::vector<HeaderField> headers,
                              std::vector<MimeEntity> children,
                              std::string preamble = {}, std::string epilogue = {});

  const std::vector<HeaderField>& headers() const { return headers_; }
  std::optional<std::string_view> header(std::string_view name) const;
  // Replaces the first field with this name or appends a new one.
  void set_header(std::string_view name, std::string value);
  void prepend_header(std::string_view name, std::string value);
  void remove_header(std::string_view name);

  // Defaults to text/plain when no Content-Type is present.
  ContentType content_type() const;
  // Throws UnsupportedEncoding for quoted-printable and unknown encodings.
  TransferEncoding transfer_encoding() const;

  bool is_multipart() const { return std::holds_alternative<Multipart>(body_); }
  const std::string& content() const;
  void set_content(std::string content);
  const Multipart& parts() const;
  Multipart& parts();
  const std::vector<MimeEntity>& children() const { return parts().children; }

  // Throws InvalidArgument if the path does not resolve.
  const MimeEntity& at(const EntityPath& path) const;

  bool operator==(const MimeEntity&) const = default;

 private:
  std::vector<HeaderField> headers_;
  std::variant<std::string, Multipart> body_;
};

MimeEntity parse_message(std::string_view raw);
std::string serialize_message(const MimeEntity& entity);

// Decrypted payloads: parsed as an entity when they start with a header block
// carrying a Content-Type, otherwise wrapped in a text/plain leaf.
MimeEntity plaintext_entity(std::string_view plaintext);

// `=_cm_<seed>_<depth>`, suffixed with `_<n>` until it does not occur as a line
// prefix inside any of the serialized children.
std::string make_boundary(std::uint64_t seed, int depth,
                          const std::vector<MimeEntity>& children);

struct EncryptedPart {
  EntityPath path;
  Scheme scheme;
  // Number of armor blocks for PgpInline leaves, 1 otherwise.
  std::size_t multiplicity = 1;

  bool operator==(const EncryptedPart&) const = default;
};

// Depth-first document order. Does not descend into encrypted containers.
std::vector<EncryptedPart> locate_encrypted_parts(const MimeEntity& entity);

// Ciphertext detection for a single node, ignoring its descendants.
std::optional<EncryptedPart> encrypted_node(const MimeEntity& entity);

struct StructureClass {
  enum class Kind { NoEncryption, EncryptedRoot, PartiallyEncrypted };

  Kind kind = Kind::NoEncryption;
  std::vector<EncryptedPart> parts;
};

std::string_view structure_kind_name(StructureClass::Kind k) noexcept;

StructureClass classify_structure(const MimeEntity& entity);

// Indented tree listing used by the CLI.
std::string outline(const MimeEntity& entity);

}  // namespace mime
}  // namespace covertmail
