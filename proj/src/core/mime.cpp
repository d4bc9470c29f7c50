#include "covertmail/mime.hpp"

#include <algorithm>
#include <sstream>

#include "covertmail/codec.hpp"
#include "covertmail/error.hpp"

namespace covertmail {

std::string_view scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::SmimeEnveloped: return "smime";
    case Scheme::PgpMime: return "pgp-mime";
    case Scheme::PgpInline: return "pgp-inline";
  }
  return "unknown";
}

namespace mime {

using codec::iequals;
using codec::to_lower;
using codec::trim;

namespace {

constexpr std::string_view kCrlf = "\r\n";

bool valid_header_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x21 && u <= 0x7e && c != ':';
  });
}

bool is_tspecial(char c) {
  return std::string_view("()<>@,;:\\\"/[]?= \t").find(c) != std::string_view::npos;
}

std::string quote(std::string_view v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// True when `text` has a line starting at `pos`.
bool at_line_start(std::string_view text, std::size_t pos) {
  return pos == 0 || (pos >= 2 && text[pos - 1] == '\n' && text[pos - 2] == '\r');
}

bool has_line_prefix(std::string_view text, std::string_view prefix) {
  for (std::size_t pos = text.find(prefix); pos != std::string_view::npos;
       pos = text.find(prefix, pos + 1)) {
    if (at_line_start(text, pos)) return true;
  }
  return false;
}

struct Delimiter {
  std::size_t begin;     // offset of the leading "--"
  std::size_t next;      // offset just past the delimiter line (after CRLF)
  bool closing;
};

// Finds the next delimiter line for `boundary` at or after `from`.
std::optional<Delimiter> find_delimiter(std::string_view body, std::string_view boundary,
                                        std::size_t from) {
  const std::string dash = "--" + std::string(boundary);
  for (std::size_t pos = body.find(dash, from); pos != std::string_view::npos;
       pos = body.find(dash, pos + 1)) {
    if (!at_line_start(body, pos)) continue;
    std::size_t cur = pos + dash.size();
    bool closing = false;
    if (body.substr(cur, 2) == "--") {
      closing = true;
      cur += 2;
    }
    std::size_t eol = body.find(kCrlf, cur);
    std::string_view rest = body.substr(cur, eol == std::string_view::npos ? body.npos : eol - cur);
    if (!trim(rest).empty()) continue;
    std::size_t next = eol == std::string_view::npos ? body.size() : eol + 2;
    return Delimiter{pos, next, closing};
  }
  return std::nullopt;
}

std::vector<HeaderField> parse_header_block(std::string_view block) {
  std::vector<HeaderField> fields;
  std::size_t pos = 0;
  while (pos < block.size()) {
    std::size_t eol = block.find(kCrlf, pos);
    std::string_view line = block.substr(pos, eol == block.npos ? block.npos : eol - pos);
    pos = eol == block.npos ? block.size() : eol + 2;

    if (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
      if (fields.empty())
        throw Error(ErrorCode::MalformedHeader, "continuation line before any header");
      fields.back().value.append(line);
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos)
      throw Error(ErrorCode::MalformedHeader,
                  "header line without colon: " + std::string(line.substr(0, 80)));
    std::string_view name = line.substr(0, colon);
    if (!valid_header_name(name))
      throw Error(ErrorCode::MalformedHeader,
                  "invalid header name: " + std::string(name.substr(0, 80)));
    fields.push_back({std::string(name), std::string(line.substr(colon + 1))});
  }
  for (auto& f : fields) f.value = std::string(trim(f.value));
  return fields;
}

MimeEntity parse_entity(std::string_view text, int depth);

MimeEntity::Multipart parse_multipart_body(std::string_view body, std::string_view boundary,
                                           int depth) {
  MimeEntity::Multipart mp;
  auto first = find_delimiter(body, boundary, 0);
  if (!first)
    throw Error(ErrorCode::UnterminatedPart,
                "no delimiter for boundary \"" + std::string(boundary) + "\"");
  if (first->begin >= 2) mp.preamble = std::string(body.substr(0, first->begin - 2));

  Delimiter cur = *first;
  while (!cur.closing) {
    auto next = find_delimiter(body, boundary, cur.next);
    if (!next)
      throw Error(ErrorCode::UnterminatedPart,
                  "missing closing delimiter --" + std::string(boundary) + "--");
    std::size_t end = next->begin >= cur.next + 2 ? next->begin - 2 : cur.next;
    mp.children.push_back(parse_entity(body.substr(cur.next, end - cur.next), depth + 1));
    cur = *next;
  }
  if (cur.next < body.size()) mp.epilogue = std::string(body.substr(cur.next));
  return mp;
}

MimeEntity parse_entity(std::string_view text, int depth) {
  if (depth > kMaxDepth)
    throw Error(ErrorCode::DepthExceeded,
                "MIME nesting deeper than " + std::to_string(kMaxDepth));

  std::string_view header_block;
  std::string_view body;
  if (text.substr(0, 2) == kCrlf) {
    body = text.substr(2);
  } else {
    std::size_t split = text.find("\r\n\r\n");
    if (split == std::string_view::npos) {
      header_block = text;
    } else {
      header_block = text.substr(0, split);
      body = text.substr(split + 4);
    }
  }

  std::vector<HeaderField> headers = parse_header_block(header_block);
  MimeEntity probe = MimeEntity::leaf(headers, {});
  ContentType ct = probe.content_type();
  if (ct.is_multipart()) {
    auto boundary = ct.param("boundary");
    if (!boundary || boundary->empty())
      throw Error(ErrorCode::MissingBoundary, ct.mime_type() + " without boundary parameter");
    auto mp = parse_multipart_body(body, *boundary, depth);
    return MimeEntity::multipart(std::move(headers), std::move(mp.children),
                                 std::move(mp.preamble), std::move(mp.epilogue));
  }
  std::string content = probe.transfer_encoding() == TransferEncoding::Base64
                            ? codec::base64_decode(body)
                            : std::string(body);
  return MimeEntity::leaf(std::move(headers), std::move(content));
}

void serialize_into(std::string& out, const MimeEntity& e) {
  for (const auto& h : e.headers()) {
    out += h.name;
    out += h.value.empty() ? ":" : ": ";
    out += h.value;
    out += kCrlf;
  }
  out += kCrlf;

  if (!e.is_multipart()) {
    if (e.transfer_encoding() == TransferEncoding::Base64)
      out += codec::base64_wrapped(e.content());
    else
      out += e.content();
    return;
  }

  const std::string boundary = *e.content_type().param("boundary");
  const std::string dash = "--" + boundary;
  const auto& mp = e.parts();
  if (!mp.preamble.empty()) {
    out += mp.preamble;
    out += kCrlf;
  }
  for (const auto& child : mp.children) {
    std::string piece;
    serialize_into(piece, child);
    if (has_line_prefix(piece, dash))
      throw Error(ErrorCode::BoundaryCollision,
                  "boundary \"" + boundary + "\" occurs inside a child part");
    out += dash;
    out += kCrlf;
    out += piece;
    out += kCrlf;
  }
  out += dash;
  out += "--";
  if (!mp.epilogue.empty()) {
    out += kCrlf;
    out += mp.epilogue;
  }
}

bool is_smime_enveloped(const ContentType& ct) {
  if (!(ct.is("application", "pkcs7-mime") || ct.is("application", "x-pkcs7-mime")))
    return false;
  auto type = ct.param("smime-type");
  return type && iequals(*type, "enveloped-data");
}

bool is_pgp_mime(const ContentType& ct) {
  if (!ct.is("multipart", "encrypted")) return false;
  auto protocol = ct.param("protocol");
  return protocol && iequals(*protocol, "application/pgp-encrypted");
}

void locate_into(const MimeEntity& e, const EntityPath& path,
                 std::vector<EncryptedPart>& out) {
  if (auto hit = encrypted_node(e)) {
    hit->path = path;
    out.push_back(std::move(*hit));
    return;
  }
  if (e.is_multipart()) {
    const auto& children = e.children();
    for (std::size_t i = 0; i < children.size(); ++i) locate_into(children[i], path.child(i), out);
  }
}

void outline_into(std::ostringstream& os, const MimeEntity& e, const EntityPath& path,
                  int depth) {
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << path.to_string() << ' '
     << e.content_type().mime_type();
  if (auto cid = e.header("Content-ID")) os << " id=" << *cid;
  if (auto hit = encrypted_node(e)) {
    os << " [encrypted: " << scheme_name(hit->scheme);
    if (hit->multiplicity > 1) os << " x" << hit->multiplicity;
    os << ']';
  }
  if (e.is_multipart()) {
    os << '\n';
    const auto& children = e.children();
    for (std::size_t i = 0; i < children.size(); ++i)
      outline_into(os, children[i], path.child(i), depth + 1);
  } else {
    os << " (" << e.content().size() << " bytes)\n";
  }
}

}  // namespace

std::pair<std::string, ParamList> parse_structured_value(std::string_view value) {
  std::size_t semi = value.find(';');
  std::string head(trim(value.substr(0, semi)));
  ParamList params;
  std::size_t pos = semi == std::string_view::npos ? value.size() : semi + 1;
  while (pos < value.size()) {
    while (pos < value.size() && (value[pos] == ' ' || value[pos] == '\t' || value[pos] == ';'))
      ++pos;
    std::size_t eq = value.find('=', pos);
    if (eq == std::string_view::npos) break;
    std::string name = to_lower(trim(value.substr(pos, eq - pos)));
    pos = eq + 1;
    while (pos < value.size() && (value[pos] == ' ' || value[pos] == '\t')) ++pos;
    std::string val;
    if (pos < value.size() && value[pos] == '"') {
      ++pos;
      while (pos < value.size() && value[pos] != '"') {
        if (value[pos] == '\\' && pos + 1 < value.size()) ++pos;
        val.push_back(value[pos++]);
      }
      if (pos < value.size()) ++pos;
      std::size_t next = value.find(';', pos);
      pos = next == std::string_view::npos ? value.size() : next + 1;
    } else {
      std::size_t next = value.find(';', pos);
      val = std::string(trim(value.substr(pos, next == std::string_view::npos ? value.npos : next - pos)));
      pos = next == std::string_view::npos ? value.size() : next + 1;
    }
    if (!name.empty()) params.emplace_back(std::move(name), std::move(val));
  }
  return {head, params};
}

ContentType ContentType::parse(std::string_view value) {
  auto [head, params] = parse_structured_value(value);
  ContentType ct;
  std::size_t slash = head.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == head.size()) return ct;
  ct.primary = to_lower(trim(std::string_view(head).substr(0, slash)));
  ct.sub = to_lower(trim(std::string_view(head).substr(slash + 1)));
  ct.params = std::move(params);
  return ct;
}

bool ContentType::is(std::string_view primary_type, std::string_view sub_type) const {
  return primary == primary_type && sub == sub_type;
}

std::optional<std::string> ContentType::param(std::string_view name) const {
  for (const auto& [k, v] : params)
    if (iequals(k, name)) return v;
  return std::nullopt;
}

std::string ContentType::to_string() const {
  std::string out = mime_type();
  for (const auto& [k, v] : params) {
    bool always = k == "boundary" || k == "name" || k == "filename" || k == "protocol";
    bool special = v.empty() || std::any_of(v.begin(), v.end(), is_tspecial);
    out += "; " + k + "=" + (always || special ? quote(v) : v);
  }
  return out;
}

EntityPath EntityPath::child(std::size_t i) const {
  EntityPath p = *this;
  p.indices.push_back(i);
  return p;
}

std::string EntityPath::to_string() const {
  if (indices.empty()) return "/";
  std::string out;
  for (auto i : indices) out += "/" + std::to_string(i);
  return out;
}

MimeEntity MimeEntity::leaf(std::vector<HeaderField> headers, std::string content) {
  MimeEntity e;
  e.headers_ = std::move(headers);
  e.body_ = std::move(content);
  return e;
}

MimeEntity MimeEntity::multipart(std::vector<HeaderField> headers,
                                 std::vector<MimeEntity> children, std::string preamble,
                                 std::string epilogue) {
  MimeEntity e;
  e.headers_ = std::move(headers);
  ContentType ct = e.content_type();
  auto boundary = ct.param("boundary");
  if (!ct.is_multipart() || !boundary || boundary->empty())
    throw Error(ErrorCode::MissingBoundary, "multipart entity needs a multipart Content-Type with a boundary");
  e.body_ = Multipart{std::move(children), std::move(preamble), std::move(epilogue)};
  return e;
}

std::optional<std::string_view> MimeEntity::header(std::string_view name) const {
  for (const auto& h : headers_)
    if (iequals(h.name, name)) return std::string_view(h.value);
  return std::nullopt;
}

void MimeEntity::set_header(std::string_view name, std::string value) {
  if (value.find_first_of("\r\n") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "header value contains a line break");
  for (auto& h : headers_) {
    if (iequals(h.name, name)) {
      h.value = std::move(value);
      return;
    }
  }
  headers_.push_back({std::string(name), std::move(value)});
}

void MimeEntity::prepend_header(std::string_view name, std::string value) {
  if (value.find_first_of("\r\n") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "header value contains a line break");
  headers_.insert(headers_.begin(), HeaderField{std::string(name), std::move(value)});
}

void MimeEntity::remove_header(std::string_view name) {
  std::erase_if(headers_, [&](const HeaderField& h) { return iequals(h.name, name); });
}

ContentType MimeEntity::content_type() const {
  if (auto v = header("Content-Type")) return ContentType::parse(*v);
  return ContentType{};
}

TransferEncoding MimeEntity::transfer_encoding() const {
  auto v = header("Content-Transfer-Encoding");
  if (!v) return TransferEncoding::Identity;
  std::string enc = to_lower(trim(*v));
  if (enc.empty() || enc == "7bit" || enc == "8bit" || enc == "binary")
    return TransferEncoding::Identity;
  if (enc == "base64") return TransferEncoding::Base64;
  throw Error(ErrorCode::UnsupportedEncoding, "unsupported transfer encoding: " + enc);
}

const std::string& MimeEntity::content() const {
  if (const auto* s = std::get_if<std::string>(&body_)) return *s;
  throw Error(ErrorCode::InvalidArgument, "content() called on a multipart entity");
}

void MimeEntity::set_content(std::string content) {
  if (is_multipart())
    throw Error(ErrorCode::InvalidArgument, "set_content() called on a multipart entity");
  body_ = std::move(content);
}

const MimeEntity::Multipart& MimeEntity::parts() const {
  if (const auto* m = std::get_if<Multipart>(&body_)) return *m;
  throw Error(ErrorCode::InvalidArgument, "parts() called on a leaf entity");
}

MimeEntity::Multipart& MimeEntity::parts() {
  if (auto* m = std::get_if<Multipart>(&body_)) return *m;
  throw Error(ErrorCode::InvalidArgument, "parts() called on a leaf entity");
}

const MimeEntity& MimeEntity::at(const EntityPath& path) const {
  const MimeEntity* node = this;
  for (auto i : path.indices) {
    if (!node->is_multipart() || i >= node->children().size())
      throw Error(ErrorCode::InvalidArgument, "path " + path.to_string() + " does not resolve");
    node = &node->children()[i];
  }
  return *node;
}

MimeEntity parse_message(std::string_view raw) {
  const std::string normalized = codec::normalize_crlf(raw);
  return parse_entity(normalized, 0);
}

std::string serialize_message(const MimeEntity& entity) {
  std::string out;
  serialize_into(out, entity);
  return out;
}

MimeEntity plaintext_entity(std::string_view plaintext) {
  const std::string text = codec::normalize_crlf(plaintext);
  std::string_view first = std::string_view(text).substr(0, text.find(kCrlf));
  std::size_t colon = first.find(':');
  if (colon != std::string_view::npos && valid_header_name(first.substr(0, colon))) {
    try {
      MimeEntity e = parse_entity(text, 0);
      if (e.header("Content-Type")) return e;
    } catch (const Error&) {
    }
  }
  return MimeEntity::leaf({{"Content-Type", "text/plain"}}, std::string(plaintext));
}

std::string make_boundary(std::uint64_t seed, int depth, const std::vector<MimeEntity>& children) {
  std::vector<std::string> pieces;
  pieces.reserve(children.size());
  for (const auto& c : children) pieces.push_back(serialize_message(c));

  const std::string base = "=_cm_" + std::to_string(seed) + "_" + std::to_string(depth);
  std::string candidate = base;
  for (int n = 1;; ++n) {
    const std::string dash = "--" + candidate;
    bool clash = std::any_of(pieces.begin(), pieces.end(),
                             [&](const std::string& p) { return has_line_prefix(p, dash); });
    if (!clash) return candidate;
    candidate = base + "_" + std::to_string(n);
  }
}

std::optional<EncryptedPart> encrypted_node(const MimeEntity& e) {
  ContentType ct = e.content_type();
  if (is_smime_enveloped(ct)) return EncryptedPart{{}, Scheme::SmimeEnveloped, 1};
  if (is_pgp_mime(ct)) return EncryptedPart{{}, Scheme::PgpMime, 1};
  if (!e.is_multipart() && ct.is_text()) {
    std::size_t n = codec::count_occurrences(e.content(), kArmorBegin);
    if (n > 0) return EncryptedPart{{}, Scheme::PgpInline, n};
  }
  return std::nullopt;
}

std::vector<EncryptedPart> locate_encrypted_parts(const MimeEntity& entity) {
  std::vector<EncryptedPart> out;
  locate_into(entity, EntityPath{}, out);
  return out;
}

std::string_view structure_kind_name(StructureClass::Kind k) noexcept {
  switch (k) {
    case StructureClass::Kind::NoEncryption: return "no-encryption";
    case StructureClass::Kind::EncryptedRoot: return "encrypted-root";
    case StructureClass::Kind::PartiallyEncrypted: return "partially-encrypted";
  }
  return "unknown";
}

StructureClass classify_structure(const MimeEntity& entity) {
  StructureClass out;
  out.parts = locate_encrypted_parts(entity);
  if (out.parts.empty()) return out;

  out.kind = StructureClass::Kind::PartiallyEncrypted;
  if (out.parts.size() != 1 || !out.parts.front().path.is_root()) return out;

  const EncryptedPart& root = out.parts.front();
  if (root.scheme != Scheme::PgpInline) {
    out.kind = StructureClass::Kind::EncryptedRoot;
    return out;
  }
  // Inline armor counts as whole-message encryption only when a single block
  // spans the entire trimmed body.
  std::string_view body = trim(entity.content());
  if (root.multiplicity == 1 && body.starts_with(kArmorBegin) && body.ends_with(kArmorEnd))
    out.kind = StructureClass::Kind::EncryptedRoot;
  return out;
}

std::string outline(const MimeEntity& entity) {
  std::ostringstream os;
  outline_into(os, entity, EntityPath{}, 0);
  return os.str();
}

}  // namespace mime
}  // namespace covertmail
