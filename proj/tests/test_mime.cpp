#include <doctest.h>

#include <functional>
#include <random>

#include "covertmail/codec.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/error.hpp"
#include "covertmail/mime.hpp"
#include "support.hpp"

using namespace covertmail;
using mime::MimeEntity;
using mime::StructureClass;
using testsupport::johnny;

namespace {

ErrorCode parse_error(std::string_view raw) {
  try {
    mime::parse_message(raw);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::Io;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find("\r\n", pos);
    if (nl == std::string::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 2;
  }
  return out;
}

// No line inside a multipart may repeat the delimiter of any ancestor.
void check_boundaries(const MimeEntity& e, std::vector<std::string> ancestors) {
  if (!e.is_multipart()) return;
  auto boundary = e.content_type().param("boundary");
  REQUIRE(boundary);
  for (const auto& child : e.children()) {
    auto lines = lines_of(mime::serialize_message(child));
    for (const auto& b : ancestors) {
      for (const auto& l : lines) {
        CHECK(l != "--" + b);
        CHECK(l != "--" + b + "--");
      }
    }
  }
  ancestors.push_back(*boundary);
  for (const auto& child : e.children()) check_boundaries(child, ancestors);
}

}  // namespace

TEST_CASE("minimal leaf") {
  auto e = mime::parse_message("Content-Type: text/plain\r\n\r\nhi");
  CHECK_FALSE(e.is_multipart());
  CHECK(e.content() == "hi");
  CHECK(e.content_type().is("text", "plain"));
}

TEST_CASE("iframe example parses into html + pkcs7 children") {
  auto e = mime::parse_message(testsupport::iframe_example_bytes());
  REQUIRE(e.is_multipart());
  CHECK(e.content_type().is("multipart", "mixed"));
  REQUIRE(e.children().size() == 2);
  CHECK(e.children()[0].content_type().is("text", "html"));
  CHECK(e.children()[1].content_type().is("application", "pkcs7-mime"));
  CHECK(e.children()[0].content().find("<iframe height=\"1\" frameborder=\"0\">") != std::string::npos);
}

TEST_CASE("empty leaf serializes to headers and a blank line") {
  auto e = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "");
  CHECK(mime::serialize_message(e) == "Content-Type: text/plain\r\n\r\n");
}

TEST_CASE("bare LF input is accepted") {
  auto e = mime::parse_message("Content-Type: text/plain\n\nline one\nline two\n");
  CHECK(e.content() == "line one\r\nline two\r\n");
}

TEST_CASE("folded headers unfold") {
  auto e = mime::parse_message(
      "Content-Type: multipart/mixed;\r\n boundary=\"b1\"\r\n\r\n--b1\r\n\r\nx\r\n--b1--\r\n");
  REQUIRE(e.is_multipart());
  CHECK(e.content_type().param("boundary") == "b1");
}

TEST_CASE("parse errors") {
  CHECK(parse_error("Content-Type text/plain\r\n\r\nx") == ErrorCode::MalformedHeader);
  CHECK(parse_error("Content-Type: multipart/mixed\r\n\r\nbody") == ErrorCode::MissingBoundary);
  CHECK(parse_error("Content-Type: multipart/mixed; boundary=b\r\n\r\n--b\r\n\r\nx\r\n") ==
        ErrorCode::UnterminatedPart);
  CHECK(parse_error("Content-Type: text/plain\r\nContent-Transfer-Encoding: quoted-printable\r\n\r\nx") ==
        ErrorCode::UnsupportedEncoding);
  CHECK(parse_error("Content-Type: text/plain\r\nContent-Transfer-Encoding: base64\r\n\r\n@@@@") ==
        ErrorCode::InvalidBase64);

  std::string deep = "Content-Type: text/plain\r\n\r\nbottom";
  for (int i = 39; i >= 0; --i) {
    const std::string b = "d" + std::to_string(i);
    deep = "Content-Type: multipart/mixed; boundary=" + b + "\r\n\r\n--" + b + "\r\n" + deep + "\r\n--" + b + "--";
  }
  CHECK(parse_error(deep) == ErrorCode::DepthExceeded);
}

TEST_CASE("a stored boundary inside a child is a collision") {
  auto child = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "--clash\r\n--clash--");
  auto root = MimeEntity::multipart({{"Content-Type", "multipart/mixed; boundary=\"clash\""}}, {child});
  try {
    mime::serialize_message(root);
    FAIL("expected BoundaryCollision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryCollision);
  }
  // A generated boundary steers around the same content.
  std::vector<MimeEntity> kids = {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "--=_cm_1_0\r\n")};
  std::string b = mime::make_boundary(1, 0, kids);
  CHECK(b != "=_cm_1_0");
  auto ok = MimeEntity::multipart({{"Content-Type", "multipart/mixed; boundary=\"" + b + "\""}}, kids);
  CHECK(mime::parse_message(mime::serialize_message(ok)) == ok);
}

TEST_CASE("generated boundaries are deterministic") {
  std::vector<MimeEntity> kids = {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "x")};
  CHECK(mime::make_boundary(7, 0, kids) == mime::make_boundary(7, 0, kids));
  CHECK(mime::make_boundary(7, 0, kids) != mime::make_boundary(8, 0, kids));
  CHECK(mime::make_boundary(7, 0, kids) != mime::make_boundary(7, 1, kids));
}

TEST_CASE("locate_encrypted_parts") {
  SUBCASE("two-level partially encrypted tree") {
    auto parts = mime::locate_encrypted_parts(testsupport::two_level_tree());
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].scheme == Scheme::SmimeEnveloped);
    CHECK(parts[0].path.to_string() == "/1");
    CHECK(parts[1].scheme == Scheme::PgpMime);
    CHECK(parts[1].path.to_string() == "/2/1");
  }
  SUBCASE("plain text") {
    CHECK(mime::locate_encrypted_parts(mime::parse_message("Content-Type: text/plain\r\n\r\nhi")).empty());
  }
  SUBCASE("two armor blocks in one leaf") {
    std::string a = crypto::encrypt("one", {johnny()}, Scheme::PgpInline).content();
    std::string b = crypto::encrypt("two", {johnny()}, Scheme::PgpInline).content();
    auto leaf = MimeEntity::leaf({{"Content-Type", "text/plain"}}, a + "\r\n" + b);
    auto parts = mime::locate_encrypted_parts(leaf);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].multiplicity == codec::count_occurrences(leaf.content(), kArmorBegin));
    CHECK(parts[0].multiplicity == 2);
  }
}

TEST_CASE("classify_structure") {
  auto iframe = mime::parse_message(testsupport::iframe_example_bytes());
  auto c = mime::classify_structure(iframe);
  CHECK(c.kind == StructureClass::Kind::PartiallyEncrypted);
  REQUIRE(c.parts.size() == 1);
  CHECK(c.parts[0].scheme == Scheme::SmimeEnveloped);
  CHECK_FALSE(c.parts[0].path.is_root());

  auto root = crypto::encrypt("x", {johnny()}, Scheme::PgpMime);
  auto rc = mime::classify_structure(root);
  CHECK(rc.kind == StructureClass::Kind::EncryptedRoot);
  REQUIRE(rc.parts.size() == 1);
  CHECK(rc.parts[0].scheme == Scheme::PgpMime);

  std::string armor = crypto::encrypt("x", {johnny()}, Scheme::PgpInline).content();
  auto exact = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "\r\n" + armor + "\r\n");
  CHECK(mime::classify_structure(exact).kind == StructureClass::Kind::EncryptedRoot);
  auto decoyed = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "Hi Johnny\r\n" + armor);
  CHECK(mime::classify_structure(decoyed).kind == StructureClass::Kind::PartiallyEncrypted);

  CHECK(mime::classify_structure(mime::parse_message("Content-Type: text/plain\r\n\r\nhi")).kind ==
        StructureClass::Kind::NoEncryption);
}

TEST_CASE("property: round trip and boundary safety over the generated corpus") {
  std::vector<MimeEntity> corpus = testsupport::benign_corpus();
  for (auto& f : testsupport::forge_matrix(3)) corpus.push_back(f.message);
  corpus.push_back(testsupport::two_level_tree());
  for (const auto& m : corpus) {
    std::string bytes = mime::serialize_message(m);
    auto once = mime::parse_message(bytes);
    auto twice = mime::parse_message(mime::serialize_message(once));
    CHECK(once == twice);
    CHECK(mime::serialize_message(twice) == mime::serialize_message(once));
    check_boundaries(once, {});
  }
}

TEST_CASE("property: forge outputs carry ciphertext, benign fixtures do not") {
  for (const auto& f : testsupport::forge_matrix())
    if (f.decryption) CHECK_FALSE(mime::locate_encrypted_parts(f.message).empty());
  for (const auto& m : testsupport::benign_corpus()) {
    auto c = mime::classify_structure(m);
    if (c.kind == StructureClass::Kind::NoEncryption) CHECK(mime::locate_encrypted_parts(m).empty());
  }
}

TEST_CASE("property: encrypted root has exactly the root path") {
  std::vector<MimeEntity> all = testsupport::benign_corpus();
  for (auto& f : testsupport::forge_matrix()) all.push_back(f.message);
  for (const auto& m : all) {
    auto c = mime::classify_structure(m);
    if (c.kind != StructureClass::Kind::EncryptedRoot) continue;
    auto parts = mime::locate_encrypted_parts(m);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].path.is_root());
  }
}

TEST_CASE("random trees round trip") {
  std::mt19937_64 rng(1234);
  std::function<MimeEntity(int)> gen = [&](int depth) -> MimeEntity {
    std::uniform_int_distribution<int> kind(0, depth > 3 ? 1 : 3);
    int k = kind(rng);
    if (k <= 1) {
      std::string body;
      std::uniform_int_distribution<int> len(0, 80), ch(0, 5);
      static const char* pieces[] = {"a", "\r\n", "--", "x y", "=_cm_", "<p>"};
      for (int i = len(rng); i > 0; --i) body += pieces[ch(rng)];
      if (k == 0) return MimeEntity::leaf({{"Content-Type", "text/plain"}}, body);
      return MimeEntity::leaf({{"Content-Type", "application/octet-stream"},
                               {"Content-Transfer-Encoding", "base64"}},
                              codec::base64_wrapped(body));
    }
    std::vector<MimeEntity> kids;
    std::uniform_int_distribution<int> n(1, 3);
    for (int i = n(rng); i > 0; --i) kids.push_back(gen(depth + 1));
    std::string b = mime::make_boundary(rng(), depth, kids);
    return MimeEntity::multipart({{"Content-Type", "multipart/mixed; boundary=\"" + b + "\""}}, std::move(kids));
  };
  for (int i = 0; i < 200; ++i) {
    MimeEntity m = gen(0);
    auto once = mime::parse_message(mime::serialize_message(m));
    CHECK(once == mime::parse_message(mime::serialize_message(once)));
    check_boundaries(once, {});
  }
}

TEST_CASE("outline lists paths") {
  std::string o = mime::outline(mime::parse_message(testsupport::iframe_example_bytes()));
  CHECK(o.find("/ multipart/mixed") != std::string::npos);
  CHECK(o.find("/1 application/pkcs7-mime") != std::string::npos);
}
