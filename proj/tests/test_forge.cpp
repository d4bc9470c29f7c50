#include <doctest.h>

#include "covertmail/codec.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/error.hpp"
#include "covertmail/forge.hpp"
#include "covertmail/html_css.hpp"
#include "support.hpp"

using namespace covertmail;
using mime::MimeEntity;
using testsupport::johnny;

namespace {

template <class F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

std::string rtrim_crlf(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

forge::ForgeSpec fixed_spec() {
  forge::ForgeSpec spec;
  spec.boundary = "BOUNDARY";
  return spec;
}

}  // namespace

TEST_CASE("iframe oracle reproduces the example layout") {
  auto env = crypto::encrypt(testsupport::kSecret, {johnny()}, Scheme::SmimeEnveloped);
  auto forged = forge::forge_decryption_oracle(fixed_spec(), {env}, forge::Iframe{});
  std::string bytes = mime::serialize_message(forged);
  const std::string head =
      "From: eve@evil.com\r\n"
      "To: johnny@good.com\r\n"
      "Content-Type: multipart/mixed; boundary=\"BOUNDARY\"\r\n"
      "\r\n"
      "--BOUNDARY\r\n"
      "Content-Type: text/html\r\n"
      "\r\n"
      "<b>Hello Johnny,</b>\r\n"
      "I'm interested in your work. Could you explain to me how...\r\n"
      "<iframe height=\"1\" frameborder=\"0\">\r\n"
      "--BOUNDARY\r\n"
      "Content-Type: application/pkcs7-mime; smime-type=enveloped-data";
  CHECK(bytes.substr(0, head.size()) == head);
  CHECK(rtrim_crlf(bytes).ends_with("\r\n--BOUNDARY--"));
  CHECK(bytes.find(codec::base64_wrapped(std::string(crypto::kSmimeMagic) + testsupport::kJohnny + '\0' +
                                         testsupport::kSecret)) != std::string::npos);
}

TEST_CASE("cid oracle reproduces the referenced-image layout") {
  auto env = crypto::encrypt(testsupport::kSecret, {johnny()}, Scheme::PgpMime);
  auto spec = fixed_spec();
  spec.decoy = std::string(forge::kShortDecoy);
  auto forged = forge::forge_decryption_oracle(spec, {env}, forge::CidReference{});
  CHECK(forged.content_type().is("multipart", "related"));
  std::string bytes = mime::serialize_message(forged);
  for (const char* line : {"\r\n--BOUNDARY\r\n", "\r\nContent-ID: <target>\r\n", "\r\n--PGPMIME\r\n",
                           "\r\nWhat's up Johnny?\r\n", "<style>fieldset ,br{display:none}</style>",
                           "cid:target", "\r\n--PGPMIME--\r\n"})
    CHECK_MESSAGE(bytes.find(line) != std::string::npos, line);
}

TEST_CASE("batch of 100 envelopes") {
  std::vector<MimeEntity> cts;
  for (int i = 0; i < 100; ++i)
    cts.push_back(crypto::encrypt("secret #" + std::to_string(i), {johnny()}, Scheme::SmimeEnveloped));
  auto forged = forge::forge_decryption_oracle({}, cts, forge::Iframe{});
  CHECK(forged.children().size() == 101);
  auto cid = forge::forge_decryption_oracle({}, cts, forge::CidReference{});
  CHECK(cid.children().size() == 101);
  CHECK(cid.children()[1].header("Content-ID") == "<target_1>");
  CHECK(cid.children()[100].header("Content-ID") == "<target_100>");
  CHECK(cid.children()[0].content().find("cid:target_100") != std::string::npos);
}

TEST_CASE("each hiding method wraps the ciphertext") {
  auto env = crypto::encrypt("s", {johnny()}, Scheme::SmimeEnveloped);
  auto html_of = [&](const forge::HidingMethod& m) {
    return forge::forge_decryption_oracle({}, {env}, m).children()[0].content();
  };
  CHECK(html_of(forge::HtmlComment{}).ends_with("<!--"));
  CHECK(html_of(forge::AudioElement{}).ends_with("<audio>"));
  CHECK(html_of(forge::CanvasElement{}).ends_with("<canvas>"));
  auto pad = forge::forge_decryption_oracle({}, {env}, forge::NewlinePadding{40});
  CHECK(pad.children()[0].content_type().is("text", "plain"));
  CHECK(codec::count_occurrences(pad.children()[0].content(), "\r\n") >= 40);

  forge::ForgeSpec closing;
  closing.close_container = true;
  auto closed = forge::forge_decryption_oracle(closing, {env}, forge::Iframe{});
  REQUIRE(closed.children().size() == 3);
  CHECK(closed.children()[2].content() == "</iframe>");
}

TEST_CASE("forge errors") {
  auto env = crypto::encrypt("s", {johnny()}, Scheme::SmimeEnveloped);
  auto plain = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "not ciphertext");
  CHECK(error_of([&] { forge::forge_decryption_oracle({}, {plain}, forge::Iframe{}); }) ==
        ErrorCode::InvalidCiphertext);
  CHECK(error_of([&] { forge::forge_decryption_oracle({}, {}, forge::Iframe{}); }) ==
        ErrorCode::InvalidCiphertext);
  CHECK(error_of([&] { forge::forge_decryption_oracle({}, {}, forge::CidReference{}); }) ==
        ErrorCode::IncompatibleMethod);
  CHECK(error_of([] { forge::forge_signing_oracle({}, "a", "  ", forge::MediaWidth{}); }) ==
        ErrorCode::EmptyCovertText);
  CHECK(error_of([] { forge::parse_blinding_property("margin"); }) == ErrorCode::UnknownProperty);
}

TEST_CASE("device-width signing oracle is byte exact") {
  forge::ForgeSpec spec;
  auto forged = forge::forge_signing_oracle(spec, testsupport::kVisible, testsupport::kCovert,
                                            forge::MediaWidth{834, 835});
  CHECK(rtrim_crlf(mime::serialize_message(forged)) == rtrim_crlf(testsupport::width_example_bytes()));
}

TEST_CASE("other signing conditions") {
  auto doc = forge::forge_signing_oracle({}, "a", "b", forge::DocumentUrlPrefix{"imap://general@good.com"});
  CHECK(doc.content().find("@-moz-document url-prefix(\"imap://general@good.com\")") != std::string::npos);
  auto mso = forge::forge_signing_oracle({}, "a", "b", forge::ProprietaryClient{"mso"});
  CHECK(mso.content().find("<!--[if mso]>") != std::string::npos);
  auto sup = forge::forge_signing_oracle({}, "a", "b", forge::SupportsFeature{"display", "grid"});
  CHECK(sup.content().find("@supports (display: grid)") != std::string::npos);

  CHECK(std::holds_alternative<forge::MediaWidth>(forge::parse_condition("media:834:835")));
  CHECK(forge::condition_name(forge::parse_condition("client:owa")) == "client:owa");
  CHECK(forge::method_name(forge::parse_method("cid")) == "cid");
  CHECK(forge::all_methods().size() == 6);
}

TEST_CASE("blinding declarations") {
  using forge::BlindingMode;
  using forge::BlindingProperty;
  CHECK(forge::blinding_declaration(BlindingProperty::Display, BlindingMode::Hide) == "display: none;");
  CHECK(forge::blinding_declaration(BlindingProperty::Opacity, BlindingMode::Show) == "opacity: 1;");
  // Every declaration parses back to at least one declaration on the named property.
  for (auto p : forge::kBlindingProperties) {
    for (auto mode : {BlindingMode::Show, BlindingMode::Hide}) {
      auto decls = html::parse_declarations(forge::blinding_declaration(p, mode));
      REQUIRE_FALSE(decls.empty());
      CHECK(decls.front().property == forge::property_name(p));
      CHECK(html::hiding_declarations(decls).empty() == (mode == BlindingMode::Show));
    }
  }
}

TEST_CASE("property: decryption forgeries are partially encrypted and round trip") {
  for (const auto& f : testsupport::forge_matrix(11)) {
    auto back = mime::parse_message(mime::serialize_message(f.message));
    CHECK(back == mime::parse_message(mime::serialize_message(back)));
    if (f.decryption)
      CHECK_MESSAGE(mime::classify_structure(f.message).kind == mime::StructureClass::Kind::PartiallyEncrypted,
                    f.label);
  }
}

TEST_CASE("same seed, same bytes") {
  auto a = testsupport::forge_matrix(5);
  auto b = testsupport::forge_matrix(5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(mime::serialize_message(a[i].message) == mime::serialize_message(b[i].message));
}
