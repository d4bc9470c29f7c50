#include <doctest.h>

#include "covertmail/codec.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/error.hpp"
#include "covertmail/forge.hpp"
#include "support.hpp"

using namespace covertmail;
using client::ClientProfile;
using client::Verdict;
using mime::MimeEntity;
using testsupport::johnny;
using testsupport::johnny_keys;
using testsupport::shipped_profile;

namespace {

MimeEntity iframe_msg() { return mime::parse_message(testsupport::iframe_example_bytes()); }
MimeEntity width_msg() { return mime::parse_message(testsupport::width_example_bytes()); }

bool contains(std::string_view hay, std::string_view needle) { return hay.find(needle) != std::string_view::npos; }

const std::vector<std::string> kVulnerable = {"merge-html-keepstyle", "merge-ascii-reply", "mobile-keepstyle",
                                              "desktop-wide"};

}  // namespace

TEST_CASE("shipped profiles") {
  auto all = testsupport::shipped_profiles();
  for (const char* name : {"merge-html-keepstyle", "merge-ascii-reply", "first-part-only", "no-merge-tabs",
                           "mobile-keepstyle", "desktop-wide", "compliant"})
    CHECK_NOTHROW(shipped_profile(name));
  CHECK(shipped_profile("mobile-keepstyle").device.device_width_px == 390);
  CHECK(shipped_profile("desktop-wide").device.device_width_px == 1440);
  for (const auto& p : all) {
    auto again = client::parse_profile(client::format_profile(p));
    CHECK(client::format_profile(again) == client::format_profile(p));
  }
}

TEST_CASE("profile parse errors") {
  auto bad = [](std::string_view text) {
    try {
      client::parse_profile(text);
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidProfile;
    }
    return false;
  };
  CHECK(bad("name=x\nunknown_key=1\n"));
  CHECK(bad("name=x\nmerges_parts=maybe\n"));
  CHECK(bad("merges_parts=true\n"));
  CHECK(bad("name=x\nexpect.iframe=sometimes\n"));
}

TEST_CASE("render the iframe attack") {
  auto merging = shipped_profile("merge-html-keepstyle");
  auto doc = client::render(iframe_msg(), merging, johnny_keys());
  CHECK(doc.visible == "Hello Johnny, I'm interested in your work. Could you explain to me how...");
  CHECK_FALSE(contains(doc.visible, testsupport::kSecret));
  REQUIRE(doc.decrypted_paths.size() == 1);
  CHECK(doc.decrypted_paths[0].to_string() == "/1");
  REQUIRE(doc.parts.size() == 2);
  CHECK(doc.parts[1].content == testsupport::kSecret);

  auto first = client::render(iframe_msg(), shipped_profile("first-part-only"), johnny_keys());
  CHECK(first.visible == doc.visible);
  CHECK(first.decrypted_paths.empty());
}

TEST_CASE("render without a key shows a placeholder") {
  auto doc = client::render(iframe_msg(), shipped_profile("merge-html-keepstyle"), {});
  CHECK(doc.decrypted_paths.empty());
  CHECK_FALSE(doc.errors.empty());
  CHECK(contains(doc.text_quote, client::kDecryptFailedPlaceholder));
}

TEST_CASE("render a plain message") {
  auto m = mime::parse_message("From: a@b\r\nContent-Type: text/plain\r\n\r\nhello there\r\n");
  for (const auto& p : testsupport::shipped_profiles()) CHECK(client::render(m, p, {}).visible == "hello there");
}

TEST_CASE("reply to the iframe attack quotes the secret") {
  auto r = client::reply(iframe_msg(), shipped_profile("merge-html-keepstyle"), johnny_keys(), "Dear Eve, ...");
  std::string bytes = mime::serialize_message(r);
  CHECK(contains(bytes, "<iframe height=\"1\" frameborder=\"0\">"));
  CHECK(contains(bytes, testsupport::kSecret));
  CHECK(contains(bytes, "On 01/05/19 08:27, eve@evil.com wrote:"));
  CHECK(r.header("To") == testsupport::kEve);
}

TEST_CASE("reply to the device-width message keeps the media blocks") {
  client::ReplyOptions opts;
  opts.date = "01/05/19 09:53";
  auto r = client::reply(width_msg(), shipped_profile("mobile-keepstyle"), {}, "I'm fine, thanks.", opts);
  std::string bytes = mime::serialize_message(r);
  CHECK(contains(bytes, "@media (max-device-width: 834px)"));
  CHECK(contains(bytes, "@media (min-device-width: 835px)"));
  CHECK(contains(bytes, "I'm fine, thanks."));
  CHECK(contains(bytes, "On 01/05/19 09:53, eve@evil.com wrote:"));
}

TEST_CASE("ASCII reply prefixes quote lines") {
  auto m = mime::parse_message("From: a@b\r\nContent-Type: text/plain\r\n\r\nline one\r\nline two\r\n");
  auto r = client::reply(m, shipped_profile("merge-ascii-reply"), {}, "ok");
  CHECK(contains(r.content(), "\r\n> line one\r\n> line two"));
}

TEST_CASE("leak verdicts") {
  CHECK(client::leak_check(iframe_msg(), {testsupport::kSecret}, shipped_profile("merge-html-keepstyle"), johnny_keys(),
                           "Dear Eve, ...")
            .verdict == Verdict::HiddenLeak);

  auto env = crypto::encrypt(testsupport::kSecret, {johnny()}, Scheme::SmimeEnveloped);
  auto padded = forge::forge_decryption_oracle({}, {env}, forge::NewlinePadding{});
  CHECK(client::leak_check(padded, {testsupport::kSecret}, shipped_profile("merge-ascii-reply"), johnny_keys(), "ok")
            .verdict == Verdict::MergedLeak);

  // No secrets to look for: nothing can leak.
  CHECK(client::leak_check(padded, {}, shipped_profile("merge-ascii-reply"), johnny_keys(), "ok").verdict ==
        Verdict::NoLeak);
  CHECK_THROWS_AS(client::leak_check(padded, {""}, shipped_profile("compliant"), johnny_keys(), "ok"), Error);
}

TEST_CASE("secrets recovered from the message") {
  for (const auto& f : testsupport::forge_matrix()) {
    if (!f.decryption) continue;
    CHECK(client::embedded_secrets(f.message, johnny_keys()) == f.secrets);
    CHECK(client::embedded_secrets(f.message, {}).empty());
  }
}

TEST_CASE("property: oracle soundness over the shipped matrix") {
  auto profiles = testsupport::shipped_profiles();
  for (const auto& f : testsupport::forge_matrix()) {
    if (!f.decryption) continue;
    const std::string method = f.label.substr(0, f.label.find('/'));
    for (const auto& p : profiles) {
      auto expected = p.expected_verdict(method);
      REQUIRE(expected);
      auto r = client::leak_check(f.message, f.secrets, p, johnny_keys(), "Dear Eve, ...");
      CHECK_MESSAGE(r.verdict == *expected, f.label << " on " << p.name);
      if (std::find(kVulnerable.begin(), kVulnerable.end(), p.name) != kVulnerable.end())
        CHECK(r.verdict != Verdict::NoLeak);
      if (p.name == "compliant") CHECK(r.verdict == Verdict::NoLeak);
    }
  }
}

TEST_CASE("property: no subpart decryption, no leak") {
  auto p = shipped_profile("merge-html-keepstyle");
  p.decrypts_subparts = false;
  for (const auto& f : testsupport::forge_matrix()) {
    if (!f.decryption) continue;
    auto r = client::leak_check(f.message, f.secrets, p, johnny_keys(), "ok");
    for (const auto& s : r.secrets) CHECK_FALSE(s.leaked_in_reply);
  }
}

TEST_CASE("property: every reply carries the reply body") {
  const std::string body = "Reply body with <angle> & ampersand\r\nsecond line";
  std::vector<MimeEntity> msgs = testsupport::benign_corpus();
  for (auto& f : testsupport::forge_matrix()) msgs.push_back(f.message);
  for (const auto& p : testsupport::shipped_profiles()) {
    for (const auto& m : msgs) {
      auto r = client::reply(m, p, johnny_keys(), body);
      std::string bytes = mime::serialize_message(r);
      CHECK(contains(bytes, "Reply body with <angle> & ampersand\r\nsecond line"));
    }
  }
}

TEST_CASE("re-encrypted reply still leaks to the attacker") {
  client::ReplyOptions opts;
  opts.reencrypt = true;
  opts.recipient_keys = {crypto::KeyRef(testsupport::kEve)};
  auto out = client::compose_reply(iframe_msg(), shipped_profile("merge-html-keepstyle"), johnny_keys(), "Dear Eve", opts);
  CHECK(out.encrypted);
  CHECK_FALSE(contains(mime::serialize_message(out.message), testsupport::kSecret));
  auto r = client::leak_check(iframe_msg(), {testsupport::kSecret}, shipped_profile("merge-html-keepstyle"), johnny_keys(),
                              "Dear Eve", opts, {crypto::KeyRef(testsupport::kEve)});
  CHECK(r.reply_encrypted);
  CHECK(r.verdict == Verdict::HiddenLeak);

  client::ReplyOptions no_key;
  no_key.reencrypt = true;
  auto skipped = client::compose_reply(iframe_msg(), shipped_profile("merge-html-keepstyle"), johnny_keys(), "x", no_key);
  CHECK_FALSE(skipped.encrypted);
  CHECK(skipped.reencryption_skipped);
}

TEST_CASE("signed reply and divergence") {
  auto mobile = shipped_profile("mobile-keepstyle");
  auto desktop = shipped_profile("desktop-wide");
  CHECK(client::render(width_msg(), mobile, {}).visible == "What's up Johnny?");

  auto signed_reply = client::sign_reply(width_msg(), mobile, {}, johnny(), "I'm fine, thanks.");
  CHECK(signed_reply.content_type().is("multipart", "signed"));
  const std::string signed_part = mime::serialize_message(signed_reply.children()[0]);
  CHECK(contains(signed_part, "<div class=\"covert\""));
  CHECK(contains(signed_part, "@media (min-device-width: 835px)"));

  const std::string before = mime::serialize_message(signed_reply);
  auto d = client::divergence_check(signed_reply, {mobile, desktop});
  CHECK(mime::serialize_message(signed_reply) == before);
  CHECK(d.status == crypto::SignatureStatus::Valid);
  REQUIRE(d.signer);
  CHECK(d.signer->id() == testsupport::kJohnny);
  REQUIRE(d.views.size() == 2);
  CHECK(d.diverges);
  CHECK(d.views[1].second == testsupport::kCovert);
  CHECK_FALSE(contains(d.views[0].second, testsupport::kCovert));
  CHECK(contains(d.views[0].second, "What's up Johnny?"));

  CHECK_THROWS_AS(client::divergence_check(width_msg(), {mobile}), Error);
}

TEST_CASE("property: signing forgeries show visible text on one side, covert on the other") {
  for (const auto& cond : testsupport::signing_conditions()) {
    auto forged = forge::forge_signing_oracle({}, testsupport::kVisible, testsupport::kCovert, cond);
    ClientProfile hide = shipped_profile("desktop-wide");
    hide.device.supported_features.clear();
    hide.device.client_tokens.clear();
    hide.device.device_width_px = 320;
    ClientProfile show = hide;
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, forge::MediaWidth>) show.device.device_width_px = c.show_from_px;
          if constexpr (std::is_same_v<T, forge::SupportsFeature>)
            show.device.supported_features.insert({c.property, c.value});
          if constexpr (std::is_same_v<T, forge::DocumentUrlPrefix>) show.device.document_url = c.url + "/INBOX";
          if constexpr (std::is_same_v<T, forge::ProprietaryClient>) show.device.client_tokens = {c.token};
        },
        cond);
    CHECK_MESSAGE(client::render(forged, hide, {}).visible == testsupport::kVisible, forge::condition_name(cond));
    CHECK_MESSAGE(client::render(forged, show, {}).visible == testsupport::kCovert, forge::condition_name(cond));
  }
}

TEST_CASE("names and addresses") {
  CHECK(client::display_name("Eve <eve@evil.com>") == "Eve");
  CHECK(client::bare_address("Eve <eve@evil.com>") == "eve@evil.com");
  CHECK(client::verdict_symbol(Verdict::HiddenLeak) == "●");
  CHECK(client::parse_verdict("merged-leak") == Verdict::MergedLeak);
}
