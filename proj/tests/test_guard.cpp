#include <doctest.h>

#include <algorithm>

#include "covertmail/codec.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/error.hpp"
#include "covertmail/forge.hpp"
#include "covertmail/guard.hpp"
#include "support.hpp"

using namespace covertmail;
using guard::FindingKind;
using guard::Severity;
using mime::MimeEntity;
using testsupport::johnny;
using testsupport::johnny_keys;

namespace {

std::size_t count_kind(const std::vector<guard::Finding>& fs, FindingKind k) {
  return static_cast<std::size_t>(std::count_if(fs.begin(), fs.end(), [&](const auto& f) { return f.kind == k; }));
}

bool any_high(const std::vector<guard::Finding>& fs) {
  return std::any_of(fs.begin(), fs.end(), [](const auto& f) { return f.severity == Severity::High; });
}

MimeEntity iframe_msg() { return mime::parse_message(testsupport::iframe_example_bytes()); }
MimeEntity width_msg() { return mime::parse_message(testsupport::width_example_bytes()); }

}  // namespace

TEST_CASE("analyze the iframe example") {
  auto fs = guard::analyze(iframe_msg());
  CHECK(count_kind(fs, FindingKind::PartialEncryption) >= 1);
  CHECK(count_kind(fs, FindingKind::HiddenContainerBeforeCiphertext) >= 1);
  for (const auto& f : fs) CHECK(f.evidence.size() <= guard::kMaxEvidence);
  CHECK(std::is_sorted(fs.begin(), fs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.path, a.kind) < std::tie(b.path, b.kind);
  }));
}

TEST_CASE("analyze the device-width example") {
  auto fs = guard::analyze(width_msg());
  CHECK(count_kind(fs, FindingKind::ConditionalCss) == 2);
  bool visibility = false;
  for (const auto& f : fs)
    if (f.kind == FindingKind::BlindingCss && f.evidence.find("visibility") != std::string::npos) visibility = true;
  CHECK(visibility);
}

TEST_CASE("cid and inline-armor findings") {
  auto env = crypto::encrypt("s", {johnny()}, Scheme::PgpMime);
  auto cid = forge::forge_decryption_oracle({}, {env}, forge::CidReference{});
  auto fs = guard::analyze(cid);
  CHECK(count_kind(fs, FindingKind::CiphertextBehindCid) == 1);
  CHECK(count_kind(fs, FindingKind::PartialEncryption) >= 1);

  std::string a = crypto::encrypt("1", {johnny()}, Scheme::PgpInline).content();
  std::string b = crypto::encrypt("2", {johnny()}, Scheme::PgpInline).content();
  auto two = MimeEntity::leaf({{"Content-Type", "text/plain"}}, a + "\r\n" + b);
  CHECK(count_kind(guard::analyze(two), FindingKind::MultipleInlineArmors) == 1);
}

TEST_CASE("proprietary conditionals are flagged") {
  for (const char* tok : {"wlm", "mso", "owa", "moz"}) {
    auto m = forge::forge_signing_oracle({}, "a", "b", forge::ProprietaryClient{tok});
    CHECK_MESSAGE(count_kind(guard::analyze(m), FindingKind::ProprietaryConditional) >= 1, tok);
  }
}

TEST_CASE("encrypted root has no high findings") {
  for (Scheme s : {Scheme::SmimeEnveloped, Scheme::PgpMime, Scheme::PgpInline})
    CHECK_FALSE(any_high(guard::analyze(crypto::encrypt("x", {johnny()}, s))));
}

TEST_CASE("all-or-nothing") {
  CHECK_FALSE(guard::enforce_all_or_nothing(testsupport::two_level_tree()).accept);
  CHECK(guard::enforce_all_or_nothing(crypto::encrypt("x", {johnny()}, Scheme::SmimeEnveloped)).accept);

  std::string armor = crypto::encrypt("x", {johnny()}, Scheme::PgpInline).content();
  CHECK(guard::enforce_all_or_nothing(MimeEntity::leaf({{"Content-Type", "text/plain"}}, armor)).accept);
  CHECK_FALSE(
      guard::enforce_all_or_nothing(MimeEntity::leaf({{"Content-Type", "text/plain"}}, "Hi!\r\n" + armor)).accept);

  guard::PolicyConfig audit;
  audit.mode = guard::PolicyConfig::Mode::Audit;
  auto d = guard::enforce_all_or_nothing(iframe_msg(), audit);
  CHECK(d.accept);
  CHECK_FALSE(d.reasons.empty());
}

TEST_CASE("policy parsing") {
  auto p = guard::parse_policy("# comment\nmode = audit\nreject_severity=medium\n");
  CHECK(p.mode == guard::PolicyConfig::Mode::Audit);
  CHECK(p.reject_at == Severity::Medium);
  CHECK_THROWS_AS(guard::parse_policy("mode=lenient"), Error);
  CHECK_THROWS_AS(guard::parse_policy("colour=red"), Error);
  CHECK_THROWS_AS(guard::parse_policy("no equals sign"), Error);

  auto fs = guard::analyze(width_msg());
  CHECK(guard::decide(fs, {}).accept);
  guard::PolicyConfig medium;
  medium.reject_at = Severity::Medium;
  CHECK_FALSE(guard::decide(fs, medium).accept);
}

TEST_CASE("sanitizer") {
  std::string q = guard::sanitize_for_reply(iframe_msg(), johnny_keys());
  CHECK(q.find(testsupport::kSecret) == std::string::npos);
  CHECK(q.find(guard::kOmittedMarker) != std::string::npos);
  CHECK(q.find("Hello Johnny,") != std::string::npos);

  CHECK(codec::collapse_whitespace(guard::sanitize_for_reply(width_msg(), {})) == "What's up Johnny? I hereby declare war.");

  auto plain = mime::parse_message("Content-Type: text/plain\r\n\r\nunchanged body\r\n");
  CHECK(guard::sanitize_for_reply(plain, {}) == "unchanged body\r\n");

  // A wholly encrypted message is the user's own; it may be quoted.
  auto root = crypto::encrypt("<p>own mail</p>", {johnny()}, Scheme::PgpMime);
  CHECK(codec::collapse_whitespace(guard::sanitize_for_reply(root, johnny_keys())) == "<p>own mail</p>");
}

TEST_CASE("a profile quoting through the sanitizer does not leak") {
  auto p = testsupport::shipped_profile("compliant");
  p.decrypts_subparts = true;
  auto r = client::leak_check(iframe_msg(), {testsupport::kSecret}, p, johnny_keys(), "ok");
  CHECK(r.verdict == client::Verdict::NoLeak);
}

TEST_CASE("signature coverage") {
  auto content = MimeEntity::leaf({{"Content-Type", "text/plain"}}, "hello");
  auto whole = crypto::sign(content, johnny());
  CHECK(guard::check_signature_coverage(whole).accept);

  auto victim_signed = crypto::sign(content, johnny());
  auto wrapper = MimeEntity::multipart({{"Content-Type", "multipart/mixed; boundary=\"wrap\""}},
                                       {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "attacker"), victim_signed});
  auto nested = crypto::sign(wrapper, crypto::KeyRef(testsupport::kEve));
  auto d = guard::check_signature_coverage(nested);
  CHECK_FALSE(d.accept);
  CHECK(count_kind(d.reasons, FindingKind::SignatureNotCoveringRoot) >= 1);

  auto unsigned_d = guard::check_signature_coverage(content);
  CHECK_FALSE(unsigned_d.accept);
  CHECK_FALSE(unsigned_d.reasons.empty());

  CHECK_FALSE(guard::check_signature_coverage(wrapper).accept);

  guard::CoverageHook deny = [](const MimeEntity&) -> std::optional<guard::Finding> {
    return guard::Finding{FindingKind::SignatureNotCoveringRoot, Severity::High, {}, "protected headers missing"};
  };
  CHECK_FALSE(guard::check_signature_coverage(whole, deny).accept);
}

TEST_CASE("style retained in a reply") {
  auto r = client::reply(width_msg(), testsupport::shipped_profile("mobile-keepstyle"), {}, "fine");
  CHECK(count_kind(guard::analyze(r), FindingKind::StyleRetainedInReply) >= 1);
}

TEST_CASE("property: completeness over the forge matrix") {
  for (const auto& f : testsupport::forge_matrix()) {
    CHECK_MESSAGE(!guard::analyze(f.message).empty(), f.label);
    if (f.decryption) CHECK_MESSAGE(!guard::enforce_all_or_nothing(f.message).accept, f.label);
  }
}

TEST_CASE("property: benign corpus raises nothing high") {
  auto corpus = testsupport::benign_corpus();
  CHECK(corpus.size() == 20);
  for (const auto& m : corpus) {
    auto fs = guard::analyze(m);
    CHECK_MESSAGE(!any_high(fs), mime::serialize_message(m).substr(0, 120));
    CHECK(guard::enforce_all_or_nothing(m).accept);
  }
}

TEST_CASE("property: sanitizer safety and visibility") {
  for (const auto& f : testsupport::forge_matrix()) {
    std::string q = guard::sanitize_for_reply(f.message, johnny_keys());
    for (const auto& s : f.secrets) CHECK_MESSAGE(q.find(s) == std::string::npos, f.label);
    if (!f.decryption) CHECK_MESSAGE(q.find(f.covert) != std::string::npos, f.label);
  }
}
