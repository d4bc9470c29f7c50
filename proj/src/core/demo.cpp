#include "covertmail/demo.hpp"

#include <algorithm>

#include "covertmail/crypto.hpp"
#include "covertmail/error.hpp"
#include "covertmail/forge.hpp"
#include "covertmail/guard.hpp"

namespace covertmail::demo {

using client::ClientProfile;
using mime::MimeEntity;

namespace {

const ClientProfile& find_profile(const std::vector<ClientProfile>& profiles, std::string_view name) {
  auto it = std::find_if(profiles.begin(), profiles.end(),
                         [&](const ClientProfile& p) { return p.name == name; });
  if (it == profiles.end())
    throw Error(ErrorCode::InvalidProfile, "demo needs profile " + std::string(name));
  return *it;
}

crypto::Keyring victim_keys() { return {crypto::KeyRef(std::string(kVictim))}; }

bool has_kind(const std::vector<guard::Finding>& fs, guard::FindingKind k) {
  return std::any_of(fs.begin(), fs.end(), [&](const guard::Finding& f) { return f.kind == k; });
}

report::json iframe_scenario(const std::vector<ClientProfile>& profiles, std::uint64_t seed,
                             bool& ok) {
  const auto& profile = find_profile(profiles, "merge-html-keepstyle");
  MimeEntity captured = crypto::encrypt(kSecret, {crypto::KeyRef(std::string(kVictim))},
                                        Scheme::SmimeEnveloped);
  forge::ForgeSpec spec;
  spec.seed = seed;
  MimeEntity forged = forge::forge_decryption_oracle(spec, {captured}, forge::Iframe{});
  auto leak = client::leak_check(forged, {std::string(kSecret)}, profile, victim_keys(), kReplyBody);
  auto findings = guard::analyze(forged);
  bool pass = leak.verdict == client::Verdict::HiddenLeak &&
              leak.rendered.visible.find(kSecret) == std::string::npos &&
              has_kind(findings, guard::FindingKind::HiddenContainerBeforeCiphertext);
  ok = ok && pass;
  return {{"name", "iframe-decryption-oracle"},
          {"profile", profile.name},
          {"forged", mime::serialize_message(forged)},
          {"leak", report::to_json(leak)},
          {"reply", leak.reply_text},
          {"findings", report::to_json(findings)},
          {"passed", pass}};
}

report::json cid_scenario(const std::vector<ClientProfile>& profiles, std::uint64_t seed, bool& ok) {
  const auto& profile = find_profile(profiles, "merge-html-keepstyle");
  MimeEntity captured =
      crypto::encrypt(kSecret, {crypto::KeyRef(std::string(kVictim))}, Scheme::PgpMime);
  forge::ForgeSpec spec;
  spec.seed = seed;
  MimeEntity forged = forge::forge_decryption_oracle(spec, {captured}, forge::CidReference{});
  auto leak = client::leak_check(forged, {std::string(kSecret)}, profile, victim_keys(), kReplyBody);
  auto findings = guard::analyze(forged);
  bool pass = leak.verdict == client::Verdict::HiddenLeak &&
              has_kind(findings, guard::FindingKind::PartialEncryption) &&
              has_kind(findings, guard::FindingKind::CiphertextBehindCid);
  ok = ok && pass;
  return {{"name", "cid-decryption-oracle"},
          {"profile", profile.name},
          {"leak", report::to_json(leak)},
          {"findings", report::to_json(findings)},
          {"passed", pass}};
}

report::json signing_scenario(const std::vector<ClientProfile>& profiles, std::uint64_t seed,
                              bool& ok) {
  const auto& mobile = find_profile(profiles, "mobile-keepstyle");
  const auto& desktop = find_profile(profiles, "desktop-wide");
  forge::ForgeSpec spec;
  spec.seed = seed;
  spec.from_addr = std::string(kAttacker);
  spec.to_addr = std::string(kVictim);
  const std::string covert = "I hereby declare war.";
  MimeEntity forged = forge::forge_signing_oracle(spec, forge::kShortDecoy, covert, forge::MediaWidth{});
  client::ReplyOptions opts;
  opts.date = "01/05/19 09:53";
  MimeEntity signed_reply = client::sign_reply(forged, mobile, {}, crypto::KeyRef(std::string(kVictim)),
                                               "I'm fine, thanks.", opts);
  auto div = client::divergence_check(signed_reply, {mobile, desktop});
  const auto& mobile_view = div.views[0].second;
  const auto& desktop_view = div.views[1].second;
  bool pass = div.status == crypto::SignatureStatus::Valid && div.diverges &&
              mobile_view.find(covert) == std::string::npos &&
              desktop_view.find(covert) != std::string::npos;
  ok = ok && pass;
  return {{"name", "signing-oracle"},
          {"divergence", report::to_json(div)},
          {"coverage", report::to_json(guard::check_signature_coverage(signed_reply))},
          {"signed_reply", mime::serialize_message(signed_reply)},
          {"passed", pass}};
}

report::json matrix(const std::vector<ClientProfile>& profiles, std::uint64_t seed, bool& ok) {
  report::json rows = report::json::array();
  const crypto::KeyRef johnny{std::string(kVictim)};
  for (const auto& method : forge::all_methods()) {
    const std::string name = forge::method_name(method);
    const std::vector<std::string> secrets = {name + " secret one for Johnny",
                                              name + " secret two for Johnny"};
    std::vector<MimeEntity> cts = {
        crypto::encrypt(secrets[0], {johnny}, Scheme::SmimeEnveloped),
        crypto::encrypt(secrets[1], {johnny}, Scheme::PgpMime)};
    forge::ForgeSpec spec;
    spec.seed = seed;
    MimeEntity forged = forge::forge_decryption_oracle(spec, cts, method);
    for (const auto& p : profiles) {
      auto expected = p.expected_verdict(name);
      if (!expected) continue;
      auto leak = client::leak_check(forged, secrets, p, victim_keys(), kReplyBody);
      bool match = leak.verdict == *expected;
      ok = ok && match;
      rows.push_back({{"method", name},
                      {"profile", p.name},
                      {"verdict", client::verdict_name(leak.verdict)},
                      {"symbol", client::verdict_symbol(leak.verdict)},
                      {"expected", client::verdict_name(*expected)},
                      {"match", match}});
    }
  }
  return rows;
}

}  // namespace

DemoOutcome run(const std::vector<ClientProfile>& profiles, std::uint64_t seed) {
  DemoOutcome out;
  bool ok = true;
  report::json scenarios = report::json::array();
  scenarios.push_back(iframe_scenario(profiles, seed, ok));
  scenarios.push_back(cid_scenario(profiles, seed, ok));
  scenarios.push_back(signing_scenario(profiles, seed, ok));
  out.results = {{"scenarios", scenarios}, {"matrix", matrix(profiles, seed, ok)}};
  out.passed = ok;
  out.results["passed"] = ok;
  return out;
}

}  // namespace covertmail::demo
