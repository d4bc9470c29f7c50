#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "covertmail/codec.hpp"

#ifndef COVERTMAIL_PROFILE_DIR
#define COVERTMAIL_PROFILE_DIR "profiles"
#endif

namespace testsupport {

namespace fs = std::filesystem;
using namespace covertmail;

crypto::KeyRef johnny() { return crypto::KeyRef(kJohnny); }
crypto::Keyring johnny_keys() { return {johnny()}; }

std::vector<client::ClientProfile> shipped_profiles() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(COVERTMAIL_PROFILE_DIR))
    if (e.path().extension() == ".profile") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<client::ClientProfile> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out.push_back(client::parse_profile(ss.str()));
  }
  return out;
}

client::ClientProfile shipped_profile(std::string_view name) {
  for (auto& p : shipped_profiles())
    if (p.name == name) return p;
  throw std::runtime_error("missing profile " + std::string(name));
}

std::string iframe_example_bytes() {
  auto env = crypto::encrypt(kSecret, {johnny()}, Scheme::SmimeEnveloped);
  return "From: eve@evil.com\r\n"
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
         "Content-Type: application/pkcs7-mime; smime-type=enveloped-data\r\n"
         "Content-Transfer-Encoding: base64\r\n"
         "\r\n" +
         codec::base64_wrapped(env.content()) +
         "\r\n"
         "--BOUNDARY--\r\n";
}

std::string width_example_bytes() {
  return "From: eve@evil.com\r\n"
         "To: johnny@good.com\r\n"
         "Content-Type: text/html\r\n"
         "\r\n"
         "<style>\r\n"
         "/* hide malicious content on mobile devices */\r\n"
         "@media (max-device-width: 834px) {\r\n"
         "  .covert {visibility: hidden;}\r\n"
         "}\r\n"
         "/* but show on desktop/large-screen devices */\r\n"
         "@media (min-device-width: 835px) {\r\n"
         "  * {visibility: hidden;}\r\n"
         "  .covert {visibility: visible !important; position: absolute; top: 8px; left: 8px;}\r\n"
         "}\r\n"
         "</style>\r\n"
         "\r\n"
         "What's up Johnny?\r\n"
         "<div class=\"covert\" style=\"visibility: hidden\">I hereby declare war.</div>\r\n";
}

MimeEntity two_level_tree() {
  auto smime = crypto::encrypt("first secret", {johnny()}, Scheme::SmimeEnveloped);
  auto pgp = crypto::encrypt("second secret", {johnny()}, Scheme::PgpMime);
  auto inner = MimeEntity::multipart(
      {{"Content-Type", "multipart/mixed; boundary=\"inner\""}},
      {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "attacker text"), pgp});
  return MimeEntity::multipart(
      {{"From", kEve}, {"To", kJohnny}, {"Content-Type", "multipart/mixed; boundary=\"outer\""}},
      {MimeEntity::leaf({{"Content-Type", "text/html"}}, "<p>hello</p>"), smime, inner});
}

namespace {

MimeEntity text_mail(const std::string& subject, std::string body) {
  return MimeEntity::leaf({{"From", "alice@example.org"},
                           {"To", kJohnny},
                           {"Subject", subject},
                           {"Content-Type", "text/plain; charset=utf-8"}},
                          std::move(body));
}

MimeEntity html_mail(const std::string& subject, std::string body) {
  return MimeEntity::leaf({{"From", "news@example.org"},
                           {"To", kJohnny},
                           {"Subject", subject},
                           {"Content-Type", "text/html; charset=utf-8"}},
                          std::move(body));
}

MimeEntity with_envelope(MimeEntity e, const std::string& subject) {
  e.prepend_header("Subject", subject);
  e.prepend_header("To", kJohnny);
  e.prepend_header("From", "bob@example.org");
  return e;
}

}  // namespace

std::vector<MimeEntity> benign_corpus() {
  std::vector<MimeEntity> out;
  out.push_back(text_mail("lunch", "Lunch at noon?\r\n"));
  out.push_back(text_mail("empty", ""));
  out.push_back(text_mail("quoted", "Sounds good.\r\n\r\n> Lunch at noon?\r\n> -- Alice\r\n"));
  out.push_back(text_mail("long", std::string(2000, 'x') + "\r\nend\r\n"));
  out.push_back(text_mail("armor talk", "The header line starts with five dashes.\r\n"));
  out.push_back(html_mail("styled",
                          "<html><head><style>p {color: #333; font-size: 14px;} "
                          ".big {font-size: 20px;}</style></head>"
                          "<body><p class=\"big\">Quarterly report</p><p>All good.</p></body></html>"));
  out.push_back(html_mail("inline", "<p style=\"color: navy; margin: 4px\">Hi <b>Johnny</b></p>"));
  out.push_back(html_mail("table", "<table><tr><td>a</td><td>b</td></tr></table><br>done"));
  out.push_back(html_mail("list", "<ul><li>one</li><li>two</li></ul><!-- tracking id 42 -->"));
  out.push_back(html_mail("link", "<a href=\"https://example.org\">example</a> &amp; more"));
  out.push_back(html_mail("visible-values",
                          "<style>.x {display: block; visibility: visible; opacity: 1;}</style>"
                          "<div class=\"x\">shown</div>"));
  out.push_back(MimeEntity::multipart(
      {{"From", "carol@example.org"},
       {"To", kJohnny},
       {"Subject", "alternative"},
       {"Content-Type", "multipart/alternative; boundary=\"alt\""}},
      {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "plain version"),
       MimeEntity::leaf({{"Content-Type", "text/html"}}, "<p>html version</p>")}));
  out.push_back(MimeEntity::multipart(
      {{"From", "carol@example.org"},
       {"To", kJohnny},
       {"Subject", "attachment"},
       {"Content-Type", "multipart/mixed; boundary=\"mix\""}},
      {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "see attached"),
       MimeEntity::leaf({{"Content-Type", "application/pdf; name=\"a.pdf\""},
                         {"Content-Transfer-Encoding", "base64"}},
                        codec::base64_wrapped("%PDF-1.4 fake"))}));
  out.push_back(MimeEntity::multipart(
      {{"From", "carol@example.org"},
       {"To", kJohnny},
       {"Subject", "inline image"},
       {"Content-Type", "multipart/related; boundary=\"rel\""}},
      {MimeEntity::leaf({{"Content-Type", "text/html"}}, "<p>logo: <img src=\"cid:logo\"></p>"),
       MimeEntity::leaf({{"Content-ID", "<logo>"},
                         {"Content-Type", "image/png"},
                         {"Content-Transfer-Encoding", "base64"}},
                        codec::base64_wrapped("\x89PNG fake"))}));
  out.push_back(with_envelope(crypto::encrypt("wholly encrypted", {johnny()}, Scheme::SmimeEnveloped),
                              "smime"));
  out.push_back(with_envelope(crypto::encrypt("wholly encrypted", {johnny()}, Scheme::PgpMime),
                              "pgp/mime"));
  out.push_back(with_envelope(crypto::encrypt("wholly encrypted", {johnny()}, Scheme::PgpInline),
                              "pgp/inline"));
  out.push_back(with_envelope(
      crypto::sign(MimeEntity::leaf({{"Content-Type", "text/plain"}}, "signed hello"),
                   crypto::KeyRef("alice@example.org")),
      "signed"));
  out.push_back(with_envelope(
      crypto::sign(MimeEntity::leaf({{"Content-Type", "text/html"}}, "<p>signed <i>html</i></p>"),
                   crypto::KeyRef("alice@example.org")),
      "signed html"));
  out.push_back(MimeEntity::multipart(
      {{"From", "dave@example.org"},
       {"To", kJohnny},
       {"Subject", "nested"},
       {"Content-Type", "multipart/mixed; boundary=\"n1\""}},
      {MimeEntity::multipart({{"Content-Type", "multipart/alternative; boundary=\"n2\""}},
                             {MimeEntity::leaf({{"Content-Type", "text/plain"}}, "hi"),
                              MimeEntity::leaf({{"Content-Type", "text/html"}}, "<b>hi</b>")}),
       MimeEntity::leaf({{"Content-Type", "text/csv"}}, "a,b\r\n1,2\r\n")}));
  return out;
}

std::vector<forge::SigningCondition> signing_conditions() {
  return {forge::MediaWidth{834, 835},
          forge::MediaWidth{599, 600},
          forge::SupportsFeature{"display", "grid"},
          forge::DocumentUrlPrefix{"imap://general@good.com"},
          forge::ProprietaryClient{"wlm"},
          forge::ProprietaryClient{"mso"},
          forge::ProprietaryClient{"owa"},
          forge::ProprietaryClient{"moz"}};
}

std::vector<Forged> forge_matrix(std::uint64_t seed) {
  std::vector<Forged> out;
  for (const auto& method : forge::all_methods()) {
    const std::string name = forge::method_name(method);
    for (Scheme second : {Scheme::PgpMime, Scheme::PgpInline}) {
      if (std::holds_alternative<forge::CidReference>(method) && second == Scheme::PgpInline) continue;
      Forged f;
      f.label = name + "/" + std::string(scheme_name(second));
      f.secrets = {name + " first secret", name + " second secret"};
      std::vector<MimeEntity> cts = {crypto::encrypt(f.secrets[0], {johnny()}, Scheme::SmimeEnveloped),
                                     crypto::encrypt(f.secrets[1], {johnny()}, second)};
      forge::ForgeSpec spec;
      spec.seed = seed;
      f.message = forge::forge_decryption_oracle(spec, cts, method);
      out.push_back(std::move(f));
    }
  }
  for (const auto& cond : signing_conditions()) {
    Forged f;
    f.decryption = false;
    f.label = forge::condition_name(cond);
    f.covert = kCovert;
    forge::ForgeSpec spec;
    spec.seed = seed;
    f.message = forge::forge_signing_oracle(spec, kVisible, kCovert, cond);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace testsupport
