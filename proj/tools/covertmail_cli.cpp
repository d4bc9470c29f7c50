#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "covertmail/covertmail.h"

#ifndef COVERTMAIL_PROFILE_DIR
#define COVERTMAIL_PROFILE_DIR "profiles"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMergedLeak = 10;
constexpr int kExitHiddenLeak = 11;
constexpr int kExitReject = 20;

struct CmFailure {
  cm_status status;
  std::string message;
};

struct UsageError {
  std::string message;
};

void check(cm_status st) {
  if (st != CM_OK) throw CmFailure{st, cm_last_error()};
}

struct StrFree {
  void operator()(char* s) const { cm_string_free(s); }
};
struct MsgFree {
  void operator()(cm_message* m) const { cm_message_free(m); }
};
struct RingFree {
  void operator()(cm_keyring* k) const { cm_keyring_free(k); }
};
struct ProfileFree {
  void operator()(cm_profile* p) const { cm_profile_free(p); }
};
struct PolicyFree {
  void operator()(cm_policy* p) const { cm_policy_free(p); }
};

using Str = std::unique_ptr<char, StrFree>;
using Msg = std::unique_ptr<cm_message, MsgFree>;
using Ring = std::unique_ptr<cm_keyring, RingFree>;
using Profile = std::unique_ptr<cm_profile, ProfileFree>;
using Policy = std::unique_ptr<cm_policy, PolicyFree>;

std::string take(char* s, size_t len) {
  Str guard(s);
  return std::string(s, len);
}

std::string take(char* s) {
  Str guard(s);
  return std::string(s);
}

struct Session {
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::string report_path;
  std::string profile_dir;
  bool json_out = false;
  json results = json::object();
};

Session g;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError{"cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string data = ss.str();
  char* digest = nullptr;
  check(cm_sha256_hex(data.data(), data.size(), &digest));
  g.inputs.emplace_back(path, take(digest));
  return data;
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    if (!data.empty() && data.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CmFailure{CM_E_IO, "cannot write " + path};
  out << data;
}

Msg load_message(const std::string& path) {
  std::string raw = read_file(path);
  cm_message* m = nullptr;
  check(cm_message_parse(raw.data(), raw.size(), &m));
  return Msg(m);
}

// A file path when it names one, otherwise the literal text.
std::string file_or_literal(const std::string& arg) {
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) return read_file(arg);
  return arg;
}

// Files, plus the *.eml files of any directory, in name order.
std::vector<std::string> expand_inputs(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    std::error_code ec;
    if (!fs::is_directory(a, ec)) {
      out.push_back(a);
      continue;
    }
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(a, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".eml") found.push_back(entry.path().string());
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  if (out.empty()) throw UsageError{"no messages found"};
  return out;
}

std::string outline(const cm_message* m) {
  char* s = nullptr;
  check(cm_message_outline(m, &s));
  return take(s);
}

std::string serialize(const cm_message* m) {
  char* s = nullptr;
  size_t n = 0;
  check(cm_message_serialize(m, &s, &n));
  return take(s, n);
}

Ring load_keyring(const std::string& path, const std::vector<std::string>& extra_keys) {
  std::string text = path.empty() ? std::string() : read_file(path);
  cm_keyring* k = nullptr;
  check(cm_keyring_parse(text.c_str(), &k));
  Ring ring(k);
  for (const auto& id : extra_keys) check(cm_keyring_add(ring.get(), id.c_str()));
  return ring;
}

std::string profile_dir() {
  if (!g.profile_dir.empty()) return g.profile_dir;
  if (const char* env = std::getenv("COVERTMAIL_PROFILE_DIR")) return env;
  return COVERTMAIL_PROFILE_DIR;
}

Profile load_profile(const std::string& name_or_path) {
  fs::path candidate(name_or_path);
  if (!fs::is_regular_file(candidate)) candidate = fs::path(profile_dir()) / (name_or_path + ".profile");
  if (!fs::is_regular_file(candidate)) throw UsageError{"unknown profile: " + name_or_path};
  std::string text = read_file(candidate.string());
  cm_profile* p = nullptr;
  check(cm_profile_parse(text.c_str(), &p));
  return Profile(p);
}

std::vector<std::string> available_profiles() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(profile_dir(), ec)) {
    if (entry.path().extension() == ".profile") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

cm_scheme parse_scheme(const std::string& s) {
  if (s == "smime") return CM_SCHEME_SMIME;
  if (s == "pgp-mime") return CM_SCHEME_PGP_MIME;
  if (s == "pgp-inline") return CM_SCHEME_PGP_INLINE;
  throw UsageError{"unknown scheme: " + s};
}

// --- forge ---------------------------------------------------------------

struct ForgeArgs {
  std::string from = "eve@evil.com";
  std::string to = "johnny@good.com";
  std::string decoy_file;
  std::string subject;
  std::string boundary;
  uint64_t seed = 0;
  std::string out;
};

struct ForgeStrings {
  std::string decoy;
  cm_forge_options opts{};
};

ForgeStrings forge_options(const ForgeArgs& a) {
  ForgeStrings s;
  cm_forge_options_init(&s.opts);
  if (!a.decoy_file.empty()) s.decoy = read_file(a.decoy_file);
  s.opts.from_addr = a.from.c_str();
  s.opts.to_addr = a.to.c_str();
  s.opts.decoy = a.decoy_file.empty() ? nullptr : s.decoy.c_str();
  s.opts.subject = a.subject.empty() ? nullptr : a.subject.c_str();
  s.opts.boundary = a.boundary.empty() ? nullptr : a.boundary.c_str();
  s.opts.seed = a.seed;
  return s;
}

void add_forge_args(CLI::App* cmd, ForgeArgs& a) {
  cmd->add_option("--from", a.from, "Sender address")->capture_default_str();
  cmd->add_option("--to", a.to, "Recipient address")->capture_default_str();
  cmd->add_option("--subject", a.subject, "Subject header");
  cmd->add_option("--boundary", a.boundary, "Fixed root boundary");
  cmd->add_option("--seed", a.seed, "Boundary seed")->capture_default_str();
  cmd->add_option("-o,--out", a.out, "Output file (default stdout)");
}

// --- simulate ------------------------------------------------------------

struct SimArgs {
  std::string message;
  std::vector<std::string> profiles;
  std::string keyring;
  std::vector<std::string> keys;
  std::string body = "Dear Eve, ...";
  std::string date = "01/05/19 08:27";
  bool reencrypt = false;
  std::string reencrypt_scheme = "pgp-mime";
  std::string recipient_keyring;
  std::string attacker_keyring;
  std::vector<std::string> secrets;
  std::vector<std::string> secret_files;
  std::string signer;
  std::string out;
};

void add_common_sim(CLI::App* cmd, SimArgs& a, bool multi_profile = false) {
  cmd->add_option("message", a.message, "Message file")->required();
  auto* p = cmd->add_option("-p,--profile", a.profiles, "Client profile name or file")->required();
  if (!multi_profile) p->expected(1);
  cmd->add_option("-k,--keyring,--keys", a.keyring, "Victim keyring file");
  cmd->add_option("--key", a.keys, "Victim key id (repeatable)");
}

void add_reply_args(CLI::App* cmd, SimArgs& a) {
  cmd->add_option("--body", a.body, "Reply text")->capture_default_str();
  cmd->add_option("--date", a.date, "Date for the attribution line")->capture_default_str();
  cmd->add_flag("--reencrypt", a.reencrypt, "Encrypt the reply when the recipient key is known");
  cmd->add_option("--reencrypt-scheme", a.reencrypt_scheme)->capture_default_str();
  cmd->add_option("--recipient-keys", a.recipient_keyring, "Keyring of reply recipients");
}

struct ReplyStrings {
  Ring recipients;
  Ring attacker;
  cm_reply_options opts{};
};

ReplyStrings reply_options(const SimArgs& a) {
  ReplyStrings r;
  cm_reply_options_init(&r.opts);
  r.opts.date = a.date.c_str();
  r.opts.reencrypt = a.reencrypt ? 1 : 0;
  r.opts.reencrypt_scheme = parse_scheme(a.reencrypt_scheme);
  if (!a.recipient_keyring.empty()) {
    r.recipients = load_keyring(a.recipient_keyring, {});
    r.opts.recipient_keys = r.recipients.get();
  }
  if (!a.attacker_keyring.empty()) {
    r.attacker = load_keyring(a.attacker_keyring, {});
    r.opts.attacker_keys = r.attacker.get();
  }
  return r;
}

void print_findings(const json& findings) {
  for (const auto& f : findings)
    std::cout << f["severity"].get<std::string>() << "\t" << f["kind"].get<std::string>() << "\t"
              << f["path"].get<std::string>() << "\t" << f["evidence"].get<std::string>() << "\n";
}

int emit(int status) {
  if (g.json_out) std::cout << g.results.dump(2) << "\n";
  if (!g.report_path.empty()) {
    json in = json::array();
    for (const auto& [path, digest] : g.inputs) in.push_back({{"path", path}, {"sha256", digest}});
    json env = {{"format", "covertmail-report"},
                {"version", 1},
                {"command", g.argv},
                {"inputs", in},
                {"results", g.results},
                {"exit_status", status}};
    std::ofstream out(g.report_path, std::ios::binary);
    if (!out) {
      std::cerr << "covertmail: cannot write report " << g.report_path << "\n";
      return kExitFailure;
    }
    out << env.dump(2) << "\n";
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  g.argv.assign(argv, argv + argc);

  CLI::App app{"Forge, simulate and defend against covert-content email attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cm_version()));
  app.add_option("--report", g.report_path, "Write a JSON report envelope to this file");
  app.add_option("--profile-dir", g.profile_dir, "Directory of *.profile files");
  app.add_flag("--json", g.json_out, "Print results as JSON");

  std::function<int()> action;

  // encrypt / decrypt / sign / verify / inspect
  std::string in_file, text, out_file, keyring_file, signer, scheme = "smime";
  std::vector<std::string> recipients, keys;

  auto* encrypt = app.add_subcommand("encrypt", "Encrypt a plaintext to recipients");
  encrypt->add_option("--to", recipients, "Recipient key id (repeatable)")->required();
  encrypt->add_option("--scheme", scheme, "smime, pgp-mime or pgp-inline")->capture_default_str();
  auto* src = encrypt->add_option_group("source");
  src->add_option("--in", in_file, "Plaintext file");
  src->add_option("--text", text, "Plaintext string");
  src->require_option(1);
  encrypt->add_option("-o,--out", out_file, "Output file");
  encrypt->callback([&] {
    action = [&] {
      std::string pt = in_file.empty() ? text : read_file(in_file);
      std::vector<const char*> ids;
      for (const auto& r : recipients) ids.push_back(r.c_str());
      cm_message* m = nullptr;
      check(cm_encrypt(pt.data(), pt.size(), ids.data(), ids.size(), parse_scheme(scheme), &m));
      Msg msg(m);
      write_output(out_file, serialize(msg.get()));
      return kExitOk;
    };
  });

  std::string msg_file;
  auto* decrypt = app.add_subcommand("decrypt", "Decrypt a wholly encrypted message or part");
  decrypt->add_option("message", msg_file)->required();
  decrypt->add_option("-k,--keyring,--keys", keyring_file, "Keyring file");
  decrypt->add_option("--key", keys, "Key id (repeatable)");
  decrypt->add_option("-o,--out", out_file);
  decrypt->callback([&] {
    action = [&] {
      Msg m = load_message(msg_file);
      Ring ring = load_keyring(keyring_file, keys);
      char* s = nullptr;
      size_t n = 0;
      check(cm_decrypt(m.get(), ring.get(), &s, &n));
      write_output(out_file, take(s, n));
      return kExitOk;
    };
  });

  auto* sign = app.add_subcommand("sign", "Sign a message");
  sign->add_option("message", msg_file)->required();
  sign->add_option("--signer", signer)->required();
  sign->add_option("-o,--out", out_file);
  sign->callback([&] {
    action = [&] {
      Msg m = load_message(msg_file);
      cm_message* s = nullptr;
      check(cm_sign(m.get(), signer.c_str(), &s));
      Msg sm(s);
      write_output(out_file, serialize(sm.get()));
      return kExitOk;
    };
  });

  auto* verify = app.add_subcommand("verify", "Verify a signed message");
  verify->add_option("message", msg_file)->required();
  verify->callback([&] {
    action = [&] {
      Msg m = load_message(msg_file);
      char* s = nullptr;
      check(cm_verify(m.get(), &s));
      g.results = json::parse(take(s));
      if (!g.json_out) {
        std::cout << g.results["status"].get<std::string>();
        if (!g.results["signer"].is_null()) std::cout << " " << g.results["signer"].get<std::string>();
        std::cout << "\n";
      }
      return g.results["status"] == "valid" ? kExitOk : kExitFailure;
    };
  });

  auto* inspect = app.add_subcommand("inspect", "Show MIME structure and encryption class");
  inspect->add_option("message", msg_file)->required();
  inspect->callback([&] {
    action = [&] {
      Msg m = load_message(msg_file);
      char* outline = nullptr;
      check(cm_message_outline(m.get(), &outline));
      std::string tree = take(outline);
      char* cls = nullptr;
      check(cm_message_classify(m.get(), &cls));
      g.results = json::parse(take(cls));
      g.results["outline"] = tree;
      if (!g.json_out) std::cout << tree << "class: " << g.results["kind"].get<std::string>() << "\n";
      return kExitOk;
    };
  });

  // forge
  auto* forge = app.add_subcommand("forge", "Build attack messages");
  forge->require_subcommand(1);

  ForgeArgs fd;
  std::string method;
  std::vector<std::string> ciphertexts, forge_secrets, forge_recipients;
  std::string forge_scheme = "smime";
  unsigned newlines = 40;
  bool close_container = false;
  auto* fdec = forge->add_subcommand("decryption", "Wrap ciphertexts in a decryption oracle");
  fdec->alias("decrypt");
  add_forge_args(fdec, fd);
  fdec->add_option("-m,--method", method, "newline, iframe, comment, audio, canvas or cid")->required();
  fdec->add_option("-c,--ciphertext", ciphertexts, "Captured ciphertext message (repeatable)");
  fdec->add_option("-s,--secret", forge_secrets, "Secret to encrypt, file or literal (repeatable)");
  fdec->add_option("--recipient", forge_recipients, "Encryption key id for --secret (default: --to)");
  fdec->add_option("--scheme", forge_scheme, "Scheme for --secret: smime, pgp-mime or pgp-inline")
      ->capture_default_str();
  fdec->add_option("--decoy-file", fd.decoy_file, "Attacker text shown to the victim");
  fdec->add_option("--newlines", newlines, "Padding length for the newline method")->capture_default_str();
  fdec->add_flag("--close", close_container, "Append a part closing the hiding element");
  fdec->callback([&] {
    action = [&] {
      std::vector<Msg> owned;
      std::vector<const cm_message*> cts;
      for (const auto& c : ciphertexts) {
        owned.push_back(load_message(c));
        cts.push_back(owned.back().get());
      }
      std::vector<std::string> rcpt = forge_recipients;
      if (rcpt.empty()) rcpt.push_back(fd.to);
      std::vector<const char*> ids;
      for (const auto& r : rcpt) ids.push_back(r.c_str());
      for (const auto& sec : forge_secrets) {
        std::string pt = file_or_literal(sec);
        cm_message* c = nullptr;
        check(cm_encrypt(pt.data(), pt.size(), ids.data(), ids.size(), parse_scheme(forge_scheme), &c));
        owned.emplace_back(c);
        cts.push_back(c);
      }
      if (cts.empty()) throw UsageError{"forge decryption needs --secret or --ciphertext"};
      ForgeStrings fs = forge_options(fd);
      fs.opts.newline_count = newlines;
      fs.opts.close_container = close_container ? 1 : 0;
      cm_message* m = nullptr;
      check(cm_forge_decryption(&fs.opts, cts.data(), cts.size(), method.c_str(), &m));
      Msg msg(m);
      write_output(fd.out, serialize(msg.get()));
      std::string tree = outline(msg.get());
      g.results = {{"outline", tree}, {"output", fd.out}};
      if (!fd.out.empty() && fd.out != "-" && !g.json_out) std::cout << tree;
      return kExitOk;
    };
  });

  ForgeArgs fsig;
  std::string visible = "What's up Johnny?", covert, condition = "media:834:835";
  auto* fsign = forge->add_subcommand("signing", "Build a view-dependent message to be signed");
  fsign->alias("sign");
  add_forge_args(fsign, fsig);
  fsign->add_option("--visible", visible, "Text shown by default")->capture_default_str();
  fsign->add_option("--covert", covert, "Text shown only when the condition holds")->required();
  fsign->add_option("--condition", condition,
                    "media:<hide>:<show>, supports:<p>:<v>, document:<url>, client:<token>")
      ->capture_default_str();
  fsign->callback([&] {
    action = [&] {
      ForgeStrings fs = forge_options(fsig);
      cm_message* m = nullptr;
      check(cm_forge_signing(&fs.opts, visible.c_str(), covert.c_str(), condition.c_str(), &m));
      Msg msg(m);
      write_output(fsig.out, serialize(msg.get()));
      std::string tree = outline(msg.get());
      g.results = {{"outline", tree}, {"output", fsig.out}};
      if (!fsig.out.empty() && fsig.out != "-" && !g.json_out) std::cout << tree;
      return kExitOk;
    };
  });

  std::string property;
  bool show = false;
  auto* fblind = forge->add_subcommand("blinding", "Print a hiding or showing declaration");
  fblind->add_option("property", property, "display, visibility, opacity, clip-path, position, color, font-size")
      ->required();
  fblind->add_flag("--show", show, "Print the showing declaration instead");
  fblind->callback([&] {
    action = [&] {
      char* s = nullptr;
      check(cm_blinding_declaration(property.c_str(), show ? 0 : 1, &s));
      std::string decl = take(s);
      g.results = {{"property", property}, {"mode", show ? "show" : "hide"}, {"declaration", decl}};
      if (!g.json_out) std::cout << decl << "\n";
      return kExitOk;
    };
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Model a client rendering and replying");
  sim->require_subcommand(1);

  SimArgs sr;
  auto* render = sim->add_subcommand("render", "Show what the client displays");
  add_common_sim(render, sr);
  render->callback([&] {
    action = [&] {
      Msg m = load_message(sr.message);
      Profile p = load_profile(sr.profiles.front());
      Ring ring = load_keyring(sr.keyring, sr.keys);
      char* s = nullptr;
      check(cm_render(m.get(), p.get(), ring.get(), &s));
      g.results = json::parse(take(s));
      if (!g.json_out) std::cout << g.results["visible"].get<std::string>() << "\n";
      return kExitOk;
    };
  });

  SimArgs sp;
  auto* reply = sim->add_subcommand("reply", "Compose the client's reply");
  add_common_sim(reply, sp);
  add_reply_args(reply, sp);
  reply->add_option("-o,--out", sp.out);
  reply->callback([&] {
    action = [&] {
      Msg m = load_message(sp.message);
      Profile p = load_profile(sp.profiles.front());
      Ring ring = load_keyring(sp.keyring, sp.keys);
      ReplyStrings ro = reply_options(sp);
      cm_message* r = nullptr;
      check(cm_reply(m.get(), p.get(), ring.get(), sp.body.c_str(), &ro.opts, &r));
      Msg rm(r);
      std::string text = serialize(rm.get());
      g.results = {{"reply", text}};
      if (!g.json_out) write_output(sp.out, text);
      return kExitOk;
    };
  });

  SimArgs sl;
  auto* leak = sim->add_subcommand("leak-check", "Check whether secrets end up in the reply");
  add_common_sim(leak, sl);
  add_reply_args(leak, sl);
  leak->add_option("-s,--secret", sl.secrets,
                   "Secret plaintext (repeatable; default: every plaintext the keyring recovers)");
  leak->add_option("--secret-file", sl.secret_files, "File holding one secret (repeatable)");
  leak->add_option("--attacker-keys", sl.attacker_keyring, "Keyring used to open a re-encrypted reply");
  leak->callback([&] {
    action = [&] {
      Msg m = load_message(sl.message);
      Profile p = load_profile(sl.profiles.front());
      Ring ring = load_keyring(sl.keyring, sl.keys);
      ReplyStrings ro = reply_options(sl);
      std::vector<std::string> secrets = sl.secrets;
      for (const auto& f : sl.secret_files) secrets.push_back(read_file(f));
      std::vector<const char*> ptrs;
      for (const auto& s : secrets) ptrs.push_back(s.c_str());
      cm_verdict verdict = CM_NO_LEAK;
      char* s = nullptr;
      check(cm_leak_check(m.get(), p.get(), ring.get(), ptrs.data(), ptrs.size(), sl.body.c_str(),
                          &ro.opts, &verdict, &s));
      g.results = json::parse(take(s));
      if (!g.json_out)
        std::cout << g.results["symbol"].get<std::string>() << " "
                  << g.results["verdict"].get<std::string>() << "\n";
      switch (verdict) {
        case CM_HIDDEN_LEAK: return kExitHiddenLeak;
        case CM_MERGED_LEAK: return kExitMergedLeak;
        default: return kExitOk;
      }
    };
  });

  SimArgs ss;
  auto* sreply = sim->add_subcommand("sign-reply", "Compose and sign the client's reply");
  add_common_sim(sreply, ss);
  add_reply_args(sreply, ss);
  sreply->add_option("--signer", ss.signer, "Signing key id")->required();
  sreply->add_option("-o,--out", ss.out);
  sreply->callback([&] {
    action = [&] {
      Msg m = load_message(ss.message);
      Profile p = load_profile(ss.profiles.front());
      Ring ring = load_keyring(ss.keyring, ss.keys);
      ReplyStrings ro = reply_options(ss);
      cm_message* r = nullptr;
      check(cm_sign_reply(m.get(), p.get(), ring.get(), ss.signer.c_str(), ss.body.c_str(), &ro.opts, &r));
      Msg rm(r);
      write_output(ss.out, serialize(rm.get()));
      return kExitOk;
    };
  });

  std::string div_msg;
  std::vector<std::string> div_profiles;
  auto* div = sim->add_subcommand("divergence", "Render a signed message under several profiles");
  div->add_option("message", div_msg)->required();
  div->add_option("-p,--profile,--profiles", div_profiles, "Profiles, comma separated or repeated")
      ->required()
      ->delimiter(',');
  div->callback([&] {
    action = [&] {
      Msg m = load_message(div_msg);
      std::vector<Profile> owned;
      std::vector<const cm_profile*> ps;
      for (const auto& name : div_profiles) {
        owned.push_back(load_profile(name));
        ps.push_back(owned.back().get());
      }
      int diverges = 0;
      char* s = nullptr;
      check(cm_divergence_check(m.get(), ps.data(), ps.size(), &diverges, &s));
      g.results = json::parse(take(s));
      if (!g.json_out) {
        std::cout << "signature: " << g.results["signature"].get<std::string>() << "\n";
        for (const auto& v : g.results["views"])
          std::cout << v["profile"].get<std::string>() << ": " << v["visible"].get<std::string>() << "\n";
        const bool success = diverges && g.results["signature"] == "valid";
        std::cout << (diverges ? "views diverge" : "views agree") << "\n"
                  << "attack=" << (success ? "success" : "failure") << "\n";
      }
      return kExitOk;
    };
  });

  // guard
  auto* guard = app.add_subcommand("guard", "Detect and neutralise covert content");
  guard->require_subcommand(1);
  std::string policy_file;

  auto load_policy = [&]() {
    std::string text = policy_file.empty() ? std::string() : read_file(policy_file);
    cm_policy* pol = nullptr;
    check(cm_policy_parse(policy_file.empty() ? nullptr : text.c_str(), &pol));
    return Policy(pol);
  };

  std::vector<std::string> guard_msgs;
  auto* analyze = guard->add_subcommand("analyze", "Report suspicious structure");
  analyze->add_option("messages", guard_msgs, "Message files or directories")->required();
  analyze->add_option("--policy", policy_file, "Policy file");
  analyze->callback([&] {
    action = [&] {
      Policy pol = load_policy();
      json per = json::array();
      bool all_accept = true;
      for (const auto& path : expand_inputs(guard_msgs)) {
        Msg m = load_message(path);
        char* s = nullptr;
        check(cm_guard_analyze(m.get(), &s));
        json findings = json::parse(take(s));
        int accept = 1;
        char* d = nullptr;
        check(cm_guard_decide(m.get(), pol.get(), &accept, &d));
        json decision = json::parse(take(d));
        per.push_back({{"message", path}, {"findings", findings}, {"decision", decision}});
        all_accept = all_accept && accept;
        if (!g.json_out) {
          std::cout << path << ": " << findings.size() << " finding(s); " << (accept ? "accept" : "reject")
                    << "\n";
          print_findings(findings);
        }
      }
      g.results = {{"messages", per}, {"accept", all_accept}};
      return all_accept ? kExitOk : kExitReject;
    };
  });

  auto* enforce = guard->add_subcommand("enforce", "Apply the all-or-nothing decryption policy");
  enforce->add_option("messages", guard_msgs, "Message files or directories")->required();
  enforce->add_option("--policy", policy_file, "Policy file");
  enforce->callback([&] {
    action = [&] {
      Policy pol = load_policy();
      json per = json::array();
      bool all_accept = true;
      for (const auto& path : expand_inputs(guard_msgs)) {
        Msg m = load_message(path);
        int accept = 1;
        char* s = nullptr;
        check(cm_guard_enforce(m.get(), pol.get(), &accept, &s));
        json decision = json::parse(take(s));
        all_accept = all_accept && accept;
        if (!g.json_out) {
          std::cout << path << ": " << (accept ? "accept" : "reject") << "\n";
          print_findings(decision["reasons"]);
        }
        per.push_back({{"message", path}, {"decision", decision}});
      }
      g.results = {{"messages", per}, {"accept", all_accept}};
      return all_accept ? kExitOk : kExitReject;
    };
  });

  auto* sanitize = guard->add_subcommand("sanitize", "Print a reply-safe plain-text quote");
  sanitize->add_option("messages", guard_msgs, "Message files or directories")->required();
  sanitize->add_option("-k,--keyring,--keys", keyring_file, "Keyring file");
  sanitize->add_option("--key", keys, "Key id (repeatable)");
  sanitize->add_option("-o,--out", out_file);
  sanitize->callback([&] {
    action = [&] {
      Ring ring = load_keyring(keyring_file, keys);
      json per = json::array();
      std::string all;
      for (const auto& path : expand_inputs(guard_msgs)) {
        Msg m = load_message(path);
        char* s = nullptr;
        check(cm_guard_sanitize(m.get(), ring.get(), &s));
        std::string quote = take(s);
        if (!all.empty() && all.back() != '\n') all += '\n';
        all += quote;
        per.push_back({{"message", path}, {"quote", quote}});
      }
      g.results = {{"messages", per}};
      if (!g.json_out) write_output(out_file, all);
      return kExitOk;
    };
  });

  auto* coverage = guard->add_subcommand("coverage", "Check that a signature covers the whole message");
  coverage->add_option("message", msg_file)->required();
  coverage->callback([&] {
    action = [&] {
      Msg m = load_message(msg_file);
      int accept = 0;
      char* s = nullptr;
      check(cm_guard_signature_coverage(m.get(), &accept, &s));
      g.results = json::parse(take(s));
      if (!g.json_out) {
        print_findings(g.results["reasons"]);
        std::cout << (accept ? "accept" : "reject") << "\n";
      }
      return accept ? kExitOk : kExitReject;
    };
  });

  // demo / profiles
  uint64_t demo_seed = 0;
  std::string demo_out;
  auto* demo = app.add_subcommand("demo", "Run the end-to-end attack and defense walkthrough");
  demo->add_option("--seed", demo_seed)->capture_default_str();
  demo->add_option("--out-dir", demo_out, "Write forged messages and replies here");
  demo->callback([&] {
    action = [&] {
      std::vector<Profile> owned;
      std::vector<const cm_profile*> ps;
      for (const auto& name : available_profiles()) {
        owned.push_back(load_profile(name));
        ps.push_back(owned.back().get());
      }
      int passed = 0;
      char* s = nullptr;
      check(cm_demo_run(ps.data(), ps.size(), demo_seed, &passed, &s));
      g.results = json::parse(take(s));
      if (!demo_out.empty()) {
        fs::create_directories(demo_out);
        for (const auto& sc : g.results["scenarios"]) {
          const std::string name = sc["name"].get<std::string>();
          if (sc.contains("forged")) write_output((fs::path(demo_out) / (name + ".eml")).string(), sc["forged"].get<std::string>());
          if (sc.contains("reply")) write_output((fs::path(demo_out) / (name + "-reply.eml")).string(), sc["reply"].get<std::string>());
          if (sc.contains("signed_reply"))
            write_output((fs::path(demo_out) / (name + "-signed-reply.eml")).string(), sc["signed_reply"].get<std::string>());
        }
      }
      if (!g.json_out) {
        for (const auto& sc : g.results["scenarios"])
          std::cout << (sc["passed"].get<bool>() ? "ok   " : "FAIL ") << sc["name"].get<std::string>() << "\n";
        std::cout << "\nmethod     profile                  verdict\n";
        for (const auto& row : g.results["matrix"]) {
          std::string m = row["method"].get<std::string>();
          std::string p = row["profile"].get<std::string>();
          m.resize(std::max<size_t>(m.size(), 10), ' ');
          p.resize(std::max<size_t>(p.size(), 24), ' ');
          std::cout << m << " " << p << " " << row["symbol"].get<std::string>() << " "
                    << row["verdict"].get<std::string>() << (row["match"].get<bool>() ? "" : "  (unexpected)")
                    << "\n";
        }
      }
      return passed ? kExitOk : kExitFailure;
    };
  });

  auto* profiles = app.add_subcommand("profiles", "List available client profiles");
  profiles->callback([&] {
    action = [&] {
      json names = json::array();
      for (const auto& n : available_profiles()) {
        names.push_back(n);
        if (!g.json_out) std::cout << n << "\n";
      }
      g.results = {{"profiles", names}, {"directory", profile_dir()}};
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    return emit(action ? action() : kExitOk);
  } catch (const UsageError& e) {
    std::cerr << "covertmail: " << e.message << "\n";
    g.results = {{"error", e.message}};
    return emit(kExitUsage);
  } catch (const CmFailure& e) {
    std::cerr << "covertmail: " << cm_status_name(e.status) << ": " << e.message << "\n";
    g.results = {{"error", e.message}, {"code", cm_status_name(e.status)}};
    bool usage = e.status == CM_E_INVALID_ARGUMENT || e.status == CM_E_INVALID_PROFILE ||
                 e.status == CM_E_INVALID_POLICY || e.status == CM_E_UNKNOWN_PROPERTY ||
                 e.status == CM_E_INVALID_KEY_REF;
    return emit(usage ? kExitUsage : kExitFailure);
  } catch (const std::exception& e) {
    std::cerr << "covertmail: " << e.what() << "\n";
    return emit(kExitFailure);
  }
}
