#include "covertmail/covertmail.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "covertmail/client_sim.hpp"
#include "covertmail/codec.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/demo.hpp"
#include "covertmail/error.hpp"
#include "covertmail/forge.hpp"
#include "covertmail/guard.hpp"
#include "covertmail/mime.hpp"
#include "covertmail/report.hpp"

using namespace covertmail;

struct cm_message {
  mime::MimeEntity entity;
};
struct cm_keyring {
  crypto::Keyring keys;
};
struct cm_profile {
  client::ClientProfile profile;
};
struct cm_policy {
  guard::PolicyConfig config;
};

namespace {

thread_local std::string g_last_error;

class NullArgument : public std::exception {};

template <class T>
T& need(T* p) {
  if (!p) throw NullArgument{};
  return *p;
}

const char* need_str(const char* s) {
  if (!s) throw NullArgument{};
  return s;
}

template <class F>
cm_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CM_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<cm_status>(static_cast<int>(e.code()));
  } catch (const NullArgument&) {
    g_last_error = "required argument is NULL";
    return CM_E_NULL_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CM_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CM_E_INTERNAL;
  }
}

char* dup(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, std::string_view s, size_t* len = nullptr) {
  need(out) = dup(s);
  if (len) *len = s.size();
}

void put_json(char** out, const report::json& j) { put(out, j.dump()); }

cm_message* wrap(mime::MimeEntity e) { return new cm_message{std::move(e)}; }

Scheme to_scheme(cm_scheme s) {
  switch (s) {
    case CM_SCHEME_SMIME: return Scheme::SmimeEnveloped;
    case CM_SCHEME_PGP_MIME: return Scheme::PgpMime;
    case CM_SCHEME_PGP_INLINE: return Scheme::PgpInline;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme");
}

forge::ForgeSpec to_spec(const cm_forge_options* o) {
  forge::ForgeSpec spec;
  if (!o) return spec;
  if (o->from_addr) spec.from_addr = o->from_addr;
  if (o->to_addr) spec.to_addr = o->to_addr;
  if (o->decoy) spec.decoy = o->decoy;
  if (o->subject) spec.subject = o->subject;
  if (o->boundary) spec.boundary = std::string(o->boundary);
  spec.seed = o->seed;
  spec.close_container = o->close_container != 0;
  return spec;
}

client::ReplyOptions to_reply(const cm_reply_options* o) {
  client::ReplyOptions r;
  if (!o) return r;
  if (o->date) r.date = o->date;
  r.reencrypt = o->reencrypt != 0;
  r.reencrypt_scheme = to_scheme(o->reencrypt_scheme);
  if (o->recipient_keys) r.recipient_keys = o->recipient_keys->keys;
  return r;
}

const crypto::Keyring& ring_or_empty(const cm_keyring* ring) {
  static const crypto::Keyring empty;
  return ring ? ring->keys : empty;
}

}  // namespace

extern "C" {

const char* cm_last_error(void) { return g_last_error.c_str(); }

const char* cm_status_name(cm_status status) {
  switch (status) {
    case CM_OK: return "ok";
    case CM_E_NULL_ARGUMENT: return "null-argument";
    case CM_E_INTERNAL: return "internal";
    default: break;
  }
  int v = static_cast<int>(status);
  if (v >= 1 && v <= static_cast<int>(ErrorCode::Io))
    return error_code_name(static_cast<ErrorCode>(v)).data();
  return "unknown";
}

const char* cm_version(void) { return "1.0.0"; }

void cm_string_free(char* s) { std::free(s); }

cm_status cm_message_parse(const char* data, size_t len, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    if (!data && len) throw NullArgument{};
    *out = wrap(mime::parse_message(std::string_view(data ? data : "", len)));
  });
}

cm_status cm_message_serialize(const cm_message* msg, char** out, size_t* out_len) {
  return guarded([&] { put(out, mime::serialize_message(need(msg).entity), out_len); });
}

cm_status cm_message_outline(const cm_message* msg, char** out) {
  return guarded([&] { put(out, mime::outline(need(msg).entity)); });
}

cm_status cm_message_classify(const cm_message* msg, char** json_out) {
  return guarded(
      [&] { put_json(json_out, report::to_json(mime::classify_structure(need(msg).entity))); });
}

void cm_message_free(cm_message* msg) { delete msg; }

cm_status cm_keyring_parse(const char* text, cm_keyring** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = new cm_keyring{crypto::parse_keyring(text ? text : "")};
  });
}

cm_status cm_keyring_add(cm_keyring* ring, const char* key_id) {
  return guarded([&] { need(ring).keys.insert(crypto::KeyRef(need_str(key_id))); });
}

void cm_keyring_free(cm_keyring* ring) { delete ring; }

cm_status cm_profile_parse(const char* text, cm_profile** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = new cm_profile{client::parse_profile(need_str(text))};
  });
}

cm_status cm_profile_name(const cm_profile* profile, char** out) {
  return guarded([&] { put(out, need(profile).profile.name); });
}

void cm_profile_free(cm_profile* profile) { delete profile; }

cm_status cm_policy_parse(const char* text, cm_policy** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = new cm_policy{text ? guard::parse_policy(text) : guard::PolicyConfig{}};
  });
}

void cm_policy_free(cm_policy* policy) { delete policy; }

cm_status cm_encrypt(const char* plaintext, size_t len, const char* const* recipients,
                     size_t n_recipients, cm_scheme scheme, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    if (!plaintext && len) throw NullArgument{};
    if (!recipients && n_recipients) throw NullArgument{};
    std::vector<crypto::KeyRef> keys;
    for (size_t i = 0; i < n_recipients; ++i) keys.emplace_back(need_str(recipients[i]));
    *out = wrap(crypto::encrypt(std::string_view(plaintext ? plaintext : "", len), keys,
                                to_scheme(scheme)));
  });
}

cm_status cm_decrypt(const cm_message* msg, const cm_keyring* ring, char** out, size_t* out_len) {
  return guarded([&] { put(out, crypto::decrypt(need(msg).entity, ring_or_empty(ring)), out_len); });
}

cm_status cm_sign(const cm_message* msg, const char* signer, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = wrap(crypto::sign(need(msg).entity, crypto::KeyRef(need_str(signer))));
  });
}

cm_status cm_verify(const cm_message* msg, char** json_out) {
  return guarded([&] {
    auto v = crypto::verify(need(msg).entity);
    report::json j = {{"status", crypto::signature_status_name(v.status)}, {"digest", v.digest}};
    j["signer"] = v.signer ? report::json(v.signer->id()) : report::json(nullptr);
    put_json(json_out, j);
  });
}

void cm_forge_options_init(cm_forge_options* opts) {
  if (!opts) return;
  *opts = cm_forge_options{};
  opts->newline_count = 40;
}

cm_status cm_forge_decryption(const cm_forge_options* opts, const cm_message* const* ciphertexts,
                              size_t n, const char* method, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    if (!ciphertexts && n) throw NullArgument{};
    std::vector<mime::MimeEntity> cts;
    for (size_t i = 0; i < n; ++i) cts.push_back(need(ciphertexts[i]).entity);
    unsigned newlines = opts && opts->newline_count ? opts->newline_count : 40;
    auto m = forge::parse_method(need_str(method), newlines);
    *out = wrap(forge::forge_decryption_oracle(to_spec(opts), cts, m));
  });
}

cm_status cm_forge_signing(const cm_forge_options* opts, const char* visible_text,
                           const char* covert_text, const char* condition, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = wrap(forge::forge_signing_oracle(to_spec(opts), need_str(visible_text),
                                            need_str(covert_text),
                                            forge::parse_condition(need_str(condition))));
  });
}

cm_status cm_blinding_declaration(const char* property, int hide, char** out) {
  return guarded([&] {
    put(out, forge::blinding_declaration(forge::parse_blinding_property(need_str(property)),
                                         hide ? forge::BlindingMode::Hide : forge::BlindingMode::Show));
  });
}

void cm_reply_options_init(cm_reply_options* opts) {
  if (!opts) return;
  *opts = cm_reply_options{};
  opts->date = "01/05/19 08:27";
  opts->reencrypt_scheme = CM_SCHEME_PGP_MIME;
}

cm_status cm_render(const cm_message* msg, const cm_profile* profile, const cm_keyring* ring,
                    char** json_out) {
  return guarded([&] {
    auto doc = client::render(need(msg).entity, need(profile).profile, ring_or_empty(ring));
    put_json(json_out, report::to_json(doc));
  });
}

cm_status cm_reply(const cm_message* msg, const cm_profile* profile, const cm_keyring* ring,
                   const char* reply_body, const cm_reply_options* opts, cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = wrap(client::reply(need(msg).entity, need(profile).profile, ring_or_empty(ring),
                              need_str(reply_body), to_reply(opts)));
  });
}

cm_status cm_leak_check(const cm_message* msg, const cm_profile* profile, const cm_keyring* ring,
                        const char* const* secrets, size_t n_secrets, const char* reply_body,
                        const cm_reply_options* opts, cm_verdict* verdict, char** json_out) {
  return guarded([&] {
    if (!secrets && n_secrets) throw NullArgument{};
    std::vector<std::string> s;
    for (size_t i = 0; i < n_secrets; ++i) s.emplace_back(need_str(secrets[i]));
    const bool derived = s.empty();
    if (derived) s = client::embedded_secrets(need(msg).entity, ring_or_empty(ring));
    auto r = client::leak_check(need(msg).entity, s, need(profile).profile, ring_or_empty(ring),
                                need_str(reply_body), to_reply(opts),
                                ring_or_empty(opts ? opts->attacker_keys : nullptr));
    if (verdict) *verdict = static_cast<cm_verdict>(static_cast<int>(r.verdict));
    if (json_out) {
      auto j = report::to_json(r);
      j["reply"] = r.reply_text;
      j["secrets_derived"] = derived;
      put_json(json_out, j);
    }
  });
}

cm_status cm_sign_reply(const cm_message* msg, const cm_profile* profile, const cm_keyring* ring,
                        const char* signer, const char* reply_body, const cm_reply_options* opts,
                        cm_message** out) {
  return guarded([&] {
    need(out) = nullptr;
    *out = wrap(client::sign_reply(need(msg).entity, need(profile).profile, ring_or_empty(ring),
                                   crypto::KeyRef(need_str(signer)), need_str(reply_body),
                                   to_reply(opts)));
  });
}

cm_status cm_divergence_check(const cm_message* signed_msg, const cm_profile* const* profiles,
                              size_t n, int* diverges, char** json_out) {
  return guarded([&] {
    if (!profiles && n) throw NullArgument{};
    std::vector<client::ClientProfile> ps;
    for (size_t i = 0; i < n; ++i) ps.push_back(need(profiles[i]).profile);
    auto d = client::divergence_check(need(signed_msg).entity, ps);
    if (diverges) *diverges = d.diverges ? 1 : 0;
    if (json_out) put_json(json_out, report::to_json(d));
  });
}

cm_status cm_guard_analyze(const cm_message* msg, char** json_out) {
  return guarded([&] { put_json(json_out, report::to_json(guard::analyze(need(msg).entity))); });
}

cm_status cm_guard_decide(const cm_message* msg, const cm_policy* policy, int* accept,
                          char** json_out) {
  return guarded([&] {
    auto d = guard::decide(guard::analyze(need(msg).entity),
                           policy ? policy->config : guard::PolicyConfig{});
    if (accept) *accept = d.accept ? 1 : 0;
    if (json_out) put_json(json_out, report::to_json(d));
  });
}

cm_status cm_guard_enforce(const cm_message* msg, const cm_policy* policy, int* accept,
                           char** json_out) {
  return guarded([&] {
    auto d = guard::enforce_all_or_nothing(need(msg).entity,
                                           policy ? policy->config : guard::PolicyConfig{});
    if (accept) *accept = d.accept ? 1 : 0;
    if (json_out) put_json(json_out, report::to_json(d));
  });
}

cm_status cm_guard_sanitize(const cm_message* msg, const cm_keyring* ring, char** out) {
  return guarded([&] { put(out, guard::sanitize_for_reply(need(msg).entity, ring_or_empty(ring))); });
}

cm_status cm_guard_signature_coverage(const cm_message* msg, int* accept, char** json_out) {
  return guarded([&] {
    auto d = guard::check_signature_coverage(need(msg).entity);
    if (accept) *accept = d.accept ? 1 : 0;
    if (json_out) put_json(json_out, report::to_json(d));
  });
}

cm_status cm_sha256_hex(const void* data, size_t len, char** out) {
  return guarded([&] {
    if (!data && len) throw NullArgument{};
    put(out, codec::sha256_hex(std::string_view(static_cast<const char*>(data ? data : ""), len)));
  });
}

cm_status cm_demo_run(const cm_profile* const* profiles, size_t n, uint64_t seed, int* passed,
                      char** json_out) {
  return guarded([&] {
    if (!profiles && n) throw NullArgument{};
    std::vector<client::ClientProfile> ps;
    for (size_t i = 0; i < n; ++i) ps.push_back(need(profiles[i]).profile);
    auto r = demo::run(ps, seed);
    if (passed) *passed = r.passed ? 1 : 0;
    if (json_out) put_json(json_out, r.results);
  });
}

}  // extern "C"
