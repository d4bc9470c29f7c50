#ifndef COVERTMAIL_H
#define COVERTMAIL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CM_API __declspec(dllexport)
#else
#define CM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 1..21 match the library's internal error codes. */
typedef enum cm_status {
  CM_OK = 0,
  CM_E_MALFORMED_HEADER = 1,
  CM_E_MISSING_BOUNDARY = 2,
  CM_E_UNTERMINATED_PART = 3,
  CM_E_DEPTH_EXCEEDED = 4,
  CM_E_UNSUPPORTED_ENCODING = 5,
  CM_E_INVALID_BASE64 = 6,
  CM_E_BOUNDARY_COLLISION = 7,
  CM_E_EMPTY_RECIPIENTS = 8,
  CM_E_INVALID_KEY_REF = 9,
  CM_E_NOT_CIPHERTEXT = 10,
  CM_E_NO_MATCHING_KEY = 11,
  CM_E_CORRUPT_PAYLOAD = 12,
  CM_E_INCOMPATIBLE_METHOD = 13,
  CM_E_INVALID_CIPHERTEXT = 14,
  CM_E_EMPTY_COVERT_TEXT = 15,
  CM_E_UNKNOWN_PROPERTY = 16,
  CM_E_NOT_SIGNED = 17,
  CM_E_INVALID_PROFILE = 18,
  CM_E_INVALID_POLICY = 19,
  CM_E_INVALID_ARGUMENT = 20,
  CM_E_IO = 21,
  CM_E_NULL_ARGUMENT = 100,
  CM_E_INTERNAL = 101
} cm_status;

typedef enum cm_scheme {
  CM_SCHEME_SMIME = 0,
  CM_SCHEME_PGP_MIME = 1,
  CM_SCHEME_PGP_INLINE = 2
} cm_scheme;

typedef enum cm_verdict {
  CM_NO_LEAK = 0,
  CM_MERGED_LEAK = 1,
  CM_HIDDEN_LEAK = 2
} cm_verdict;

typedef struct cm_message cm_message;
typedef struct cm_keyring cm_keyring;
typedef struct cm_profile cm_profile;
typedef struct cm_policy cm_policy;

/* Message of the last failed call on this thread; "" after success. */
CM_API const char* cm_last_error(void);
CM_API const char* cm_status_name(cm_status status);
CM_API const char* cm_version(void);

/* Every char** output is allocated by the library. */
CM_API void cm_string_free(char* s);

CM_API cm_status cm_message_parse(const char* data, size_t len, cm_message** out);
CM_API cm_status cm_message_serialize(const cm_message* msg, char** out, size_t* out_len);
CM_API cm_status cm_message_outline(const cm_message* msg, char** out);
CM_API cm_status cm_message_classify(const cm_message* msg, char** json_out);
CM_API void cm_message_free(cm_message* msg);

/* One key id per line, '#' comments. */
CM_API cm_status cm_keyring_parse(const char* text, cm_keyring** out);
CM_API cm_status cm_keyring_add(cm_keyring* ring, const char* key_id);
CM_API void cm_keyring_free(cm_keyring* ring);

CM_API cm_status cm_profile_parse(const char* text, cm_profile** out);
CM_API cm_status cm_profile_name(const cm_profile* profile, char** out);
CM_API void cm_profile_free(cm_profile* profile);

/* NULL text gives the default strict policy. */
CM_API cm_status cm_policy_parse(const char* text, cm_policy** out);
CM_API void cm_policy_free(cm_policy* policy);

CM_API cm_status cm_encrypt(const char* plaintext, size_t len, const char* const* recipients,
                            size_t n_recipients, cm_scheme scheme, cm_message** out);
CM_API cm_status cm_decrypt(const cm_message* msg, const cm_keyring* ring, char** out,
                            size_t* out_len);
CM_API cm_status cm_sign(const cm_message* msg, const char* signer, cm_message** out);
CM_API cm_status cm_verify(const cm_message* msg, char** json_out);

typedef struct cm_forge_options {
  const char* from_addr;  /* default eve@evil.com */
  const char* to_addr;    /* default johnny@good.com */
  const char* decoy;      /* NULL: per-method default */
  const char* subject;    /* NULL: no Subject header */
  const char* boundary;   /* NULL: generated */
  uint64_t seed;
  int close_container;
  unsigned newline_count; /* newline padding length, default 40 */
} cm_forge_options;

CM_API void cm_forge_options_init(cm_forge_options* opts);

/* method: newline, iframe, comment, audio, canvas or cid. */
CM_API cm_status cm_forge_decryption(const cm_forge_options* opts,
                                     const cm_message* const* ciphertexts, size_t n,
                                     const char* method, cm_message** out);
/* condition: media:<hide>:<show>, supports:<prop>:<value>, document:<url>,
   client:<wlm|mso|owa|moz>. */
CM_API cm_status cm_forge_signing(const cm_forge_options* opts, const char* visible_text,
                                  const char* covert_text, const char* condition,
                                  cm_message** out);
CM_API cm_status cm_blinding_declaration(const char* property, int hide, char** out);

typedef struct cm_reply_options {
  const char* date; /* default "01/05/19 08:27" */
  int reencrypt;
  cm_scheme reencrypt_scheme;
  const cm_keyring* recipient_keys;
  const cm_keyring* attacker_keys; /* leak check only */
} cm_reply_options;

CM_API void cm_reply_options_init(cm_reply_options* opts);

CM_API cm_status cm_render(const cm_message* msg, const cm_profile* profile,
                           const cm_keyring* ring, char** json_out);
CM_API cm_status cm_reply(const cm_message* msg, const cm_profile* profile,
                          const cm_keyring* ring, const char* reply_body,
                          const cm_reply_options* opts, cm_message** out);
/* n_secrets == 0: the secrets are the plaintexts `ring` recovers from msg. */
CM_API cm_status cm_leak_check(const cm_message* msg, const cm_profile* profile,
                               const cm_keyring* ring, const char* const* secrets,
                               size_t n_secrets, const char* reply_body,
                               const cm_reply_options* opts, cm_verdict* verdict,
                               char** json_out);
CM_API cm_status cm_sign_reply(const cm_message* msg, const cm_profile* profile,
                               const cm_keyring* ring, const char* signer,
                               const char* reply_body, const cm_reply_options* opts,
                               cm_message** out);
CM_API cm_status cm_divergence_check(const cm_message* signed_msg,
                                     const cm_profile* const* profiles, size_t n,
                                     int* diverges, char** json_out);

CM_API cm_status cm_guard_analyze(const cm_message* msg, char** json_out);
/* Findings filtered through the policy; NULL policy is strict/high. */
CM_API cm_status cm_guard_decide(const cm_message* msg, const cm_policy* policy, int* accept,
                                 char** json_out);
CM_API cm_status cm_guard_enforce(const cm_message* msg, const cm_policy* policy, int* accept,
                                  char** json_out);
CM_API cm_status cm_guard_sanitize(const cm_message* msg, const cm_keyring* ring, char** out);
CM_API cm_status cm_guard_signature_coverage(const cm_message* msg, int* accept,
                                             char** json_out);

CM_API cm_status cm_sha256_hex(const void* data, size_t len, char** out);

CM_API cm_status cm_demo_run(const cm_profile* const* profiles, size_t n, uint64_t seed,
                             int* passed, char** json_out);

#ifdef __cplusplus
}
#endif

#endif
