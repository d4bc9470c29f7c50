#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "covertmail/client_sim.hpp"
#include "covertmail/crypto.hpp"
#include "covertmail/forge.hpp"
#include "covertmail/mime.hpp"

namespace testsupport {

using covertmail::mime::MimeEntity;

inline const std::string kSecret = "Secret message, for Johnny's eye only...";
inline const std::string kJohnny = "johnny@good.com";
inline const std::string kEve = "eve@evil.com";
inline const std::string kVisible = "What's up Johnny?";
inline const std::string kCovert = "I hereby declare war.";

covertmail::crypto::KeyRef johnny();
covertmail::crypto::Keyring johnny_keys();

// Shipped profiles from the source tree.
std::vector<covertmail::client::ClientProfile> shipped_profiles();
covertmail::client::ClientProfile shipped_profile(std::string_view name);

// The iframe example message with a real S/MIME envelope of kSecret in place
// of the ciphertext placeholder.
std::string iframe_example_bytes();
// The device-width signing example, verbatim.
std::string width_example_bytes();

// Two-level partially encrypted tree: one S/MIME and one PGP/MIME leaf.
MimeEntity two_level_tree();

// Plain text, unconditional styled HTML, encrypted-root and signed mail.
std::vector<MimeEntity> benign_corpus();

struct Forged {
  std::string label;
  MimeEntity message;
  std::vector<std::string> secrets;  // decryption oracles
  std::string covert;                // signing oracles
  bool decryption = true;
};

// Every hiding method and every signing condition, two secrets per
// decryption oracle.
std::vector<Forged> forge_matrix(std::uint64_t seed = 0);

// Eight signing conditions: four standard, four client tokens.
std::vector<covertmail::forge::SigningCondition> signing_conditions();

}  // namespace testsupport
