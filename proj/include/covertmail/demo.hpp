#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "covertmail/client_sim.hpp"
#include "covertmail/report.hpp"

// End-to-end walkthrough: iframe decryption oracle, cid oracle, the
// device-dependent signed reply, and the method x profile leak matrix.
namespace covertmail::demo {

inline constexpr std::string_view kSecret = "Secret message, for Johnny's eye only...";
inline constexpr std::string_view kVictim = "johnny@good.com";
inline constexpr std::string_view kAttacker = "eve@evil.com";
inline constexpr std::string_view kReplyBody = "Dear Eve, ...";

struct DemoOutcome {
  report::json results;
  bool passed = false;
};

// Needs the profiles merge-html-keepstyle, mobile-keepstyle and desktop-wide;
// every profile with declared expectations joins the matrix.
DemoOutcome run(const std::vector<client::ClientProfile>& profiles, std::uint64_t seed = 0);

}  // namespace covertmail::demo
