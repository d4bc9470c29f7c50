#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "covertmail/mime.hpp"

// Builders for covert-content attack messages: decryption oracles that wrap
// captured ciphertexts under attacker markup, and signing oracles whose
// displayed text depends on the viewer.
namespace covertmail::forge {

inline constexpr std::string_view kHtmlDecoy =
    "<b>Hello Johnny,</b>\r\nI'm interested in your work. Could you explain to me how...";
inline constexpr std::string_view kTextDecoy =
    "Hello Johnny,\r\nI'm interested in your work. Could you explain to me how...";
inline constexpr std::string_view kShortDecoy = "What's up Johnny?";
inline constexpr std::string_view kIframeOpen = "<iframe height=\"1\" frameborder=\"0\">";
inline constexpr std::string_view kCidStyle = "<style>fieldset ,br{display:none}</style>";

struct ForgeSpec {
  std::string from_addr = "eve@evil.com";
  std::string to_addr = "johnny@good.com";
  // Empty selects a per-method default.
  std::string decoy;
  std::uint64_t seed = 0;
  std::string subject;
  // Appends a trailing attacker part that closes the hiding container.
  bool close_container = false;
  // Fixed root boundary instead of the generated one.
  std::optional<std::string> boundary;
};

struct NewlinePadding { unsigned count = 40; };
struct Iframe {};
struct HtmlComment {};
struct AudioElement {};
struct CanvasElement {};
struct CidReference {};

using HidingMethod =
    std::variant<NewlinePadding, Iframe, HtmlComment, AudioElement, CanvasElement, CidReference>;

// "newline", "iframe", "comment", "audio", "canvas", "cid".
std::string method_name(const HidingMethod& method);
HidingMethod parse_method(std::string_view name, unsigned newline_count = 40);
std::vector<HidingMethod> all_methods();

struct MediaWidth {
  int hide_below_px = 834;
  int show_from_px = 835;
};
struct SupportsFeature {
  std::string property;
  std::string value;
};
struct DocumentUrlPrefix { std::string url; };
struct ProprietaryClient { std::string token; };  // wlm, mso, owa or moz

using SigningCondition =
    std::variant<MediaWidth, SupportsFeature, DocumentUrlPrefix, ProprietaryClient>;

// CLI form: `media:834:835`, `supports:display:flex`,
// `document:imap://general@good.com`, `client:mso`.
SigningCondition parse_condition(std::string_view text);
std::string condition_name(const SigningCondition& condition);

mime::MimeEntity forge_decryption_oracle(const ForgeSpec& spec,
                                         const std::vector<mime::MimeEntity>& ciphertexts,
                                         const HidingMethod& method);

mime::MimeEntity forge_signing_oracle(const ForgeSpec& spec, std::string_view visible_text,
                                      std::string_view covert_text,
                                      const SigningCondition& condition);

enum class BlindingProperty { Display, Visibility, Opacity, ClipPath, Position, Color, FontSize };
enum class BlindingMode { Show, Hide };

inline constexpr std::array kBlindingProperties = {
    BlindingProperty::Display,  BlindingProperty::Visibility, BlindingProperty::Opacity,
    BlindingProperty::ClipPath, BlindingProperty::Position,   BlindingProperty::Color,
    BlindingProperty::FontSize};

std::string_view property_name(BlindingProperty p) noexcept;
// Throws UnknownProperty.
BlindingProperty parse_blinding_property(std::string_view name);

// `property: value;` text, e.g. hide(display) is `display: none;`.
std::string blinding_declaration(BlindingProperty property, BlindingMode mode);

}  // namespace covertmail::forge
