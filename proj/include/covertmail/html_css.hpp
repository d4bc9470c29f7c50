#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// A small tag-soup HTML model plus the CSS subset email attacks rely on:
// conditional at-rules, a four-bucket cascade and the hiding properties.
namespace covertmail::html {

struct DomNode {
  enum class Kind { Document, Element, Text, Comment };

  Kind kind = Kind::Document;
  std::string tag;  // lowercase, elements only
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // Text: decoded content. Comment: payload.
  std::vector<DomNode> children;
  // Element still open at end of input, or `<!--` without `-->`.
  bool unterminated = false;

  static DomNode element(std::string tag,
                         std::vector<std::pair<std::string, std::string>> attrs = {},
                         std::vector<DomNode> children = {});
  static DomNode text_node(std::string text);
  static DomNode comment(std::string payload);

  std::optional<std::string_view> attr(std::string_view name) const;
  bool has_class(std::string_view name) const;

  bool operator==(const DomNode&) const = default;
};

// Never fails. Unclosed iframe/audio/canvas swallow everything after them;
// unclosed script/style and `<!--` swallow the rest of the input as text.
DomNode parse_html(std::string_view text);
std::string serialize_html(const DomNode& node);

std::string escape_text(std::string_view text);
std::string decode_entities(std::string_view text);

// Elements whose content never reaches the rendered text.
bool is_hiding_container(std::string_view tag);

struct Declaration {
  std::string property;  // lowercase
  std::string value;
  bool important = false;

  bool operator==(const Declaration&) const = default;
};

struct SimpleSelector {
  enum class Kind { Universal, Tag, Class, AttrPresence };
  Kind kind = Kind::Universal;
  std::string name;

  bool operator==(const SimpleSelector&) const = default;
};

// A descendant chain: the last element is the subject, the others must match
// ancestors in order. A single entry is a plain selector.
struct Selector {
  std::vector<SimpleSelector> chain;

  // 0 universal, 1 tag, 2 class/attribute; the highest bucket in the chain.
  int bucket() const;
  std::string to_string() const;

  bool operator==(const Selector&) const = default;
};

struct Rule {
  Selector selector;
  std::vector<Declaration> declarations;
};

struct MediaMaxDeviceWidth { int px; };
struct MediaMinDeviceWidth { int px; };
struct Supports { std::vector<std::pair<std::string, std::string>> all_of; };
struct MozDocumentUrlPrefix { std::string prefix; };
struct ProprietaryComment { std::string token; };
// Media types or features this engine does not evaluate (e.g. `print`).
struct NeverMatches { std::string text; };

using ConditionAtom = std::variant<MediaMaxDeviceWidth, MediaMinDeviceWidth, Supports,
                                   MozDocumentUrlPrefix, ProprietaryComment, NeverMatches>;

// Conjunction of atoms; empty means unconditional.
struct Condition {
  std::vector<ConditionAtom> all_of;

  bool unconditional() const { return all_of.empty(); }
  std::string to_string() const;
};

struct ConditionalRule {
  Condition condition;
  Rule rule;
};

// One `@media` / `@supports` / `@-moz-document` block as written.
struct ConditionalBlock {
  std::string keyword;  // "media", "supports", "-moz-document", "document"
  std::string prelude;
  Condition condition;
};

struct StyleSheet {
  std::vector<ConditionalRule> rules;
  std::vector<ConditionalBlock> blocks;
  std::vector<std::string> warnings;

  void append(StyleSheet other);
};

StyleSheet parse_css(std::string_view text);
std::vector<Declaration> parse_declarations(std::string_view block);

struct DeviceProfile {
  int device_width_px = 1024;
  std::set<std::pair<std::string, std::string>> supported_features;
  std::string document_url;
  std::set<std::string> client_tokens;  // subset of {wlm, mso, owa, moz}
  bool ignores_conditional_css = false;
};

// Property/value pairs used to fingerprint `@supports` handling.
const std::vector<std::pair<std::string, std::string>>& representative_feature_pairs();

bool condition_holds(const Condition& condition, const DeviceProfile& profile);

struct ConditionalComment {
  std::string expression;  // e.g. "mso", "IE"
  std::string token;       // client token it activates ("mso", "wlm", ...)
  std::string inner_html;
};

// `[if mso]>...<![endif]` comment payloads. Negated expressions are not
// recognised.
std::optional<ConditionalComment> parse_conditional_comment(std::string_view payload);

// Every `<style>` element in document order, including those inside
// conditional comments (their rules gain a ProprietaryComment condition).
StyleSheet collect_styles(const DomNode& dom);

std::string visible_text(const DomNode& dom, const std::vector<ConditionalRule>& rules,
                         const DeviceProfile& profile);
std::string visible_text(const DomNode& dom, const DeviceProfile& profile);

// All text except style/script contents and comments, line structure kept.
std::string strip_to_ascii(const DomNode& dom);

// Off-screen cutoff for `position:absolute` blinding.
inline constexpr double kOffscreenPx = -999.0;

// Declarations in `block` that hide content, formatted `property: value`.
// `position` counts only together with an off-screen `top`/`left` in the
// same block.
std::vector<std::string> hiding_declarations(const std::vector<Declaration>& block);

// Copy of `dom` with `<style>` elements and conditional comments removed and
// the declarations active under `profile` written into each element's
// `style` attribute.
DomNode inline_styles(const DomNode& dom, const std::vector<ConditionalRule>& rules,
                      const DeviceProfile& profile);

// Copy of `dom` without `<style>` elements and conditional comments.
DomNode strip_styles(const DomNode& dom);

}  // namespace covertmail::html
