#include "covertmail/forge.hpp"

#include <algorithm>

#include "covertmail/codec.hpp"
#include "covertmail/error.hpp"
#include "covertmail/html_css.hpp"

namespace covertmail::forge {

using mime::ContentType;
using mime::HeaderField;
using mime::MimeEntity;

namespace {

constexpr std::string_view kCrlf = "\r\n";
constexpr std::string_view kShowCovert =
    ".covert {visibility: visible !important; position: absolute; top: 8px; left: 8px;}";

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_address(std::string_view addr, std::string_view what) {
  if (std::count(addr.begin(), addr.end(), '@') != 1)
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " address must contain exactly one '@': " + std::string(addr));
  if (addr.find_first_of("\r\n") != std::string_view::npos)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " address contains a line break");
}

std::vector<HeaderField> envelope(const ForgeSpec& spec) {
  check_address(spec.from_addr, "from");
  check_address(spec.to_addr, "to");
  std::vector<HeaderField> h = {{"From", spec.from_addr}, {"To", spec.to_addr}};
  if (!spec.subject.empty()) h.push_back({"Subject", spec.subject});
  return h;
}

MimeEntity html_part(std::string content) {
  return MimeEntity::leaf({{"Content-Type", "text/html"}}, std::move(content));
}

MimeEntity multipart_root(const ForgeSpec& spec, std::string_view subtype,
                          std::vector<MimeEntity> children) {
  ContentType ct;
  ct.primary = "multipart";
  ct.sub = std::string(subtype);
  ct.params = {{"boundary", spec.boundary ? *spec.boundary
                                          : mime::make_boundary(spec.seed, 0, children)}};
  auto headers = envelope(spec);
  headers.push_back({"Content-Type", ct.to_string()});
  return MimeEntity::multipart(std::move(headers), std::move(children));
}

std::string decoy_or(const ForgeSpec& spec, std::string_view fallback) {
  return spec.decoy.empty() ? std::string(fallback) : spec.decoy;
}

// Opening markup, closing markup.
std::pair<std::string_view, std::string_view> container_tags(const HidingMethod& method) {
  return std::visit(
      overloaded{
          [](const Iframe&) { return std::pair{kIframeOpen, std::string_view("</iframe>")}; },
          [](const HtmlComment&) {
            return std::pair{std::string_view("<!--"), std::string_view("-->")};
          },
          [](const AudioElement&) {
            return std::pair{std::string_view("<audio>"), std::string_view("</audio>")};
          },
          [](const CanvasElement&) {
            return std::pair{std::string_view("<canvas>"), std::string_view("</canvas>")};
          },
          [](const auto&) { return std::pair{std::string_view(), std::string_view()}; },
      },
      method);
}

std::string covert_block(std::string_view condition_open, std::string_view indent) {
  std::string out(condition_open);
  out += " {\r\n";
  out += indent;
  out += "* {visibility: hidden;}\r\n";
  out += indent;
  out += kShowCovert;
  out += "\r\n}\r\n";
  return out;
}

std::string covert_div(std::string_view extra_class, std::string_view covert) {
  std::string cls = "covert";
  if (!extra_class.empty()) cls += " " + std::string(extra_class);
  return "<div class=\"" + cls + "\" style=\"visibility: hidden\">" + html::escape_text(covert) +
         "</div>";
}

}  // namespace

std::string method_name(const HidingMethod& method) {
  return std::visit(overloaded{
                        [](const NewlinePadding&) { return std::string("newline"); },
                        [](const Iframe&) { return std::string("iframe"); },
                        [](const HtmlComment&) { return std::string("comment"); },
                        [](const AudioElement&) { return std::string("audio"); },
                        [](const CanvasElement&) { return std::string("canvas"); },
                        [](const CidReference&) { return std::string("cid"); },
                    },
                    method);
}

HidingMethod parse_method(std::string_view name, unsigned newline_count) {
  std::string n = codec::to_lower(name);
  if (n == "newline" || n == "newlines") {
    if (newline_count == 0)
      throw Error(ErrorCode::InvalidArgument, "newline padding needs at least one newline");
    return NewlinePadding{newline_count};
  }
  if (n == "iframe") return Iframe{};
  if (n == "comment") return HtmlComment{};
  if (n == "audio") return AudioElement{};
  if (n == "canvas") return CanvasElement{};
  if (n == "cid") return CidReference{};
  throw Error(ErrorCode::InvalidArgument, "unknown hiding method: " + std::string(name));
}

std::vector<HidingMethod> all_methods() {
  return {NewlinePadding{}, Iframe{}, HtmlComment{}, AudioElement{}, CanvasElement{},
          CidReference{}};
}

SigningCondition parse_condition(std::string_view text) {
  std::size_t colon = text.find(':');
  std::string kind = codec::to_lower(text.substr(0, colon));
  std::string_view rest = colon == std::string_view::npos ? std::string_view() : text.substr(colon + 1);
  auto fail = [&]() -> SigningCondition {
    throw Error(ErrorCode::InvalidArgument, "invalid signing condition: " + std::string(text));
  };
  if (kind == "media") {
    std::size_t sep = rest.find(':');
    if (sep == std::string_view::npos) return fail();
    try {
      MediaWidth m{std::stoi(std::string(rest.substr(0, sep))),
                   std::stoi(std::string(rest.substr(sep + 1)))};
      if (m.hide_below_px <= 0 || m.hide_below_px >= m.show_from_px) return fail();
      return m;
    } catch (const std::logic_error&) {
      return fail();
    }
  }
  if (kind == "supports") {
    std::size_t sep = rest.find(':');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 == rest.size()) return fail();
    return SupportsFeature{std::string(rest.substr(0, sep)), std::string(rest.substr(sep + 1))};
  }
  if (kind == "document") {
    if (rest.empty() || rest.find('"') != std::string_view::npos) return fail();
    return DocumentUrlPrefix{std::string(rest)};
  }
  if (kind == "client") {
    std::string token = codec::to_lower(rest);
    if (token != "wlm" && token != "mso" && token != "owa" && token != "moz") return fail();
    return ProprietaryClient{token};
  }
  return fail();
}

std::string condition_name(const SigningCondition& condition) {
  return std::visit(
      overloaded{
          [](const MediaWidth& m) {
            return "media:" + std::to_string(m.hide_below_px) + ":" + std::to_string(m.show_from_px);
          },
          [](const SupportsFeature& s) { return "supports:" + s.property + ":" + s.value; },
          [](const DocumentUrlPrefix& d) { return "document:" + d.url; },
          [](const ProprietaryClient& p) { return "client:" + p.token; },
      },
      condition);
}

MimeEntity forge_decryption_oracle(const ForgeSpec& spec, const std::vector<MimeEntity>& ciphertexts,
                                   const HidingMethod& method) {
  const bool cid = std::holds_alternative<CidReference>(method);
  if (ciphertexts.empty())
    throw Error(cid ? ErrorCode::IncompatibleMethod : ErrorCode::InvalidCiphertext,
                "at least one ciphertext is required");
  for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
    auto hit = mime::encrypted_node(ciphertexts[i]);
    if (!hit)
      throw Error(ErrorCode::InvalidCiphertext,
                  "ciphertext " + std::to_string(i) + " is not an encrypted entity");
  }

  std::vector<MimeEntity> children;
  children.reserve(ciphertexts.size() + 2);

  if (cid) {
    // One ciphertext keeps the plain `target` id; more are numbered.
    auto id = [&](std::size_t i) {
      return ciphertexts.size() == 1 ? std::string("target") : "target_" + std::to_string(i + 1);
    };
    std::string html = decoy_or(spec, kShortDecoy);
    html += kCrlf;
    for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
      html += "<img src=\"cid:" + id(i) + "\">";
      html += kCrlf;
    }
    html += kCidStyle;
    html += kCrlf;
    children.push_back(html_part(std::move(html)));
    for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
      MimeEntity part = ciphertexts[i];
      part.remove_header("Content-ID");
      part.prepend_header("Content-ID", "<" + id(i) + ">");
      children.push_back(std::move(part));
    }
    return multipart_root(spec, "related", std::move(children));
  }

  if (const auto* pad = std::get_if<NewlinePadding>(&method)) {
    if (pad->count == 0)
      throw Error(ErrorCode::InvalidArgument, "newline padding needs at least one newline");
    std::string text = decoy_or(spec, kTextDecoy);
    for (unsigned i = 0; i < pad->count; ++i) text += kCrlf;
    children.push_back(MimeEntity::leaf({{"Content-Type", "text/plain"}}, std::move(text)));
    children.insert(children.end(), ciphertexts.begin(), ciphertexts.end());
    return multipart_root(spec, "mixed", std::move(children));
  }

  auto [open, close] = container_tags(method);
  std::string html = decoy_or(spec, kHtmlDecoy);
  html += kCrlf;
  html += open;
  children.push_back(html_part(std::move(html)));
  children.insert(children.end(), ciphertexts.begin(), ciphertexts.end());
  if (spec.close_container) children.push_back(html_part(std::string(close)));
  return multipart_root(spec, "mixed", std::move(children));
}

MimeEntity forge_signing_oracle(const ForgeSpec& spec, std::string_view visible_text,
                                std::string_view covert_text, const SigningCondition& condition) {
  if (codec::trim(covert_text).empty())
    throw Error(ErrorCode::EmptyCovertText, "covert text must not be empty");
  if (visible_text == covert_text)
    throw Error(ErrorCode::InvalidArgument, "visible and covert text must differ");

  std::string css;
  std::string extra_class;
  std::string after_style;
  std::visit(
      overloaded{
          [&](const MediaWidth& m) {
            if (m.hide_below_px <= 0 || m.hide_below_px >= m.show_from_px)
              throw Error(ErrorCode::InvalidArgument,
                          "media widths must satisfy 0 < hide_below < show_from");
            css += "/* hide malicious content on mobile devices */\r\n";
            css += "@media (max-device-width: " + std::to_string(m.hide_below_px) + "px) {\r\n";
            css += "  .covert {visibility: hidden;}\r\n}\r\n";
            css += "/* but show on desktop/large-screen devices */\r\n";
            css += covert_block("@media (min-device-width: " + std::to_string(m.show_from_px) + "px)",
                                "  ");
          },
          [&](const SupportsFeature& s) {
            css += ".covert {visibility: hidden;}\r\n";
            css += covert_block("@supports (" + s.property + ": " + s.value + ")", "  ");
          },
          [&](const DocumentUrlPrefix& d) {
            css += ".covert {visibility: hidden;}\r\n";
            css += covert_block("@-moz-document url-prefix(\"" + d.url + "\")", "  ");
          },
          [&](const ProprietaryClient& p) {
            css += ".covert {visibility: hidden;}\r\n";
            const std::string show =
                "<style>* {visibility: hidden;} " + std::string(kShowCovert) + "</style>";
            if (p.token == "mso") {
              after_style = "<!--[if mso]>" + show + "<![endif]-->\r\n";
            } else if (p.token == "wlm") {
              after_style = "<!--[if IE]>" + show + "<![endif]-->\r\n";
            } else if (p.token == "owa") {
              css += ".ExternalClass, [owa] {visibility: hidden;}\r\n";
              css += ".ExternalClass .owa, [owa] .owa {visibility: visible !important;}\r\n";
              extra_class = "owa";
            } else if (p.token == "moz") {
              css += ".moz-text-html {visibility: hidden;}\r\n";
              css += ".moz-text-html .tb {visibility: visible !important;}\r\n";
              extra_class = "tb";
            } else {
              throw Error(ErrorCode::InvalidArgument, "unknown client token: " + p.token);
            }
          },
      },
      condition);

  std::string html = "<style>\r\n" + css + "</style>\r\n" + after_style + "\r\n";
  html += html::escape_text(visible_text);
  html += kCrlf;
  html += covert_div(extra_class, covert_text);

  auto headers = envelope(spec);
  headers.push_back({"Content-Type", "text/html"});
  return MimeEntity::leaf(std::move(headers), std::move(html));
}

std::string_view property_name(BlindingProperty p) noexcept {
  switch (p) {
    case BlindingProperty::Display: return "display";
    case BlindingProperty::Visibility: return "visibility";
    case BlindingProperty::Opacity: return "opacity";
    case BlindingProperty::ClipPath: return "clip-path";
    case BlindingProperty::Position: return "position";
    case BlindingProperty::Color: return "color";
    case BlindingProperty::FontSize: return "font-size";
  }
  return "";
}

BlindingProperty parse_blinding_property(std::string_view name) {
  std::string n = codec::to_lower(codec::trim(name));
  for (auto p : kBlindingProperties)
    if (property_name(p) == n) return p;
  throw Error(ErrorCode::UnknownProperty, "not a blinding property: " + std::string(name));
}

std::string blinding_declaration(BlindingProperty property, BlindingMode mode) {
  const bool hide = mode == BlindingMode::Hide;
  switch (property) {
    case BlindingProperty::Display: return hide ? "display: none;" : "display: initial;";
    case BlindingProperty::Visibility: return hide ? "visibility: hidden;" : "visibility: visible;";
    case BlindingProperty::Opacity: return hide ? "opacity: 0;" : "opacity: 1;";
    case BlindingProperty::ClipPath:
      return hide ? "clip-path: polygon(0px 0px, 0px 0px, 0px 0px, 0px 0px);"
                  : "clip-path: initial;";
    case BlindingProperty::Position:
      return hide ? "position: absolute; top: -9999px; left: -9999px;" : "position: static;";
    case BlindingProperty::Color: return hide ? "color: transparent;" : "color: initial;";
    case BlindingProperty::FontSize: return hide ? "font-size: 0;" : "font-size: initial;";
  }
  throw Error(ErrorCode::UnknownProperty, "unknown blinding property");
}

}  // namespace covertmail::forge
