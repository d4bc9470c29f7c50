#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "covertmail/codec.hpp"
#include "covertmail/html_css.hpp"

namespace covertmail::html {

using codec::iequals;
using codec::to_lower;
using codec::trim;

namespace {

std::string strip_comments(std::string_view css) {
  std::string out;
  out.reserve(css.size());
  std::size_t i = 0;
  while (i < css.size()) {
    if (css.substr(i, 2) == "/*") {
      std::size_t end = css.find("*/", i + 2);
      if (end == std::string_view::npos) break;
      i = end + 2;
      out.push_back(' ');
      continue;
    }
    out.push_back(css[i++]);
  }
  return out;
}

// Index of the first `stop` char outside parentheses and quotes, or npos.
std::size_t scan_until(std::string_view s, std::size_t pos, std::string_view stops) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = pos; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '(') ++depth;
    else if (c == ')' && depth > 0) --depth;
    else if (depth == 0 && stops.find(c) != std::string_view::npos) return i;
  }
  return std::string_view::npos;
}

// Index just past the `}` that closes the block opened at `open`.
std::size_t skip_block(std::string_view s, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return s.size();
}

std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t at = scan_until(s, pos, std::string_view(&sep, 1));
    out.push_back(s.substr(pos, at == std::string_view::npos ? s.npos : at - pos));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

std::optional<double> parse_number(std::string_view v, std::string* unit = nullptr) {
  v = trim(v);
  if (v.empty()) return std::nullopt;
  std::size_t end = 0;
  while (end < v.size() && (std::isdigit(static_cast<unsigned char>(v[end])) || v[end] == '.' ||
                            v[end] == '-' || v[end] == '+'))
    ++end;
  if (end == 0) return std::nullopt;
  std::string num(v.substr(0, end));
  double out = 0;
  try {
    std::size_t used = 0;
    out = std::stod(num, &used);
    if (used != num.size()) return std::nullopt;
  } catch (...) {
    return std::nullopt;
  }
  if (unit) *unit = to_lower(trim(v.substr(end)));
  return out;
}

// Pixel value of a CSS length; em/rem assume a 16px font.
std::optional<double> parse_px(std::string_view v) {
  std::string unit;
  auto n = parse_number(v, &unit);
  if (!n) return std::nullopt;
  if (unit.empty() || unit == "px") return *n;
  if (unit == "em" || unit == "rem") return *n * 16.0;
  if (unit == "pt") return *n * 4.0 / 3.0;
  if (unit == "cm") return *n * 96.0 / 2.54;
  if (unit == "mm") return *n * 96.0 / 25.4;
  if (unit == "in") return *n * 96.0;
  return std::nullopt;
}

std::string normalize_value(std::string_view v) { return to_lower(codec::collapse_whitespace(v)); }

std::optional<SimpleSelector> parse_simple(std::string_view s) {
  if (s == "*") return SimpleSelector{SimpleSelector::Kind::Universal, {}};
  auto ident = [](std::string_view v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
  };
  if (s.front() == '.' && ident(s.substr(1)))
    return SimpleSelector{SimpleSelector::Kind::Class, std::string(s.substr(1))};
  if (s.front() == '[' && s.back() == ']' && ident(trim(s.substr(1, s.size() - 2))))
    return SimpleSelector{SimpleSelector::Kind::AttrPresence,
                          to_lower(trim(s.substr(1, s.size() - 2)))};
  if (std::isalpha(static_cast<unsigned char>(s.front())) && ident(s))
    return SimpleSelector{SimpleSelector::Kind::Tag, to_lower(s)};
  return std::nullopt;
}

std::optional<Selector> parse_selector(std::string_view text) {
  Selector sel;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    if (text[pos] == '[') {
      end = text.find(']', pos);
      if (end == std::string_view::npos) return std::nullopt;
      ++end;
    } else {
      while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    }
    auto simple = parse_simple(text.substr(pos, end - pos));
    if (!simple) return std::nullopt;
    sel.chain.push_back(std::move(*simple));
    pos = end;
  }
  if (sel.chain.empty()) return std::nullopt;
  return sel;
}

std::optional<ConditionAtom> media_feature(std::string_view feature, std::string& warn) {
  // feature is the text inside the parentheses
  std::size_t colon = feature.find(':');
  if (colon == std::string_view::npos) {
    warn = "unsupported media feature: " + std::string(feature);
    return NeverMatches{std::string(feature)};
  }
  std::string name = to_lower(trim(feature.substr(0, colon)));
  auto px = parse_px(feature.substr(colon + 1));
  if (px && *px > 0) {
    int w = static_cast<int>(std::lround(*px));
    if (name == "max-device-width" || name == "max-width") return MediaMaxDeviceWidth{w};
    if (name == "min-device-width" || name == "min-width") return MediaMinDeviceWidth{w};
  }
  warn = "unsupported media feature: " + std::string(feature);
  return NeverMatches{std::string(feature)};
}

std::vector<ConditionAtom> media_condition(std::string_view prelude,
                                           std::vector<std::string>& warnings) {
  std::vector<ConditionAtom> atoms;
  if (scan_until(prelude, 0, ",") != std::string_view::npos) {
    warnings.push_back("media query lists are not supported: " + std::string(trim(prelude)));
    atoms.push_back(NeverMatches{std::string(trim(prelude))});
    return atoms;
  }
  std::size_t pos = 0;
  while (pos < prelude.size()) {
    while (pos < prelude.size() && std::isspace(static_cast<unsigned char>(prelude[pos]))) ++pos;
    if (pos >= prelude.size()) break;
    if (prelude[pos] == '(') {
      std::size_t close = scan_until(prelude, pos + 1, ")");
      std::size_t end = close == std::string_view::npos ? prelude.size() : close;
      std::string warn;
      auto atom = media_feature(prelude.substr(pos + 1, end - pos - 1), warn);
      if (!warn.empty()) warnings.push_back(warn);
      if (atom) atoms.push_back(std::move(*atom));
      pos = end + 1;
      continue;
    }
    std::size_t end = pos;
    while (end < prelude.size() && !std::isspace(static_cast<unsigned char>(prelude[end])) &&
           prelude[end] != '(')
      ++end;
    std::string word = to_lower(prelude.substr(pos, end - pos));
    pos = end;
    if (word == "and" || word == "only" || word == "screen" || word == "all") continue;
    if (word != "print" && word != "speech")
      warnings.push_back("unsupported media query token: " + word);
    atoms.push_back(NeverMatches{word});
  }
  return atoms;
}

std::vector<ConditionAtom> supports_condition(std::string_view prelude,
                                              std::vector<std::string>& warnings) {
  Supports sup;
  std::size_t pos = 0;
  while (pos < prelude.size()) {
    while (pos < prelude.size() && std::isspace(static_cast<unsigned char>(prelude[pos]))) ++pos;
    if (pos >= prelude.size()) break;
    if (prelude[pos] == '(') {
      std::size_t close = scan_until(prelude, pos + 1, ")");
      std::size_t end = close == std::string_view::npos ? prelude.size() : close;
      std::string_view inner = prelude.substr(pos + 1, end - pos - 1);
      std::size_t colon = inner.find(':');
      if (colon == std::string_view::npos) {
        warnings.push_back("unsupported @supports clause: " + std::string(inner));
        return {NeverMatches{std::string(prelude)}};
      }
      sup.all_of.emplace_back(to_lower(trim(inner.substr(0, colon))),
                              normalize_value(inner.substr(colon + 1)));
      pos = end + 1;
      continue;
    }
    std::size_t end = pos;
    while (end < prelude.size() && !std::isspace(static_cast<unsigned char>(prelude[end])) &&
           prelude[end] != '(')
      ++end;
    std::string word = to_lower(prelude.substr(pos, end - pos));
    pos = end;
    if (word == "and") continue;
    warnings.push_back("only conjunctions are supported in @supports: " + word);
    return {NeverMatches{std::string(prelude)}};
  }
  if (sup.all_of.empty()) return {NeverMatches{std::string(prelude)}};
  return {std::move(sup)};
}

std::vector<ConditionAtom> document_condition(std::string_view prelude,
                                              std::vector<std::string>& warnings) {
  std::string_view p = trim(prelude);
  if (codec::starts_with_icase(p, "url-prefix(") && p.back() == ')') {
    return {MozDocumentUrlPrefix{unquote(p.substr(11, p.size() - 12))}};
  }
  warnings.push_back("unsupported @document condition: " + std::string(p));
  return {NeverMatches{std::string(p)}};
}

void parse_rules(std::string_view css, std::size_t& pos, const Condition& cond, StyleSheet& out,
                 bool nested);

void parse_at_rule(std::string_view css, std::size_t& pos, const Condition& cond,
                   StyleSheet& out) {
  std::size_t p = pos + 1;
  std::size_t name_begin = p;
  while (p < css.size() && (std::isalnum(static_cast<unsigned char>(css[p])) || css[p] == '-'))
    ++p;
  std::string keyword = to_lower(css.substr(name_begin, p - name_begin));
  std::size_t stop = scan_until(css, p, "{;}");
  if (stop == std::string_view::npos) {
    out.warnings.push_back("unterminated @" + keyword);
    pos = css.size();
    return;
  }
  std::string prelude(trim(css.substr(p, stop - p)));
  if (css[stop] != '{') {
    out.warnings.push_back("dropped @" + keyword + " statement");
    pos = css[stop] == ';' ? stop + 1 : stop;
    return;
  }

  std::vector<ConditionAtom> atoms;
  if (keyword == "media") atoms = media_condition(prelude, out.warnings);
  else if (keyword == "supports") atoms = supports_condition(prelude, out.warnings);
  else if (keyword == "-moz-document" || keyword == "document")
    atoms = document_condition(prelude, out.warnings);
  else {
    out.warnings.push_back("dropped @" + keyword + " block");
    pos = skip_block(css, stop);
    return;
  }

  Condition inner = cond;
  inner.all_of.insert(inner.all_of.end(), atoms.begin(), atoms.end());
  out.blocks.push_back({keyword, prelude, inner});
  pos = stop + 1;
  parse_rules(css, pos, inner, out, true);
}

void parse_rules(std::string_view css, std::size_t& pos, const Condition& cond, StyleSheet& out,
                 bool nested) {
  while (pos < css.size()) {
    while (pos < css.size() && (std::isspace(static_cast<unsigned char>(css[pos])) ||
                                css[pos] == ';'))
      ++pos;
    if (pos >= css.size()) return;
    if (css[pos] == '}') {
      ++pos;
      if (nested) return;
      continue;
    }
    if (css[pos] == '@') {
      parse_at_rule(css, pos, cond, out);
      continue;
    }
    if (css.substr(pos, 4) == "<!--" || css.substr(pos, 3) == "-->") {
      pos += css[pos] == '<' ? 4 : 3;
      continue;
    }
    std::size_t open = scan_until(css, pos, "{}");
    if (open == std::string_view::npos || css[open] == '}') {
      out.warnings.push_back("stray text in stylesheet");
      pos = open == std::string_view::npos ? css.size() : open;
      continue;
    }
    std::string_view selectors = css.substr(pos, open - pos);
    std::size_t close = scan_until(css, open + 1, "}");
    std::size_t end = close == std::string_view::npos ? css.size() : close;
    std::vector<Declaration> decls = parse_declarations(css.substr(open + 1, end - open - 1));
    pos = close == std::string_view::npos ? css.size() : close + 1;

    for (auto part : split_top(selectors, ',')) {
      auto sel = parse_selector(trim(part));
      if (!sel) {
        out.warnings.push_back("unsupported selector: " + std::string(trim(part)));
        continue;
      }
      out.rules.push_back({cond, Rule{std::move(*sel), decls}});
    }
  }
}

bool matches_simple(const SimpleSelector& s, const DomNode& n) {
  if (n.kind == DomNode::Kind::Document) return s.kind == SimpleSelector::Kind::Universal;
  switch (s.kind) {
    case SimpleSelector::Kind::Universal: return true;
    case SimpleSelector::Kind::Tag: return n.tag == s.name;
    case SimpleSelector::Kind::Class: return n.has_class(s.name);
    case SimpleSelector::Kind::AttrPresence: return n.attr(s.name).has_value();
  }
  return false;
}

bool matches(const Selector& sel, const DomNode& n, const std::vector<const DomNode*>& ancestors) {
  if (sel.chain.empty() || !matches_simple(sel.chain.back(), n)) return false;
  std::size_t want = sel.chain.size() - 1;
  std::size_t a = ancestors.size();
  while (want > 0 && a > 0) {
    if (matches_simple(sel.chain[want - 1], *ancestors[a - 1])) --want;
    --a;
  }
  return want == 0;
}

bool is_hidden_visibility(std::string_view v) { return v == "hidden" || v == "collapse"; }

bool is_transparent_color(std::string_view raw) {
  std::string v = normalize_value(raw);
  if (v == "transparent") return true;
  if ((v.starts_with("rgba(") || v.starts_with("hsla(")) && v.back() == ')') {
    auto parts = split_top(std::string_view(v).substr(5, v.size() - 6), ',');
    if (parts.size() == 4) {
      std::string unit;
      auto alpha = parse_number(parts[3], &unit);
      return alpha && *alpha <= 0.0;
    }
  }
  if (v.size() == 9 && v[0] == '#') return v.substr(7) == "00";
  if (v.size() == 5 && v[0] == '#') return v[4] == '0';
  return false;
}

bool is_zero_font(std::string_view raw) {
  std::string unit;
  auto n = parse_number(raw, &unit);
  return n && *n <= 0.0;
}

bool is_zero_opacity(std::string_view raw) {
  std::string unit;
  auto n = parse_number(raw, &unit);
  return n && *n <= 0.0;
}

// polygon() whose points all coincide, circle(0), or inset() of 50% or more.
bool is_collapsed_clip(std::string_view raw) {
  std::string v = normalize_value(raw);
  auto args = [&](std::string_view fn) -> std::optional<std::string_view> {
    if (v.starts_with(fn) && v.back() == ')')
      return std::string_view(v).substr(fn.size(), v.size() - fn.size() - 1);
    return std::nullopt;
  };
  if (auto a = args("polygon(")) {
    std::vector<std::pair<double, double>> pts;
    for (auto point : split_top(*a, ',')) {
      point = trim(point);
      std::size_t sp = point.find(' ');
      if (sp == std::string_view::npos) return false;
      auto x = parse_number(point.substr(0, sp));
      auto y = parse_number(point.substr(sp + 1));
      if (!x || !y) return false;
      pts.emplace_back(*x, *y);
    }
    return !pts.empty() && std::all_of(pts.begin(), pts.end(),
                                       [&](const auto& p) { return p == pts.front(); });
  }
  if (auto a = args("circle(")) {
    auto r = parse_number(a->substr(0, a->find(' ')));
    return r && *r <= 0.0;
  }
  if (auto a = args("inset(")) {
    std::string unit;
    auto r = parse_number(a->substr(0, a->find(' ')), &unit);
    return r && unit == "%" && *r >= 50.0;
  }
  return false;
}

bool is_offscreen(const std::map<std::string, Declaration>& decls) {
  auto pos = decls.find("position");
  if (pos == decls.end()) return false;
  std::string p = normalize_value(pos->second.value);
  if (p != "absolute" && p != "fixed") return false;
  for (const char* side : {"top", "left"}) {
    auto it = decls.find(side);
    if (it == decls.end()) continue;
    auto px = parse_px(it->second.value);
    if (px && *px < kOffscreenPx) return true;
  }
  return false;
}

struct ActiveRule {
  const Rule* rule;
  std::size_t order;
};

std::vector<ActiveRule> active_rules(const std::vector<ConditionalRule>& rules,
                                     const DeviceProfile& profile) {
  std::vector<ActiveRule> out;
  std::size_t order = 0;
  for (const auto& cr : rules) {
    if (condition_holds(cr.condition, profile)) out.push_back({&cr.rule, order});
    order += cr.rule.declarations.size();
  }
  return out;
}

// Winning declaration per property: !important, then bucket (inline = 3),
// then source order.
std::map<std::string, Declaration> cascade(const DomNode& n,
                                           const std::vector<const DomNode*>& ancestors,
                                           const std::vector<ActiveRule>& rules) {
  struct Rank {
    bool important;
    int bucket;
    std::size_t order;
    auto operator<=>(const Rank&) const = default;
  };
  std::map<std::string, std::pair<Rank, Declaration>> best;
  auto offer = [&](const Declaration& d, int bucket, std::size_t order) {
    Rank r{d.important, bucket, order};
    auto it = best.find(d.property);
    if (it == best.end() || it->second.first < r) best[d.property] = {r, d};
  };
  if (n.kind == DomNode::Kind::Element || n.kind == DomNode::Kind::Document) {
    for (const auto& ar : rules) {
      if (!matches(ar.rule->selector, n, ancestors)) continue;
      int bucket = ar.rule->selector.bucket();
      for (std::size_t i = 0; i < ar.rule->declarations.size(); ++i)
        offer(ar.rule->declarations[i], bucket, ar.order + i);
    }
  }
  if (auto style = n.attr("style")) {
    auto decls = parse_declarations(*style);
    for (std::size_t i = 0; i < decls.size(); ++i)
      offer(decls[i], 3, static_cast<std::size_t>(-1) / 2 + i);
  }
  std::map<std::string, Declaration> out;
  for (auto& [k, v] : best) out.emplace(k, std::move(v.second));
  return out;
}

bool subtree_hidden(const std::map<std::string, Declaration>& d) {
  auto val = [&](const char* prop) -> std::optional<std::string> {
    auto it = d.find(prop);
    if (it == d.end()) return std::nullopt;
    return normalize_value(it->second.value);
  };
  if (auto v = val("display"); v && *v == "none") return true;
  if (auto it = d.find("opacity"); it != d.end() && is_zero_opacity(it->second.value)) return true;
  if (auto it = d.find("clip-path"); it != d.end() && is_collapsed_clip(it->second.value))
    return true;
  return is_offscreen(d);
}

bool is_block(std::string_view tag) {
  static constexpr std::array<std::string_view, 33> kBlocks = {
      "address", "article", "aside", "blockquote", "body", "br", "dd", "div", "dl", "dt",
      "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
      "h6", "header", "hr", "html", "li", "main", "nav", "ol", "p", "pre", "section",
      "table", "tr"};
  return std::find(kBlocks.begin(), kBlocks.end(), tag) != kBlocks.end() || tag == "ul" ||
         tag == "td" || tag == "th" || tag == "iframe" || tag == "audio" || tag == "canvas";
}

struct InheritedState {
  bool visibility_hidden = false;
  bool transparent = false;
  bool zero_font = false;
};

class VisibleWalker {
 public:
  VisibleWalker(const std::vector<ActiveRule>& rules, const DeviceProfile& profile)
      : rules_(rules), profile_(profile) {}

  std::string run(const DomNode& root) {
    walk(root, InheritedState{});
    return codec::collapse_whitespace(out_);
  }

 private:
  void walk(const DomNode& n, InheritedState state) {
    switch (n.kind) {
      case DomNode::Kind::Text:
        if (!state.visibility_hidden && !state.transparent && !state.zero_font) out_ += n.text;
        return;
      case DomNode::Kind::Comment:
        if (!profile_.ignores_conditional_css) {
          if (auto cc = parse_conditional_comment(n.text);
              cc && profile_.client_tokens.contains(cc->token)) {
            DomNode inner = parse_html(cc->inner_html);
            for (const auto& c : inner.children) walk(c, state);
          }
        }
        return;
      case DomNode::Kind::Document:
      case DomNode::Kind::Element:
        break;
    }

    const bool block = n.kind == DomNode::Kind::Element && is_block(n.tag);
    if (block) out_ += '\n';
    if (n.kind == DomNode::Kind::Element && is_hiding_container(n.tag)) return;

    auto decls = cascade(n, ancestors_, rules_);
    if (subtree_hidden(decls)) {
      if (block) out_ += '\n';
      return;
    }
    if (auto it = decls.find("visibility"); it != decls.end()) {
      std::string v = normalize_value(it->second.value);
      if (v != "inherit") state.visibility_hidden = is_hidden_visibility(v);
    }
    if (auto it = decls.find("color"); it != decls.end()) {
      std::string v = normalize_value(it->second.value);
      if (v != "inherit") state.transparent = is_transparent_color(v);
    }
    if (auto it = decls.find("font-size"); it != decls.end()) {
      std::string v = normalize_value(it->second.value);
      if (v != "inherit") state.zero_font = is_zero_font(v);
    }

    ancestors_.push_back(&n);
    for (const auto& c : n.children) walk(c, state);
    ancestors_.pop_back();
    if (block) out_ += '\n';
  }

  const std::vector<ActiveRule>& rules_;
  const DeviceProfile& profile_;
  std::vector<const DomNode*> ancestors_;
  std::string out_;
};

void ascii_walk(const DomNode& n, bool pre, std::string& out) {
  switch (n.kind) {
    case DomNode::Kind::Text:
      if (pre) {
        for (char c : n.text)
          if (c != '\r') out += c;
      } else {
        for (char c : n.text)
          out += (c == '\r' || c == '\n' || c == '\t' || c == '\f') ? ' ' : c;
      }
      return;
    case DomNode::Kind::Comment:
      return;
    case DomNode::Kind::Document:
    case DomNode::Kind::Element:
      break;
  }
  if (n.kind == DomNode::Kind::Element && (n.tag == "style" || n.tag == "script")) return;
  const bool block = n.kind == DomNode::Kind::Element && is_block(n.tag);
  const bool child_pre = pre || n.tag == "pre";
  if (block) out += '\n';
  for (const auto& c : n.children) ascii_walk(c, child_pre, out);
  if (block) out += '\n';
}

std::string declarations_to_style(const std::map<std::string, Declaration>& decls) {
  std::string out;
  for (const auto& [prop, d] : decls) {
    if (!out.empty()) out += ' ';
    out += prop + ": " + d.value + (d.important ? " !important" : "") + ";";
  }
  return out;
}

bool is_conditional_comment(const DomNode& n) {
  return n.kind == DomNode::Kind::Comment && parse_conditional_comment(n.text).has_value();
}

void strip_styles_in_place(DomNode& n) {
  std::erase_if(n.children, [](const DomNode& c) {
    return (c.kind == DomNode::Kind::Element && c.tag == "style") || is_conditional_comment(c);
  });
  for (auto& c : n.children) strip_styles_in_place(c);
}

void inline_in_place(DomNode& n, std::vector<const DomNode*>& ancestors,
                     const std::vector<ActiveRule>& rules) {
  if (n.kind == DomNode::Kind::Element) {
    auto decls = cascade(n, ancestors, rules);
    if (!decls.empty()) {
      std::string style = declarations_to_style(decls);
      auto it = std::find_if(n.attrs.begin(), n.attrs.end(),
                             [](const auto& a) { return a.first == "style"; });
      if (it != n.attrs.end()) it->second = style;
      else n.attrs.emplace_back("style", style);
    }
  }
  ancestors.push_back(&n);
  for (auto& c : n.children) inline_in_place(c, ancestors, rules);
  ancestors.pop_back();
}

// Synthetic ancestors some clients wrap around message HTML.
DomNode wrap_for_client(const DomNode& dom, const DeviceProfile& profile) {
  DomNode body = dom;
  body.kind = DomNode::Kind::Element;
  body.tag = "div";
  if (profile.client_tokens.contains("moz"))
    body = DomNode::element("div", {{"class", "moz-text-html"}}, {std::move(body)});
  if (profile.client_tokens.contains("owa"))
    body = DomNode::element("div", {{"class", "ExternalClass"}, {"owa", ""}}, {std::move(body)});
  DomNode root;
  root.children.push_back(std::move(body));
  return root;
}

}  // namespace

int Selector::bucket() const {
  int b = 0;
  for (const auto& s : chain) {
    int v = s.kind == SimpleSelector::Kind::Universal ? 0
            : s.kind == SimpleSelector::Kind::Tag     ? 1
                                                      : 2;
    b = std::max(b, v);
  }
  return b;
}

std::string Selector::to_string() const {
  std::string out;
  for (const auto& s : chain) {
    if (!out.empty()) out += ' ';
    switch (s.kind) {
      case SimpleSelector::Kind::Universal: out += '*'; break;
      case SimpleSelector::Kind::Tag: out += s.name; break;
      case SimpleSelector::Kind::Class: out += '.' + s.name; break;
      case SimpleSelector::Kind::AttrPresence: out += '[' + s.name + ']'; break;
    }
  }
  return out;
}

std::string Condition::to_string() const {
  if (all_of.empty()) return "none";
  std::string out;
  for (const auto& atom : all_of) {
    if (!out.empty()) out += " and ";
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, MediaMaxDeviceWidth>)
            out += "max-device-width:" + std::to_string(a.px);
          else if constexpr (std::is_same_v<T, MediaMinDeviceWidth>)
            out += "min-device-width:" + std::to_string(a.px);
          else if constexpr (std::is_same_v<T, Supports>) {
            out += "supports(";
            for (std::size_t i = 0; i < a.all_of.size(); ++i)
              out += (i ? " and " : "") + a.all_of[i].first + ":" + a.all_of[i].second;
            out += ")";
          } else if constexpr (std::is_same_v<T, MozDocumentUrlPrefix>)
            out += "url-prefix:" + a.prefix;
          else if constexpr (std::is_same_v<T, ProprietaryComment>)
            out += "client:" + a.token;
          else
            out += "never:" + a.text;
        },
        atom);
  }
  return out;
}

void StyleSheet::append(StyleSheet other) {
  for (auto& r : other.rules) rules.push_back(std::move(r));
  for (auto& b : other.blocks) blocks.push_back(std::move(b));
  for (auto& w : other.warnings) warnings.push_back(std::move(w));
}

StyleSheet parse_css(std::string_view text) {
  StyleSheet out;
  const std::string css = strip_comments(text);
  std::size_t pos = 0;
  parse_rules(css, pos, Condition{}, out, false);
  return out;
}

std::vector<Declaration> parse_declarations(std::string_view block) {
  std::vector<Declaration> out;
  const std::string clean = strip_comments(block);
  for (auto item : split_top(clean, ';')) {
    std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) continue;
    std::string prop = to_lower(trim(item.substr(0, colon)));
    std::string_view value = trim(item.substr(colon + 1));
    if (prop.empty() || value.empty()) continue;
    bool important = false;
    std::size_t bang = value.rfind('!');
    if (bang != std::string_view::npos && iequals(trim(value.substr(bang + 1)), "important")) {
      important = true;
      value = trim(value.substr(0, bang));
    }
    out.push_back({std::move(prop), std::string(value), important});
  }
  return out;
}

const std::vector<std::pair<std::string, std::string>>& representative_feature_pairs() {
  static const std::vector<std::pair<std::string, std::string>> kPairs = {
      {"display", "flex"},          {"display", "grid"},
      {"display", "inline-block"},  {"position", "sticky"},
      {"position", "absolute"},     {"visibility", "hidden"},
      {"opacity", "0"},             {"clip-path", "circle(50%)"},
      {"color", "transparent"},     {"font-size", "0"},
      {"text-shadow", "none"},      {"box-shadow", "none"},
      {"transform", "rotate(0deg)"}, {"transition", "none"},
      {"animation-name", "none"},   {"filter", "blur(0)"},
      {"mix-blend-mode", "normal"}, {"object-fit", "cover"},
      {"border-radius", "0"},       {"background-clip", "text"},
      {"writing-mode", "vertical-rl"}, {"caret-color", "red"},
      {"-webkit-text-stroke", "0"}, {"-moz-appearance", "none"},
  };
  return kPairs;
}

bool condition_holds(const Condition& condition, const DeviceProfile& profile) {
  if (condition.unconditional()) return true;
  if (profile.ignores_conditional_css) return false;
  return std::all_of(condition.all_of.begin(), condition.all_of.end(), [&](const ConditionAtom& atom) {
    return std::visit(
        [&](const auto& a) -> bool {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, MediaMaxDeviceWidth>)
            return profile.device_width_px <= a.px;
          else if constexpr (std::is_same_v<T, MediaMinDeviceWidth>)
            return profile.device_width_px >= a.px;
          else if constexpr (std::is_same_v<T, Supports>)
            return std::all_of(a.all_of.begin(), a.all_of.end(), [&](const auto& pv) {
              return profile.supported_features.contains(pv);
            });
          else if constexpr (std::is_same_v<T, MozDocumentUrlPrefix>)
            return !profile.document_url.empty() && profile.document_url.starts_with(a.prefix);
          else if constexpr (std::is_same_v<T, ProprietaryComment>)
            return profile.client_tokens.contains(a.token);
          else
            return false;
        },
        atom);
  });
}

std::optional<ConditionalComment> parse_conditional_comment(std::string_view payload) {
  std::string_view p = trim(payload);
  if (!p.starts_with("[if ")) return std::nullopt;
  std::size_t close = p.find("]>");
  if (close == std::string_view::npos) return std::nullopt;
  std::string_view rest = p.substr(close + 2);
  if (!rest.ends_with("<![endif]")) return std::nullopt;

  ConditionalComment cc;
  cc.expression = std::string(trim(p.substr(4, close - 4)));
  cc.inner_html = std::string(rest.substr(0, rest.size() - 9));
  if (cc.expression.find('!') != std::string::npos) return std::nullopt;
  // The product name is the first word that is not a comparison operator.
  std::size_t pos = 0;
  std::string_view expr = cc.expression;
  while (pos < expr.size()) {
    while (pos < expr.size() && !std::isalpha(static_cast<unsigned char>(expr[pos]))) ++pos;
    std::size_t end = pos;
    while (end < expr.size() && std::isalpha(static_cast<unsigned char>(expr[end]))) ++end;
    std::string word = to_lower(expr.substr(pos, end - pos));
    pos = end;
    if (word.empty() || word == "gt" || word == "gte" || word == "lt" || word == "lte") continue;
    cc.token = word == "ie" ? "wlm" : word;
    break;
  }
  if (cc.token.empty()) return std::nullopt;
  return cc;
}

StyleSheet collect_styles(const DomNode& dom) {
  StyleSheet out;
  auto visit = [&](auto&& self, const DomNode& n) -> void {
    if (n.kind == DomNode::Kind::Element && n.tag == "style") {
      std::string css;
      for (const auto& c : n.children)
        if (c.kind == DomNode::Kind::Text) css += c.text;
      out.append(parse_css(css));
      return;
    }
    if (n.kind == DomNode::Kind::Comment) {
      if (auto cc = parse_conditional_comment(n.text)) {
        StyleSheet inner = collect_styles(parse_html(cc->inner_html));
        for (auto& r : inner.rules)
          r.condition.all_of.insert(r.condition.all_of.begin(), ProprietaryComment{cc->token});
        for (auto& b : inner.blocks)
          b.condition.all_of.insert(b.condition.all_of.begin(), ProprietaryComment{cc->token});
        out.append(std::move(inner));
      }
      return;
    }
    for (const auto& c : n.children) self(self, c);
  };
  visit(visit, dom);
  return out;
}

std::string visible_text(const DomNode& dom, const std::vector<ConditionalRule>& rules,
                         const DeviceProfile& profile) {
  const auto active = active_rules(rules, profile);
  if (profile.client_tokens.contains("moz") || profile.client_tokens.contains("owa"))
    return VisibleWalker(active, profile).run(wrap_for_client(dom, profile));
  return VisibleWalker(active, profile).run(dom);
}

std::string visible_text(const DomNode& dom, const DeviceProfile& profile) {
  return visible_text(dom, collect_styles(dom).rules, profile);
}

std::string strip_to_ascii(const DomNode& dom) {
  std::string raw;
  ascii_walk(dom, false, raw);

  std::string out;
  bool blank_pending = false;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    std::string_view line(raw.data() + pos, (eol == std::string::npos ? raw.size() : eol) - pos);
    std::string collapsed = codec::collapse_whitespace(line);
    if (collapsed.empty()) {
      blank_pending = !out.empty();
    } else {
      if (!out.empty()) out += blank_pending ? "\n\n" : "\n";
      out += collapsed;
      blank_pending = false;
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  return out;
}

std::vector<std::string> hiding_declarations(const std::vector<Declaration>& block) {
  std::vector<std::string> out;
  std::map<std::string, Declaration> last;
  for (const auto& d : block) last[d.property] = d;
  for (const auto& d : block) {
    const std::string v = normalize_value(d.value);
    bool hides = false;
    if (d.property == "display") hides = v == "none";
    else if (d.property == "visibility") hides = is_hidden_visibility(v);
    else if (d.property == "opacity") hides = is_zero_opacity(v);
    else if (d.property == "clip-path") hides = is_collapsed_clip(v);
    else if (d.property == "position") hides = is_offscreen(last);
    else if (d.property == "color") hides = is_transparent_color(v);
    else if (d.property == "font-size") hides = is_zero_font(v);
    if (hides) out.push_back(d.property + ": " + d.value);
  }
  return out;
}

DomNode inline_styles(const DomNode& dom, const std::vector<ConditionalRule>& rules,
                      const DeviceProfile& profile) {
  DomNode out = dom;
  const auto active = active_rules(rules, profile);
  std::vector<const DomNode*> ancestors;
  inline_in_place(out, ancestors, active);
  strip_styles_in_place(out);
  return out;
}

DomNode strip_styles(const DomNode& dom) {
  DomNode out = dom;
  strip_styles_in_place(out);
  return out;
}

}  // namespace covertmail::html
