#include <algorithm>
#include <array>
#include <cctype>

#include "covertmail/codec.hpp"
#include "covertmail/html_css.hpp"

namespace covertmail::html {

namespace {

constexpr std::size_t kMaxDepth = 256;

constexpr std::array kVoidTags = {"area", "base",  "br",   "col",   "embed",  "hr",    "img",
                                  "input", "link", "meta", "param", "source", "track", "wbr"};
constexpr std::array kRawTextTags = {"script", "style"};
constexpr std::array kContainerTags = {"iframe", "audio", "canvas", "video", "object", "noscript"};

template <std::size_t N>
bool in(const std::array<const char*, N>& set, std::string_view tag) {
  return std::any_of(set.begin(), set.end(), [&](const char* t) { return tag == t; });
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f'; }

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

std::size_t find_icase(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    if (codec::iequals(hay.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view src) : src_(src) { stack_.push_back(&root_); }

  DomNode run() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<' && try_markup()) continue;
      text_run();
    }
    for (std::size_t i = 1; i < stack_.size(); ++i) stack_[i]->unterminated = true;
    return std::move(root_);
  }

 private:
  DomNode& top() { return *stack_.back(); }

  void add_text(std::string_view raw, bool decode) {
    if (raw.empty()) return;
    auto& kids = top().children;
    std::string text = decode ? decode_entities(raw) : std::string(raw);
    if (!kids.empty() && kids.back().kind == DomNode::Kind::Text)
      kids.back().text += text;
    else
      kids.push_back(DomNode::text_node(std::move(text)));
  }

  void text_run() {
    std::size_t next = src_.find('<', pos_ + 1);
    if (next == std::string_view::npos) next = src_.size();
    add_text(src_.substr(pos_, next - pos_), true);
    pos_ = next;
  }

  // Returns false when the '<' at pos_ is literal text.
  bool try_markup() {
    std::string_view rest = src_.substr(pos_);
    if (rest.starts_with("<!--")) {
      std::size_t end = src_.find("-->", pos_ + 4);
      DomNode c = DomNode::comment(std::string(
          src_.substr(pos_ + 4, end == std::string_view::npos ? src_.npos : end - pos_ - 4)));
      c.unterminated = end == std::string_view::npos;
      top().children.push_back(std::move(c));
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return true;
    }
    if (rest.starts_with("<!") || rest.starts_with("<?")) {
      std::size_t end = src_.find('>', pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return true;
    }
    if (rest.starts_with("</")) return end_tag();
    if (rest.size() > 1 && std::isalpha(static_cast<unsigned char>(rest[1]))) return start_tag();
    return false;
  }

  bool end_tag() {
    std::size_t p = pos_ + 2;
    std::size_t name_begin = p;
    while (p < src_.size() && is_name_char(src_[p])) ++p;
    if (p == name_begin) return false;
    std::string name = codec::to_lower(src_.substr(name_begin, p - name_begin));
    std::size_t gt = src_.find('>', p);
    pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;

    // Search open elements; an open hiding container is a barrier that only
    // its own end tag passes.
    for (std::size_t i = stack_.size() - 1; i >= 1; --i) {
      if (stack_[i]->tag == name) {
        stack_.resize(i);
        return true;
      }
      if (in(kContainerTags, stack_[i]->tag)) break;
    }
    return true;
  }

  bool start_tag() {
    std::size_t p = pos_ + 1;
    std::size_t name_begin = p;
    while (p < src_.size() && is_name_char(src_[p])) ++p;
    std::string name = codec::to_lower(src_.substr(name_begin, p - name_begin));

    std::vector<std::pair<std::string, std::string>> attrs;
    bool self_closing = false;
    while (true) {
      while (p < src_.size() && is_space(src_[p])) ++p;
      if (p >= src_.size()) {
        // Tag cut off by end of input: keep it as text.
        return false;
      }
      if (src_[p] == '>') {
        ++p;
        break;
      }
      if (src_[p] == '/') {
        ++p;
        if (p < src_.size() && src_[p] == '>') {
          self_closing = true;
          ++p;
          break;
        }
        continue;
      }
      std::size_t an = p;
      while (p < src_.size() && !is_space(src_[p]) && src_[p] != '>' && src_[p] != '=' &&
             !(src_[p] == '/' && p + 1 < src_.size() && src_[p + 1] == '>'))
        ++p;
      if (p == an) {
        ++p;  // stray '='
        continue;
      }
      std::string aname = codec::to_lower(src_.substr(an, p - an));
      std::string aval;
      std::size_t q = p;
      while (q < src_.size() && is_space(src_[q])) ++q;
      if (q < src_.size() && src_[q] == '=') {
        p = q + 1;
        while (p < src_.size() && is_space(src_[p])) ++p;
        if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'')) {
          char quote = src_[p++];
          std::size_t close = src_.find(quote, p);
          if (close == std::string_view::npos) return false;
          aval = decode_entities(src_.substr(p, close - p));
          p = close + 1;
        } else {
          std::size_t vb = p;
          while (p < src_.size() && !is_space(src_[p]) && src_[p] != '>') ++p;
          aval = decode_entities(src_.substr(vb, p - vb));
        }
      }
      bool dup = std::any_of(attrs.begin(), attrs.end(),
                             [&](const auto& a) { return a.first == aname; });
      if (!dup) attrs.emplace_back(std::move(aname), std::move(aval));
    }
    pos_ = p;

    DomNode el = DomNode::element(name, std::move(attrs));
    if (in(kRawTextTags, name) && !self_closing) {
      const std::string close = "</" + name;
      std::size_t end = find_icase(src_, close, pos_);
      if (end == std::string_view::npos) {
        el.unterminated = true;
        if (pos_ < src_.size()) el.children.push_back(DomNode::text_node(std::string(src_.substr(pos_))));
        pos_ = src_.size();
      } else {
        if (end > pos_) el.children.push_back(DomNode::text_node(std::string(src_.substr(pos_, end - pos_))));
        std::size_t gt = src_.find('>', end);
        pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
      }
      top().children.push_back(std::move(el));
      return true;
    }

    bool is_void = in(kVoidTags, name) || self_closing || stack_.size() > kMaxDepth;
    top().children.push_back(std::move(el));
    if (!is_void) stack_.push_back(&top().children.back());
    return true;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  DomNode root_;
  std::vector<DomNode*> stack_;
};

void serialize_into(std::string& out, const DomNode& n, bool raw_text) {
  switch (n.kind) {
    case DomNode::Kind::Document:
      for (const auto& c : n.children) serialize_into(out, c, false);
      return;
    case DomNode::Kind::Text:
      out += raw_text ? n.text : escape_text(n.text);
      return;
    case DomNode::Kind::Comment:
      out += "<!--";
      out += n.text;
      out += "-->";
      return;
    case DomNode::Kind::Element:
      break;
  }
  out += '<';
  out += n.tag;
  for (const auto& [k, v] : n.attrs) {
    out += ' ';
    out += k;
    out += "=\"";
    for (char c : v) {
      if (c == '&') out += "&amp;";
      else if (c == '"') out += "&quot;";
      else out += c;
    }
    out += '"';
  }
  out += '>';
  if (in(kVoidTags, n.tag) && n.children.empty()) return;
  const bool raw = in(kRawTextTags, n.tag);
  for (const auto& c : n.children) serialize_into(out, c, raw);
  out += "</";
  out += n.tag;
  out += '>';
}

}  // namespace

DomNode DomNode::element(std::string tag, std::vector<std::pair<std::string, std::string>> attrs,
                         std::vector<DomNode> children) {
  DomNode n;
  n.kind = Kind::Element;
  n.tag = std::move(tag);
  n.attrs = std::move(attrs);
  n.children = std::move(children);
  return n;
}

DomNode DomNode::text_node(std::string text) {
  DomNode n;
  n.kind = Kind::Text;
  n.text = std::move(text);
  return n;
}

DomNode DomNode::comment(std::string payload) {
  DomNode n;
  n.kind = Kind::Comment;
  n.text = std::move(payload);
  return n;
}

std::optional<std::string_view> DomNode::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs)
    if (k == name) return std::string_view(v);
  return std::nullopt;
}

bool DomNode::has_class(std::string_view name) const {
  auto cls = attr("class");
  if (!cls) return false;
  std::string_view s = *cls;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && is_space(s[pos])) ++pos;
    std::size_t end = pos;
    while (end < s.size() && !is_space(s[end])) ++end;
    if (end > pos && s.substr(pos, end - pos) == name) return true;
    pos = end;
  }
  return false;
}

DomNode parse_html(std::string_view text) { return TreeBuilder(text).run(); }

std::string serialize_html(const DomNode& node) {
  std::string out;
  serialize_into(out, node, false);
  return out;
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string decode_entities(std::string_view text) {
  if (text.find('&') == std::string_view::npos) return std::string(text);
  static const std::array<std::pair<std::string_view, std::string_view>, 7> kNamed = {{
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
      {"shy", ""},
  }};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out += text[i];
      continue;
    }
    std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += '&';
      continue;
    }
    std::string_view ent = text.substr(i + 1, semi - i - 1);
    if (ent.size() > 1 && ent[0] == '#') {
      bool hex = ent[1] == 'x' || ent[1] == 'X';
      std::string_view digits = ent.substr(hex ? 2 : 1);
      unsigned long cp = 0;
      bool ok = !digits.empty();
      for (char c : digits) {
        int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                : hex && std::isxdigit(static_cast<unsigned char>(c))
                    ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                    : -1;
        if (d < 0) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(d);
        if (cp > 0x10FFFF) cp = 0x110000;
      }
      if (ok) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
    } else {
      auto it = std::find_if(kNamed.begin(), kNamed.end(),
                             [&](const auto& kv) { return kv.first == ent; });
      if (it != kNamed.end()) {
        out += it->second;
        i = semi;
        continue;
      }
    }
    out += '&';
  }
  return out;
}

bool is_hiding_container(std::string_view tag) {
  return in(kContainerTags, tag) || in(kRawTextTags, tag) || tag == "img" || tag == "embed" ||
         tag == "title" || tag == "template";
}

}  // namespace covertmail::html
