#include "covertmail/client_sim.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "covertmail/codec.hpp"
#include "covertmail/error.hpp"
#include "covertmail/guard.hpp"

namespace covertmail::client {

using html::DomNode;
using mime::EntityPath;
using mime::MimeEntity;

namespace {

constexpr std::string_view kCrlf = "\r\n";

const std::set<std::string, std::less<>> kMethodKeys = {"newline", "iframe", "comment", "audio",
                                                        "canvas",  "cid",    "default"};
const std::set<std::string, std::less<>> kTokens = {"wlm", "mso", "owa", "moz"};

[[noreturn]] void bad_profile(const std::string& what) {
  throw Error(ErrorCode::InvalidProfile, what);
}

bool parse_bool(std::string_view key, std::string_view v) {
  std::string s = codec::to_lower(v);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  bad_profile(std::string(key) + ": expected true or false, got " + std::string(v));
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t comma = v.find(',', pos);
    std::string_view item = codec::trim(v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}


bool is_cid_element(std::string_view tag) {
  return tag == "img" || tag == "iframe" || tag == "object" || tag == "embed" || tag == "audio" ||
         tag == "video";
}

std::string strip_angle(std::string_view id) {
  std::string_view v = codec::trim(id);
  if (v.size() >= 2 && v.front() == '<' && v.back() == '>') v = v.substr(1, v.size() - 2);
  return codec::to_lower(v);
}

class Renderer {
 public:
  Renderer(const ClientProfile& profile, const crypto::Keyring& keyring)
      : profile_(profile), keyring_(keyring) {}

  RenderedDocument run(const MimeEntity& message) {
    index_cids(message, EntityPath{});
    display(message, EntityPath{},
            mime::classify_structure(message).kind == mime::StructureClass::Kind::EncryptedRoot);

    RenderedDocument doc;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (i) doc.merged_html += kCrlf;
      const auto& s = segments_[i];
      doc.merged_html += s.html ? s.content : "<pre>" + html::escape_text(s.content) + "</pre>";
    }
    doc.dom = html::parse_html(doc.merged_html);
    resolve_cids(doc.dom);

    for (const auto& s : segments_) {
      std::string piece;
      if (s.html) {
        DomNode d = html::parse_html(s.content);
        resolve_cids(d);
        piece = html::strip_to_ascii(d);
      } else {
        piece = replace_all(codec::normalize_crlf(s.content), kCrlf, "\n");
        while (!piece.empty() && piece.back() == '\n') piece.pop_back();
      }
      if (piece.empty()) continue;
      if (!doc.text_quote.empty()) doc.text_quote += "\n";
      doc.text_quote += piece;
    }

    doc.visible = profile_.html_view ? html::visible_text(doc.dom, profile_.device)
                                     : codec::collapse_whitespace(doc.text_quote);
    std::sort(decrypted_.begin(), decrypted_.end());
    decrypted_.erase(std::unique(decrypted_.begin(), decrypted_.end()), decrypted_.end());
    doc.decrypted_paths = std::move(decrypted_);
    doc.errors = std::move(errors_);
    doc.parts = std::move(segments_);
    return doc;
  }

 private:
  struct CidTarget {
    const MimeEntity* entity;
    EntityPath path;
    bool whole;
  };

  void index_cids(const MimeEntity& e, const EntityPath& path, bool whole = false) {
    if (auto id = e.header("Content-ID")) cids_.emplace(strip_angle(*id), CidTarget{&e, path, whole});
    if (e.is_multipart() && !mime::encrypted_node(e)) {
      for (std::size_t i = 0; i < e.children().size(); ++i)
        index_cids(e.children()[i], path.child(i), whole);
    }
  }

  bool may_decrypt(bool whole) const { return whole || profile_.decrypts_subparts; }

  std::string decrypt_inline(const std::string& text, const EntityPath& path) {
    auto blocks = crypto::find_armor_blocks(text);
    std::string out;
    std::size_t last = 0;
    for (const auto& b : blocks) {
      out.append(text, last, b.offset - last);
      try {
        out += crypto::decrypt(std::string_view(text).substr(b.offset, b.length), keyring_);
        decrypted_.push_back(path);
      } catch (const Error& err) {
        errors_.push_back(path.to_string() + ": " + err.what());
        out.append(text, b.offset, b.length);
      }
      last = b.offset + b.length;
    }
    out.append(text, last, std::string::npos);
    return out;
  }

  std::optional<std::string> decrypt_entity(const MimeEntity& e, const EntityPath& path) {
    try {
      std::string pt = crypto::decrypt(e, keyring_);
      decrypted_.push_back(path);
      return pt;
    } catch (const Error& err) {
      errors_.push_back(path.to_string() + ": " + err.what());
      return std::nullopt;
    }
  }

  void display(const MimeEntity& e, const EntityPath& path, bool whole) {
    if (auto enc = mime::encrypted_node(e)) {
      if (enc->scheme == Scheme::PgpInline) {
        std::string text = may_decrypt(whole) ? decrypt_inline(e.content(), path) : e.content();
        leaf(path, e.content_type(), std::move(text));
        return;
      }
      if (!may_decrypt(whole)) return;
      auto pt = decrypt_entity(e, path);
      if (!pt) {
        segments_.push_back({path, false, std::string(kDecryptFailedPlaceholder)});
        return;
      }
      owned_.push_back(mime::plaintext_entity(*pt));
      index_cids(owned_.back(), path, whole);
      display(owned_.back(), path, false);
      return;
    }
    if (e.is_multipart()) {
      const auto ct = e.content_type();
      const auto& kids = e.children();
      if (kids.empty()) return;
      if (ct.is("multipart", "related")) {
        std::size_t root = 0;
        if (auto start = ct.param("start")) {
          for (std::size_t i = 0; i < kids.size(); ++i) {
            auto id = kids[i].header("Content-ID");
            if (id && strip_angle(*id) == strip_angle(*start)) root = i;
          }
        }
        display(kids[root], path.child(root), false);
        return;
      }
      if (ct.is("multipart", "alternative")) {
        std::size_t pick = kids.size() - 1;
        if (!profile_.html_view) {
          for (std::size_t i = 0; i < kids.size(); ++i) {
            if (kids[i].content_type().is("text", "plain")) {
              pick = i;
              break;
            }
          }
        }
        display(kids[pick], path.child(pick), false);
        return;
      }
      if (ct.is("multipart", "signed")) {
        display(kids.front(), path.child(0), false);
        return;
      }
      const std::size_t n = profile_.merges_parts ? kids.size() : 1;
      for (std::size_t i = 0; i < n; ++i) display(kids[i], path.child(i), false);
      return;
    }
    leaf(path, e.content_type(), e.content());
  }

  void leaf(const EntityPath& path, const mime::ContentType& ct, std::string content) {
    if (ct.is("text", "html"))
      segments_.push_back({path, true, std::move(content)});
    else if (ct.is_text())
      segments_.push_back({path, false, std::move(content)});
  }

  std::optional<std::string> cid_content(const std::string& id) {
    if (auto hit = cache_.find(id); hit != cache_.end()) return hit->second;
    auto it = cids_.find(id);
    if (it == cids_.end()) return std::nullopt;
    const auto& target = it->second;
    std::optional<std::string> content;
    if (auto enc = mime::encrypted_node(*target.entity)) {
      if (may_decrypt(target.whole)) {
        content = enc->scheme == Scheme::PgpInline
                      ? decrypt_inline(target.entity->content(), target.path)
                      : decrypt_entity(*target.entity, target.path);
      }
    } else if (!target.entity->is_multipart() && target.entity->content_type().is_text()) {
      content = target.entity->content();
    }
    cache_.emplace(id, content);
    return content;
  }

  void resolve_cids(DomNode& n) {
    if (!profile_.resolves_cid) return;
    if (n.kind == DomNode::Kind::Element && is_cid_element(n.tag)) {
      for (const char* attr : {"src", "data"}) {
        auto v = n.attr(attr);
        if (!v || !codec::starts_with_icase(*v, "cid:")) continue;
        if (auto content = cid_content(strip_angle(v->substr(4))))
          n.children.push_back(DomNode::text_node(*content));
      }
    }
    for (auto& c : n.children) resolve_cids(c);
  }

  const ClientProfile& profile_;
  const crypto::Keyring& keyring_;
  std::deque<MimeEntity> owned_;
  std::map<std::string, CidTarget> cids_;
  std::map<std::string, std::optional<std::string>> cache_;
  std::vector<QuoteSource> segments_;
  std::vector<EntityPath> decrypted_;
  std::vector<std::string> errors_;
};

std::string quote_lines(std::string_view text, std::string_view prefix) {
  std::string bare(prefix);
  while (!bare.empty() && bare.back() == ' ') bare.pop_back();
  std::string normalized = replace_all(codec::normalize_crlf(text), kCrlf, "\n");
  std::string out;
  std::size_t pos = 0;
  while (pos <= normalized.size()) {
    std::size_t eol = normalized.find('\n', pos);
    std::string_view line =
        std::string_view(normalized).substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    out += line.empty() ? bare : std::string(prefix) + std::string(line);
    out += kCrlf;
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  return out;
}

void collect_secrets(const MimeEntity& e, const crypto::Keyring& keyring,
                     std::vector<std::string>& out, int depth) {
  if (depth > mime::kMaxDepth) return;
  if (auto enc = mime::encrypted_node(e)) {
    if (enc->scheme == Scheme::PgpInline) {
      const std::string& text = e.content();
      for (const auto& b : crypto::find_armor_blocks(text)) {
        try {
          out.push_back(crypto::decrypt(std::string_view(text).substr(b.offset, b.length), keyring));
        } catch (const Error&) {
        }
      }
      return;
    }
    try {
      std::string pt = crypto::decrypt(e, keyring);
      out.push_back(pt);
      collect_secrets(mime::plaintext_entity(pt), keyring, out, depth + 1);
    } catch (const Error&) {
    }
    return;
  }
  if (e.is_multipart())
    for (const auto& c : e.children()) collect_secrets(c, keyring, out, depth + 1);
}

}  // namespace

std::vector<std::string> embedded_secrets(const MimeEntity& message, const crypto::Keyring& keyring) {
  std::vector<std::string> out;
  collect_secrets(message, keyring, out, 0);
  std::erase_if(out, [](const std::string& s) { return s.empty(); });
  return out;
}

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::NoLeak: return "no-leak";
    case Verdict::MergedLeak: return "merged-leak";
    case Verdict::HiddenLeak: return "hidden-leak";
  }
  return "unknown";
}

std::string_view verdict_symbol(Verdict v) noexcept {
  switch (v) {
    case Verdict::NoLeak: return "○";
    case Verdict::MergedLeak: return "◐";
    case Verdict::HiddenLeak: return "●";
  }
  return "?";
}

Verdict parse_verdict(std::string_view text) {
  std::string t = codec::to_lower(codec::trim(text));
  for (auto v : {Verdict::NoLeak, Verdict::MergedLeak, Verdict::HiddenLeak})
    if (t == verdict_name(v) || t == verdict_symbol(v)) return v;
  throw Error(ErrorCode::InvalidArgument, "unknown verdict: " + std::string(text));
}

std::optional<Verdict> ClientProfile::expected_verdict(std::string_view method) const {
  if (auto it = expectations.find(std::string(method)); it != expectations.end()) return it->second;
  if (auto it = expectations.find("default"); it != expectations.end()) return it->second;
  return std::nullopt;
}

void ClientProfile::validate() const {
  if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
      }))
    bad_profile("profile name must be a non-empty [A-Za-z0-9._-] token: '" + name + "'");
  if (device.device_width_px <= 0 || device.device_width_px > 100000)
    bad_profile("device_width_px out of range");
  if (html_reply && !html_view) bad_profile("html_reply requires html_view");
  if (inlines_styles_in_reply && keeps_internal_styles_in_reply)
    bad_profile("inlines_styles_in_reply and keeps_internal_styles_in_reply are exclusive");
  for (const auto& t : device.client_tokens)
    if (!kTokens.contains(t)) bad_profile("unknown client token: " + t);
  for (const auto& [m, v] : expectations)
    if (!kMethodKeys.contains(m)) bad_profile("expectation for unknown method: " + m);
  if (quote_prefix.find_first_of("\r\n") != std::string::npos)
    bad_profile("quote_prefix must be a single line");
}

ClientProfile parse_profile(std::string_view text) {
  ClientProfile p;
  const std::string normalized = codec::normalize_crlf(text);
  std::string_view rest = normalized;
  std::size_t lineno = 0;
  bool features_set = false;
  while (!rest.empty()) {
    std::size_t eol = rest.find(kCrlf);
    std::string_view line = codec::trim(rest.substr(0, eol));
    rest = eol == std::string_view::npos ? std::string_view() : rest.substr(eol + 2);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      bad_profile("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = codec::to_lower(codec::trim(line.substr(0, eq)));
    std::string_view raw = codec::trim(line.substr(eq + 1));
    std::string value;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
      value = std::string(raw.substr(1, raw.size() - 2));
    else
      value = std::string(raw);

    if (key == "name") p.name = value;
    else if (key == "description") p.description = value;
    else if (key == "merges_parts") p.merges_parts = parse_bool(key, value);
    else if (key == "decrypts_subparts") p.decrypts_subparts = parse_bool(key, value);
    else if (key == "resolves_cid") p.resolves_cid = parse_bool(key, value);
    else if (key == "html_view") p.html_view = parse_bool(key, value);
    else if (key == "html_reply") p.html_reply = parse_bool(key, value);
    else if (key == "keeps_internal_styles_in_reply") p.keeps_internal_styles_in_reply = parse_bool(key, value);
    else if (key == "inlines_styles_in_reply") p.inlines_styles_in_reply = parse_bool(key, value);
    else if (key == "quote_sanitized") p.quote_sanitized = parse_bool(key, value);
    else if (key == "ignores_conditional_css") p.device.ignores_conditional_css = parse_bool(key, value);
    else if (key == "device_width_px") {
      try {
        std::size_t used = 0;
        p.device.device_width_px = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::logic_error&) {
        bad_profile("device_width_px: not an integer: " + value);
      }
    } else if (key == "supported_features") {
      features_set = true;
      p.device.supported_features.clear();
      for (const auto& item : split_list(value)) {
        if (item == "default") {
          const auto& defaults = html::representative_feature_pairs();
          p.device.supported_features.insert(defaults.begin(), defaults.end());
          continue;
        }
        if (item == "none") continue;
        std::size_t colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
          bad_profile("supported_features: expected property:value, got " + item);
        p.device.supported_features.emplace(codec::to_lower(codec::trim(item.substr(0, colon))),
                                            codec::to_lower(codec::trim(item.substr(colon + 1))));
      }
    } else if (key == "document_url") p.device.document_url = value;
    else if (key == "client_tokens") {
      p.device.client_tokens.clear();
      for (const auto& t : split_list(value)) p.device.client_tokens.insert(codec::to_lower(t));
    } else if (key == "quote_prefix") p.quote_prefix = value;
    else if (key == "attribution_line") p.attribution_line = value;
    else if (key.starts_with("expect.")) {
      try {
        p.expectations[key.substr(7)] = parse_verdict(value);
      } catch (const Error& e) {
        bad_profile(key + ": " + e.what());
      }
    } else {
      bad_profile("line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  if (!features_set) {
    const auto& defaults = html::representative_feature_pairs();
    p.device.supported_features.insert(defaults.begin(), defaults.end());
  }
  p.validate();
  return p;
}

std::string format_profile(const ClientProfile& p) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::string out;
  auto line = [&](std::string_view k, std::string_view v) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  };
  line("name", p.name);
  if (!p.description.empty()) line("description", "\"" + p.description + "\"");
  line("merges_parts", b(p.merges_parts));
  line("decrypts_subparts", b(p.decrypts_subparts));
  line("resolves_cid", b(p.resolves_cid));
  line("html_view", b(p.html_view));
  line("html_reply", b(p.html_reply));
  line("keeps_internal_styles_in_reply", b(p.keeps_internal_styles_in_reply));
  line("inlines_styles_in_reply", b(p.inlines_styles_in_reply));
  line("quote_sanitized", b(p.quote_sanitized));
  line("device_width_px", std::to_string(p.device.device_width_px));
  std::string features;
  for (const auto& [k, v] : p.device.supported_features) {
    if (!features.empty()) features += ',';
    features += k + ":" + v;
  }
  line("supported_features", features.empty() ? "none" : features);
  if (!p.device.document_url.empty()) line("document_url", p.device.document_url);
  std::string tokens;
  for (const auto& t : p.device.client_tokens) {
    if (!tokens.empty()) tokens += ',';
    tokens += t;
  }
  line("client_tokens", tokens);
  line("ignores_conditional_css", b(p.device.ignores_conditional_css));
  line("quote_prefix", "\"" + p.quote_prefix + "\"");
  line("attribution_line", "\"" + p.attribution_line + "\"");
  for (const auto& [m, v] : p.expectations) line("expect." + m, verdict_name(v));
  return out;
}

RenderedDocument render(const MimeEntity& message, const ClientProfile& profile,
                        const crypto::Keyring& keyring) {
  return Renderer(profile, keyring).run(message);
}

std::string bare_address(std::string_view addr) {
  std::size_t lt = addr.rfind('<');
  std::size_t gt = addr.rfind('>');
  if (lt != std::string_view::npos && gt != std::string_view::npos && gt > lt)
    return std::string(codec::trim(addr.substr(lt + 1, gt - lt - 1)));
  return std::string(codec::trim(addr));
}

std::string display_name(std::string_view from) {
  std::size_t lt = from.rfind('<');
  if (lt != std::string_view::npos && lt > 0) {
    std::string_view name = codec::trim(from.substr(0, lt));
    if (name.size() >= 2 && name.front() == '"' && name.back() == '"')
      name = name.substr(1, name.size() - 2);
    if (!name.empty()) return std::string(name);
  }
  return bare_address(from);
}

ReplyOutcome compose_reply(const MimeEntity& message, const ClientProfile& profile,
                           const crypto::Keyring& keyring, std::string_view reply_body,
                           const ReplyOptions& options) {
  ReplyOutcome out;
  out.rendered = render(message, profile, keyring);

  const std::string from(message.header("From").value_or(""));
  const std::string to(message.header("Reply-To").value_or(from));
  const std::string me(message.header("To").value_or(""));
  const std::string attribution = replace_all(
      replace_all(profile.attribution_line, "<date>", options.date), "<from>", display_name(from));

  std::vector<mime::HeaderField> envelope;
  if (!me.empty()) envelope.push_back({"From", me});
  envelope.push_back({"To", to});
  if (auto subject = message.header("Subject")) {
    std::string s(*subject);
    if (!codec::starts_with_icase(s, "re:")) s = "Re: " + s;
    envelope.push_back({"Subject", s});
  }
  if (auto id = message.header("Message-ID")) envelope.push_back({"In-Reply-To", std::string(*id)});

  std::string body(reply_body);
  std::string content_type;
  if (profile.quote_sanitized || !profile.html_reply) {
    const std::string quote = profile.quote_sanitized ? guard::sanitize_for_reply(message, keyring)
                                                      : out.rendered.text_quote;
    body += "\r\n\r\n";
    body += attribution;
    body += kCrlf;
    body += quote_lines(quote, profile.quote_prefix);
    content_type = "text/plain; charset=utf-8";
  } else {
    DomNode quoted;
    if (profile.keeps_internal_styles_in_reply)
      quoted = out.rendered.dom;
    else if (profile.inlines_styles_in_reply)
      quoted = html::inline_styles(out.rendered.dom, html::collect_styles(out.rendered.dom).rules,
                                   profile.device);
    else
      quoted = html::strip_styles(out.rendered.dom);
    body += "<br>\r\n<br>\r\n";
    body += html::escape_text(attribution);
    body += "<br>\r\n<blockquote type=\"cite\">\r\n";
    body += html::serialize_html(quoted);
    body += "\r\n</blockquote>\r\n";
    content_type = "text/html; charset=utf-8";
  }

  const bool want_encrypt = options.reencrypt;
  std::optional<crypto::KeyRef> recipient;
  if (want_encrypt) {
    std::string addr = bare_address(to);
    if (crypto::KeyRef::is_valid(addr) && options.recipient_keys.contains(crypto::KeyRef(addr)))
      recipient = crypto::KeyRef(addr);
  }

  if (recipient) {
    MimeEntity inner = MimeEntity::leaf({{"Content-Type", content_type}}, std::move(body));
    out.message = crypto::encrypt(mime::serialize_message(inner), {*recipient}, options.reencrypt_scheme);
    for (auto it = envelope.rbegin(); it != envelope.rend(); ++it)
      out.message.prepend_header(it->name, it->value);
    out.encrypted = true;
  } else {
    envelope.push_back({"Content-Type", content_type});
    out.message = MimeEntity::leaf(std::move(envelope), std::move(body));
    out.reencryption_skipped = want_encrypt;
  }
  return out;
}

MimeEntity reply(const MimeEntity& message, const ClientProfile& profile,
                 const crypto::Keyring& keyring, std::string_view reply_body,
                 const ReplyOptions& options) {
  return compose_reply(message, profile, keyring, reply_body, options).message;
}

LeakReport leak_check(const MimeEntity& message, const std::vector<std::string>& secrets,
                      const ClientProfile& profile, const crypto::Keyring& keyring,
                      std::string_view reply_body, const ReplyOptions& options,
                      const crypto::Keyring& attacker_keys) {
  for (const auto& s : secrets)
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, "secrets must not be empty");

  ReplyOutcome outcome = compose_reply(message, profile, keyring, reply_body, options);
  LeakReport report;
  report.reply_encrypted = outcome.encrypted;
  report.reencryption_skipped = outcome.reencryption_skipped;
  report.reply_text = mime::serialize_message(outcome.message);
  if (outcome.encrypted) {
    try {
      report.reply_text = crypto::decrypt(outcome.message, attacker_keys);
    } catch (const Error&) {
      // Without the recipient's key the attacker sees only ciphertext.
    }
  }

  bool hidden = false;
  bool merged = false;
  for (const auto& secret : secrets) {
    SecretResult r;
    auto hit = std::search(report.reply_text.begin(), report.reply_text.end(),
                           std::boyer_moore_horspool_searcher(secret.begin(), secret.end()));
    r.leaked_in_reply = hit != report.reply_text.end();
    const std::string flat = codec::collapse_whitespace(secret);
    r.visible_to_victim = !flat.empty() && outcome.rendered.visible.find(flat) != std::string::npos;
    if (r.leaked_in_reply) (r.visible_to_victim ? merged : hidden) = true;
    report.secrets.push_back(r);
  }
  report.verdict = hidden ? Verdict::HiddenLeak : merged ? Verdict::MergedLeak : Verdict::NoLeak;
  report.rendered = std::move(outcome.rendered);
  return report;
}

MimeEntity sign_reply(const MimeEntity& message, const ClientProfile& profile,
                      const crypto::Keyring& keyring, const crypto::KeyRef& signer,
                      std::string_view reply_body, const ReplyOptions& options) {
  ReplyOptions plain = options;
  plain.reencrypt = false;
  return crypto::sign(compose_reply(message, profile, keyring, reply_body, plain).message, signer);
}

DivergenceResult divergence_check(const MimeEntity& signed_message,
                                  const std::vector<ClientProfile>& profiles) {
  auto v = crypto::verify(signed_message);
  if (v.status == crypto::SignatureStatus::NotSigned)
    throw Error(ErrorCode::NotSigned, "message carries no signature");
  DivergenceResult out;
  out.status = v.status;
  out.signer = v.signer;
  std::set<std::string> distinct;
  for (const auto& p : profiles) {
    auto doc = render(signed_message, p, {});
    distinct.insert(doc.visible);
    out.views.emplace_back(p.name, std::move(doc.visible));
  }
  out.diverges = distinct.size() > 1;
  return out;
}

}  // namespace covertmail::client
