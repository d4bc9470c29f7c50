#include "covertmail/guard.hpp"

#include <algorithm>
#include <map>

#include "covertmail/codec.hpp"
#include "covertmail/error.hpp"
#include "covertmail/html_css.hpp"

namespace covertmail::guard {

using html::DomNode;
using mime::EntityPath;
using mime::MimeEntity;

namespace {

std::string clip(std::string_view s) {
  std::string flat = codec::collapse_whitespace(s);
  if (flat.size() <= kMaxEvidence) return flat;
  std::size_t cut = kMaxEvidence;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(flat[cut]) & 0xC0) == 0x80) --cut;
  flat.resize(cut);
  return flat;
}

Finding make(FindingKind kind, const EntityPath& path, std::string_view evidence) {
  return Finding{kind, default_severity(kind), path, clip(evidence)};
}

bool is_signed(const MimeEntity& e) { return e.content_type().is("multipart", "signed"); }

bool proprietary_selector(const html::Selector& sel) {
  return std::any_of(sel.chain.begin(), sel.chain.end(), [](const html::SimpleSelector& s) {
    using K = html::SimpleSelector::Kind;
    if (s.kind == K::Class)
      return codec::iequals(s.name, "ExternalClass") || codec::iequals(s.name, "moz-text-html");
    return s.kind == K::AttrPresence && codec::iequals(s.name, "owa");
  });
}

std::string rule_text(const html::Rule& r, std::string_view decl) {
  return r.selector.to_string() + " {" + std::string(decl) + "}";
}

std::string strip_cid_brackets(std::string_view id) {
  std::string_view v = codec::trim(id);
  if (v.size() >= 2 && v.front() == '<' && v.back() == '>') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

struct HtmlScan {
  std::vector<std::string> cid_refs;
  std::optional<std::string> open_container;
};

class Analyzer {
 public:
  std::vector<Finding> run(const MimeEntity& root) {
    auto sc = mime::classify_structure(root);
    if (sc.kind == mime::StructureClass::Kind::PartiallyEncrypted) {
      for (const auto& p : sc.parts)
        out_.push_back(make(FindingKind::PartialEncryption, p.path,
                            std::string(scheme_name(p.scheme)) +
                                " ciphertext inside a partially encrypted message"));
    }
    walk(root, EntityPath{});
    std::stable_sort(out_.begin(), out_.end(), [](const Finding& a, const Finding& b) {
      if (a.path != b.path) return a.path < b.path;
      return a.kind < b.kind;
    });
    return std::move(out_);
  }

 private:
  void walk(const MimeEntity& e, const EntityPath& path) {
    if (auto enc = mime::encrypted_node(e)) {
      for (const auto& [container_path, tag] : pending_containers_)
        out_.push_back(make(FindingKind::HiddenContainerBeforeCiphertext, container_path,
                            "unclosed " + tag + " precedes ciphertext at " + path.to_string()));
      pending_containers_.clear();
      if (enc->scheme == Scheme::PgpInline && enc->multiplicity > 1)
        out_.push_back(make(FindingKind::MultipleInlineArmors, path,
                            std::to_string(enc->multiplicity) + " armor blocks in one part"));
      return;
    }
    if (e.is_multipart()) {
      if (is_signed(e) && !path.is_root())
        out_.push_back(make(FindingKind::SignatureNotCoveringRoot, path,
                            "signed part below the message root"));
      if (e.content_type().is("multipart", "related")) related(e, path);
      const auto& kids = e.children();
      for (std::size_t i = 0; i < kids.size(); ++i) walk(kids[i], path.child(i));
      return;
    }
    if (e.content_type().is("text", "html")) {
      auto scan = scan_html(e.content(), path);
      if (scan.open_container) pending_containers_.emplace_back(path, *scan.open_container);
    }
  }

  void related(const MimeEntity& e, const EntityPath& path) {
    const auto& kids = e.children();
    std::map<std::string, EntityPath> encrypted_ids;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      auto id = kids[i].header("Content-ID");
      if (id && mime::encrypted_node(kids[i]))
        encrypted_ids[codec::to_lower(strip_cid_brackets(*id))] = path.child(i);
    }
    if (encrypted_ids.empty()) return;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (!kids[i].content_type().is("text", "html") || kids[i].is_multipart()) continue;
      HtmlScan scan;
      DomNode dom = html::parse_html(kids[i].content());
      collect_cids(dom, scan.cid_refs);
      for (const auto& ref : scan.cid_refs) {
        auto hit = encrypted_ids.find(codec::to_lower(ref));
        if (hit != encrypted_ids.end())
          out_.push_back(make(FindingKind::CiphertextBehindCid, hit->second,
                              "cid:" + ref + " referenced from " + path.child(i).to_string()));
      }
    }
  }

  static void collect_cids(const DomNode& n, std::vector<std::string>& refs) {
    if (n.kind == DomNode::Kind::Element) {
      for (const auto& [name, value] : n.attrs) {
        if (codec::starts_with_icase(value, "cid:")) refs.push_back(value.substr(4));
      }
    }
    for (const auto& c : n.children) collect_cids(c, refs);
  }

  HtmlScan scan_html(const std::string& source, const EntityPath& path) {
    HtmlScan scan;
    DomNode dom = html::parse_html(source);

    html::StyleSheet sheet = html::collect_styles(dom);
    for (const auto& cr : sheet.rules) {
      for (const auto& decl : html::hiding_declarations(cr.rule.declarations))
        out_.push_back(make(FindingKind::BlindingCss, path, rule_text(cr.rule, decl)));
      if (proprietary_selector(cr.rule.selector))
        out_.push_back(make(FindingKind::ProprietaryConditional, path,
                            "client-specific selector " + cr.rule.selector.to_string()));
    }
    for (const auto& block : sheet.blocks)
      out_.push_back(make(FindingKind::ConditionalCss, path, "@" + block.keyword + " " + block.prelude));

    std::vector<const DomNode*> ancestors;
    walk_dom(dom, ancestors, path, scan);
    return scan;
  }

  void walk_dom(const DomNode& n, std::vector<const DomNode*>& ancestors, const EntityPath& path,
                HtmlScan& scan) {
    if (n.kind == DomNode::Kind::Comment) {
      if (auto cc = html::parse_conditional_comment(n.text))
        out_.push_back(make(FindingKind::ProprietaryConditional, path,
                            "<!--[if " + cc->expression + "]>"));
      if (n.unterminated && !scan.open_container) scan.open_container = "<!--";
      return;
    }
    if (n.kind != DomNode::Kind::Element && n.kind != DomNode::Kind::Document) return;
    if (n.kind == DomNode::Kind::Element) {
      if (auto style = n.attr("style")) {
        for (const auto& decl : html::hiding_declarations(html::parse_declarations(*style)))
          out_.push_back(make(FindingKind::BlindingCss, path,
                              "<" + n.tag + " style=\"" + std::string(*style) + "\">: " + decl));
      }
      if (n.tag == "style") {
        bool quoted = std::any_of(ancestors.begin(), ancestors.end(),
                                  [](const DomNode* a) { return a->tag == "blockquote"; });
        if (quoted)
          out_.push_back(make(FindingKind::StyleRetainedInReply, path,
                              "<style> inside a quoted reply"));
      }
      if (n.unterminated && html::is_hiding_container(n.tag) && !scan.open_container)
        scan.open_container = "<" + n.tag + ">";
    }
    ancestors.push_back(&n);
    for (const auto& c : n.children) walk_dom(c, ancestors, path, scan);
    ancestors.pop_back();
  }

  std::vector<Finding> out_;
  std::vector<std::pair<EntityPath, std::string>> pending_containers_;
};

std::string html_to_text(std::string_view source) {
  return codec::normalize_crlf(html::strip_to_ascii(html::parse_html(source)));
}

std::string sanitize_tree(const MimeEntity& e) {
  if (mime::encrypted_node(e)) return std::string(kOmittedMarker);
  if (e.is_multipart()) {
    const auto ct = e.content_type();
    const auto& kids = e.children();
    if (kids.empty()) return {};
    if (ct.is("multipart", "alternative")) {
      for (const auto& k : kids)
        if (!k.is_multipart() && k.content_type().is("text", "plain")) return sanitize_tree(k);
      return sanitize_tree(kids.back());
    }
    if (ct.is("multipart", "related") || ct.is("multipart", "signed")) return sanitize_tree(kids.front());
    std::string out;
    for (const auto& k : kids) {
      std::string piece = sanitize_tree(k);
      if (piece.empty()) continue;
      if (!out.empty()) out += "\r\n";
      out += piece;
    }
    return out;
  }
  const auto ct = e.content_type();
  if (ct.is("text", "html")) return html_to_text(e.content());
  if (ct.is_text()) return e.content();
  return {};
}

}  // namespace

std::string_view finding_kind_name(FindingKind k) noexcept {
  switch (k) {
    case FindingKind::PartialEncryption: return "partial-encryption";
    case FindingKind::BlindingCss: return "blinding-css";
    case FindingKind::ConditionalCss: return "conditional-css";
    case FindingKind::ProprietaryConditional: return "proprietary-conditional";
    case FindingKind::HiddenContainerBeforeCiphertext: return "hidden-container-before-ciphertext";
    case FindingKind::CiphertextBehindCid: return "ciphertext-behind-cid";
    case FindingKind::MultipleInlineArmors: return "multiple-inline-armors";
    case FindingKind::SignatureNotCoveringRoot: return "signature-not-covering-root";
    case FindingKind::StyleRetainedInReply: return "style-retained-in-reply";
  }
  return "unknown";
}

std::string_view severity_name(Severity s) noexcept {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
  }
  return "unknown";
}

Severity default_severity(FindingKind k) noexcept {
  switch (k) {
    case FindingKind::PartialEncryption:
    case FindingKind::CiphertextBehindCid:
    case FindingKind::HiddenContainerBeforeCiphertext:
      return Severity::High;
    case FindingKind::StyleRetainedInReply:
      return Severity::Info;
    default:
      return Severity::Medium;
  }
}

PolicyConfig parse_policy(std::string_view text) {
  PolicyConfig cfg;
  std::string normalized = codec::normalize_crlf(text);
  std::string_view rest = normalized;
  std::size_t lineno = 0;
  while (!rest.empty()) {
    std::size_t eol = rest.find("\r\n");
    std::string_view line = codec::trim(rest.substr(0, eol));
    rest = eol == std::string_view::npos ? std::string_view() : rest.substr(eol + 2);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidPolicy, "line " + std::to_string(lineno) + ": expected key=value");
    std::string key = codec::to_lower(codec::trim(line.substr(0, eq)));
    std::string value = codec::to_lower(codec::trim(line.substr(eq + 1)));
    if (key == "mode") {
      if (value == "strict") cfg.mode = PolicyConfig::Mode::Strict;
      else if (value == "audit") cfg.mode = PolicyConfig::Mode::Audit;
      else throw Error(ErrorCode::InvalidPolicy, "unknown mode: " + value);
    } else if (key == "reject_severity") {
      if (value == "info") cfg.reject_at = Severity::Info;
      else if (value == "medium") cfg.reject_at = Severity::Medium;
      else if (value == "high") cfg.reject_at = Severity::High;
      else throw Error(ErrorCode::InvalidPolicy, "unknown severity: " + value);
    } else {
      throw Error(ErrorCode::InvalidPolicy, "unknown policy key: " + key);
    }
  }
  return cfg;
}

std::vector<Finding> analyze(const MimeEntity& message) { return Analyzer{}.run(message); }

PolicyDecision decide(std::vector<Finding> findings, const PolicyConfig& policy) {
  PolicyDecision d;
  for (auto& f : findings) {
    if (f.severity >= policy.reject_at) d.reasons.push_back(std::move(f));
  }
  d.accept = policy.mode == PolicyConfig::Mode::Audit || d.reasons.empty();
  return d;
}

PolicyDecision enforce_all_or_nothing(const MimeEntity& message, const PolicyConfig& policy) {
  std::vector<Finding> findings;
  auto sc = mime::classify_structure(message);
  if (sc.kind == mime::StructureClass::Kind::PartiallyEncrypted) {
    for (const auto& p : sc.parts)
      findings.push_back(make(FindingKind::PartialEncryption, p.path,
                              std::string(scheme_name(p.scheme)) +
                                  " ciphertext mixed with other content"));
  }
  PolicyConfig high_only = policy;
  high_only.reject_at = Severity::High;
  return decide(std::move(findings), high_only);
}

std::string sanitize_for_reply(const MimeEntity& message, const crypto::Keyring& keyring) {
  auto sc = mime::classify_structure(message);
  if (sc.kind != mime::StructureClass::Kind::EncryptedRoot) return sanitize_tree(message);
  try {
    MimeEntity inner = mime::plaintext_entity(crypto::decrypt(message, keyring));
    return sanitize_tree(inner);
  } catch (const Error&) {
    return std::string(kOmittedMarker);
  }
}

PolicyDecision check_signature_coverage(const MimeEntity& message, const CoverageHook& hook) {
  PolicyDecision d;
  auto reject = [&](const EntityPath& path, std::string evidence) {
    d.accept = false;
    d.reasons.push_back(make(FindingKind::SignatureNotCoveringRoot, path, evidence));
  };

  if (!is_signed(message)) {
    std::vector<EntityPath> signed_paths;
    std::function<void(const MimeEntity&, const EntityPath&)> find =
        [&](const MimeEntity& e, const EntityPath& p) {
          if (!e.is_multipart()) return;
          if (is_signed(e)) signed_paths.push_back(p);
          for (std::size_t i = 0; i < e.children().size(); ++i) find(e.children()[i], p.child(i));
        };
    find(message, EntityPath{});
    if (signed_paths.empty())
      reject(EntityPath{}, "message root is not signed");
    for (const auto& p : signed_paths) reject(p, "signature covers only " + p.to_string());
    return d;
  }

  auto v = crypto::verify(message);
  if (v.status != crypto::SignatureStatus::Valid)
    reject(EntityPath{}, "root signature status " +
                             std::string(crypto::signature_status_name(v.status)));

  if (!message.children().empty()) {
    std::function<void(const MimeEntity&, const EntityPath&)> nested =
        [&](const MimeEntity& e, const EntityPath& p) {
          if (!e.is_multipart()) return;
          if (is_signed(e)) reject(p, "nested signature layer at " + p.to_string());
          for (std::size_t i = 0; i < e.children().size(); ++i) nested(e.children()[i], p.child(i));
        };
    nested(message.children().front(), EntityPath{}.child(0));
  }

  if (d.accept && hook) {
    if (auto f = hook(message)) {
      d.accept = false;
      d.reasons.push_back(std::move(*f));
    }
  }
  return d;
}

}  // namespace covertmail::guard
