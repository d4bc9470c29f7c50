#include "covertmail/report.hpp"

namespace covertmail::report {

json to_json(const guard::Finding& f) {
  return {{"kind", guard::finding_kind_name(f.kind)},
          {"severity", guard::severity_name(f.severity)},
          {"path", f.path.to_string()},
          {"evidence", f.evidence}};
}

json to_json(const std::vector<guard::Finding>& findings) {
  json arr = json::array();
  for (const auto& f : findings) arr.push_back(to_json(f));
  return arr;
}

json to_json(const guard::PolicyDecision& d) {
  return {{"accept", d.accept}, {"reasons", to_json(d.reasons)}};
}

json to_json(const mime::StructureClass& sc) {
  json parts = json::array();
  for (const auto& p : sc.parts)
    parts.push_back({{"path", p.path.to_string()},
                     {"scheme", scheme_name(p.scheme)},
                     {"multiplicity", p.multiplicity}});
  return {{"kind", mime::structure_kind_name(sc.kind)}, {"parts", parts}};
}

json to_json(const client::RenderedDocument& doc) {
  json paths = json::array();
  for (const auto& p : doc.decrypted_paths) paths.push_back(p.to_string());
  json parts = json::array();
  for (const auto& p : doc.parts)
    parts.push_back({{"path", p.path.to_string()}, {"html", p.html}, {"content", p.content}});
  return {{"visible", doc.visible},
          {"parts", parts},
          {"merged_html", doc.merged_html},
          {"text_quote", doc.text_quote},
          {"decrypted_paths", paths},
          {"errors", doc.errors}};
}

json to_json(const client::LeakReport& r) {
  json secrets = json::array();
  for (std::size_t i = 0; i < r.secrets.size(); ++i)
    secrets.push_back({{"index", i},
                       {"leaked_in_reply", r.secrets[i].leaked_in_reply},
                       {"visible_to_victim", r.secrets[i].visible_to_victim}});
  return {{"verdict", client::verdict_name(r.verdict)},
          {"symbol", client::verdict_symbol(r.verdict)},
          {"secrets", secrets},
          {"reply_encrypted", r.reply_encrypted},
          {"reencryption_skipped", r.reencryption_skipped},
          {"visible", r.rendered.visible}};
}

json to_json(const client::DivergenceResult& d) {
  json views = json::array();
  for (const auto& [name, text] : d.views) views.push_back({{"profile", name}, {"visible", text}});
  json out = {{"signature", crypto::signature_status_name(d.status)},
              {"views", views},
              {"diverges", d.diverges}};
  out["signer"] = d.signer ? json(d.signer->id()) : json(nullptr);
  return out;
}

json envelope(const std::vector<std::string>& command, const std::vector<InputDigest>& inputs,
              json results, int exit_status) {
  json in = json::array();
  for (const auto& i : inputs) in.push_back({{"path", i.path}, {"sha256", i.sha256}});
  return {{"format", "covertmail-report"},
          {"version", 1},
          {"command", command},
          {"inputs", in},
          {"results", std::move(results)},
          {"exit_status", exit_status}};
}

}  // namespace covertmail::report
