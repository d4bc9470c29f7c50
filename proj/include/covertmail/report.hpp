#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covertmail/client_sim.hpp"
#include "covertmail/guard.hpp"
#include "covertmail/mime.hpp"

// JSON encodings shared by the C API and the CLI report envelope.
namespace covertmail::report {

using nlohmann::json;

json to_json(const guard::Finding& f);
json to_json(const std::vector<guard::Finding>& findings);
json to_json(const guard::PolicyDecision& d);
json to_json(const mime::StructureClass& sc);
json to_json(const client::RenderedDocument& doc);
json to_json(const client::LeakReport& r);
json to_json(const client::DivergenceResult& d);

struct InputDigest {
  std::string path;
  std::string sha256;
};

// Deterministic report envelope: no timestamps or host data.
json envelope(const std::vector<std::string>& command, const std::vector<InputDigest>& inputs,
              json results, int exit_status);

}  // namespace covertmail::report
