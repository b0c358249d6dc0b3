#include "assertctl/records.hpp"

#include <cstdio>
#include <fstream>
#include <istream>

#include "assertctl/text.hpp"

namespace assertctl {

using ojson = nlohmann::ordered_json;

std::string fingerprint(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ojson header_record(const ojson& config) {
  ojson j;
  j["fingerprint"] = fingerprint(config.dump());
  j["config"] = config;
  return j;
}

ojson prediction_record(const Prediction& p) {
  ojson j;
  j["id"] = p.instance_id;
  j["label"] = to_string(p.label);
  j["engine"] = to_string(p.engine);
  return j;
}

ojson trace_record(const Prediction& p) {
  ojson j = prediction_record(p);
  ojson steps = ojson::array();
  for (const auto& s : p.trace.steps) steps.push_back({{"prompt", s.prompt}, {"completion", s.completion}});
  j["steps"] = std::move(steps);
  if (p.trace.votes) {
    ojson votes = ojson::array();
    for (auto v : *p.trace.votes) votes.push_back(to_string(v));
    j["votes"] = std::move(votes);
  }
  if (p.trace.path_scores) j["path_scores"] = *p.trace.path_scores;
  j["notes"] = p.trace.notes;
  return j;
}

ojson failure_record(std::string_view instance_id, Engine engine, const Error& error) {
  ojson j;
  j["id"] = instance_id;
  j["engine"] = to_string(engine);
  j["error"] = to_string(error.kind());
  j["message"] = error.what();
  return j;
}

std::vector<Prediction> parse_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (text::trim(raw).empty()) continue;
    ojson j;
    try {
      j = ojson::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      throw LineError(ErrorKind::MalformedRecord, line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw LineError(ErrorKind::MalformedRecord, line, "expected an object");
    if (j.contains("fingerprint")) continue;
    try {
      Prediction p;
      p.instance_id = j.at("id").get<std::string>();
      p.label = parse_label(j.at("label").get<std::string>());
      p.engine = parse_engine(j.at("engine").get<std::string>());
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw LineError(ErrorKind::MalformedRecord, line, e.what());
    } catch (const Error& e) {
      throw LineError(ErrorKind::MalformedRecord, line, e.what());
    }
  }
  return out;
}

std::vector<Prediction> parse_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open predictions '" + path.string() + "'");
  return parse_predictions(in);
}

}  // namespace assertctl
