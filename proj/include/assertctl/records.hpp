#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "assertctl/error.hpp"
#include "assertctl/types.hpp"

// Line formats of the prediction and trace files written by `predict`.
namespace assertctl {

// FNV-1a 64 of `canonical`, as 16 lowercase hex digits.
std::string fingerprint(std::string_view canonical);

// {"fingerprint": ..., "config": ...}; always the first line of an output file.
nlohmann::ordered_json header_record(const nlohmann::ordered_json& config);

nlohmann::ordered_json prediction_record(const Prediction& p);  // id, label, engine
nlohmann::ordered_json trace_record(const Prediction& p);
nlohmann::ordered_json failure_record(std::string_view instance_id, Engine engine, const Error& error);

// Prediction lines only; header lines are skipped. Throws LineError(MalformedRecord).
std::vector<Prediction> parse_predictions(std::istream& in);
std::vector<Prediction> parse_predictions(const std::filesystem::path& path);

}  // namespace assertctl
