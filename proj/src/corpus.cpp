#include "assertctl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "assertctl/error.hpp"
#include "assertctl/text.hpp"

namespace assertctl {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kRecordKeys = {"id", "text", "start", "end", "gold", "dataset"};

std::string require_string(const json& record, const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw LineError(ErrorKind::MalformedRecord, line, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw LineError(ErrorKind::MalformedRecord, line, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::size_t require_offset(const json& record, const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw LineError(ErrorKind::MalformedRecord, line, std::string("missing field '") + key + "'");
  }
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw LineError(ErrorKind::MalformedRecord, line,
                    std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

AnnotatedInstance parse_record(std::string_view raw, std::size_t line) {
  json record;
  try {
    record = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw LineError(ErrorKind::MalformedRecord, line, std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) {
    throw LineError(ErrorKind::MalformedRecord, line, "record must be a JSON object");
  }
  for (const auto& [key, _] : record.items()) {
    if (std::find(kRecordKeys.begin(), kRecordKeys.end(), key) == kRecordKeys.end()) {
      throw LineError(ErrorKind::MalformedRecord, line, "unexpected field '" + key + "'");
    }
  }

  auto id = require_string(record, "id", line);
  auto note = require_string(record, "text", line);
  const auto start = require_offset(record, "start", line);
  const auto end = require_offset(record, "end", line);
  auto dataset = require_string(record, "dataset", line);
  if (id.empty()) throw LineError(ErrorKind::MalformedRecord, line, "empty id");
  if (note.empty()) throw LineError(ErrorKind::MalformedRecord, line, "empty text");

  std::optional<AssertionLabel> gold;
  if (auto it = record.find("gold"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw LineError(ErrorKind::MalformedRecord, line, "field 'gold' must be a string");
    try {
      gold = parse_label(it->get<std::string>());
    } catch (const Error& e) {
      throw LineError(ErrorKind::MalformedRecord, line, e.what());
    }
  }

  try {
    return make_instance(std::move(id), std::move(note), start, end, gold, std::move(dataset));
  } catch (const Error& e) {
    throw LineError(ErrorKind::SpanOutOfBounds, line, e.what());
  }
}

std::string common_dataset(const std::vector<AnnotatedInstance>& instances) {
  if (instances.empty()) return {};
  const auto& first = instances.front().dataset;
  for (const auto& inst : instances) {
    if (inst.dataset != first) return "all";
  }
  return first;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty()) continue;
    auto instance = parse_record(raw, line);
    if (!ids.insert(instance.id).second) {
      throw LineError(ErrorKind::DuplicateId, line, "id '" + instance.id + "' already used");
    }
    corpus.instances.push_back(std::move(instance));
  }
  corpus.dataset = common_dataset(corpus.instances);
  return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "'");
  return parse_corpus(in);
}

Corpus make_corpus(std::vector<AnnotatedInstance> instances) {
  std::unordered_set<std::string> ids;
  for (const auto& inst : instances) {
    if (!ids.insert(inst.id).second) throw Error(ErrorKind::DuplicateId, "id '" + inst.id + "'");
  }
  Corpus corpus;
  corpus.dataset = common_dataset(instances);
  corpus.instances = std::move(instances);
  return corpus;
}

std::string serialize_record(const AnnotatedInstance& instance) {
  ordered_json record;
  record["id"] = instance.id;
  record["text"] = instance.text;
  record["start"] = instance.span.start;
  record["end"] = instance.span.end;
  if (instance.gold) record["gold"] = std::string(to_string(*instance.gold));
  record["dataset"] = instance.dataset;
  return record.dump();
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& inst : corpus.instances) out << serialize_record(inst) << '\n';
}

void serialize_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write '" + path.string() + "'");
  serialize_corpus(corpus, out);
  out.flush();
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for '" + path.string() + "'");
}

// --- i2b2 standoff -------------------------------------------------------

namespace {

struct TokenBytes {
  std::size_t begin;
  std::size_t end;
};

std::vector<TokenBytes> token_offsets(std::string_view line) {
  std::vector<TokenBytes> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && text::is_space(line[i])) ++i;
    const std::size_t b = i;
    while (i < line.size() && !text::is_space(line[i])) ++i;
    if (i > b) out.push_back({b, i});
  }
  return out;
}

std::optional<AssertionLabel> i2b2_label(std::string_view value) {
  if (value == "present") return AssertionLabel::Positive;
  if (value == "absent") return AssertionLabel::Negated;
  if (value == "possible") return AssertionLabel::Possible;
  if (value == "hypothetical") return AssertionLabel::Hypothetical;
  if (value == "associated_with_someone_else") return AssertionLabel::Family;
  return std::nullopt;
}

bool same_tokens(std::string_view recovered, std::string_view expected) {
  const auto a = text::split_whitespace(recovered);
  const auto b = text::split_whitespace(expected);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!text::iequals(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

StandoffResult parse_i2b2_assertion(std::string_view note_text,
                                    const std::vector<std::string>& assertion_lines,
                                    std::string_view doc_id) {
  static const std::regex kLine(
      R"re(^c="(.*)" (\d+):(\d+) (\d+):(\d+)\|\|t="([^"]*)"\|\|a="([^"]*)"$)re");

  // Byte offset of the start of every note line.
  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i < note_text.size(); ++i) {
    if (note_text[i] == '\n') line_starts.push_back(i + 1);
  }
  auto note_line = [&](std::size_t index) {
    const std::size_t begin = line_starts[index];
    std::size_t end = index + 1 < line_starts.size() ? line_starts[index + 1] - 1 : note_text.size();
    if (end > begin && note_text[end - 1] == '\r') --end;
    return note_text.substr(begin, end - begin);
  };

  StandoffResult result;
  for (std::size_t n = 0; n < assertion_lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    std::string raw = assertion_lines[n];
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty()) continue;

    std::smatch m;
    if (!std::regex_match(raw, m, kLine)) {
      throw LineError(ErrorKind::StandoffParseError, line_no, "does not match assertion grammar");
    }
    const std::string surface = m[1];
    const auto l1 = std::stoull(m[2]);
    const auto t1 = std::stoull(m[3]);
    const auto l2 = std::stoull(m[4]);
    const auto t2 = std::stoull(m[5]);
    const std::string type = m[6];
    const std::string assertion = text::to_lower(std::string(m[7]));

    if (type != "problem") {
      throw LineError(ErrorKind::StandoffParseError, line_no, "concept type '" + type + "' is not 'problem'");
    }
    if (assertion == "conditional") {
      result.skipped.push_back({line_no, raw, "conditional category is not used"});
      continue;
    }
    const auto label = i2b2_label(assertion);
    if (!label) {
      throw LineError(ErrorKind::StandoffParseError, line_no, "unknown assertion '" + assertion + "'");
    }
    if (l1 != l2) {
      throw LineError(ErrorKind::CoordinateOutOfRange, line_no, "concept spans more than one line");
    }
    if (l1 == 0 || l1 > line_starts.size()) {
      throw LineError(ErrorKind::CoordinateOutOfRange, line_no, "line " + std::to_string(l1) + " not in note");
    }
    const auto line_text = note_line(l1 - 1);
    const auto tokens = token_offsets(line_text);
    if (t1 > t2 || t2 >= tokens.size()) {
      throw LineError(ErrorKind::CoordinateOutOfRange, line_no,
                      "tokens " + std::to_string(t1) + ".." + std::to_string(t2) + " not in line of " +
                          std::to_string(tokens.size()) + " tokens");
    }

    const std::size_t byte_begin = line_starts[l1 - 1] + tokens[t1].begin;
    const std::size_t byte_end = line_starts[l1 - 1] + tokens[t2].end;
    const auto recovered = note_text.substr(byte_begin, byte_end - byte_begin);
    if (!same_tokens(recovered, surface)) {
      throw LineError(ErrorKind::TokenMismatch, line_no,
                      "note has '" + std::string(recovered) + "' where c=\"" + surface + "\"");
    }

    result.instances.push_back(make_instance(std::string(doc_id) + ":" + std::to_string(line_no),
                                             std::string(note_text),
                                             text::utf8_char_index(note_text, byte_begin),
                                             text::utf8_char_index(note_text, byte_end), label, "i2b2"));
  }
  return result;
}

// --- distribution --------------------------------------------------------

DistributionTable corpus_stats(const Corpus& corpus) {
  DistributionTable table;
  for (const auto& inst : corpus.instances) {
    if (!inst.gold) throw Error(ErrorKind::MissingGold, "instance '" + inst.id + "'");
    ++table.rows[ordinal(*inst.gold)].count;
  }
  table.total = corpus.instances.size();
  if (table.total == 0) return table;
  for (auto& row : table.rows) {
    // Integer half-up rounding of count / total * 100 to two decimals.
    row.percent_centi = (row.count * 20000 + table.total) / (2 * table.total);
  }
  return table;
}

std::string render_distribution(const DistributionTable& table) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "label" << std::right << std::setw(8) << "count" << std::setw(10)
      << "percent" << '\n';
  for (auto label : kAllLabels) {
    const auto& row = table[label];
    if (row.count == 0) continue;
    out << std::left << std::setw(14) << to_string(label) << std::right << std::setw(8) << row.count
        << std::setw(9) << std::fixed << std::setprecision(2) << row.percent() << "%\n";
  }
  out << std::left << std::setw(14) << "total" << std::right << std::setw(8) << table.total << '\n';
  return out.str();
}

}  // namespace assertctl
