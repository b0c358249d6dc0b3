#include "assertctl/eval.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "assertctl/embedded.hpp"
#include "assertctl/error.hpp"
#include "assertctl/text.hpp"

namespace assertctl::eval {

using ojson = nlohmann::ordered_json;

ConfusionMatrix ConfusionMatrix::from_counts(const CountGrid& counts) {
  ConfusionMatrix m;
  m.counts = counts;
  for (const auto& row : counts) m.n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return m;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < kLabelCount; ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::row_sum(AssertionLabel gold) const noexcept {
  const auto& row = counts[ordinal(gold)];
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(AssertionLabel predicted) const noexcept {
  std::size_t s = 0;
  for (const auto& row : counts) s += row[ordinal(predicted)];
  return s;
}

ConfusionMatrix build_confusion(std::span<const Prediction> predictions, const Corpus& corpus) {
  std::unordered_map<std::string, const AnnotatedInstance*> by_id;
  for (const auto& inst : corpus.instances) by_id.emplace(inst.id, &inst);

  ConfusionMatrix m;
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.instance_id);
    if (it == by_id.end()) throw Error(ErrorKind::UnknownInstanceId, "prediction for unknown id '" + p.instance_id + "'");
    if (!seen.insert(p.instance_id).second) {
      throw Error(ErrorKind::DuplicatePrediction, "second prediction for '" + p.instance_id + "'");
    }
    const auto& gold = it->second->gold;
    if (!gold) {
      ++m.skipped_no_gold;
      continue;
    }
    ++m.counts[ordinal(*gold)][ordinal(p.label)];
    ++m.n;
  }
  for (const auto& inst : corpus.instances) {
    if (inst.gold && !seen.count(inst.id)) ++m.missing_predictions;
  }
  return m;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

std::array<ClassScores, kLabelCount> per_class_f1(const ConfusionMatrix& m) {
  std::array<ClassScores, kLabelCount> out{};
  for (auto label : kAllLabels) {
    const auto i = ordinal(label);
    const std::size_t tp = m.counts[i][i];
    auto& s = out[i];
    s.precision = ratio(tp, m.col_sum(label));
    s.recall = ratio(tp, m.row_sum(label));
    s.f1 = harmonic(s.precision, s.recall);
  }
  return out;
}

double micro_f1(const ConfusionMatrix& m) {
  if (m.n == 0) throw Error(ErrorKind::EmptyEvaluation, "no scored instances");
  // Pooled over classes: TP = trace, FP = FN = n - trace.
  const std::size_t tp = m.trace();
  const std::size_t fp = m.n - tp;
  const std::size_t fn = m.n - tp;
  return harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
}

double macro_f1(const ConfusionMatrix& m) {
  const auto scores = per_class_f1(m);
  double sum = 0.0;
  std::size_t classes = 0;
  for (auto label : kAllLabels) {
    if (m.row_sum(label) == 0) continue;
    sum += scores[ordinal(label)].f1;
    ++classes;
  }
  if (classes == 0) throw Error(ErrorKind::EmptyEvaluation, "no label has gold support");
  return sum / static_cast<double>(classes);
}

MetricReport make_report(const ConfusionMatrix& m) {
  MetricReport r;
  r.confusion = m;
  r.per_class = per_class_f1(m);
  for (auto label : kAllLabels) r.support[ordinal(label)] = m.row_sum(label);
  r.micro_f1 = micro_f1(m);
  r.macro_f1 = macro_f1(m);
  return r;
}

std::string report_to_json(const MetricReport& report) {
  ojson j;
  j["n"] = report.confusion.n;
  j["micro_f1"] = report.micro_f1;
  j["macro_f1"] = report.macro_f1;
  ojson per_class = ojson::object();
  for (auto label : kAllLabels) {
    const auto i = ordinal(label);
    per_class[std::string(to_string(label))] = {{"precision", report.per_class[i].precision},
                                                {"recall", report.per_class[i].recall},
                                                {"f1", report.per_class[i].f1},
                                                {"support", report.support[i]}};
  }
  j["per_class"] = std::move(per_class);
  ojson grid = ojson::array();
  for (const auto& row : report.confusion.counts) grid.push_back(row);
  j["confusion"] = std::move(grid);
  j["skipped_no_gold"] = report.confusion.skipped_no_gold;
  j["missing_predictions"] = report.confusion.missing_predictions;
  return j.dump(2) + "\n";
}

MetricReport report_from_json(std::string_view text) {
  try {
    const auto j = ojson::parse(text);
    CountGrid grid{};
    const auto& rows = j.at("confusion");
    if (!rows.is_array() || rows.size() != kLabelCount) throw Error(ErrorKind::MalformedRecord, "confusion must be 6x6");
    for (std::size_t i = 0; i < kLabelCount; ++i) {
      if (!rows[i].is_array() || rows[i].size() != kLabelCount) {
        throw Error(ErrorKind::MalformedRecord, "confusion must be 6x6");
      }
      for (std::size_t c = 0; c < kLabelCount; ++c) grid[i][c] = rows[i][c].get<std::size_t>();
    }
    auto m = ConfusionMatrix::from_counts(grid);
    m.skipped_no_gold = j.value("skipped_no_gold", std::size_t{0});
    m.missing_predictions = j.value("missing_predictions", std::size_t{0});
    // Metrics are recomputed from the counts rather than trusted.
    return make_report(m);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("report: ") + e.what());
  }
}

MetricReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open report '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

namespace {

std::string fixed(double v, int places = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string signed_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.4f", v);
  return buf;
}

std::string pad_left(std::string s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(std::string s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_report(const MetricReport& report) {
  std::ostringstream out;
  out << pad_right("label", 14) << pad_left("precision", 10) << pad_left("recall", 10) << pad_left("f1", 10)
      << pad_left("support", 9) << '\n';
  for (auto label : kAllLabels) {
    const auto i = ordinal(label);
    const auto& s = report.per_class[i];
    out << pad_right(std::string(to_string(label)), 14) << pad_left(fixed(s.precision), 10)
        << pad_left(fixed(s.recall), 10) << pad_left(fixed(s.f1), 10)
        << pad_left(std::to_string(report.support[i]), 9) << '\n';
  }
  out << '\n'
      << "micro-F1 " << fixed(report.micro_f1) << "  macro-F1 " << fixed(report.macro_f1) << "  n "
      << report.confusion.n << '\n';
  if (report.confusion.skipped_no_gold) out << "skipped (no gold): " << report.confusion.skipped_no_gold << '\n';
  if (report.confusion.missing_predictions) {
    out << "gold instances without prediction: " << report.confusion.missing_predictions << '\n';
  }
  return out.str();
}

// --- reference table -----------------------------------------------------

namespace {

std::string fold(std::string_view s) { return text::to_lower(text::trim(s)); }

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(text::trim(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

ReferenceTable ReferenceTable::parse(std::istream& in) {
  ReferenceTable table;
  std::vector<std::array<std::string, 2>> columns;  // model, method
  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto trimmed = text::trim(raw);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      const auto body = text::trim(trimmed.substr(1));
      if (body.rfind("version:", 0) == 0) table.version_ = std::string(text::trim(body.substr(8)));
      continue;
    }
    const auto fields = split_tabs(raw);
    if (!have_header) {
      if (fields.size() < 3 || fold(fields[0]) != "dataset" || fold(fields[1]) != "label") {
        throw LineError(ErrorKind::MalformedRecord, line, "header must start with 'dataset<TAB>label'");
      }
      for (std::size_t c = 2; c < fields.size(); ++c) {
        const auto colon = fields[c].find(':');
        if (colon == std::string::npos) {
          throw LineError(ErrorKind::MalformedRecord, line, "column '" + fields[c] + "' is not model:method");
        }
        columns.push_back({fields[c].substr(0, colon), fields[c].substr(colon + 1)});
      }
      have_header = true;
      continue;
    }
    if (fields.size() != columns.size() + 2) {
      throw LineError(ErrorKind::MalformedRecord, line,
                      "expected " + std::to_string(columns.size() + 2) + " fields, got " + std::to_string(fields.size()));
    }
    AssertionLabel label;
    try {
      label = parse_label(fields[1]);
    } catch (const Error& e) {
      throw LineError(ErrorKind::MalformedRecord, line, e.what());
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      ReferenceCell cell{std::nullopt, fields[c + 2]};
      if (cell.text != "-") {
        try {
          std::size_t used = 0;
          const double v = std::stod(cell.text, &used);
          if (used != cell.text.size() || v < 0.0 || v > 1.0) throw std::invalid_argument(cell.text);
          cell.value = v;
        } catch (const std::exception&) {
          throw LineError(ErrorKind::MalformedRecord, line, "bad score '" + cell.text + "'");
        }
      }
      Key key{fold(fields[0]), fold(columns[c][0]), fold(columns[c][1]), std::string(to_string(label))};
      std::array<std::string, 3> slice{fields[0], columns[c][0], columns[c][1]};
      const bool new_slice = !table.has_slice(slice[0], slice[1], slice[2]);
      if (!table.cells_.emplace(std::move(key), std::move(cell)).second) {
        throw LineError(ErrorKind::DuplicateId, line, "cell repeated");
      }
      if (new_slice) table.slice_order_.push_back(std::move(slice));
    }
  }
  if (!have_header) throw Error(ErrorKind::MalformedRecord, "reference table has no header");
  return table;
}

ReferenceTable ReferenceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open reference table '" + path.string() + "'");
  return parse(in);
}

const ReferenceTable& ReferenceTable::builtin() {
  static const ReferenceTable table = [] {
    std::istringstream in{std::string(embedded::published_f1())};
    return parse(in);
  }();
  return table;
}

bool ReferenceTable::has_slice(std::string_view dataset, std::string_view model, std::string_view method) const {
  const std::string m = method.empty() ? "-" : fold(method);
  const std::string d = fold(dataset);
  const std::string mo = fold(model);
  for (const auto& s : slice_order_) {
    if (fold(s[0]) == d && fold(s[1]) == mo && fold(s[2]) == m) return true;
  }
  return false;
}

const ReferenceCell& ReferenceTable::cell(std::string_view dataset, std::string_view model, std::string_view method,
                                          AssertionLabel label) const {
  Key key{fold(dataset), fold(model), method.empty() ? "-" : fold(method), std::string(to_string(label))};
  const auto it = cells_.find(key);
  if (it == cells_.end()) {
    throw Error(ErrorKind::UnknownSlice, "no reference for " + std::string(dataset) + "/" + std::string(model) + "/" +
                                             std::string(method.empty() ? "-" : method));
  }
  return it->second;
}

std::size_t ReferenceTable::numeric_cells() const {
  std::size_t n = 0;
  for (const auto& [key, cell] : cells_) n += cell.value.has_value();
  return n;
}

std::vector<std::string> ReferenceTable::slices() const {
  std::vector<std::string> out;
  for (const auto& s : slice_order_) out.push_back(s[0] + "/" + s[1] + "/" + s[2]);
  return out;
}

std::vector<CompareRow> compare_rows(const MetricReport& report, const ReferenceTable& reference,
                                     std::string_view dataset, std::string_view model, std::string_view method) {
  if (!reference.has_slice(dataset, model, method)) {
    throw Error(ErrorKind::UnknownSlice, "no reference for " + std::string(dataset) + "/" + std::string(model) + "/" +
                                             std::string(method.empty() ? "-" : method));
  }
  std::vector<CompareRow> rows;
  for (auto label : kAllLabels) {
    CompareRow row;
    row.label = label;
    row.reference = reference.cell(dataset, model, method, label);
    if (report.support[ordinal(label)] > 0) row.observed = report.per_class[ordinal(label)].f1;
    if (row.observed && row.reference.value) row.delta = *row.observed - *row.reference.value;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string compare_report(const MetricReport& report, const ReferenceTable& reference, std::string_view dataset,
                           std::string_view model, std::string_view method) {
  const auto rows = compare_rows(report, reference, dataset, model, method);
  std::ostringstream out;
  out << "slice " << dataset << " / " << model << " / " << (method.empty() ? "-" : method)
      << " (published values shown for reference)\n";
  out << pad_right("label", 14) << pad_left("observed", 10) << pad_left("reference", 11) << pad_left("delta", 10)
      << '\n';
  for (const auto& row : rows) {
    out << pad_right(std::string(to_string(row.label)), 14)
        << pad_left(row.observed ? fixed(*row.observed) : "-", 10)
        << pad_left(row.reference.value ? row.reference.text : "-", 11)
        << pad_left(row.delta ? signed_fixed(*row.delta) : "-", 10) << '\n';
  }
  return out.str();
}

}  // namespace assertctl::eval
