#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assertctl/corpus.hpp"
#include "assertctl/types.hpp"

namespace assertctl::eval {

using CountGrid = std::array<std::array<std::size_t, kLabelCount>, kLabelCount>;

// counts[gold ordinal][predicted ordinal]
struct ConfusionMatrix {
  CountGrid counts{};
  std::size_t n = 0;
  std::size_t skipped_no_gold = 0;      // predictions for instances without gold
  std::size_t missing_predictions = 0;  // gold instances nobody predicted

  static ConfusionMatrix from_counts(const CountGrid& counts);

  std::size_t trace() const noexcept;
  std::size_t row_sum(AssertionLabel gold) const noexcept;
  std::size_t col_sum(AssertionLabel predicted) const noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws Error(UnknownInstanceId) or Error(DuplicatePrediction).
ConfusionMatrix build_confusion(std::span<const Prediction> predictions, const Corpus& corpus);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

// Zero whenever a denominator is zero.
std::array<ClassScores, kLabelCount> per_class_f1(const ConfusionMatrix& m);
double micro_f1(const ConfusionMatrix& m);  // throws Error(EmptyEvaluation) when n == 0
double macro_f1(const ConfusionMatrix& m);  // mean over labels with gold support

struct MetricReport {
  std::array<ClassScores, kLabelCount> per_class{};
  std::array<std::size_t, kLabelCount> support{};
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

MetricReport make_report(const ConfusionMatrix& m);

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(std::string_view text);  // throws Error(MalformedRecord)
MetricReport load_report(const std::filesystem::path& path);
std::string render_report(const MetricReport& report);

// --- published scores ----------------------------------------------------

struct ReferenceCell {
  std::optional<double> value;  // empty for a '-' cell
  std::string text;             // as written in the file
};

/// Read-only table of published per-label F1, keyed by dataset, model,
/// method and label. Methodless baselines use method "-". Lookups are
/// case-insensitive.
class ReferenceTable {
 public:
  static ReferenceTable parse(std::istream& in);
  static ReferenceTable load(const std::filesystem::path& path);
  static const ReferenceTable& builtin();

  const std::string& version() const noexcept { return version_; }
  bool has_slice(std::string_view dataset, std::string_view model, std::string_view method) const;
  // Throws Error(UnknownSlice) when the slice is absent. An empty method
  // selects "-".
  const ReferenceCell& cell(std::string_view dataset, std::string_view model, std::string_view method,
                            AssertionLabel label) const;
  std::size_t numeric_cells() const;
  std::vector<std::string> slices() const;  // "dataset/model/method", file order

 private:
  using Key = std::array<std::string, 4>;
  std::map<Key, ReferenceCell> cells_;
  std::vector<std::array<std::string, 3>> slice_order_;
  std::string version_;
};

struct CompareRow {
  AssertionLabel label = AssertionLabel::Positive;
  std::optional<double> observed;  // empty without gold support
  ReferenceCell reference;
  std::optional<double> delta;     // observed - reference
};

std::vector<CompareRow> compare_rows(const MetricReport& report, const ReferenceTable& reference,
                                     std::string_view dataset, std::string_view model, std::string_view method);
std::string compare_report(const MetricReport& report, const ReferenceTable& reference, std::string_view dataset,
                           std::string_view model, std::string_view method);

}  // namespace assertctl::eval
