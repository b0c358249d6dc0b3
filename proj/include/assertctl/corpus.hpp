#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "assertctl/types.hpp"

namespace assertctl {

struct Corpus {
  std::vector<AnnotatedInstance> instances;
  // Shared dataset tag of the instances; "all" when they disagree, "" when empty.
  std::string dataset;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Native format: one JSON object per line with keys, in this order,
// id, text, start, end, gold (optional), dataset.
Corpus parse_corpus(std::istream& in);
Corpus parse_corpus(const std::filesystem::path& path);
Corpus make_corpus(std::vector<AnnotatedInstance> instances);  // validates unique ids

std::string serialize_record(const AnnotatedInstance& instance);
void serialize_corpus(const Corpus& corpus, std::ostream& out);
void serialize_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct SkippedStandoff {
  std::size_t line = 0;  // 1-based line within the assertion file
  std::string raw;
  std::string reason;
};

struct StandoffResult {
  std::vector<AnnotatedInstance> instances;
  std::vector<SkippedStandoff> skipped;
};

/// Converts i2b2 assertion lines of the form
///   c="<surface>" L1:T1 L2:T2||t="problem"||a="<assertion>"
/// against the note text. Line numbers are 1-based, token offsets 0-based and
/// inclusive, tokens are runs of non-whitespace. Conditional assertions are
/// dropped into `skipped`. Instance ids are "<doc_id>:<assertion line>".
StandoffResult parse_i2b2_assertion(std::string_view note_text,
                                    const std::vector<std::string>& assertion_lines,
                                    std::string_view doc_id = "i2b2");

struct DistributionRow {
  std::size_t count = 0;
  std::size_t percent_centi = 0;  // percent * 100, rounded half up

  double percent() const noexcept { return static_cast<double>(percent_centi) / 100.0; }
};

struct DistributionTable {
  std::array<DistributionRow, kLabelCount> rows{};
  std::size_t total = 0;

  const DistributionRow& operator[](AssertionLabel l) const { return rows[ordinal(l)]; }
};

// Throws Error(MissingGold) naming the first instance without a gold label.
DistributionTable corpus_stats(const Corpus& corpus);

// Aligned label/count/percent table; labels with zero count are omitted.
std::string render_distribution(const DistributionTable& table);

}  // namespace assertctl
