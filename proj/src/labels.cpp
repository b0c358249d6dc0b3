#include "assertctl/labels.hpp"

#include <string>

#include "assertctl/error.hpp"
#include "assertctl/text.hpp"
#include "assertctl/types.hpp"

namespace assertctl {

namespace {

constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "positive", "negated", "possible", "hypothetical", "historical", "family",
};

constexpr std::array<std::string_view, 5> kEngineNames = {"rule", "simple", "cot", "sc", "tot"};

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::UnknownDataset: return "UnknownDataset";
    case ErrorKind::UnknownEngine: return "UnknownEngine";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::SpanOutOfBounds: return "SpanOutOfBounds";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::StandoffParseError: return "StandoffParseError";
    case ErrorKind::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorKind::TokenMismatch: return "TokenMismatch";
    case ErrorKind::MissingGold: return "MissingGold";
    case ErrorKind::MalformedLexiconLine: return "MalformedLexiconLine";
    case ErrorKind::DuplicateTrigger: return "DuplicateTrigger";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::AuthFailure: return "AuthFailure";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::Transport: return "Transport";
    case ErrorKind::ScriptExhausted: return "ScriptExhausted";
    case ErrorKind::Unparseable: return "Unparseable";
    case ErrorKind::AllPathsUnparseable: return "AllPathsUnparseable";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnknownInstanceId: return "UnknownInstanceId";
    case ErrorKind::DuplicatePrediction: return "DuplicatePrediction";
    case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::UnknownSlice: return "UnknownSlice";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

AssertionLabel label_from_ordinal(std::size_t ordinal) {
  if (ordinal >= kLabelCount) {
    throw Error(ErrorKind::UnknownLabel, "ordinal " + std::to_string(ordinal));
  }
  return static_cast<AssertionLabel>(ordinal);
}

std::string_view to_string(AssertionLabel label) noexcept { return kLabelNames[ordinal(label)]; }

AssertionLabel parse_label(std::string_view raw) {
  const auto name = text::trim(raw);
  for (auto label : kAllLabels) {
    if (text::iequals(name, to_string(label))) return label;
  }
  if (text::iequals(name, "present")) return AssertionLabel::Positive;
  if (text::iequals(name, "absent")) return AssertionLabel::Negated;
  throw Error(ErrorKind::UnknownLabel, "'" + std::string(name) + "'");
}

std::vector<AssertionLabel> LabelSet::to_vector() const {
  std::vector<AssertionLabel> out;
  for (auto l : kAllLabels) {
    if (contains(l)) out.push_back(l);
  }
  return out;
}

LabelSet label_set(std::string_view dataset) {
  if (dataset == "i2b2") {
    return {AssertionLabel::Positive, AssertionLabel::Negated, AssertionLabel::Possible,
            AssertionLabel::Hypothetical, AssertionLabel::Family};
  }
  if (dataset == "sleep" || dataset == "all") {
    LabelSet all;
    for (auto l : kAllLabels) all.insert(l);
    return all;
  }
  throw Error(ErrorKind::UnknownDataset, "'" + std::string(dataset) + "'");
}

std::string_view to_string(Engine engine) noexcept {
  return kEngineNames[static_cast<std::size_t>(engine)];
}

Engine parse_engine(std::string_view name) {
  for (auto e : kAllEngines) {
    if (text::iequals(text::trim(name), to_string(e))) return e;
  }
  throw Error(ErrorKind::UnknownEngine, "'" + std::string(name) + "'");
}

}  // namespace assertctl
