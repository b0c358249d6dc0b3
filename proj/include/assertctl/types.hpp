#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "assertctl/labels.hpp"

namespace assertctl {

// Offsets count Unicode code points of the note text; [start, end).
struct ConceptSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const ConceptSpan&, const ConceptSpan&) = default;
};

struct AnnotatedInstance {
  std::string id;
  std::string text;
  ConceptSpan span;
  std::optional<AssertionLabel> gold;
  std::string dataset;

  friend bool operator==(const AnnotatedInstance&, const AnnotatedInstance&) = default;
};

// Builds an instance from character offsets, filling in the surface.
// Throws Error(SpanOutOfBounds) unless 0 <= start < end <= length(text).
AnnotatedInstance make_instance(std::string id, std::string text, std::size_t start, std::size_t end,
                                std::optional<AssertionLabel> gold, std::string dataset);

// Byte range of the concept inside instance.text.
std::pair<std::size_t, std::size_t> concept_byte_range(const AnnotatedInstance& instance);

enum class Engine { Rule, Simple, Cot, Sc, Tot };

inline constexpr std::array<Engine, 5> kAllEngines = {Engine::Rule, Engine::Simple, Engine::Cot,
                                                      Engine::Sc, Engine::Tot};

std::string_view to_string(Engine engine) noexcept;
Engine parse_engine(std::string_view name);  // throws Error(UnknownEngine)

struct TraceStep {
  std::string prompt;
  std::string completion;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct ReasoningTrace {
  std::vector<TraceStep> steps;
  // Parsed self-consistency votes, in path order. Unparseable paths are absent
  // here but keep their step above.
  std::optional<std::vector<AssertionLabel>> votes;
  // Heuristic value of every complete tree-of-thought path, generation order.
  std::optional<std::vector<double>> path_scores;
  // Free-form explanation lines (rule firings, dropped paths, score fallbacks).
  std::vector<std::string> notes;

  friend bool operator==(const ReasoningTrace&, const ReasoningTrace&) = default;
};

struct Prediction {
  std::string instance_id;
  AssertionLabel label = AssertionLabel::Positive;
  Engine engine = Engine::Rule;
  ReasoningTrace trace;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

}  // namespace assertctl
