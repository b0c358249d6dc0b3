#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assertctl/context_engine.hpp"
#include "assertctl/corpus.hpp"
#include "assertctl/llm_backend.hpp"
#include "assertctl/types.hpp"

namespace assertctl::reasoning {

enum class Strategy { Simple, Cot, Sc, Tot };

std::string_view to_string(Strategy s) noexcept;

struct FewShotExample {
  AnnotatedInstance instance;
  AssertionLabel gold = AssertionLabel::Positive;
};

struct StrategyConfig {
  Strategy strategy = Strategy::Simple;
  std::size_t sc_paths = 5;        // self-consistency path count
  double sc_temperature = 0.7;
  double temperature = 0.0;        // simple, cot and tot generation
  std::size_t branching = 2;       // tree-of-thought candidates per frontier node
  std::size_t depth = 2;           // tree-of-thought levels
  int max_tokens = llm::kDefaultMaxTokens;
  std::int64_t seed_base = 0;      // self-consistency path i uses seed_base + i
  std::size_t max_in_flight = llm::kDefaultMaxInFlight;
  std::vector<FewShotExample> few_shot;

  // Throws Error(InvalidConfig) on m, b, d < 1, a zero self-consistency
  // temperature, or temperatures outside [0, 2].
  void validate() const;
};

// Few-shot examples from a native corpus file; every record needs a gold label.
std::vector<FewShotExample> few_shot_from_corpus(const Corpus& corpus);

// "positive, negated, possible, hypothetical, historical, family"
std::string label_options();

/// Prompt for the simple and chain-of-thought engines (self-consistency
/// reuses the chain-of-thought prompt). The user message ends with the line
/// "ANSWER: <label>"; few-shot examples come before the query.
llm::CompletionRequest build_prompt(Strategy strategy, const AnnotatedInstance& instance,
                                    const StrategyConfig& config);

/// Label from a completion. Primary rule: the last line of the form
/// "ANSWER: <label>" (case-insensitive). Fallback: the last standalone
/// canonical label word within the final 200 characters.
/// Throws Error(Unparseable) when neither applies.
AssertionLabel parse_answer(std::string_view completion);

// Value of the last "SCORE: <decimal>" line when it lies in [0, 1].
std::optional<double> parse_score(std::string_view completion);

/// Majority label; ties go to the smallest canonical ordinal.
/// Throws Error(InvalidConfig) on an empty vote set.
AssertionLabel aggregate_sc(std::span<const AssertionLabel> votes);

struct ScoredPath {
  std::vector<std::string> steps;
  std::optional<AssertionLabel> label;  // parsed from the final step
  double score = 0.0;                   // mean of the step scores
};

// Index of the highest-scoring labelled path, earliest on ties.
std::optional<std::size_t> select_best_path(std::span<const ScoredPath> paths);

Prediction run_single(Strategy strategy, const AnnotatedInstance& instance, const StrategyConfig& config,
                      llm::Backend& backend);
Prediction run_sc(const AnnotatedInstance& instance, const StrategyConfig& config, llm::Backend& backend);
Prediction run_tot(const AnnotatedInstance& instance, const StrategyConfig& config, llm::Backend& backend);

struct EngineOutcome {
  std::string instance_id;
  std::optional<Prediction> prediction;
  std::optional<Error> error;
};

/// One outcome per corpus instance, in corpus order. The rule engine ignores
/// `backend` (it may be null); the others require one. Per-instance failures
/// land in that outcome's error slot.
std::vector<EngineOutcome> run_engine(Engine engine, const Corpus& corpus, const StrategyConfig& config,
                                      llm::Backend* backend,
                                      const context::Lexicon& lexicon = context::default_lexicon());

}  // namespace assertctl::reasoning
