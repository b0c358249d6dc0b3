#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assertctl/types.hpp"

namespace assertctl::context {

enum class Dimension { Negation, Uncertainty, Hypothetical, Historical, Experiencer };
enum class Direction { Forward, Backward, Bidirectional };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::Negation, Dimension::Uncertainty, Dimension::Hypothetical, Dimension::Historical,
    Dimension::Experiencer};

std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Direction d) noexcept;
std::optional<Dimension> parse_dimension(std::string_view s) noexcept;
std::optional<Direction> parse_direction(std::string_view s) noexcept;

// Label a dimension maps to when it is the winning dimension.
AssertionLabel label_for(Dimension d) noexcept;

struct Trigger {
  std::vector<std::string> phrase;  // normalized tokens
  Dimension dimension = Dimension::Negation;
  Direction direction = Direction::Forward;
  // A termination trigger closes open scopes of its dimension and opens none.
  bool is_termination = false;

  std::string phrase_text() const;
  friend bool operator==(const Trigger&, const Trigger&) = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  // Throws Error(DuplicateTrigger) on a repeated (phrase, dimension, direction).
  Lexicon(std::vector<Trigger> triggers, std::string version);

  const std::vector<Trigger>& triggers() const noexcept { return triggers_; }
  const std::string& version() const noexcept { return version_; }
  std::size_t longest_phrase() const noexcept { return longest_; }

 private:
  std::vector<Trigger> triggers_;
  std::string version_;
  std::size_t longest_ = 0;
};

/// Tab-separated: phrase, dimension, direction, is_termination ("true"/"false").
/// Blank lines and lines starting with '#' are skipped; a "# version: X"
/// comment sets the lexicon version.
Lexicon parse_lexicon(std::istream& in, std::string default_version = "unversioned");
Lexicon load_lexicon(const std::filesystem::path& path);
const Lexicon& default_lexicon();

struct Token {
  std::string norm;  // lowercase
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  bool empty() const noexcept { return begin >= end; }
  bool contains(std::size_t i) const noexcept { return begin <= i && i < end; }
  bool overlaps(const TokenRange& o) const noexcept { return begin < o.end && o.begin < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// Word tokens: runs of letters and digits, keeping '/', '-', '\'' between two
// word characters and '.' between two digits.
std::vector<Token> tokenize(std::string_view text);

struct Segmentation {
  std::vector<Token> tokens;
  std::vector<TokenRange> sentences;
};

// Sentences end at '.', '!', '?' or a newline, except for a period right
// after a guarded abbreviation ("dr", "mr", single letters, ...).
Segmentation segment(std::string_view text);
std::vector<TokenRange> split_sentences(std::string_view text);

inline constexpr std::size_t kScopeWindow = 10;

struct TriggerMatch {
  const Trigger* trigger = nullptr;
  TokenRange tokens;  // where the phrase sits
};

/// Scope of a trigger occurrence inside `sentence`. Forward scopes run from
/// the token after the trigger toward the sentence end, backward scopes
/// mirror that toward the sentence start; both stop before the nearest
/// termination trigger of the same dimension and span at most kScopeWindow
/// tokens. A bidirectional scope is returned as the single range covering
/// both sides (the trigger tokens included).
TokenRange resolve_scope(const TriggerMatch& match, TokenRange sentence,
                         std::span<const TriggerMatch> terminators);

// All longest matches inside `sentence`, in token order. At each start
// position only the longest matching phrase fires (every trigger sharing
// that phrase fires).
std::vector<TriggerMatch> find_triggers(const Lexicon& lexicon, std::span<const Token> tokens,
                                        TokenRange sentence);

struct FiredScope {
  Trigger trigger;
  TokenRange trigger_tokens;
  TokenRange scope;
};

struct RuleTrace {
  std::vector<FiredScope> fired;           // triggers whose scope reached the concept
  std::vector<Dimension> final_dimensions;  // in kAllDimensions order
  TokenRange concept_tokens;
  TokenRange sentence;

  std::vector<std::string> describe(std::span<const Token> tokens) const;
};

struct RuleResult {
  AssertionLabel label = AssertionLabel::Positive;
  RuleTrace trace;
};

/// Precedence among covering dimensions:
/// experiencer > historical > hypothetical > negation > uncertainty;
/// none covering means Positive.
RuleResult classify_rule(const AnnotatedInstance& instance, const Lexicon& lexicon);

}  // namespace assertctl::context
