#include "assertctl/context_engine.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "assertctl/embedded.hpp"
#include "assertctl/error.hpp"
#include "assertctl/text.hpp"

namespace assertctl::context {

std::string_view to_string(Dimension d) noexcept {
  switch (d) {
    case Dimension::Negation: return "negation";
    case Dimension::Uncertainty: return "uncertainty";
    case Dimension::Hypothetical: return "hypothetical";
    case Dimension::Historical: return "historical";
    case Dimension::Experiencer: return "experiencer";
  }
  return "?";
}

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::Forward: return "forward";
    case Direction::Backward: return "backward";
    case Direction::Bidirectional: return "bidirectional";
  }
  return "?";
}

std::optional<Dimension> parse_dimension(std::string_view s) noexcept {
  for (auto d : kAllDimensions) {
    if (text::iequals(s, to_string(d))) return d;
  }
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) noexcept {
  for (auto d : {Direction::Forward, Direction::Backward, Direction::Bidirectional}) {
    if (text::iequals(s, to_string(d))) return d;
  }
  return std::nullopt;
}

AssertionLabel label_for(Dimension d) noexcept {
  switch (d) {
    case Dimension::Negation: return AssertionLabel::Negated;
    case Dimension::Uncertainty: return AssertionLabel::Possible;
    case Dimension::Hypothetical: return AssertionLabel::Hypothetical;
    case Dimension::Historical: return AssertionLabel::Historical;
    case Dimension::Experiencer: return AssertionLabel::Family;
  }
  return AssertionLabel::Positive;
}

std::string Trigger::phrase_text() const {
  std::string out;
  for (const auto& tok : phrase) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

// --- lexicon -------------------------------------------------------------

Lexicon::Lexicon(std::vector<Trigger> triggers, std::string version) : version_(std::move(version)) {
  std::set<std::tuple<std::vector<std::string>, Dimension, Direction>> seen;
  for (const auto& t : triggers) {
    if (t.phrase.empty()) throw Error(ErrorKind::MalformedLexiconLine, "empty trigger phrase");
    if (!seen.emplace(t.phrase, t.dimension, t.direction).second) {
      throw Error(ErrorKind::DuplicateTrigger, "'" + t.phrase_text() + "' " +
                                                   std::string(to_string(t.dimension)) + " " +
                                                   std::string(to_string(t.direction)));
    }
    longest_ = std::max(longest_, t.phrase.size());
  }
  triggers_ = std::move(triggers);
}

Lexicon parse_lexicon(std::istream& in, std::string default_version) {
  std::vector<Trigger> triggers;
  std::string version = std::move(default_version);
  std::set<std::tuple<std::vector<std::string>, Dimension, Direction>> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto trimmed = text::trim(raw);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      constexpr std::string_view kVersionTag = "version:";
      auto body = text::trim(trimmed.substr(1));
      if (body.substr(0, kVersionTag.size()) == kVersionTag) {
        version = std::string(text::trim(body.substr(kVersionTag.size())));
      }
      continue;
    }

    std::vector<std::string_view> cols;
    std::string_view rest = raw;
    for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
      cols.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    cols.push_back(rest);
    if (cols.size() != 4) {
      throw LineError(ErrorKind::MalformedLexiconLine, line,
                      "expected 4 tab-separated columns, found " + std::to_string(cols.size()));
    }

    Trigger trigger;
    for (auto& tok : tokenize(cols[0])) trigger.phrase.push_back(std::move(tok.norm));
    if (trigger.phrase.empty()) throw LineError(ErrorKind::MalformedLexiconLine, line, "empty phrase");
    const auto dim = parse_dimension(text::trim(cols[1]));
    if (!dim) throw LineError(ErrorKind::MalformedLexiconLine, line, "unknown dimension '" + std::string(cols[1]) + "'");
    const auto dir = parse_direction(text::trim(cols[2]));
    if (!dir) throw LineError(ErrorKind::MalformedLexiconLine, line, "unknown direction '" + std::string(cols[2]) + "'");
    const auto term = text::to_lower(text::trim(cols[3]));
    if (term != "true" && term != "false") {
      throw LineError(ErrorKind::MalformedLexiconLine, line, "is_termination must be true or false");
    }
    trigger.dimension = *dim;
    trigger.direction = *dir;
    trigger.is_termination = term == "true";

    if (!seen.emplace(trigger.phrase, trigger.dimension, trigger.direction).second) {
      throw LineError(ErrorKind::DuplicateTrigger, line, "'" + trigger.phrase_text() + "' repeated");
    }
    triggers.push_back(std::move(trigger));
  }
  return Lexicon(std::move(triggers), std::move(version));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open lexicon '" + path.string() + "'");
  return parse_lexicon(in, path.filename().string());
}

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = [] {
    std::istringstream in{std::string(embedded::default_lexicon())};
    return parse_lexicon(in, "embedded");
  }();
  return lexicon;
}

// --- tokens and sentences ------------------------------------------------

namespace {

bool is_word_byte(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool joins_word(std::string_view s, std::size_t i) noexcept {
  if (i == 0 || i + 1 >= s.size()) return false;
  const char c = s[i];
  if (c == '.') return is_digit(s[i - 1]) && is_digit(s[i + 1]);
  if (c == '/' || c == '-' || c == '\'') return is_word_byte(s[i - 1]) && is_word_byte(s[i + 1]);
  return false;
}

bool is_guarded_abbreviation(std::string_view norm) noexcept {
  static constexpr std::array<std::string_view, 10> kGuard = {
      "dr", "mr", "mrs", "ms", "st", "jr", "sr", "vs", "pt", "approx"};
  if (norm.size() == 1 && std::isalpha(static_cast<unsigned char>(norm[0]))) return true;
  return std::find(kGuard.begin(), kGuard.end(), norm) != kGuard.end();
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return segment(text).tokens; }

Segmentation segment(std::string_view s) {
  Segmentation seg;
  std::size_t sentence_start = 0;
  auto close_sentence = [&] {
    if (seg.tokens.size() > sentence_start) {
      seg.sentences.push_back({sentence_start, seg.tokens.size()});
      sentence_start = seg.tokens.size();
    }
  };

  std::size_t i = 0;
  while (i < s.size()) {
    if (is_word_byte(s[i])) {
      const std::size_t begin = i;
      while (i < s.size() && (is_word_byte(s[i]) || joins_word(s, i))) ++i;
      seg.tokens.push_back({text::to_lower(s.substr(begin, i - begin)), begin, i});
      continue;
    }
    const char c = s[i];
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      const bool guarded = c == '.' && !seg.tokens.empty() && seg.tokens.back().end == i &&
                           seg.tokens.size() > sentence_start &&
                           is_guarded_abbreviation(seg.tokens.back().norm);
      if (!guarded) close_sentence();
    }
    ++i;
  }
  close_sentence();
  return seg;
}

std::vector<TokenRange> split_sentences(std::string_view text) { return segment(text).sentences; }

// --- scope ---------------------------------------------------------------

TokenRange resolve_scope(const TriggerMatch& match, TokenRange sentence,
                         std::span<const TriggerMatch> terminators) {
  const auto dim = match.trigger->dimension;
  const auto dir = match.trigger->direction;

  TokenRange forward{match.tokens.end, match.tokens.end};
  if (dir != Direction::Backward) {
    std::size_t limit = std::min(sentence.end, match.tokens.end + kScopeWindow);
    for (const auto& t : terminators) {
      if (t.trigger->dimension == dim && t.tokens.begin >= match.tokens.end) {
        limit = std::min(limit, t.tokens.begin);
      }
    }
    forward.end = std::max(forward.begin, limit);
  }

  TokenRange backward{match.tokens.begin, match.tokens.begin};
  if (dir != Direction::Forward) {
    std::size_t limit = std::max(sentence.begin,
                                 match.tokens.begin >= kScopeWindow ? match.tokens.begin - kScopeWindow : 0);
    for (const auto& t : terminators) {
      if (t.trigger->dimension == dim && t.tokens.end <= match.tokens.begin) {
        limit = std::max(limit, t.tokens.end);
      }
    }
    backward.begin = std::min(backward.end, limit);
  }

  switch (dir) {
    case Direction::Forward: return forward;
    case Direction::Backward: return backward;
    case Direction::Bidirectional: break;
  }
  if (forward.empty() && backward.empty()) return {match.tokens.end, match.tokens.end};
  if (backward.empty()) return forward;
  if (forward.empty()) return backward;
  return {backward.begin, forward.end};
}

std::vector<TriggerMatch> find_triggers(const Lexicon& lexicon, std::span<const Token> tokens,
                                        TokenRange sentence) {
  std::vector<TriggerMatch> matches;
  const auto& all = lexicon.triggers();
  for (std::size_t pos = sentence.begin; pos < sentence.end; ++pos) {
    const std::size_t max_len = std::min(lexicon.longest_phrase(), sentence.end - pos);
    for (std::size_t len = max_len; len > 0; --len) {
      bool any = false;
      for (const auto& trigger : all) {
        if (trigger.phrase.size() != len) continue;
        bool equal = true;
        for (std::size_t k = 0; k < len && equal; ++k) equal = trigger.phrase[k] == tokens[pos + k].norm;
        if (equal) {
          matches.push_back({&trigger, {pos, pos + len}});
          any = true;
        }
      }
      if (any) break;
    }
  }
  return matches;
}

std::vector<std::string> RuleTrace::describe(std::span<const Token> tokens) const {
  std::vector<std::string> lines;
  auto words = [&](TokenRange r) {
    std::string out;
    for (std::size_t i = r.begin; i < r.end && i < tokens.size(); ++i) {
      if (!out.empty()) out += ' ';
      out += tokens[i].norm;
    }
    return out;
  };
  for (const auto& f : fired) {
    lines.push_back(std::string(to_string(f.trigger.dimension)) + " trigger '" + f.trigger.phrase_text() +
                    "' (" + std::string(to_string(f.trigger.direction)) + ") at tokens [" +
                    std::to_string(f.trigger_tokens.begin) + "," + std::to_string(f.trigger_tokens.end) +
                    ") scope [" + std::to_string(f.scope.begin) + "," + std::to_string(f.scope.end) + ") '" +
                    words(f.scope) + "'");
  }
  if (fired.empty()) lines.emplace_back("no trigger scope covers the concept");
  return lines;
}

RuleResult classify_rule(const AnnotatedInstance& instance, const Lexicon& lexicon) {
  RuleResult result;
  const auto seg = segment(instance.text);
  const auto [cb, ce] = concept_byte_range(instance);

  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < seg.tokens.size(); ++i) {
    if (seg.tokens[i].begin < ce && seg.tokens[i].end > cb) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first) return result;

  const auto sentence_it = std::find_if(seg.sentences.begin(), seg.sentences.end(),
                                        [&](const TokenRange& s) { return s.contains(*first); });
  const TokenRange sentence = *sentence_it;
  const TokenRange concept_tokens{*first, std::min(*last + 1, sentence.end)};
  result.trace.sentence = sentence;
  result.trace.concept_tokens = concept_tokens;

  std::vector<TriggerMatch> matches = find_triggers(lexicon, seg.tokens, sentence);
  std::erase_if(matches, [&](const TriggerMatch& m) { return m.tokens.overlaps(concept_tokens); });

  std::vector<TriggerMatch> terminators;
  std::copy_if(matches.begin(), matches.end(), std::back_inserter(terminators),
               [](const TriggerMatch& m) { return m.trigger->is_termination; });

  std::array<bool, kAllDimensions.size()> covered{};
  for (const auto& m : matches) {
    if (m.trigger->is_termination) continue;
    const auto scope = resolve_scope(m, sentence, terminators);
    if (!scope.overlaps(concept_tokens)) continue;
    covered[static_cast<std::size_t>(m.trigger->dimension)] = true;
    result.trace.fired.push_back({*m.trigger, m.tokens, scope});
  }
  for (auto d : kAllDimensions) {
    if (covered[static_cast<std::size_t>(d)]) result.trace.final_dimensions.push_back(d);
  }

  static constexpr std::array<Dimension, 5> kPrecedence = {
      Dimension::Experiencer, Dimension::Historical, Dimension::Hypothetical, Dimension::Negation,
      Dimension::Uncertainty};
  for (auto d : kPrecedence) {
    if (covered[static_cast<std::size_t>(d)]) {
      result.label = label_for(d);
      break;
    }
  }
  return result;
}

}  // namespace assertctl::context
