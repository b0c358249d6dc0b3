#include <doctest.h>

#include <set>
#include <sstream>

#include "assertctl/context_engine.hpp"
#include "assertctl/corpus.hpp"
#include "assertctl/error.hpp"
#include "support.hpp"

using namespace assertctl;
using namespace assertctl::context;

namespace {

Lexicon lex(const std::string& body) {
  std::istringstream in(body);
  return parse_lexicon(in);
}

AnnotatedInstance inst(const std::string& text, const std::string& concept_text) {
  const auto at = text.find(concept_text);
  REQUIRE(at != std::string::npos);
  return make_instance("t", text, at, at + concept_text.size(), std::nullopt, "sleep");
}

AssertionLabel rule(const std::string& text, const std::string& concept_text) {
  return classify_rule(inst(text, concept_text), default_lexicon()).label;
}

}  // namespace

TEST_CASE("lexicon line parses to one trigger") {
  const auto l = lex("no evidence of\tnegation\tforward\tfalse\n");
  REQUIRE(l.triggers().size() == 1);
  const auto& t = l.triggers()[0];
  CHECK(t.phrase == std::vector<std::string>{"no", "evidence", "of"});
  CHECK(t.dimension == Dimension::Negation);
  CHECK(t.direction == Direction::Forward);
  CHECK_FALSE(t.is_termination);
  CHECK(l.longest_phrase() == 3);
  CHECK(l.version() == "unversioned");
}

TEST_CASE("lexicon errors carry line numbers") {
  try {
    lex("# c\nno\tnegation\tforward\tfalse\nNo\tnegation\tforward\tfalse\n");
    FAIL("expected DuplicateTrigger");
  } catch (const LineError& e) {
    CHECK(e.kind() == ErrorKind::DuplicateTrigger);
    CHECK(e.line() == 3);
  }
  for (const char* bad : {"no\tnegation\tforward\n", "no\tnegativity\tforward\tfalse\n", "no\tnegation\tsideways\tfalse\n",
                          "no\tnegation\tforward\tmaybe\n", "\tnegation\tforward\tfalse\n"}) {
    CAPTURE(bad);
    try {
      lex(bad);
      FAIL("expected MalformedLexiconLine");
    } catch (const LineError& e) {
      CHECK(e.kind() == ErrorKind::MalformedLexiconLine);
      CHECK(e.line() == 1);
    }
  }
  // Same phrase under another dimension is a different trigger.
  CHECK(lex("but\tnegation\tbidirectional\ttrue\nbut\tuncertainty\tbidirectional\ttrue\n").triggers().size() == 2);
}

TEST_CASE("default lexicon covers all dimensions") {
  const auto& l = default_lexicon();
  CHECK(l.triggers().size() >= 40);
  CHECK(l.version() == "context-default-1");
  std::set<Dimension> dims;
  for (const auto& t : l.triggers()) {
    if (!t.is_termination) dims.insert(t.dimension);
  }
  CHECK(dims.size() == 5);
  CHECK(load_lexicon(testing::data_path("lexicon/default_lexicon.tsv")).triggers() == l.triggers());
  CHECK_THROWS_AS(load_lexicon("/nonexistent.tsv"), Error);
}

TEST_CASE("tokenizer keeps joined forms") {
  const auto t = tokenize("H/o non-REM sleep, 7.5 hrs. Mother's");
  std::vector<std::string> norms;
  for (const auto& tok : t) norms.push_back(tok.norm);
  CHECK(norms == std::vector<std::string>{"h/o", "non-rem", "sleep", "7.5", "hrs", "mother's"});
  CHECK(t[0].begin == 0);
  CHECK(t[0].end == 3);
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("He denies snoring. Sleep is poor.").size() == 2);
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("Dr. Smith noted apnea.").size() == 1);
  CHECK(split_sentences("Line one\nLine two").size() == 2);
  CHECK(split_sentences("Is it? Yes!").size() == 2);
  const auto s = split_sentences("He denies snoring. Sleep is poor.");
  CHECK(s[0] == TokenRange{0, 3});
  CHECK(s[1] == TokenRange{3, 6});
}

TEST_CASE("resolve_scope walks") {
  const auto l = lex("no\tnegation\tforward\tfalse\nbut\tnegation\tbidirectional\ttrue\n");
  {
    const auto seg = segment("no snoring or apnea tonight");
    const auto m = find_triggers(l, seg.tokens, seg.sentences[0]);
    REQUIRE(m.size() == 1);
    CHECK(resolve_scope(m[0], seg.sentences[0], {}) == TokenRange{1, 5});
  }
  {
    const auto seg = segment("no snoring but sleeps well");
    const auto m = find_triggers(l, seg.tokens, seg.sentences[0]);
    REQUIRE(m.size() == 2);
    std::vector<TriggerMatch> terms{m[1]};
    CHECK(resolve_scope(m[0], seg.sentences[0], terms) == TokenRange{1, 2});
  }
  {
    const auto seg = segment("snoring no");
    const auto m = find_triggers(l, seg.tokens, seg.sentences[0]);
    REQUIRE(m.size() == 1);
    CHECK(resolve_scope(m[0], seg.sentences[0], {}).empty());
  }
}

TEST_CASE("scope window and directions") {
  const auto l = lex("no\tnegation\tforward\tfalse\nabsent\tnegation\tbackward\tfalse\n"
                     "likely\tuncertainty\tbidirectional\tfalse\n");
  const auto seg = segment("no a b c d e f g h i j k");
  const auto m = find_triggers(l, seg.tokens, seg.sentences[0]);
  CHECK(resolve_scope(m[0], seg.sentences[0], {}) == TokenRange{1, 1 + kScopeWindow});

  const auto back = segment("x y absent z");
  const auto mb = find_triggers(l, back.tokens, back.sentences[0]);
  CHECK(resolve_scope(mb[0], back.sentences[0], {}) == TokenRange{0, 2});

  const auto both = segment("x likely y");
  const auto mm = find_triggers(l, both.tokens, both.sentences[0]);
  CHECK(resolve_scope(mm[0], both.sentences[0], {}) == TokenRange{0, 3});
}

TEST_CASE("longest phrase wins at a position") {
  const auto l = lex("no\tnegation\tforward\tfalse\nno evidence of\tnegation\tforward\tfalse\n");
  const auto seg = segment("no evidence of apnea");
  const auto m = find_triggers(l, seg.tokens, seg.sentences[0]);
  REQUIRE(m.size() == 1);
  CHECK(m[0].trigger->phrase.size() == 3);
}

TEST_CASE("classify_rule examples") {
  CHECK(rule("Patient denies snoring.", "snoring") == AssertionLabel::Negated);
  CHECK(rule("Family history of sleep apnea.", "sleep apnea") == AssertionLabel::Family);
  CHECK(rule("Patient reports snoring.", "snoring") == AssertionLabel::Positive);
  CHECK(rule("Possible obstructive sleep apnea.", "obstructive sleep apnea") == AssertionLabel::Possible);
  CHECK(rule("Return if snoring worsens.", "snoring") == AssertionLabel::Hypothetical);
  CHECK(rule("History of insomnia.", "insomnia") == AssertionLabel::Historical);
}

TEST_CASE("triggers do not cross sentences or terminators") {
  CHECK(rule("Denies snoring. Reports nocturia.", "nocturia") == AssertionLabel::Positive);
  CHECK(rule("Denies chest pain but reports frequent awakenings.", "frequent awakenings") == AssertionLabel::Positive);
  CHECK(rule("Denies chest pain but reports frequent awakenings.", "chest pain") == AssertionLabel::Negated);
}

TEST_CASE("rule trace lists the winning dimension") {
  const auto r = classify_rule(inst("Family history of sleep apnea.", "sleep apnea"), default_lexicon());
  CHECK(r.trace.final_dimensions.size() >= 2);
  CHECK(std::find(r.trace.final_dimensions.begin(), r.trace.final_dimensions.end(), Dimension::Experiencer) !=
        r.trace.final_dimensions.end());
  const auto notes = r.trace.describe(tokenize("Family history of sleep apnea."));
  CHECK_FALSE(notes.empty());
}

TEST_CASE("precedence is a fixed order over covering dimensions") {
  // Every pair of dimensions: the higher one wins.
  const std::vector<std::pair<std::string, Dimension>> cues = {
      {"mother", Dimension::Experiencer}, {"history of", Dimension::Historical}, {"if", Dimension::Hypothetical},
      {"no", Dimension::Negation},        {"possible", Dimension::Uncertainty}};
  for (std::size_t hi = 0; hi < cues.size(); ++hi) {
    for (std::size_t lo = hi + 1; lo < cues.size(); ++lo) {
      const std::string text = cues[hi].first + " " + cues[lo].first + " apnea";
      CAPTURE(text);
      CHECK(rule(text, "apnea") == label_for(cues[hi].second));
      const std::string swapped = cues[lo].first + " " + cues[hi].first + " apnea";
      CHECK(rule(swapped, "apnea") == label_for(cues[hi].second));
    }
  }
}

TEST_CASE("mini corpus is classified exactly") {
  const auto corpus = parse_corpus(testing::data_path("corpora/mini_corpus.jsonl"));
  std::array<std::size_t, kLabelCount> per_label{};
  for (const auto& i : corpus.instances) {
    CAPTURE(i.id);
    CHECK(classify_rule(i, default_lexicon()).label == *i.gold);
    ++per_label[ordinal(*i.gold)];
  }
  for (auto n : per_label) CHECK(n >= 8);
}
