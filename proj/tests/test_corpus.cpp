#include <doctest.h>

#include <cmath>
#include <sstream>

#include "assertctl/corpus.hpp"
#include "assertctl/error.hpp"
#include "support.hpp"

using namespace assertctl;

namespace {

Corpus parse_text(const std::string& s) {
  std::istringstream in(s);
  return parse_corpus(in);
}

template <typename F>
void expect_line_error(F&& f, ErrorKind kind, std::size_t line) {
  try {
    f();
    FAIL("expected an error");
  } catch (const LineError& e) {
    CHECK(e.kind() == kind);
    CHECK(e.line() == line);
  }
}

// Corpus with the given number of instances per label, in label order.
Corpus synthetic(const std::array<std::size_t, kLabelCount>& counts, const std::string& dataset) {
  std::vector<AnnotatedInstance> v;
  for (auto l : kAllLabels) {
    for (std::size_t i = 0; i < counts[ordinal(l)]; ++i) {
      v.push_back(make_instance(std::string(to_string(l)) + std::to_string(i), "concept here", 0, 7, l, dataset));
    }
  }
  return make_corpus(std::move(v));
}

// Independent percentage oracle: round-half-up of 100 * count / total at two places.
double percent_oracle(std::size_t count, std::size_t total) {
  return std::floor(10000.0 * static_cast<double>(count) / static_cast<double>(total) + 0.5) / 100.0;
}

}  // namespace

TEST_CASE("parse_corpus reads a native record") {
  const auto c = parse_text(
      R"({"id":"s1","text":"Patient denies snoring.","start":15,"end":22,"gold":"negated","dataset":"sleep"})"
      "\n");
  REQUIRE(c.instances.size() == 1);
  CHECK(c.instances[0].span.surface == "snoring");
  CHECK(c.instances[0].gold == AssertionLabel::Negated);
  CHECK(c.dataset == "sleep");
}

TEST_CASE("parse_corpus skips blank lines and tolerates CRLF") {
  const auto c = parse_text(
      "\n"
      R"({"id":"a","text":"no snoring","start":3,"end":10,"dataset":"sleep"})"
      "\r\n\n");
  REQUIRE(c.instances.size() == 1);
  CHECK_FALSE(c.instances[0].gold.has_value());
}

TEST_CASE("parse_corpus reports the failing line") {
  const std::string good = R"({"id":"a","text":"no snoring","start":3,"end":10,"dataset":"sleep"})";
  expect_line_error([&] { parse_text(good + "\n" + R"({"id":"b","text":"abc","start":0,"end":4,"dataset":"sleep"})"); },
                    ErrorKind::SpanOutOfBounds, 2);
  expect_line_error([&] { parse_text(good + "\n\n" + good); }, ErrorKind::DuplicateId, 3);
  expect_line_error([&] { parse_text("{not json"); }, ErrorKind::MalformedRecord, 1);
  expect_line_error([&] { parse_text(R"({"id":"a","text":"abc","start":0,"dataset":"sleep"})"); },
                    ErrorKind::MalformedRecord, 1);
  expect_line_error([&] { parse_text(R"({"id":"a","text":"abc","start":0,"end":1,"dataset":"sleep","x":1})"); },
                    ErrorKind::MalformedRecord, 1);
  expect_line_error([&] { parse_text(R"({"id":"a","text":"abc","start":0,"end":1,"gold":"conditional","dataset":"sleep"})"); },
                    ErrorKind::MalformedRecord, 1);
  expect_line_error([&] { parse_text(R"({"id":"","text":"abc","start":0,"end":1,"dataset":"sleep"})"); },
                    ErrorKind::MalformedRecord, 1);
  expect_line_error([&] { parse_text(R"({"id":"a","text":"abc","start":-1,"end":1,"dataset":"sleep"})"); },
                    ErrorKind::MalformedRecord, 1);
}

TEST_CASE("missing corpus file is an IoFailure") {
  try {
    parse_corpus(std::filesystem::path("/nonexistent/corpus.jsonl"));
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoFailure);
  }
}

TEST_CASE("serialize_corpus: empty corpus, line count, byte roundtrip") {
  std::ostringstream empty;
  serialize_corpus(Corpus{}, empty);
  CHECK(empty.str().empty());

  const auto two = synthetic({1, 1, 0, 0, 0, 0}, "sleep");
  std::ostringstream out;
  serialize_corpus(two, out);
  const auto written = out.str();
  CHECK(std::count(written.begin(), written.end(), '\n') == 2);

  for (const char* rel : {"corpora/mini_corpus.jsonl", "corpora/sc_demo_corpus.jsonl", "corpora/few_shot_examples.jsonl"}) {
    CAPTURE(rel);
    const auto original = testing::read_file(testing::data_path(rel));
    std::istringstream in(original);
    const auto parsed = parse_corpus(in);
    std::ostringstream again;
    serialize_corpus(parsed, again);
    CHECK(again.str() == original);
    std::istringstream in2(again.str());
    CHECK(parse_corpus(in2) == parsed);
  }
}

TEST_CASE("serialize_corpus to a file and back") {
  testing::TempDir dir("corpus");
  const auto corpus = parse_corpus(testing::data_path("corpora/mini_corpus.jsonl"));
  CHECK(corpus.instances.size() == 60);
  serialize_corpus(corpus, dir / "copy.jsonl");
  CHECK(parse_corpus(dir / "copy.jsonl") == corpus);
  CHECK_THROWS_AS(serialize_corpus(corpus, dir / "missing-dir" / "x.jsonl"), Error);
}

TEST_CASE("non-ASCII text keeps code-point offsets through a roundtrip") {
  const auto inst = make_instance("u1", "Caf\xC3\xA9-induced ins\xC3\xB3mnia", 13, 21, AssertionLabel::Positive, "sleep");
  CHECK(inst.span.surface == "ins\xC3\xB3mnia");
  std::istringstream in(serialize_record(inst) + "\n");
  CHECK(parse_corpus(in).instances[0] == inst);
}

TEST_CASE("mixed datasets are tagged all") {
  auto a = make_instance("a", "x y", 0, 1, AssertionLabel::Positive, "sleep");
  auto b = make_instance("b", "x y", 0, 1, AssertionLabel::Positive, "i2b2");
  CHECK(make_corpus({a, b}).dataset == "all");
  CHECK(make_corpus({}).dataset.empty());
  CHECK_THROWS_AS(make_corpus({a, a}), Error);
}

TEST_CASE("i2b2 standoff: hand-computed span") {
  const auto r = parse_i2b2_assertion("no acute distress",
                                      {R"(c="acute distress" 1:1 1:2||t="problem"||a="absent")"});
  REQUIRE(r.instances.size() == 1);
  CHECK(r.instances[0].span.start == 3);
  CHECK(r.instances[0].span.end == 17);
  CHECK(r.instances[0].span.surface == "acute distress");
  CHECK(r.instances[0].gold == AssertionLabel::Negated);
  CHECK(r.instances[0].dataset == "i2b2");
  CHECK(r.instances[0].id == "i2b2:1");
}

TEST_CASE("i2b2 standoff: lowercase c= string matches mixed-case note") {
  const auto r = parse_i2b2_assertion("Line one\nPt has Chest Pain today",
                                      {R"(c="chest pain" 2:2 2:3||t="problem"||a="present")"}, "doc7");
  REQUIRE(r.instances.size() == 1);
  CHECK(r.instances[0].span.surface == "Chest Pain");
  CHECK(r.instances[0].id == "doc7:1");
}

TEST_CASE("i2b2 standoff: conditional is skipped, other errors raise") {
  const std::string note = "pt has fever\nno rash";
  const auto r = parse_i2b2_assertion(note, {R"(c="fever" 1:2 1:2||t="problem"||a="conditional")",
                                             R"(c="rash" 2:1 2:1||t="problem"||a="associated_with_someone_else")"});
  CHECK(r.skipped.size() == 1);
  CHECK(r.skipped[0].line == 1);
  REQUIRE(r.instances.size() == 1);
  CHECK(r.instances[0].gold == AssertionLabel::Family);

  struct Case {
    const char* line;
    ErrorKind kind;
  };
  for (const auto& c : {Case{R"(c="fever" 1:1 1:1||t="problem"||a="present")", ErrorKind::TokenMismatch},
                        Case{R"(c="fever" 1:2 1:5||t="problem"||a="present")", ErrorKind::CoordinateOutOfRange},
                        Case{R"(c="fever" 3:0 3:0||t="problem"||a="present")", ErrorKind::CoordinateOutOfRange},
                        Case{R"(c="fever rash" 1:2 2:1||t="problem"||a="present")", ErrorKind::CoordinateOutOfRange},
                        Case{R"(c="fever" 1:2 1:2||t="treatment"||a="present")", ErrorKind::StandoffParseError},
                        Case{R"(c="fever" 1:2 1:2||t="problem"||a="unlikely")", ErrorKind::StandoffParseError},
                        Case{R"(fever 1:2 1:2)", ErrorKind::StandoffParseError}}) {
    CAPTURE(c.line);
    try {
      parse_i2b2_assertion(note, {"", c.line});
      FAIL("expected an error");
    } catch (const LineError& e) {
      CHECK(e.kind() == c.kind);
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("i2b2 fixture converts with exact surfaces") {
  const auto note = testing::read_file(testing::data_path("i2b2/sample_note.txt"));
  std::vector<std::string> lines;
  std::istringstream ast(testing::read_file(testing::data_path("i2b2/sample_note.ast")));
  for (std::string l; std::getline(ast, l);) lines.push_back(l);
  const auto r = parse_i2b2_assertion(note, lines, "sample_note");
  CHECK(r.instances.size() == 7);
  CHECK(r.skipped.size() == 1);
  const auto corpus = make_corpus(r.instances);
  std::ostringstream out;
  serialize_corpus(corpus, out);
  std::istringstream in(out.str());
  CHECK(parse_corpus(in) == corpus);
}

TEST_CASE("corpus_stats: single instance and missing gold") {
  const auto one = synthetic({0, 0, 0, 0, 0, 1}, "sleep");
  const auto t = corpus_stats(one);
  CHECK(t[AssertionLabel::Family].count == 1);
  CHECK(t[AssertionLabel::Family].percent_centi == 10000);
  CHECK(t.total == 1);

  auto v = one.instances;
  v[0].gold.reset();
  try {
    corpus_stats(make_corpus(v));
    FAIL("expected MissingGold");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingGold);
  }

  const auto empty = corpus_stats(Corpus{});
  CHECK(empty.total == 0);
  CHECK(render_distribution(empty).find("total") != std::string::npos);
}

TEST_CASE("corpus_stats: sleep-sized distribution") {
  // positive, negated, possible, hypothetical, historical, family
  const auto t = corpus_stats(synthetic({131, 33, 46, 33, 81, 40}, "sleep"));
  CHECK(t.total == 364);
  CHECK(t[AssertionLabel::Positive].percent() == doctest::Approx(35.99));
  CHECK(t[AssertionLabel::Family].percent() == doctest::Approx(10.99));
  CHECK(t[AssertionLabel::Historical].percent() == doctest::Approx(22.25));
  CHECK(t[AssertionLabel::Negated].percent() == doctest::Approx(9.07));
  CHECK(t[AssertionLabel::Hypothetical].percent() == doctest::Approx(9.07));
  CHECK(t[AssertionLabel::Possible].percent() == doctest::Approx(12.64));
}

TEST_CASE("corpus_stats: i2b2-sized distribution against the rounding oracle") {
  const std::array<std::size_t, kLabelCount> counts{1988, 758, 265, 317, 0, 185};
  const auto t = corpus_stats(synthetic(counts, "i2b2"));
  CHECK(t.total == 3513);
  for (auto l : kAllLabels) {
    CAPTURE(to_string(l));
    CHECK(t[l].count == counts[ordinal(l)]);
    CHECK(t[l].percent() == doctest::Approx(percent_oracle(counts[ordinal(l)], 3513)));
  }
  CHECK(t[AssertionLabel::Positive].percent() == doctest::Approx(56.59));
  CHECK(t[AssertionLabel::Negated].percent() == doctest::Approx(21.58));
  const auto table = render_distribution(t);
  CHECK(table.find("historical") == std::string::npos);
  CHECK(table.find("56.59%") != std::string::npos);
}

TEST_CASE("percent rounding is half-up") {
  // 1/8 = 12.5% exactly; 1/16 = 6.25%; 1/32 = 3.125% -> 3.13
  CHECK(corpus_stats(synthetic({1, 31, 0, 0, 0, 0}, "sleep"))[AssertionLabel::Positive].percent_centi == 313);
  CHECK(corpus_stats(synthetic({1, 15, 0, 0, 0, 0}, "sleep"))[AssertionLabel::Positive].percent_centi == 625);
}
