#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "support.hpp"

using testing::quoted;
using testing::run_cli;

namespace {

std::string data(const std::string& rel) { return quoted(testing::data_path(rel)); }

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("stats") {
  testing::TempDir dir("cli-stats");
  auto r = run_cli("stats --corpus " + data("corpora/mini_corpus.jsonl"), dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("positive") != std::string::npos);
  CHECK(r.out.find("16.67%") != std::string::npos);
  CHECK(r.out.find("60") != std::string::npos);

  r = run_cli("stats --corpus " + quoted(dir / "missing.jsonl"), dir);
  CHECK(r.exit_code == 2);

  testing::write_file(dir / "empty.jsonl", "");
  r = run_cli("stats --corpus " + quoted(dir / "empty.jsonl"), dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("total") != std::string::npos);

  testing::write_file(dir / "bad.jsonl",
                      R"({"id":"a","text":"abc","start":0,"end":1,"dataset":"sleep"})"
                      "\n"
                      R"({"id":"b","text":"abc","start":0,"end":9,"dataset":"sleep"})"
                      "\n");
  r = run_cli("stats --corpus " + quoted(dir / "bad.jsonl"), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("predict rule then evaluate") {
  testing::TempDir dir("cli-rule");
  const auto out = dir / "out";
  auto r = run_cli("predict --engine rule --corpus " + data("corpora/mini_corpus.jsonl") + " --out " + quoted(out), dir);
  REQUIRE(r.exit_code == 0);
  const auto pred = lines_of(testing::read_file(out / "predictions.jsonl"));
  CHECK(pred.size() == 61);
  CHECK(pred[0].find("\"fingerprint\"") != std::string::npos);
  CHECK(lines_of(testing::read_file(out / "traces.jsonl")).size() == 61);

  r = run_cli("evaluate --predictions " + quoted(out / "predictions.jsonl") + " --corpus " +
                  data("corpora/mini_corpus.jsonl") + " --out " + quoted(out),
              dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("micro-F1 1.0000") != std::string::npos);
  CHECK(std::filesystem::exists(out / "report.json"));

  // Shuffled predictions give the same report.
  auto shuffled = pred;
  std::mt19937 rng(1);
  std::shuffle(shuffled.begin() + 1, shuffled.end(), rng);
  std::string joined;
  for (const auto& l : shuffled) joined += l + "\n";
  testing::write_file(dir / "shuffled.jsonl", joined);
  const auto first_report = testing::read_file(out / "report.json");
  r = run_cli("evaluate --predictions " + quoted(dir / "shuffled.jsonl") + " --corpus " +
                  data("corpora/mini_corpus.jsonl") + " --out " + quoted(out),
              dir);
  CHECK(r.exit_code == 0);
  CHECK(testing::read_file(out / "report.json") == first_report);

  // Unknown ids.
  r = run_cli("evaluate --predictions " + quoted(out / "predictions.jsonl") + " --corpus " +
                  data("corpora/sc_demo_corpus.jsonl") + " --out " + quoted(out),
              dir);
  CHECK(r.exit_code == 2);

  r = run_cli("compare --report " + quoted(out / "report.json") + " --dataset i2b2 --model LLaMA2-7B --method LoRA", dir);
  CHECK(r.exit_code == 0);
  const auto pos = r.out.substr(r.out.find("\npositive"));
  CHECK(pos.substr(0, pos.find('\n', 1)).find("0.99") != std::string::npos);

  r = run_cli("compare --report " + quoted(out / "report.json") + " --dataset sleep --model LLaMA2-7B --method LoRA", dir);
  const auto hyp = r.out.substr(r.out.find("hypothetical"));
  CHECK(hyp.substr(0, hyp.find('\n')).find("0.88") != std::string::npos);

  r = run_cli("compare --report " + quoted(out / "report.json") + " --dataset i2b2 --model GPT4 --method ToT", dir);
  CHECK(r.exit_code == 2);
  r = run_cli("compare --report " + quoted(out / "report.json") + " --dataset i2b2 --model ConText", dir);
  CHECK(r.exit_code == 0);
}

TEST_CASE("predict sc with the mock script is byte-identical across runs") {
  testing::TempDir dir("cli-sc");
  std::string outputs[2];
  std::string traces[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("run" + std::to_string(i));
    const auto r = run_cli("predict --engine sc --m 3 --corpus " + data("corpora/sc_demo_corpus.jsonl") +
                               " --mock-script " + data("mock/sc_demo_script.jsonl") + " --mock-delay-ms 5 --out " +
                               quoted(out),
                           dir);
    REQUIRE(r.exit_code == 0);
    outputs[i] = testing::read_file(out / "predictions.jsonl");
    traces[i] = testing::read_file(out / "traces.jsonl");
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(traces[0] == traces[1]);
  CHECK(lines_of(outputs[0]).size() == 13);
}

TEST_CASE("predict input errors") {
  testing::TempDir dir("cli-err");
  const std::string corpus = " --corpus " + data("corpora/sc_demo_corpus.jsonl") + " --out " + quoted(dir / "o");
  CHECK(run_cli("predict --engine gpt" + corpus, dir).exit_code == 2);
  CHECK(run_cli("predict --engine sc" + corpus, dir).exit_code == 2);  // no backend
  CHECK(run_cli("predict --engine sc --m 0 --mock-script " + data("mock/sc_demo_script.jsonl") + corpus, dir)
            .exit_code == 2);
  CHECK(run_cli("predict --engine sc --mock-script " + data("mock/sc_demo_script.jsonl") +
                    " --backend-url http://127.0.0.1:1/v1" + corpus,
                dir)
            .exit_code == 2);
  CHECK(run_cli("predict", dir).exit_code == 2);
  CHECK(run_cli("", dir).exit_code == 2);
}

TEST_CASE("predict exit codes for backend failures") {
  testing::TempDir dir("cli-auth");
  testing::write_file(dir / "auth.jsonl", R"({"text":"","error":"AuthFailure"})"
                                          "\n");
  testing::write_file(dir / "one.jsonl",
                      R"({"id":"a","text":"denies snoring","start":7,"end":14,"gold":"negated","dataset":"sleep"})"
                      "\n");
  auto r = run_cli("predict --engine simple --corpus " + quoted(dir / "one.jsonl") + " --mock-script " +
                       quoted(dir / "auth.jsonl") + " --out " + quoted(dir / "o"),
                   dir);
  CHECK(r.exit_code == 3);
  CHECK(testing::read_file(dir / "o" / "traces.jsonl").find("AuthFailure") != std::string::npos);

  testing::write_file(dir / "junk.jsonl", R"({"text":"no idea"})"
                                          "\n");
  r = run_cli("predict --engine simple --corpus " + quoted(dir / "one.jsonl") + " --mock-script " +
                  quoted(dir / "junk.jsonl") + " --out " + quoted(dir / "o"),
              dir);
  CHECK(r.exit_code == 1);
}

TEST_CASE("lexicon-check") {
  testing::TempDir dir("cli-lex");
  auto r = run_cli("lexicon-check", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("context-default-1") != std::string::npos);
  testing::write_file(dir / "dup.tsv", "no\tnegation\tforward\tfalse\nno\tnegation\tforward\tfalse\n");
  r = run_cli("lexicon-check --lexicon " + quoted(dir / "dup.tsv"), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
}
