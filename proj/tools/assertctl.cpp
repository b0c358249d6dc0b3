// assertctl: corpus statistics, assertion prediction, scoring and comparison
// against published per-label F1.
//
// Exit codes: 0 success, 1 nothing could be predicted, 2 input error,
// 3 backend authentication failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "assertctl/context_engine.hpp"
#include "assertctl/corpus.hpp"
#include "assertctl/eval.hpp"
#include "assertctl/llm_backend.hpp"
#include "assertctl/records.hpp"
#include "assertctl/strategies.hpp"

namespace fs = std::filesystem;
using namespace assertctl;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoPredictions = 1;
constexpr int kExitInput = 2;
constexpr int kExitAuth = 3;

std::string file_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return fingerprint(buf.str());
}

void write_lines(const fs::path& path, const std::vector<ojson>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write '" + path.string() + "'");
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for '" + path.string() + "'");
}

struct StatsArgs {
  std::string corpus;
};

int cmd_stats(const StatsArgs& args) {
  const auto corpus = parse_corpus(fs::path(args.corpus));
  std::cout << render_distribution(corpus_stats(corpus));
  return kExitOk;
}

struct PredictArgs {
  std::string corpus;
  std::string engine = "rule";
  std::string lexicon;
  std::string backend_url;
  std::string mock_script;
  std::size_t m = 5;
  std::size_t branching = 2;
  std::size_t depth = 2;
  std::optional<double> temperature;
  std::size_t max_in_flight = llm::kDefaultMaxInFlight;
  int max_tokens = llm::kDefaultMaxTokens;
  std::string out = "out";
  std::int64_t seed = 0;
  std::string few_shot;
  std::string model = "gpt-3.5-turbo";
  std::uint32_t mock_delay_ms = 0;
};

int cmd_predict(const PredictArgs& args) {
  const Engine engine = parse_engine(args.engine);
  const auto corpus = parse_corpus(fs::path(args.corpus));
  const auto lexicon = args.lexicon.empty() ? context::default_lexicon() : context::load_lexicon(args.lexicon);

  reasoning::StrategyConfig config;
  config.sc_paths = args.m;
  config.branching = args.branching;
  config.depth = args.depth;
  config.max_in_flight = args.max_in_flight;
  config.max_tokens = args.max_tokens;
  config.seed_base = args.seed;
  if (args.temperature) {
    if (engine == Engine::Sc) config.sc_temperature = *args.temperature;
    else config.temperature = *args.temperature;
  }
  if (!args.few_shot.empty()) config.few_shot = reasoning::few_shot_from_corpus(parse_corpus(fs::path(args.few_shot)));

  std::unique_ptr<llm::Backend> backend;
  ojson backend_desc;
  if (engine == Engine::Rule) {
    backend_desc = "none";
  } else {
    config.validate();
    if (args.backend_url.empty() == args.mock_script.empty()) {
      throw Error(ErrorKind::InvalidConfig, "give exactly one of --backend-url or --mock-script");
    }
    if (!args.mock_script.empty()) {
      backend = std::make_unique<llm::MockBackend>(llm::MockScript::load(args.mock_script),
                                                   llm::MockOptions{args.mock_delay_ms, 0});
      backend_desc = {{"kind", "mock"}, {"script", file_fingerprint(args.mock_script)}};
    } else {
      llm::HttpConfig http;
      http.base_url = args.backend_url;
      http.model = args.model;
      http.api_key = llm::api_key_from_env().value_or("");
      backend = std::make_unique<llm::HttpBackend>(http);
      backend_desc = {{"kind", "http"}, {"url", args.backend_url}, {"model", args.model}};
    }
  }

  ojson cfg;
  cfg["engine"] = to_string(engine);
  cfg["corpus"] = file_fingerprint(args.corpus);
  cfg["lexicon"] = lexicon.version();
  cfg["backend"] = backend_desc;
  if (engine != Engine::Rule) {
    cfg["m"] = config.sc_paths;
    cfg["branching"] = config.branching;
    cfg["depth"] = config.depth;
    cfg["temperature"] = config.temperature;
    cfg["sc_temperature"] = config.sc_temperature;
    cfg["max_tokens"] = config.max_tokens;
    cfg["seed"] = config.seed_base;
    cfg["few_shot"] = args.few_shot.empty() ? std::string("none") : file_fingerprint(args.few_shot);
  }
  const ojson header = header_record(cfg);

  const auto outcomes = reasoning::run_engine(engine, corpus, config, backend.get(), lexicon);

  std::vector<ojson> predictions{header};
  std::vector<ojson> traces{header};
  std::size_t ok = 0;
  bool auth_failed = false;
  for (const auto& outcome : outcomes) {
    if (outcome.prediction) {
      ++ok;
      predictions.push_back(prediction_record(*outcome.prediction));
      traces.push_back(trace_record(*outcome.prediction));
    } else {
      auth_failed = auth_failed || outcome.error->kind() == ErrorKind::AuthFailure;
      traces.push_back(failure_record(outcome.instance_id, engine, *outcome.error));
      std::cerr << outcome.instance_id << ": " << outcome.error->what() << '\n';
    }
  }

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  write_lines(out_dir / "predictions.jsonl", predictions);
  write_lines(out_dir / "traces.jsonl", traces);
  std::cerr << "predicted " << ok << "/" << outcomes.size() << " (" << to_string(engine) << ", fingerprint "
            << header["fingerprint"].get<std::string>() << ")\n";

  if (auth_failed) return kExitAuth;
  if (ok == 0 && !outcomes.empty()) return kExitNoPredictions;
  return kExitOk;
}

struct EvaluateArgs {
  std::string predictions;
  std::string corpus;
  std::string out = "out";
};

int cmd_evaluate(const EvaluateArgs& args) {
  const auto corpus = parse_corpus(fs::path(args.corpus));
  const auto predictions = parse_predictions(fs::path(args.predictions));
  const auto report = eval::make_report(eval::build_confusion(predictions, corpus));

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  const auto path = out_dir / "report.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write '" + path.string() + "'");
  out << eval::report_to_json(report);
  std::cout << eval::render_report(report);
  return kExitOk;
}

struct CompareArgs {
  std::string report;
  std::string dataset;
  std::string model;
  std::string method;
  std::string reference;
};

int cmd_compare(const CompareArgs& args) {
  const auto report = eval::load_report(args.report);
  const auto table = args.reference.empty() ? eval::ReferenceTable::builtin() : eval::ReferenceTable::load(args.reference);
  std::cout << eval::compare_report(report, table, args.dataset, args.model, args.method);
  return kExitOk;
}

struct LexiconArgs {
  std::string lexicon;
};

int cmd_lexicon_check(const LexiconArgs& args) {
  const auto lexicon = args.lexicon.empty() ? context::default_lexicon() : context::load_lexicon(args.lexicon);
  std::cout << "version " << lexicon.version() << ", " << lexicon.triggers().size() << " triggers, longest phrase "
            << lexicon.longest_phrase() << " tokens\n";
  for (auto dim : context::kAllDimensions) {
    std::size_t opening = 0, closing = 0;
    for (const auto& t : lexicon.triggers()) {
      if (t.dimension != dim) continue;
      (t.is_termination ? closing : opening) += 1;
    }
    std::cout << "  " << to_string(dim) << ": " << opening << " triggers, " << closing << " terminators\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assertion detection for clinical concept mentions"};
  app.require_subcommand(1);

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Label distribution of a corpus");
  stats_cmd->add_option("--corpus", stats.corpus, "Corpus file (JSONL)")->required();

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Run an engine over a corpus");
  predict_cmd->add_option("--corpus", predict.corpus, "Corpus file (JSONL)")->required();
  predict_cmd->add_option("--engine", predict.engine, "rule, simple, cot, sc or tot")->capture_default_str();
  predict_cmd->add_option("--lexicon", predict.lexicon, "Trigger lexicon (TSV); default is built in");
  predict_cmd->add_option("--backend-url", predict.backend_url, "OpenAI-compatible base URL, e.g. https://host/v1");
  predict_cmd->add_option("--mock-script", predict.mock_script, "Scripted responses (JSONL)");
  predict_cmd->add_option("--m", predict.m, "Self-consistency paths")->capture_default_str();
  predict_cmd->add_option("--branching", predict.branching, "Tree-of-thought branching")->capture_default_str();
  predict_cmd->add_option("--depth", predict.depth, "Tree-of-thought depth")->capture_default_str();
  predict_cmd->add_option("--temperature", predict.temperature, "Sampling temperature for the chosen engine");
  predict_cmd->add_option("--max-in-flight", predict.max_in_flight, "Concurrent backend requests")
      ->capture_default_str();
  predict_cmd->add_option("--max-tokens", predict.max_tokens, "Completion token limit")->capture_default_str();
  predict_cmd->add_option("--out", predict.out, "Output directory")->capture_default_str();
  predict_cmd->add_option("--seed", predict.seed, "Base seed for sampled paths")->capture_default_str();
  predict_cmd->add_option("--few-shot", predict.few_shot, "Labelled examples (JSONL) placed before each query");
  predict_cmd->add_option("--model", predict.model, "Model name sent to the backend")->capture_default_str();
  predict_cmd->add_option("--mock-delay-ms", predict.mock_delay_ms, "Max scripted latency per call")
      ->capture_default_str();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate_cmd->add_option("--predictions", evaluate.predictions, "predictions.jsonl")->required();
  evaluate_cmd->add_option("--corpus", evaluate.corpus, "Corpus file (JSONL)")->required();
  evaluate_cmd->add_option("--out", evaluate.out, "Output directory")->capture_default_str();

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Show a report next to published scores");
  compare_cmd->add_option("--report", compare.report, "report.json")->required();
  compare_cmd->add_option("--dataset", compare.dataset, "i2b2 or sleep")->required();
  compare_cmd->add_option("--model", compare.model, "e.g. ChatGPT, LLaMA2-7B, BERT, ConText")->required();
  compare_cmd->add_option("--method", compare.method, "Simple, CoT, ToT, SC or LoRA; omit for baselines");
  compare_cmd->add_option("--reference", compare.reference, "Reference table (TSV); default is built in");

  LexiconArgs lexicon;
  auto* lexicon_cmd = app.add_subcommand("lexicon-check", "Validate a trigger lexicon");
  lexicon_cmd->add_option("--lexicon", lexicon.lexicon, "Trigger lexicon (TSV); default is built in");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*stats_cmd) return cmd_stats(stats);
    if (*predict_cmd) return cmd_predict(predict);
    if (*evaluate_cmd) return cmd_evaluate(evaluate);
    if (*compare_cmd) return cmd_compare(compare);
    if (*lexicon_cmd) return cmd_lexicon_check(lexicon);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::AuthFailure ? kExitAuth : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
