#include "assertctl/strategies.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>
#include <sstream>

#include "assertctl/embedded.hpp"
#include "assertctl/error.hpp"
#include "assertctl/text.hpp"

namespace assertctl::reasoning {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Simple: return "simple";
    case Strategy::Cot: return "cot";
    case Strategy::Sc: return "sc";
    case Strategy::Tot: return "tot";
  }
  return "?";
}

void StrategyConfig::validate() const {
  if (sc_paths < 1) throw Error(ErrorKind::InvalidConfig, "self-consistency path count must be >= 1");
  if (branching < 1) throw Error(ErrorKind::InvalidConfig, "branching must be >= 1");
  if (depth < 1) throw Error(ErrorKind::InvalidConfig, "depth must be >= 1");
  if (max_in_flight < 1) throw Error(ErrorKind::InvalidConfig, "max_in_flight must be >= 1");
  if (max_tokens < 1) throw Error(ErrorKind::InvalidConfig, "max_tokens must be >= 1");
  if (!(sc_temperature > 0.0 && sc_temperature <= 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "self-consistency temperature must be in (0, 2]");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "temperature must be in [0, 2]");
  }
}

std::vector<FewShotExample> few_shot_from_corpus(const Corpus& corpus) {
  std::vector<FewShotExample> out;
  for (const auto& inst : corpus.instances) {
    if (!inst.gold) throw Error(ErrorKind::MissingGold, "few-shot example '" + inst.id + "'");
    out.push_back({inst, *inst.gold});
  }
  return out;
}

std::string label_options() {
  std::string out;
  for (auto l : kAllLabels) {
    if (!out.empty()) out += ", ";
    out += to_string(l);
  }
  return out;
}

namespace {

struct Placeholders {
  std::string_view concept_text;
  std::string_view note;
  std::string_view examples;
  std::string_view path;
  std::string_view step;
};

// Drops leading "## ..." metadata lines and fills {name} placeholders.
std::string render(std::string_view name, const Placeholders& values) {
  std::string_view tmpl = embedded::prompt_template(name);
  while (tmpl.substr(0, 2) == "##") {
    const auto nl = tmpl.find('\n');
    tmpl = nl == std::string_view::npos ? std::string_view() : tmpl.substr(nl + 1);
  }
  while (!tmpl.empty() && tmpl.back() == '\n') tmpl.remove_suffix(1);

  const std::string labels = label_options();
  std::string out;
  out.reserve(tmpl.size() + values.note.size() * 2);
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const auto key = tmpl.substr(i + 1, close - i - 1);
        std::optional<std::string_view> value;
        if (key == "concept") value = values.concept_text;
        else if (key == "text") value = values.note;
        else if (key == "labels") value = labels;
        else if (key == "examples") value = values.examples;
        else if (key == "path") value = values.path;
        else if (key == "step") value = values.step;
        if (value) {
          out += *value;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string render_examples(const std::vector<FewShotExample>& examples) {
  if (examples.empty()) return {};
  std::ostringstream out;
  out << "Worked examples:\n\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    out << "Example " << (i + 1) << ":\n"
        << "Clinical note: \"" << ex.instance.text << "\"\n"
        << "Medical concept: " << ex.instance.span.surface << "\n"
        << "ANSWER: " << to_string(ex.gold) << "\n\n";
  }
  out << "Now classify the following case.\n\n";
  return out.str();
}

std::string system_prompt() {
  return render("system", {});
}

std::string render_path(const std::vector<std::string>& steps) {
  if (steps.empty()) return "(none yet)";
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += '\n';
    out += "Step " + std::to_string(i + 1) + ": " + std::string(text::trim(steps[i]));
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    const auto end = nl == std::string_view::npos ? s.size() : nl;
    lines.push_back(s.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool is_alpha(char c) noexcept { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

Strategy strategy_for(Engine engine) {
  switch (engine) {
    case Engine::Simple: return Strategy::Simple;
    case Engine::Cot: return Strategy::Cot;
    case Engine::Sc: return Strategy::Sc;
    case Engine::Tot: return Strategy::Tot;
    case Engine::Rule: break;
  }
  throw Error(ErrorKind::InvalidConfig, "rule engine has no prompting strategy");
}

Engine engine_for(Strategy s) {
  switch (s) {
    case Strategy::Simple: return Engine::Simple;
    case Strategy::Cot: return Engine::Cot;
    case Strategy::Sc: return Engine::Sc;
    case Strategy::Tot: return Engine::Tot;
  }
  return Engine::Simple;
}

}  // namespace

llm::CompletionRequest build_prompt(Strategy strategy, const AnnotatedInstance& instance,
                                    const StrategyConfig& config) {
  const std::string examples = render_examples(config.few_shot);
  const Placeholders values{instance.span.surface, instance.text, examples, {}, {}};

  llm::CompletionRequest request;
  request.system = system_prompt();
  request.user = render(strategy == Strategy::Simple ? "simple" : "cot", values);
  request.temperature = strategy == Strategy::Sc ? config.sc_temperature : config.temperature;
  request.max_tokens = config.max_tokens;
  request.instance_id = instance.id;
  return request;
}

AssertionLabel parse_answer(std::string_view completion) {
  static const std::regex kAnswer(R"(^\s*ANSWER:\s*([A-Za-z_]+)\s*\.?\s*$)", std::regex::icase);

  const auto lines = lines_of(completion);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string line(*it);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, kAnswer)) continue;
    try {
      return parse_label(m[1].str());
    } catch (const Error&) {
      // not a label; keep scanning upward
    }
  }

  constexpr std::size_t kTail = 200;
  const std::size_t cut = completion.size() > kTail ? completion.size() - kTail : 0;
  std::optional<AssertionLabel> found;
  std::size_t i = cut;
  // A word split by the cut is not standalone.
  if (cut > 0 && is_alpha(completion[cut - 1])) {
    while (i < completion.size() && is_alpha(completion[i])) ++i;
  }
  while (i < completion.size()) {
    if (!is_alpha(completion[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < completion.size() && is_alpha(completion[i])) ++i;
    const auto word = completion.substr(begin, i - begin);
    for (auto label : kAllLabels) {
      if (text::iequals(word, to_string(label))) found = label;
    }
  }
  if (found) return *found;

  const std::string excerpt(completion.substr(completion.size() > 80 ? completion.size() - 80 : 0));
  throw Error(ErrorKind::Unparseable, "no answer in '" + excerpt + "'");
}

std::optional<double> parse_score(std::string_view completion) {
  static const std::regex kScore(R"(^\s*SCORE:\s*([0-9]*\.?[0-9]+)\s*$)", std::regex::icase);
  const auto lines = lines_of(completion);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string line(*it);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, kScore)) continue;
    const double value = std::stod(m[1].str());
    if (value >= 0.0 && value <= 1.0) return value;
    return std::nullopt;
  }
  return std::nullopt;
}

AssertionLabel aggregate_sc(std::span<const AssertionLabel> votes) {
  if (votes.empty()) throw Error(ErrorKind::InvalidConfig, "empty vote set");
  std::array<std::size_t, kLabelCount> counts{};
  for (auto v : votes) ++counts[ordinal(v)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < kLabelCount; ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return label_from_ordinal(best);
}

std::optional<std::size_t> select_best_path(std::span<const ScoredPath> paths) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!paths[i].label) continue;
    if (!best || paths[i].score > paths[*best].score) best = i;
  }
  return best;
}

// --- engines -------------------------------------------------------------

namespace {

Prediction finish_single(Strategy strategy, const AnnotatedInstance& instance,
                         const llm::CompletionRequest& request, const llm::BatchItem& item) {
  if (item.error) throw *item.error;
  Prediction p;
  p.instance_id = instance.id;
  p.engine = engine_for(strategy);
  p.trace.steps.push_back({request.user, item.response->text});
  p.label = parse_answer(item.response->text);
  return p;
}

std::vector<llm::CompletionRequest> sc_requests(const AnnotatedInstance& instance, const StrategyConfig& config) {
  const auto base = build_prompt(Strategy::Sc, instance, config);
  std::vector<llm::CompletionRequest> requests(config.sc_paths, base);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    requests[i].seed = config.seed_base + static_cast<std::int64_t>(i);
    requests[i].call_index = i;
  }
  return requests;
}

Prediction finish_sc(const AnnotatedInstance& instance, std::span<const llm::CompletionRequest> requests,
                     std::span<const llm::BatchItem> items) {
  for (const auto& item : items) {
    if (item.error) throw *item.error;
  }
  Prediction p;
  p.instance_id = instance.id;
  p.engine = Engine::Sc;
  std::vector<AssertionLabel> votes;
  for (std::size_t i = 0; i < items.size(); ++i) {
    p.trace.steps.push_back({requests[i].user, items[i].response->text});
    try {
      votes.push_back(parse_answer(items[i].response->text));
    } catch (const Error&) {
      p.trace.notes.push_back("path " + std::to_string(i) + " unparseable; dropped from vote");
    }
  }
  if (votes.empty()) {
    throw Error(ErrorKind::AllPathsUnparseable,
                "instance '" + instance.id + "': none of " + std::to_string(items.size()) + " paths parsed");
  }
  p.label = aggregate_sc(votes);
  p.trace.votes = std::move(votes);
  return p;
}

std::vector<llm::BatchItem> checked_batch(llm::Backend& backend, std::span<const llm::CompletionRequest> requests,
                                          std::size_t max_in_flight) {
  auto items = llm::complete_batch(backend, requests, max_in_flight);
  for (const auto& item : items) {
    if (item.error) throw *item.error;
  }
  return items;
}

}  // namespace

Prediction run_single(Strategy strategy, const AnnotatedInstance& instance, const StrategyConfig& config,
                      llm::Backend& backend) {
  config.validate();
  if (strategy == Strategy::Sc) return run_sc(instance, config, backend);
  if (strategy == Strategy::Tot) return run_tot(instance, config, backend);
  const auto request = build_prompt(strategy, instance, config);
  const auto items = llm::complete_batch(backend, std::span(&request, 1), 1);
  return finish_single(strategy, instance, request, items.front());
}

Prediction run_sc(const AnnotatedInstance& instance, const StrategyConfig& config, llm::Backend& backend) {
  config.validate();
  const auto requests = sc_requests(instance, config);
  const auto items = llm::complete_batch(backend, requests, config.max_in_flight);
  return finish_sc(instance, requests, items);
}

Prediction run_tot(const AnnotatedInstance& instance, const StrategyConfig& config, llm::Backend& backend) {
  config.validate();

  struct Node {
    std::vector<std::string> steps;
    std::vector<double> step_scores;
    double value = 0.0;
  };

  const std::string system = system_prompt();
  auto make_request = [&](std::string user, std::size_t call_index) {
    llm::CompletionRequest r;
    r.system = system;
    r.user = std::move(user);
    r.temperature = config.temperature;
    r.max_tokens = config.max_tokens;
    r.seed = config.seed_base + static_cast<std::int64_t>(call_index);
    r.instance_id = instance.id;
    r.call_index = call_index;
    return r;
  };

  Prediction p;
  p.instance_id = instance.id;
  p.engine = Engine::Tot;

  std::vector<Node> frontier(1);
  std::vector<Node> complete;
  std::size_t call_index = 0;
  for (std::size_t level = 1; level <= config.depth; ++level) {
    const bool final_level = level == config.depth;

    std::vector<llm::CompletionRequest> step_requests;
    for (const auto& node : frontier) {
      const auto path = render_path(node.steps);
      const Placeholders values{instance.span.surface, instance.text, {}, path, {}};
      for (std::size_t c = 0; c < config.branching; ++c) {
        step_requests.push_back(make_request(render(final_level ? "tot_final" : "tot_step", values), call_index++));
      }
    }
    const auto step_items = checked_batch(backend, step_requests, config.max_in_flight);

    std::vector<llm::CompletionRequest> score_requests;
    for (std::size_t i = 0; i < step_items.size(); ++i) {
      const auto& parent = frontier[i / config.branching];
      const auto path = render_path(parent.steps);
      const Placeholders values{instance.span.surface, instance.text, {}, path, step_items[i].response->text};
      score_requests.push_back(make_request(render("tot_score", values), call_index++));
    }
    const auto score_items = checked_batch(backend, score_requests, config.max_in_flight);

    std::vector<Node> children;
    for (std::size_t i = 0; i < step_items.size(); ++i) {
      p.trace.steps.push_back({step_requests[i].user, step_items[i].response->text});
      p.trace.steps.push_back({score_requests[i].user, score_items[i].response->text});
      auto score = parse_score(score_items[i].response->text);
      if (!score) {
        p.trace.notes.push_back("level " + std::to_string(level) + " candidate " + std::to_string(i) +
                                ": score unparseable, using 0.0");
        score = 0.0;
      }
      Node child = frontier[i / config.branching];
      child.steps.push_back(step_items[i].response->text);
      child.step_scores.push_back(*score);
      child.value = std::accumulate(child.step_scores.begin(), child.step_scores.end(), 0.0) /
                    static_cast<double>(child.step_scores.size());
      children.push_back(std::move(child));
    }

    if (final_level) {
      complete = std::move(children);
    } else {
      std::stable_sort(children.begin(), children.end(),
                       [](const Node& a, const Node& b) { return a.value > b.value; });
      if (children.size() > config.branching) children.resize(config.branching);
      frontier = std::move(children);
    }
  }

  std::vector<ScoredPath> paths;
  std::vector<double> scores;
  for (std::size_t i = 0; i < complete.size(); ++i) {
    ScoredPath path{complete[i].steps, std::nullopt, complete[i].value};
    try {
      path.label = parse_answer(complete[i].steps.back());
    } catch (const Error&) {
      p.trace.notes.push_back("path " + std::to_string(i) + ": final step has no answer");
    }
    scores.push_back(path.score);
    paths.push_back(std::move(path));
  }
  p.trace.path_scores = std::move(scores);

  const auto best = select_best_path(paths);
  if (!best) {
    throw Error(ErrorKind::AllPathsUnparseable, "instance '" + instance.id + "': no complete path has an answer");
  }
  p.label = *paths[*best].label;
  p.trace.notes.push_back("selected path " + std::to_string(*best));
  return p;
}

std::vector<EngineOutcome> run_engine(Engine engine, const Corpus& corpus, const StrategyConfig& config,
                                      llm::Backend* backend, const context::Lexicon& lexicon) {
  std::vector<EngineOutcome> outcomes(corpus.instances.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i].instance_id = corpus.instances[i].id;

  if (engine == Engine::Rule) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& inst = corpus.instances[i];
      const auto result = context::classify_rule(inst, lexicon);
      Prediction p;
      p.instance_id = inst.id;
      p.engine = Engine::Rule;
      p.label = result.label;
      p.trace.notes = result.trace.describe(context::tokenize(inst.text));
      outcomes[i].prediction = std::move(p);
    }
    return outcomes;
  }

  if (backend == nullptr) throw Error(ErrorKind::InvalidConfig, "engine '" + std::string(to_string(engine)) + "' needs a backend");
  config.validate();
  const auto strategy = strategy_for(engine);

  auto guarded = [&](std::size_t i, auto&& produce) {
    try {
      outcomes[i].prediction = produce();
    } catch (const Error& e) {
      outcomes[i].error = e;
    }
  };

  if (strategy == Strategy::Tot) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      guarded(i, [&] { return run_tot(corpus.instances[i], config, *backend); });
    }
    return outcomes;
  }

  // Single-call and self-consistency requests for every instance share one
  // bounded batch; slot offsets tie results back to instances.
  std::vector<llm::CompletionRequest> requests;
  std::vector<std::size_t> offsets;
  for (const auto& inst : corpus.instances) {
    offsets.push_back(requests.size());
    if (strategy == Strategy::Sc) {
      auto paths = sc_requests(inst, config);
      requests.insert(requests.end(), paths.begin(), paths.end());
    } else {
      requests.push_back(build_prompt(strategy, inst, config));
    }
  }
  offsets.push_back(requests.size());
  const auto items = llm::complete_batch(*backend, requests, config.max_in_flight);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto first = offsets[i];
    const auto count = offsets[i + 1] - first;
    guarded(i, [&] {
      if (strategy == Strategy::Sc) {
        return finish_sc(corpus.instances[i], std::span(requests).subspan(first, count),
                         std::span(items).subspan(first, count));
      }
      return finish_single(strategy, corpus.instances[i], requests[first], items[first]);
    });
  }
  return outcomes;
}

}  // namespace assertctl::reasoning
