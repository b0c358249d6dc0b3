#include "assertctl/llm_backend.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <random>
#include <thread>

#include "assertctl/text.hpp"

namespace assertctl::llm {

using json = nlohmann::json;

void CompletionRequest::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "temperature " + std::to_string(temperature) + " outside [0, 2]");
  }
  if (max_tokens <= 0) throw Error(ErrorKind::InvalidConfig, "max_tokens must be positive");
  if (user.empty()) throw Error(ErrorKind::InvalidConfig, "empty user message");
}

// --- MockScript ----------------------------------------------------------

void MockScript::add(std::string instance_id, std::size_t call_index, ScriptEntry entry) {
  keyed_[{std::move(instance_id), call_index}] = std::move(entry);
}

void MockScript::add_fallback(ScriptEntry entry) { fallback_.push_back(std::move(entry)); }

const ScriptEntry* MockScript::find(const std::string& instance_id, std::size_t call_index) const {
  auto it = keyed_.find({instance_id, call_index});
  return it == keyed_.end() ? nullptr : &it->second;
}

MockScript MockScript::parse(std::istream& in) {
  MockScript script;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (text::trim(raw).empty()) continue;
    json record;
    try {
      record = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw LineError(ErrorKind::MalformedRecord, line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw LineError(ErrorKind::MalformedRecord, line, "mock record needs a string 'text'");
    }
    ScriptEntry entry{record["text"].get<std::string>(), std::nullopt};
    if (auto it = record.find("error"); it != record.end()) {
      const auto kind = it->is_string() ? it->get<std::string>() : std::string();
      if (kind == "AuthFailure") entry.error = ErrorKind::AuthFailure;
      else if (kind == "RateLimited") entry.error = ErrorKind::RateLimited;
      else if (kind == "Transport") entry.error = ErrorKind::Transport;
      else throw LineError(ErrorKind::MalformedRecord, line, "unknown scripted error '" + kind + "'");
    }

    const bool has_id = record.contains("instance_id");
    const bool has_index = record.contains("call_index");
    if (has_id != has_index) {
      throw LineError(ErrorKind::MalformedRecord, line, "instance_id and call_index go together");
    }
    if (!has_id) {
      script.add_fallback(std::move(entry));
      continue;
    }
    if (!record["instance_id"].is_string() || !record["call_index"].is_number_unsigned()) {
      throw LineError(ErrorKind::MalformedRecord, line, "instance_id must be a string, call_index >= 0");
    }
    auto id = record["instance_id"].get<std::string>();
    const auto index = record["call_index"].get<std::size_t>();
    if (script.find(id, index)) {
      throw LineError(ErrorKind::DuplicateId, line, "(" + id + ", " + std::to_string(index) + ") scripted twice");
    }
    script.add(std::move(id), index, std::move(entry));
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open mock script '" + path.string() + "'");
  return parse(in);
}

// --- MockBackend ---------------------------------------------------------

MockBackend::MockBackend(MockScript script, MockOptions options)
    : script_(std::move(script)), options_(options) {}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  ScriptEntry entry;
  {
    std::lock_guard lock(mutex_);
    received_.push_back(request);
    if (const auto* keyed = script_.find(request.instance_id, request.call_index)) {
      entry = *keyed;
    } else if (next_fallback_ < script_.fallback().size()) {
      entry = script_.fallback()[next_fallback_++];
    } else {
      throw Error(ErrorKind::ScriptExhausted,
                  "no response for (" + request.instance_id + ", " + std::to_string(request.call_index) + ")");
    }
    peak_in_flight_ = std::max(peak_in_flight_, ++in_flight_);
  }

  if (options_.max_delay_ms > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(options_.delay_seed),
                      static_cast<std::uint32_t>(std::hash<std::string>{}(request.instance_id)),
                      static_cast<std::uint32_t>(request.call_index)};
    std::mt19937 rng(seq);
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % (options_.max_delay_ms + 1)));
  }

  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  if (entry.error) throw Error(*entry.error, "scripted failure");
  return {std::move(entry.text), 0, id()};
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return received_.size();
}

std::size_t MockBackend::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

std::vector<CompletionRequest> MockBackend::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

// --- env -----------------------------------------------------------------

std::optional<std::string> api_key_from_env() {
  const char* value = std::getenv(kApiKeyEnv);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

// --- batch ---------------------------------------------------------------

std::vector<BatchItem> complete_batch(Backend& backend, std::span<const CompletionRequest> requests,
                                      std::size_t max_in_flight) {
  if (max_in_flight == 0) throw Error(ErrorKind::InvalidConfig, "max_in_flight must be >= 1");
  std::vector<BatchItem> results(requests.size());

  auto run_one = [&](std::size_t i) {
    try {
      requests[i].validate();
      results[i].response = backend.complete(requests[i]);
    } catch (const Error& e) {
      results[i].error = e;
    } catch (const std::exception& e) {
      results[i].error = Error(ErrorKind::Transport, e.what());
    }
  };

  const std::size_t workers = std::min(max_in_flight, requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
    return results;
  }

  // Each worker holds at most one request, so at most `workers` are in flight.
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < requests.size();) run_one(i);
    });
  }
  pool.clear();  // joins
  return results;
}

}  // namespace assertctl::llm
