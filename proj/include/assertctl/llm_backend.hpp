#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "assertctl/error.hpp"

namespace assertctl::llm {

inline constexpr int kDefaultMaxTokens = 512;
inline constexpr std::size_t kDefaultMaxInFlight = 4;
inline constexpr const char* kApiKeyEnv = "ASSERTCTL_API_KEY";

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = kDefaultMaxTokens;
  std::optional<std::int64_t> seed;

  // Routing key for scripted backends. Never sent on the wire.
  std::string instance_id;
  std::size_t call_index = 0;

  // Throws Error(InvalidConfig) unless temperature is in [0, 2], max_tokens
  // is positive and user is non-empty.
  void validate() const;
};

struct CompletionResponse {
  std::string text;
  std::uint64_t latency_ms = 0;
  std::string backend_id;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

// --- scripted mock -------------------------------------------------------

struct ScriptEntry {
  std::string text;
  // When set the call fails with this error kind instead of returning text.
  std::optional<ErrorKind> error;
};

/// Responses keyed by (instance id, call index), plus an ordered fallback
/// list consumed once each for requests with no keyed entry. File form is one
/// JSON object per line: {"instance_id", "call_index", "text"}; a record
/// without instance_id and call_index goes to the fallback list, and an
/// optional "error" field ("AuthFailure", "RateLimited", "Transport")
/// scripts a failure.
class MockScript {
 public:
  void add(std::string instance_id, std::size_t call_index, ScriptEntry entry);
  void add_fallback(ScriptEntry entry);

  const ScriptEntry* find(const std::string& instance_id, std::size_t call_index) const;
  const std::vector<ScriptEntry>& fallback() const noexcept { return fallback_; }
  std::size_t keyed_size() const noexcept { return keyed_.size(); }

  static MockScript parse(std::istream& in);
  static MockScript load(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, std::size_t>, ScriptEntry> keyed_;
  std::vector<ScriptEntry> fallback_;
};

struct MockOptions {
  // Each call sleeps a pseudo-random 0..max_delay_ms derived from its key, so
  // completion order can be shuffled reproducibly.
  std::uint32_t max_delay_ms = 0;
  std::uint64_t delay_seed = 0;
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script, MockOptions options = {});

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "mock"; }

  std::size_t calls() const;
  std::size_t peak_in_flight() const;
  std::vector<CompletionRequest> received() const;  // in arrival order

 private:
  MockScript script_;
  MockOptions options_;
  mutable std::mutex mutex_;
  std::size_t next_fallback_ = 0;
  std::size_t in_flight_ = 0;
  std::size_t peak_in_flight_ = 0;
  std::vector<CompletionRequest> received_;
};

// --- OpenAI-compatible HTTP ----------------------------------------------

struct RetryPolicy {
  int max_retries = 3;
  // Delay before retry i (0-based) is initial_delay * 2^i: 1s, 2s, 4s.
  std::chrono::milliseconds initial_delay{1000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct HttpConfig {
  std::string base_url;  // e.g. "https://host/v1"; requests go to <base_url>/chat/completions
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
};

// Chat-completions body: model, messages[{role, content}], temperature,
// max_tokens, and seed when present.
nlohmann::json build_chat_body(const CompletionRequest& request, const std::string& model);

// Text of choices[0].message.content; a null content maps to "".
// Throws Error(Transport) on a body that is not a chat-completions response.
std::string parse_chat_body(const std::string& body);

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  ~HttpBackend() override;

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override;

 private:
  HttpConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

std::optional<std::string> api_key_from_env();

// --- bounded batch -------------------------------------------------------

struct BatchItem {
  std::optional<CompletionResponse> response;
  std::optional<Error> error;

  bool ok() const noexcept { return response.has_value(); }
};

/// Runs every request with at most `max_in_flight` outstanding at once.
/// Results line up with `requests`; a failed request leaves its error in its
/// own slot and does not disturb the others.
std::vector<BatchItem> complete_batch(Backend& backend, std::span<const CompletionRequest> requests,
                                      std::size_t max_in_flight = kDefaultMaxInFlight);

}  // namespace assertctl::llm
