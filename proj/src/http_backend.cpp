#include <httplib.h>

#include <thread>

#include "assertctl/llm_backend.hpp"

namespace assertctl::llm {

using json = nlohmann::json;

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string excerpt(const std::string& body, std::size_t limit = 200) {
  return body.size() <= limit ? body : body.substr(0, limit) + "...";
}

}  // namespace

json build_chat_body(const CompletionRequest& request, const std::string& model) {
  json body;
  body["model"] = model;
  body["messages"] = json::array();
  if (!request.system.empty()) body["messages"].push_back({{"role", "system"}, {"content", request.system}});
  body["messages"].push_back({{"role", "user"}, {"content", request.user}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::string parse_chat_body(const std::string& body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::Transport, "response is not JSON: " + excerpt(body));
  }
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorKind::Transport, "response has no choices: " + excerpt(body));
  }
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].is_object()) {
    throw Error(ErrorKind::Transport, "first choice has no message");
  }
  const auto& content = first["message"].value("content", json());
  if (content.is_null()) return {};
  if (!content.is_string()) throw Error(ErrorKind::Transport, "message content is not a string");
  return content.get<std::string>();
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::InvalidConfig, "backend URL needs a scheme: '" + config_.base_url + "'");
  }
  const auto path_begin = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_begin);
  path_prefix_ = path_begin == std::string::npos ? std::string() : config_.base_url.substr(path_begin);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!config_.retry.sleep) {
    config_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + config_.model; }

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  const std::string payload = build_chat_body(request, config_.model).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) {
    throw Error(ErrorKind::InvalidConfig, "unsupported backend URL '" + config_.base_url + "'");
  }
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto started = std::chrono::steady_clock::now();
  Error last(ErrorKind::Transport, "no attempt made");
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) config_.retry.sleep(config_.retry.initial_delay * (1 << (attempt - 1)));

    auto result = client.Post(path, headers, payload, "application/json");
    if (!result) {
      last = Error(ErrorKind::Transport, httplib::to_string(result.error()));
      continue;
    }
    const int status = result->status;
    if (status >= 200 && status < 300) {
      CompletionResponse response;
      response.text = parse_chat_body(result->body);
      response.latency_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
              .count());
      response.backend_id = id();
      return response;
    }
    if (status == 401 || status == 403) {
      throw Error(ErrorKind::AuthFailure, "HTTP " + std::to_string(status) + ": " + excerpt(result->body));
    }
    if (!retryable_status(status)) {
      throw Error(ErrorKind::Transport, "HTTP " + std::to_string(status) + ": " + excerpt(result->body));
    }
    last = Error(status == 429 ? ErrorKind::RateLimited : ErrorKind::Transport,
                 "HTTP " + std::to_string(status) + " after " + std::to_string(attempt + 1) + " attempt(s)");
  }
  throw last;
}

}  // namespace assertctl::llm
