#include <chrono>
#include <thread>

#include "httplib.h"
#include "strot/backend.hpp"

namespace strot {
namespace {

constexpr const char* kSystemFraming =
    "You produce data analysis artifacts. Each prompt is divided into '### "
    "<label>' sections; follow them exactly and reply with only the artifact "
    "the final section asks for.";

// Splits "scheme://host[:port]/path" into the client base and the path.
struct SplitUrl {
  std::string base;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {}

std::string HttpBackend::describe() const { return config_.model_id; }

Result<Completion> HttpBackend::complete(const Prompt& prompt) {
  SplitUrl url = split_url(config_.endpoint);

  ojson body;
  body["model"] = config_.model_id;
  body["messages"] = ojson::array({
      ojson{{"role", "system"}, {"content", kSystemFraming}},
      ojson{{"role", "user"}, {"content", prompt.render()}},
  });
  body["temperature"] = prompt.temperature;
  body["max_tokens"] =
      prompt.max_tokens > 0 ? prompt.max_tokens : config_.max_output_tokens;
  std::string payload = body.dump();

  ErrorTrace last{ErrorCode::transport, "request never attempted"};
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1)));
    }

    httplib::Client client(url.base);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key.value);

    auto start = std::chrono::steady_clock::now();
    httplib::Result res =
        client.Post(url.path, headers, payload, "application/json");
    auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();

    if (!res) {
      bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                       res.error() == httplib::Error::Read;
      last = ErrorTrace{timed_out ? ErrorCode::timeout : ErrorCode::transport,
                        std::string("request failed: ") +
                            httplib::to_string(res.error())};
      continue;  // connection-level problems are retryable
    }

    if (res->status == 401 || res->status == 403) {
      ErrorTrace t{ErrorCode::auth_failure,
                   "endpoint rejected the API key (HTTP " +
                       std::to_string(res->status) + ")"};
      return t;
    }
    if (retryable_status(res->status)) {
      last = ErrorTrace{ErrorCode::transport,
                        "HTTP " + std::to_string(res->status) + ": " +
                            excerpt(res->body)};
      continue;
    }
    if (res->status != 200) {
      return ErrorTrace{ErrorCode::transport,
                        "HTTP " + std::to_string(res->status) + ": " +
                            excerpt(res->body)};
    }

    ojson doc = ojson::parse(res->body, nullptr, false);
    if (doc.is_discarded())
      return ErrorTrace{ErrorCode::transport,
                        "endpoint returned unparseable body: " + excerpt(res->body)};
    if (!doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string()) {
      return ErrorTrace{ErrorCode::empty_completion,
                        "response carried no message content"};
    }

    Completion completion;
    completion.text = doc["choices"][0]["message"]["content"].get<std::string>();
    completion.latency_ms = elapsed_ms;
    if (doc.contains("usage") && doc["usage"].is_object() &&
        doc["usage"].contains("prompt_tokens") &&
        doc["usage"]["prompt_tokens"].is_number_unsigned() &&
        doc["usage"].contains("completion_tokens") &&
        doc["usage"]["completion_tokens"].is_number_unsigned()) {
      completion.prompt_tokens = doc["usage"]["prompt_tokens"].get<std::size_t>();
      completion.completion_tokens =
          doc["usage"]["completion_tokens"].get<std::size_t>();
    } else {
      completion.prompt_tokens = estimate_tokens(prompt.render());
      completion.completion_tokens = estimate_tokens(completion.text);
    }
    return completion;
  }
  return last;
}

}  // namespace strot
