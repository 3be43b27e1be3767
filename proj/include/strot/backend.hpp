#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "strot/error.hpp"
#include "strot/prompt.hpp"
#include "strot/util.hpp"

namespace strot {

// Holds the API key and refuses to be serialized by accident: nothing in the
// codebase converts a Secret to JSON, and transcripts only ever see the
// BackendConfig fields listed in config_to_json below.
struct Secret {
  std::string value;

  bool empty() const { return value.empty(); }
};

struct BackendConfig {
  std::string endpoint;  // full URL of a chat-completions style endpoint
  std::string model_id;
  Secret api_key;
  int timeout_seconds = 30;
  int max_output_tokens = 1024;  // cap applied when a prompt does not set one
  int backoff_base_ms = 250;     // first retry delay; doubles per retry
};

// Everything but the secret.
ojson config_to_json(const BackendConfig& config);

struct Completion {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::int64_t latency_ms = 0;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  // One prompt in, one completion out. Transport problems (connection,
  // timeout, 429/5xx) are retried twice with exponential backoff before
  // surfacing; auth failures and model-content problems are never retried
  // here. Empty completion text is returned as-is: the session loop decides
  // what an empty answer means.
  virtual Result<Completion> complete(const Prompt& prompt) = 0;

  // Short tag for transcripts: "scripted" or the model id.
  virtual std::string describe() const = 0;
};

// Deterministic stand-in for a model. Fixtures are tried in order; the first
// unconsumed one whose stage and prompt pattern both match serves the call.
// Personas generate canned faults so tests can drive the refinement loop
// without authoring bespoke bad responses.
enum class Persona { verbatim, bad_field, malformed_object, empty };

struct ScriptFixture {
  std::optional<Stage> stage;        // unset = any stage
  std::optional<std::string> match;  // regex over the rendered prompt
  std::string response;              // served when persona == verbatim
  Persona persona = Persona::verbatim;
  bool repeat = false;               // may serve unlimited times
};

class ScriptedBackend : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptFixture> script);

  Result<Completion> complete(const Prompt& prompt) override;
  std::string describe() const override { return "scripted"; }

  std::size_t calls_served() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Parses a fixture file: a JSON array of {stage?, match?, response?, persona?,
// repeat?} objects. Stage names: plan, synthesize, refine. Persona names:
// verbatim, bad_field, malformed_object, empty.
Result<std::vector<ScriptFixture>> load_fixtures(const std::string& path);

class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(BackendConfig config);

  Result<Completion> complete(const Prompt& prompt) override;
  std::string describe() const override;

 private:
  BackendConfig config_;
};

}  // namespace strot
