#include <mutex>
#include <regex>

#include "strot/backend.hpp"

namespace strot {
namespace {

std::optional<Persona> persona_from_name(const std::string& name) {
  if (name == "verbatim") return Persona::verbatim;
  if (name == "bad_field") return Persona::bad_field;
  if (name == "malformed_object") return Persona::malformed_object;
  if (name == "empty") return Persona::empty;
  return std::nullopt;
}

std::string persona_response(Persona persona, const std::string& verbatim) {
  switch (persona) {
    case Persona::verbatim:
      return verbatim;
    case Persona::bad_field:
      // Syntactically fine, semantically wrong: the column cannot resolve.
      return R"({"pipeline": [{"op": "select", "columns": ["__no_such_column__"]}],)"
             R"( "output": {"shape": "table"}})";
    case Persona::malformed_object:
      return "Sure, here is the program: {\"pipeline\": [ oops";
    case Persona::empty:
      return "";
  }
  return verbatim;
}

}  // namespace

ojson config_to_json(const BackendConfig& config) {
  ojson j;
  j["endpoint"] = config.endpoint;
  j["model_id"] = config.model_id;
  j["timeout_seconds"] = config.timeout_seconds;
  j["max_output_tokens"] = config.max_output_tokens;
  return j;
}

struct ScriptedBackend::Impl {
  std::mutex mutex;
  std::vector<ScriptFixture> script;
  std::vector<bool> consumed;
  std::size_t served = 0;
};

ScriptedBackend::ScriptedBackend(std::vector<ScriptFixture> script)
    : impl_(std::make_shared<Impl>()) {
  impl_->script = std::move(script);
  impl_->consumed.assign(impl_->script.size(), false);
}

Result<Completion> ScriptedBackend::complete(const Prompt& prompt) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  std::string rendered = prompt.render();

  for (std::size_t i = 0; i < impl_->script.size(); ++i) {
    const ScriptFixture& fixture = impl_->script[i];
    if (impl_->consumed[i] && !fixture.repeat) continue;
    if (fixture.stage && *fixture.stage != prompt.stage) continue;
    if (fixture.match) {
      std::regex pattern(*fixture.match);
      if (!std::regex_search(rendered, pattern)) continue;
    }
    impl_->consumed[i] = true;
    ++impl_->served;

    Completion completion;
    completion.text = persona_response(fixture.persona, fixture.response);
    completion.prompt_tokens = estimate_tokens(rendered);
    completion.completion_tokens = estimate_tokens(completion.text);
    completion.latency_ms = 0;
    return completion;
  }

  ErrorTrace t{ErrorCode::script_exhausted,
               "no remaining fixture matches this prompt"};
  t.offending_symbol = stage_name(prompt.stage);
  return t;
}

std::size_t ScriptedBackend::calls_served() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->served;
}

Result<std::vector<ScriptFixture>> load_fixtures(const std::string& path) {
  auto bytes = read_file(path);
  if (!bytes) {
    ErrorTrace t{ErrorCode::io_error, "cannot read fixture file"};
    t.offending_symbol = path;
    return t;
  }
  ojson doc = ojson::parse(*bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    ErrorTrace t{ErrorCode::malformed_object, "fixture file must be a JSON array"};
    t.offending_symbol = path;
    return t;
  }

  std::vector<ScriptFixture> script;
  for (const auto& entry : doc) {
    if (!entry.is_object())
      return ErrorTrace{ErrorCode::malformed_object, "fixture entries must be objects"};
    ScriptFixture fixture;
    if (entry.contains("stage")) {
      auto stage = stage_from_name(entry["stage"].get<std::string>());
      if (!stage) {
        ErrorTrace t{ErrorCode::malformed_object, "unknown fixture stage"};
        t.offending_symbol = entry["stage"].get<std::string>();
        return t;
      }
      fixture.stage = stage;
    }
    if (entry.contains("match")) fixture.match = entry["match"].get<std::string>();
    if (entry.contains("response")) {
      // Responses may be stored as a JSON value (kept verbatim as text) or a
      // plain string.
      const auto& r = entry["response"];
      fixture.response = r.is_string() ? r.get<std::string>() : r.dump();
    }
    if (entry.contains("persona")) {
      auto persona = persona_from_name(entry["persona"].get<std::string>());
      if (!persona) {
        ErrorTrace t{ErrorCode::malformed_object, "unknown fixture persona"};
        t.offending_symbol = entry["persona"].get<std::string>();
        return t;
      }
      fixture.persona = *persona;
    }
    if (entry.contains("repeat")) fixture.repeat = entry["repeat"].get<bool>();
    script.push_back(std::move(fixture));
  }
  if (script.empty())
    return ErrorTrace{ErrorCode::empty_input, "fixture file has no entries"};
  return script;
}

}  // namespace strot
