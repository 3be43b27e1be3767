#include "strot/prompt.hpp"

#include <cstdio>

#include "strot/util.hpp"

namespace strot {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::plan: return "plan";
    case Stage::synthesize: return "synthesize";
    case Stage::refine: return "refine";
  }
  return "plan";
}

std::optional<Stage> stage_from_name(std::string_view name) {
  if (name == "plan") return Stage::plan;
  if (name == "synthesize") return Stage::synthesize;
  if (name == "refine") return Stage::refine;
  return std::nullopt;
}

std::string Prompt::render() const {
  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out.push_back('\n');
    out += "### ";
    out += sections[i].label;
    out.push_back('\n');
    std::string body = sections[i].body;
    while (!body.empty() && body.back() == '\n') body.pop_back();
    out += body;
    out.push_back('\n');
  }
  return out;
}

std::size_t Prompt::estimated_tokens() const { return estimate_tokens(render()); }

double DecodingPolicy::temperature_for(Stage stage) const {
  switch (stage) {
    case Stage::plan: return plan_temperature;
    case Stage::synthesize: return synth_temperature;
    case Stage::refine: return refine_temperature;
  }
  return plan_temperature;
}

int DecodingPolicy::max_tokens_for(Stage stage) const {
  switch (stage) {
    case Stage::plan: return plan_max_tokens;
    case Stage::synthesize: return synth_max_tokens;
    case Stage::refine: return refine_max_tokens;
  }
  return plan_max_tokens;
}

std::vector<std::string> policy_warnings(const DecodingPolicy& policy) {
  std::vector<std::string> warnings;
  auto check = [&](const char* name, double value, double lo, double hi) {
    if (value < lo || value > hi) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s=%g is outside the recommended band [%g, %g]",
                    name, value, lo, hi);
      warnings.emplace_back(buf);
    }
  };
  check("plan_temperature", policy.plan_temperature, 0.0, 0.2);
  check("synth_temperature", policy.synth_temperature, 0.2, 0.3);
  check("refine_temperature", policy.refine_temperature, 0.2, 0.3);
  return warnings;
}

}  // namespace strot
