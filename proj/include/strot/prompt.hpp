#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strot {

enum class Stage { plan, synthesize, refine };

const char* stage_name(Stage stage);
std::optional<Stage> stage_from_name(std::string_view name);

struct PromptSection {
  std::string label;
  std::string body;
};

// Ordered labeled sections. The rendered form is the exact text that goes
// over the wire; token estimates are computed from it.
struct Prompt {
  Stage stage = Stage::plan;
  double temperature = 0.0;
  int max_tokens = 0;
  std::vector<PromptSection> sections;

  std::string render() const;
  std::size_t estimated_tokens() const;
};

// Stage temperatures: planning decodes nearly greedily, synthesis and
// refinement get a little slack. Defaults sit inside the recommended bands
// (plan within [0, 0.2], synth and refine within [0.2, 0.3]); out-of-band
// overrides work but are flagged.
struct DecodingPolicy {
  double plan_temperature = 0.1;
  double synth_temperature = 0.25;
  double refine_temperature = 0.25;

  int plan_max_tokens = 600;
  int synth_max_tokens = 800;
  int refine_max_tokens = 900;

  double temperature_for(Stage stage) const;
  int max_tokens_for(Stage stage) const;
};

// One warning line per band violation; empty when the policy is in-band.
std::vector<std::string> policy_warnings(const DecodingPolicy& policy);

}  // namespace strot
