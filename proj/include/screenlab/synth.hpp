#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "screenlab/data_model.hpp"

namespace screenlab {

struct SynthOptions {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  double target_prevalence = 0.69;
};

/// Category pools the generator draws demographics from.
const std::vector<std::string>& synth_ethnicities();
const std::vector<std::string>& synth_respondents();

/// Share of records with sum > 3 expected from each mixture component, and the
/// mixing weight that hits `target`. Throws ValidationError when `target` is
/// outside the reachable range.
struct MixturePlan {
  double low_component_prevalence = 0.0;
  double high_component_prevalence = 0.0;
  double high_weight = 0.0;
};
MixturePlan plan_mixture(double target);

/// Records whose items come from a two-component mixture: each record picks a
/// low or high item rate, then draws its ten items as independent Bernoullis.
/// Label and score are derived, never sampled.
std::vector<ScreeningRecord> generate(const SynthOptions& options);

}  // namespace screenlab
