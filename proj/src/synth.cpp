#include "screenlab/synth.hpp"

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"
#include "screenlab/stats.hpp"

namespace screenlab {

namespace {

// Item rates of the two mixture components: typical non-trait and trait respondents.
constexpr double kLowRate = 0.15;
constexpr double kHighRate = 0.75;
constexpr int kAgeMin = 12;
constexpr int kAgeMax = 36;

double component_prevalence(double rate) {
  return stats::binomial_upper_tail(kTraitThreshold + 1, kItemCount, rate);
}

}  // namespace

const std::vector<std::string>& synth_ethnicities() {
  static const std::vector<std::string> pool{
      "Hispanic", "Latino", "Native Indian", "Others", "Pacifica", "White European",
      "asian", "black", "middle eastern", "mixed", "south asian"};
  return pool;
}

const std::vector<std::string>& synth_respondents() {
  static const std::vector<std::string> pool{"Health Care Professional", "Others", "Self",
                                             "family member"};
  return pool;
}

MixturePlan plan_mixture(double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ValidationError("target prevalence must lie strictly between 0 and 1");
  }
  MixturePlan plan;
  plan.low_component_prevalence = component_prevalence(kLowRate);
  plan.high_component_prevalence = component_prevalence(kHighRate);
  if (target < plan.low_component_prevalence || target > plan.high_component_prevalence) {
    throw ValidationError("target prevalence " + std::to_string(target) +
                          " is unreachable; the generator covers [" +
                          std::to_string(plan.low_component_prevalence) + ", " +
                          std::to_string(plan.high_component_prevalence) + "]");
  }
  plan.high_weight = (target - plan.low_component_prevalence) /
                     (plan.high_component_prevalence - plan.low_component_prevalence);
  return plan;
}

std::vector<ScreeningRecord> generate(const SynthOptions& options) {
  if (options.n < 1) throw ValidationError("synthetic dataset needs n >= 1");
  const MixturePlan plan = plan_mixture(options.target_prevalence);
  Rng rng(options.seed);
  const auto& ethnicities = synth_ethnicities();
  const auto& respondents = synth_respondents();
  std::vector<ScreeningRecord> records;
  records.reserve(options.n);
  for (std::size_t i = 0; i < options.n; ++i) {
    const double rate = rng.bernoulli(plan.high_weight) ? kHighRate : kLowRate;
    std::array<int, kItemCount> items{};
    for (auto& item : items) item = rng.bernoulli(rate) ? 1 : 0;
    const int age = kAgeMin + static_cast<int>(rng.index(kAgeMax - kAgeMin + 1));
    const Sex sex = rng.bernoulli(0.5) ? Sex::Male : Sex::Female;
    const std::string& ethnicity = ethnicities[rng.index(ethnicities.size())];
    const bool jaundice = rng.bernoulli(0.5);
    const bool family_asd = rng.bernoulli(0.5);
    const std::string& respondent = respondents[rng.index(respondents.size())];
    records.push_back(make_record(items, age, sex, ethnicity, jaundice, family_asd, respondent));
  }
  return records;
}

}  // namespace screenlab
