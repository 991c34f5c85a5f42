#include "valsel/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "valsel/error.hpp"
#include "valsel/evaluation.hpp"
#include "valsel/random.hpp"

namespace valsel {

void BaselineConfig::validate() const {
  if (!(reservoir_fraction > 0.0 && reservoir_fraction <= 1.0)) {
    throw ConfigError("reservoir fraction must lie in (0, 1]");
  }
  if (!(random_value_rate >= 0.0 && random_value_rate <= 1.0)) {
    throw ConfigError("random value rate must lie in [0, 1]");
  }
  if (misclassified_folds < 2) throw ConfigError("misclassified folds must be >= 2");
}

Dataset reservoir_select(const Dataset& d, double fraction, std::uint64_t seed,
                         std::vector<std::size_t>* kept_rows) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("reservoir fraction must lie in (0, 1]");
  }
  if (d.instances.empty()) throw DataError("reservoir sampling of an empty dataset");
  const std::size_t n = d.num_instances();
  // The epsilon keeps 0.05 * 100 from rounding up to 6.
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);

  Rng rng(seed);
  std::vector<std::size_t> reservoir(k);
  std::iota(reservoir.begin(), reservoir.end(), 0);
  for (std::size_t i = k; i < n; ++i) {
    const std::size_t j = rng.index(i + 1);
    if (j < k) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());
  if (kept_rows) *kept_rows = reservoir;
  return d.subset(reservoir);
}

Dataset misclassified_filter(const Dataset& d, const LearnerSpec& learner, int folds,
                             std::uint64_t seed, std::vector<std::size_t>* kept_rows) {
  if (folds < 2) throw ConfigError("misclassified filter needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > d.num_instances()) {
    throw DataError("misclassified filter: " + std::to_string(folds) + " folds for " +
                    std::to_string(d.num_instances()) + " instances");
  }
  const auto predicted = out_of_fold_predictions(d, learner, folds, seed);
  std::vector<std::size_t> keep;
  for (std::size_t y = 0; y < d.num_instances(); ++y) {
    if (predicted[y] == d.instances[y].label) keep.push_back(y);
  }
  if (keep.empty()) warn("misclassified filter removed every instance");
  if (kept_rows) *kept_rows = keep;
  return d.subset(keep);
}

Dataset drop_columns(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<bool> drop(d.num_features(), false);
  for (const auto& name : names) {
    auto it = std::find_if(d.features.begin(), d.features.end(),
                           [&](const Feature& f) { return f.name == name; });
    if (it == d.features.end()) throw ConfigError("no feature named '" + name + "'");
    drop[static_cast<std::size_t>(it - d.features.begin())] = true;
  }
  Dataset out = d.empty_like();
  out.features.clear();
  for (std::size_t x = 0; x < d.num_features(); ++x) {
    if (!drop[x]) out.features.push_back(d.features[x]);
  }
  out.instances.reserve(d.num_instances());
  for (const auto& inst : d.instances) {
    Instance kept;
    kept.label = inst.label;
    kept.weight = inst.weight;
    for (std::size_t x = 0; x < d.num_features(); ++x) {
      if (!drop[x]) kept.slots.push_back(inst.slots[x]);
    }
    out.instances.push_back(std::move(kept));
  }
  return out;
}

Dataset random_value_removal(const Dataset& d, double rate, std::uint64_t seed,
                             std::vector<std::size_t>* kept_rows) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("removal rate must lie in [0, 1]");
  Rng rng(seed);
  Dataset out = d.empty_like();
  if (kept_rows) kept_rows->clear();
  for (std::size_t y = 0; y < d.num_instances(); ++y) {
    Instance copy = d.instances[y];
    bool any = false;
    for (auto& z : copy.slots) {
      if (z == kMissing) continue;
      if (rng.uniform() < rate) {
        z = kMissing;
      } else {
        any = true;
      }
    }
    if (!any) continue;
    out.instances.push_back(std::move(copy));
    if (kept_rows) kept_rows->push_back(y);
  }
  return out;
}

}  // namespace valsel
