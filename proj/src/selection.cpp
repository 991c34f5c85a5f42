#include "valsel/selection.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "valsel/error.hpp"
#include "valsel/random.hpp"

namespace valsel {

std::string_view to_string(SelectionMode m) { return m == SelectionMode::pvs ? "pvs" : "pvs_plus"; }

SelectionMode parse_selection_mode(std::string_view text) {
  if (text == "pvs") return SelectionMode::pvs;
  if (text == "pvs_plus" || text == "pvs+" || text == "p+vs") return SelectionMode::pvs_plus;
  throw ConfigError("unknown value selection mode '" + std::string{text} + "'");
}

void VSConfig::validate() const {
  check_epsilon(epsilon);
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
}

double miss_rate(const Instance& inst) {
  if (inst.slots.empty()) return 1.0;
  const auto missing = std::count(inst.slots.begin(), inst.slots.end(), kMissing);
  return static_cast<double>(missing) / static_cast<double>(inst.slots.size());
}

namespace {

void check_stats(const Dataset& d, const MetricTable& stats) {
  if (stats.fingerprint() != fingerprint(d) || stats.num_features() != d.num_features()) {
    throw DataError("value statistics were not computed on this dataset");
  }
}

// Drops instances flagged in `deleted` and marks features left without any
// observed value.
void finish(FilterOutcome& out, Dataset masked, const std::vector<bool>& deleted) {
  out.filtered = masked.empty_like();
  for (std::size_t y = 0; y < masked.instances.size(); ++y) {
    if (deleted[y]) {
      out.removed_instances.push_back(y);
    } else {
      out.filtered.instances.push_back(std::move(masked.instances[y]));
    }
  }
  for (std::size_t x = 0; x < out.filtered.num_features(); ++x) {
    const bool any = std::any_of(out.filtered.instances.begin(), out.filtered.instances.end(),
                                 [x](const Instance& inst) { return inst.slots[x] != kMissing; });
    if (!any) out.removed_features.push_back(x);
  }
}

}  // namespace

FilterOutcome pvs(const Dataset& d, const VSConfig& cfg, const MetricTable& stats) {
  cfg.validate();
  check_stats(d, stats);
  Rng rng(cfg.seed);

  FilterOutcome out;
  out.stats = stats;
  out.value_mask.resize(d.num_features());
  for (std::size_t x = 0; x < d.num_features(); ++x) {
    out.value_mask[x].assign(d.features[x].values.size(), false);
    for (const ValueStats& s : stats.feature(x)) {
      const double r = rng.uniform();
      if (r < removal_probability(s, cfg.metric, cfg.epsilon)) {
        out.value_mask[x][static_cast<std::size_t>(s.value)] = true;
      }
    }
  }

  Dataset masked = d;
  std::vector<bool> deleted(masked.instances.size(), false);
  for (std::size_t y = 0; y < masked.instances.size(); ++y) {
    auto& slots = masked.instances[y].slots;
    for (std::size_t x = 0; x < slots.size(); ++x) {
      if (slots[x] != kMissing && out.value_mask[x][static_cast<std::size_t>(slots[x])]) {
        slots[x] = kMissing;
      }
    }
    // An instance without any value carries nothing for the learner.
    deleted[y] = std::all_of(slots.begin(), slots.end(), [](ValueId z) { return z == kMissing; });
  }
  finish(out, std::move(masked), deleted);
  return out;
}

FilterOutcome pvs_plus(const Dataset& d, const VSConfig& cfg, const MetricTable& stats) {
  cfg.validate();
  check_stats(d, stats);
  Rng rng(cfg.seed);

  FilterOutcome out;
  out.stats = stats;
  Dataset masked = d;
  out.slot_mask.resize(masked.instances.size());
  std::vector<bool> deleted(masked.instances.size(), false);
  for (std::size_t y = 0; y < masked.instances.size(); ++y) {
    auto& slots = masked.instances[y].slots;
    out.slot_mask[y].assign(slots.size(), false);
    for (std::size_t x = 0; x < slots.size(); ++x) {
      if (slots[x] == kMissing) continue;
      const ValueStats* s = stats.find(x, slots[x]);
      const double r = rng.uniform();
      const double threshold = r * cfg.epsilon;
      const bool drop = cfg.metric == InfoMetric::infogain ? s->norm_info_gain < threshold
                                                           : s->entropy > threshold;
      if (drop) {
        slots[x] = kMissing;
        out.slot_mask[y][x] = true;
      }
    }
    const double rate = miss_rate(masked.instances[y]);
    deleted[y] = rate > rng.uniform();
  }
  finish(out, std::move(masked), deleted);
  return out;
}

FilterOutcome select_values(const Dataset& d, const VSConfig& cfg, const MetricTable& stats) {
  return cfg.mode == SelectionMode::pvs ? pvs(d, cfg, stats) : pvs_plus(d, cfg, stats);
}

FilterOutcome select_values(const Dataset& d, const VSConfig& cfg) {
  return select_values(d, cfg, compute_stats(d));
}

void write_mask(std::ostream& out, const FilterOutcome& outcome, const Dataset& original) {
  for (std::size_t x = 0; x < outcome.value_mask.size(); ++x) {
    for (std::size_t z = 0; z < outcome.value_mask[x].size(); ++z) {
      if (outcome.value_mask[x][z]) {
        out << "value\t" << original.features[x].name << '\t' << original.features[x].values[z]
            << '\n';
      }
    }
  }
  for (std::size_t y = 0; y < outcome.slot_mask.size(); ++y) {
    for (std::size_t x = 0; x < outcome.slot_mask[y].size(); ++x) {
      if (outcome.slot_mask[y][x]) {
        out << "slot\t" << y << '\t' << original.features[x].name << '\n';
      }
    }
  }
  for (auto y : outcome.removed_instances) out << "instance\t" << y << '\n';
  for (auto x : outcome.removed_features) {
    out << "feature\t" << original.features[x].name << '\n';
  }
}

}  // namespace valsel
