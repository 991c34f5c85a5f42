#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "valsel/data.hpp"
#include "valsel/metrics.hpp"

namespace valsel {

enum class SelectionMode {
  pvs,       // one decision per distinct value, applied to every occurrence
  pvs_plus,  // one decision per occurrence, then missRate-driven row deletion
};

std::string_view to_string(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view text);

struct VSConfig {
  SelectionMode mode = SelectionMode::pvs_plus;
  InfoMetric metric = InfoMetric::entropy;
  double epsilon = 0.5;
  std::uint64_t seed = 1;
  int repeats = 5;

  void validate() const;
};

struct FilterOutcome {
  // Same schema as the input; removed values appear as MISSING. Feature value
  // lists are kept so identifiers stay aligned with unfiltered data.
  Dataset filtered;
  // PVS: value_mask[x][z] is true when value z of feature x was dropped.
  std::vector<std::vector<bool>> value_mask;
  // P+VS: slot_mask[y][x] is true when slot x of input instance y was dropped.
  std::vector<std::vector<bool>> slot_mask;
  std::vector<std::size_t> removed_instances;  // indices into the input
  std::vector<std::size_t> removed_features;   // no observed value survives
  MetricTable stats;
};

// Global selection. The RNG is drawn once per observed value, features in
// index order and values in identifier order.
FilterOutcome pvs(const Dataset& d, const VSConfig& cfg, const MetricTable& stats);

// Per-instance selection. Draw order: for each instance, one draw per
// non-missing slot in index order, then one draw for the deletion test.
FilterOutcome pvs_plus(const Dataset& d, const VSConfig& cfg, const MetricTable& stats);

// Dispatches on cfg.mode.
FilterOutcome select_values(const Dataset& d, const VSConfig& cfg, const MetricTable& stats);
// Computes stats with default options, then selects.
FilterOutcome select_values(const Dataset& d, const VSConfig& cfg);

// Fraction of an instance's slots that are MISSING; 1 for a zero-width schema.
double miss_rate(const Instance& inst);

// Audit listing of what a selection removed.
void write_mask(std::ostream& out, const FilterOutcome& outcome, const Dataset& original);

}  // namespace valsel
