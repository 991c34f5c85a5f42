#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "valsel/data.hpp"

namespace valsel {

// Per-value importance measure used to derive removal probabilities.
enum class InfoMetric { entropy, infogain };

std::string_view to_string(InfoMetric m);
InfoMetric parse_info_metric(std::string_view text);

// How the dataset-level confusion H(D) entering the information gain is taken.
enum class DatasetConfusion {
  sum_of_values,  // sum of every observed value's conditional entropy
  class_entropy,  // conventional entropy of the label distribution
};

struct StatsOptions {
  DatasetConfusion confusion = DatasetConfusion::sum_of_values;
};

struct ValueStats {
  std::size_t feature = 0;
  ValueId value = 0;
  std::size_t support = 0;          // instances observing this value
  double mass = 0.0;                // same, instance-weighted
  std::vector<double> class_probs;  // p(label | value), indexed by LabelId
  double proportion = 0.0;          // mass / observed mass of the feature
  double entropy = 0.0;             // in [0,1], log base |L|
  double info_gain = 0.0;
  double norm_info_gain = 0.0;      // in [0,1]
};

class MetricTable {
 public:
  MetricTable() = default;

  std::uint64_t fingerprint() const { return fingerprint_; }
  std::size_t num_features() const { return per_feature_.size(); }
  double dataset_confusion() const { return dataset_confusion_; }

  // Observed values of a feature, ordered by value identifier.
  const std::vector<ValueStats>& feature(std::size_t x) const { return per_feature_.at(x); }
  // nullptr when the value never occurs.
  const ValueStats* find(std::size_t x, ValueId z) const;

  // Every ValueStats, feature-major then by identifier.
  std::vector<const ValueStats*> all() const;
  std::size_t size() const;

 private:
  friend MetricTable compute_stats(const Dataset&, const StatsOptions&);

  std::uint64_t fingerprint_ = 0;
  double dataset_confusion_ = 0.0;
  std::vector<std::vector<ValueStats>> per_feature_;
  std::vector<std::vector<std::int32_t>> index_;  // [x][z] -> position or -1
};

// Class distribution, conditional entropy, information gain and its
// per-feature normalization for every observed (feature, value) pair.
// MISSING slots count toward no value. Throws DataError on an empty dataset
// or one with no observed value.
MetricTable compute_stats(const Dataset& d, const StatsOptions& options = {});

// Probability that a value is dropped: min(1, H/epsilon) for entropy,
// min(1, (1 - IG_N)/epsilon) for infogain. epsilon must lie in (0, 1].
double removal_probability(const ValueStats& s, InfoMetric metric, double epsilon);

void check_epsilon(double epsilon);

// Weights after an idealized selection: 0 where H = 1, w(1 - H) otherwise.
// Ordered like MetricTable::all().
std::vector<double> expected_after_weights(const MetricTable& table);

struct ConfusionReport {
  double before = 0.0;  // sum of w * H
  double after = 0.0;   // sum of w~ * H
};

ConfusionReport confusion_report(const MetricTable& before,
                                 const std::vector<double>& after_weights);

// Tab-separated dump: feature, value, support, H, IG, IG_N, p_remove.
void write_stats_table(std::ostream& out, const MetricTable& table, const Dataset& d,
                       InfoMetric metric, double epsilon);

}  // namespace valsel
