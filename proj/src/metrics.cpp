#include "valsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "valsel/error.hpp"

namespace valsel {

std::string_view to_string(InfoMetric m) {
  return m == InfoMetric::entropy ? "entropy" : "infogain";
}

InfoMetric parse_info_metric(std::string_view text) {
  if (text == "entropy") return InfoMetric::entropy;
  if (text == "infogain" || text == "information_gain" || text == "ig") {
    return InfoMetric::infogain;
  }
  throw ConfigError("unknown information metric '" + std::string{text} + "'");
}

const ValueStats* MetricTable::find(std::size_t x, ValueId z) const {
  if (x >= index_.size() || z < 0 || static_cast<std::size_t>(z) >= index_[x].size()) {
    return nullptr;
  }
  const auto pos = index_[x][static_cast<std::size_t>(z)];
  return pos < 0 ? nullptr : &per_feature_[x][static_cast<std::size_t>(pos)];
}

std::vector<const ValueStats*> MetricTable::all() const {
  std::vector<const ValueStats*> out;
  out.reserve(size());
  for (const auto& f : per_feature_) {
    for (const auto& s : f) out.push_back(&s);
  }
  return out;
}

std::size_t MetricTable::size() const {
  std::size_t n = 0;
  for (const auto& f : per_feature_) n += f.size();
  return n;
}

namespace {

// Entropy in base num_labels, clamped into [0,1] against rounding.
double normalized_entropy(const std::vector<double>& probs, std::size_t num_labels) {
  if (num_labels < 2) return 0.0;
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  h /= std::log(static_cast<double>(num_labels));
  return std::clamp(h, 0.0, 1.0);
}

}  // namespace

MetricTable compute_stats(const Dataset& d, const StatsOptions& options) {
  if (d.instances.empty()) throw DataError("cannot compute value statistics of an empty dataset");
  const std::size_t nl = d.num_labels();

  MetricTable table;
  table.fingerprint_ = fingerprint(d);
  table.per_feature_.resize(d.num_features());
  table.index_.resize(d.num_features());

  bool any_observed = false;
  double total_entropy = 0.0;
  for (std::size_t x = 0; x < d.num_features(); ++x) {
    const std::size_t nv = d.features[x].values.size();
    std::vector<std::vector<double>> mass(nv, std::vector<double>(nl, 0.0));
    std::vector<std::size_t> support(nv, 0);
    double observed_mass = 0.0;
    for (const auto& inst : d.instances) {
      const ValueId z = inst.slots[x];
      if (z == kMissing) continue;
      const auto zi = static_cast<std::size_t>(z);
      mass[zi][static_cast<std::size_t>(inst.label)] += inst.weight;
      support[zi] += 1;
      observed_mass += inst.weight;
    }

    auto& stats = table.per_feature_[x];
    table.index_[x].assign(nv, -1);
    for (std::size_t z = 0; z < nv; ++z) {
      if (support[z] == 0) continue;
      ValueStats s;
      s.feature = x;
      s.value = static_cast<ValueId>(z);
      s.support = support[z];
      for (double m : mass[z]) s.mass += m;
      s.class_probs.resize(nl, 0.0);
      if (s.mass > 0.0) {
        for (std::size_t l = 0; l < nl; ++l) s.class_probs[l] = mass[z][l] / s.mass;
      }
      s.proportion = observed_mass > 0.0 ? s.mass / observed_mass : 0.0;
      s.entropy = normalized_entropy(s.class_probs, nl);
      total_entropy += s.entropy;
      table.index_[x][z] = static_cast<std::int32_t>(stats.size());
      stats.push_back(std::move(s));
      any_observed = true;
    }
  }
  if (!any_observed) throw DataError("dataset '" + d.name + "' has no observed values");

  double confusion = total_entropy;
  if (options.confusion == DatasetConfusion::class_entropy) {
    std::vector<double> prior(nl, 0.0);
    double total = 0.0;
    for (const auto& inst : d.instances) {
      prior[static_cast<std::size_t>(inst.label)] += inst.weight;
      total += inst.weight;
    }
    if (total > 0.0) {
      for (auto& p : prior) p /= total;
    }
    confusion = normalized_entropy(prior, nl);
  }
  table.dataset_confusion_ = confusion;

  std::size_t flat_features = 0;
  for (auto& stats : table.per_feature_) {
    if (stats.empty()) continue;
    double max_gain = -std::numeric_limits<double>::infinity();
    for (auto& s : stats) {
      s.info_gain = confusion - s.entropy;
      max_gain = std::max(max_gain, s.info_gain);
    }
    if (max_gain <= 1e-12) {
      ++flat_features;
      for (auto& s : stats) s.norm_info_gain = 1.0;
    } else {
      for (auto& s : stats) s.norm_info_gain = std::clamp(s.info_gain / max_gain, 0.0, 1.0);
    }
  }
  if (flat_features > 0) {
    warn(std::to_string(flat_features) +
         " feature(s) have zero maximum information gain; their normalized gain is set to 1");
  }
  return table;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
}

double removal_probability(const ValueStats& s, InfoMetric metric, double epsilon) {
  check_epsilon(epsilon);
  const double score = metric == InfoMetric::entropy ? s.entropy : 1.0 - s.norm_info_gain;
  return std::clamp(score / epsilon, 0.0, 1.0);
}

std::vector<double> expected_after_weights(const MetricTable& table) {
  std::vector<double> out;
  out.reserve(table.size());
  for (const ValueStats* s : table.all()) {
    out.push_back(s->entropy >= 1.0 ? 0.0 : s->proportion * (1.0 - s->entropy));
  }
  return out;
}

ConfusionReport confusion_report(const MetricTable& before,
                                 const std::vector<double>& after_weights) {
  const auto values = before.all();
  if (values.size() != after_weights.size()) {
    throw DataError("confusion report: " + std::to_string(after_weights.size()) +
                    " weights for " + std::to_string(values.size()) + " values");
  }
  ConfusionReport r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.before += values[i]->proportion * values[i]->entropy;
    r.after += after_weights[i] * values[i]->entropy;
  }
  return r;
}

void write_stats_table(std::ostream& out, const MetricTable& table, const Dataset& d,
                       InfoMetric metric, double epsilon) {
  out << "feature\tvalue\tsupport\tH\tIG\tIG_N\tp_remove\n";
  for (const ValueStats* s : table.all()) {
    out << d.features.at(s->feature).name << '\t'
        << d.features[s->feature].values.at(static_cast<std::size_t>(s->value)) << '\t'
        << s->support << '\t' << s->entropy << '\t' << s->info_gain << '\t'
        << s->norm_info_gain << '\t' << removal_probability(*s, metric, epsilon) << '\n';
  }
}

}  // namespace valsel
