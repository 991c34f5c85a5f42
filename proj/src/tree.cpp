#include "valsel/tree.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "valsel/error.hpp"

namespace valsel {

void TreeOptions::validate() const {
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(cf > 0.0 && cf <= 0.5) && cf != 1.0) {
    throw ConfigError("confidence factor must lie in (0, 0.5], or be 1 to disable pruning");
  }
}

double pessimistic_extra_errors(double n, double e, double cf) {
  if (n <= 0.0) return 0.0;
  if (e < 1.0) {
    const double base = n * (1.0 - std::pow(cf, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (pessimistic_extra_errors(n, 1.0, cf) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - cf);
  const double f = (e + 0.5) / n;
  const double r =
      (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) /
      (1 + z * z / n);
  return r * n - e;
}

namespace {

struct Item {
  std::size_t row;
  double weight;
};

struct BuildNode {
  std::int32_t feature = -1;
  std::vector<ValueId> branch_values;
  std::vector<std::unique_ptr<BuildNode>> children;
  std::vector<double> branch_weights;
  std::vector<double> class_weights;
  LabelId label = 0;
};

double entropy_bits(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

LabelId argmax_label(const std::vector<double>& w) {
  return static_cast<LabelId>(std::max_element(w.begin(), w.end()) - w.begin());
}

struct SplitCandidate {
  std::size_t feature = 0;
  double gain = 0.0;
  double ratio = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, const TreeOptions& opt) : d_(d), opt_(opt) {}

  std::unique_ptr<BuildNode> build(const std::vector<Item>& items, std::vector<bool>& used) {
    auto node = std::make_unique<BuildNode>();
    node->class_weights.assign(d_.num_labels(), 0.0);
    double total = 0.0;
    for (const auto& it : items) {
      node->class_weights[static_cast<std::size_t>(d_.instances[it.row].label)] += it.weight;
      total += it.weight;
    }
    node->label = argmax_label(node->class_weights);

    const auto nonzero = std::count_if(node->class_weights.begin(), node->class_weights.end(),
                                       [](double w) { return w > 0.0; });
    if (nonzero <= 1 || total < 2.0 * opt_.min_leaf) return node;

    auto best = choose_split(items, used, total);
    if (!best) return node;

    const std::size_t x = best->feature;
    const std::size_t nv = d_.features[x].values.size();
    std::vector<double> value_weight(nv, 0.0);
    double known = 0.0;
    for (const auto& it : items) {
      const ValueId z = d_.instances[it.row].slots[x];
      if (z == kMissing) continue;
      value_weight[static_cast<std::size_t>(z)] += it.weight;
      known += it.weight;
    }

    node->feature = static_cast<std::int32_t>(x);
    used[x] = true;
    for (std::size_t z = 0; z < nv; ++z) {
      if (value_weight[z] <= 0.0) continue;
      const double share = value_weight[z] / known;
      std::vector<Item> branch;
      for (const auto& it : items) {
        const ValueId v = d_.instances[it.row].slots[x];
        if (v == static_cast<ValueId>(z)) {
          branch.push_back(it);
        } else if (v == kMissing) {
          branch.push_back({it.row, it.weight * share});
        }
      }
      node->branch_values.push_back(static_cast<ValueId>(z));
      node->branch_weights.push_back(value_weight[z]);
      node->children.push_back(build(branch, used));
    }
    used[x] = false;
    return node;
  }

 private:
  std::optional<SplitCandidate> choose_split(const std::vector<Item>& items,
                                             const std::vector<bool>& used, double total) const {
    const std::size_t nl = d_.num_labels();
    std::vector<SplitCandidate> valid;
    for (std::size_t x = 0; x < d_.num_features(); ++x) {
      if (used[x]) continue;
      const std::size_t nv = d_.features[x].values.size();
      std::vector<std::vector<double>> per_value(nv, std::vector<double>(nl, 0.0));
      std::vector<double> value_weight(nv, 0.0);
      std::vector<double> known_classes(nl, 0.0);
      double known = 0.0;
      for (const auto& it : items) {
        const auto& inst = d_.instances[it.row];
        const ValueId z = inst.slots[x];
        if (z == kMissing) continue;
        per_value[static_cast<std::size_t>(z)][static_cast<std::size_t>(inst.label)] += it.weight;
        value_weight[static_cast<std::size_t>(z)] += it.weight;
        known_classes[static_cast<std::size_t>(inst.label)] += it.weight;
        known += it.weight;
      }
      if (known <= 0.0) continue;
      const auto big_branches = std::count_if(value_weight.begin(), value_weight.end(),
                                              [&](double w) { return w >= opt_.min_leaf; });
      if (big_branches < 2) continue;

      double conditional = 0.0;
      double split_info = 0.0;
      for (std::size_t z = 0; z < nv; ++z) {
        if (value_weight[z] <= 0.0) continue;
        conditional += value_weight[z] / known * entropy_bits(per_value[z], value_weight[z]);
        const double p = value_weight[z] / total;
        split_info -= p * std::log2(p);
      }
      const double unknown = total - known;
      if (unknown > 1e-12) {
        const double p = unknown / total;
        split_info -= p * std::log2(p);
      }
      if (split_info <= 1e-12) continue;
      const double gain =
          std::max(0.0, known / total * (entropy_bits(known_classes, known) - conditional));
      valid.push_back({x, gain, gain / split_info});
    }
    if (valid.empty()) return std::nullopt;

    double avg_gain = 0.0;
    for (const auto& c : valid) avg_gain += c.gain;
    avg_gain /= static_cast<double>(valid.size());

    std::optional<SplitCandidate> best;
    for (const auto& c : valid) {
      if (c.gain < avg_gain - 1e-3) continue;
      if (!best || c.ratio > best->ratio + 1e-12) best = c;
    }
    return best;
  }

  const Dataset& d_;
  const TreeOptions& opt_;
};

double leaf_estimate(const BuildNode& n, double cf) {
  const double total = std::accumulate(n.class_weights.begin(), n.class_weights.end(), 0.0);
  const double errors = total - n.class_weights[static_cast<std::size_t>(n.label)];
  return errors + pessimistic_extra_errors(total, errors, cf);
}

// Returns the estimated errors of the (possibly collapsed) subtree.
double prune(BuildNode& n, double cf) {
  if (n.children.empty()) return leaf_estimate(n, cf);
  double subtree = 0.0;
  for (auto& c : n.children) subtree += prune(*c, cf);
  const double as_leaf = leaf_estimate(n, cf);
  if (as_leaf <= subtree + 1e-9) {
    n.feature = -1;
    n.children.clear();
    n.branch_values.clear();
    n.branch_weights.clear();
    return as_leaf;
  }
  return subtree;
}

void flatten(BuildNode& n, std::vector<TreeNode>& out) {
  const auto self = out.size();
  out.emplace_back();
  out[self].feature = n.feature;
  out[self].branch_values = std::move(n.branch_values);
  out[self].branch_weights = std::move(n.branch_weights);
  out[self].class_weights = std::move(n.class_weights);
  out[self].label = n.label;
  for (auto& c : n.children) {
    out[self].children.push_back(static_cast<std::int32_t>(out.size()));
    flatten(*c, out);
  }
}

}  // namespace

TreeModel train_tree(const Dataset& d, const TreeOptions& options) {
  options.validate();
  if (d.instances.empty()) throw DataError("cannot train a tree on an empty dataset");
  std::vector<Item> items;
  items.reserve(d.num_instances());
  for (std::size_t y = 0; y < d.num_instances(); ++y) {
    items.push_back({y, d.instances[y].weight});
  }
  std::vector<bool> used(d.num_features(), false);
  TreeBuilder builder(d, options);
  auto root = builder.build(items, used);
  if (options.prunes()) prune(*root, options.cf);

  TreeModel model;
  model.num_labels_ = d.num_labels();
  flatten(*root, model.nodes_);
  return model;
}

std::size_t TreeModel::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    for (auto c : nodes_[i].children) level[static_cast<std::size_t>(c)] = level[i] + 1;
  }
  return deepest;
}

void TreeModel::distribution(std::int32_t index, const Instance& inst, double scale,
                             std::vector<double>& acc) const {
  const TreeNode& n = nodes_[static_cast<std::size_t>(index)];
  if (n.is_leaf()) {
    const double total = std::accumulate(n.class_weights.begin(), n.class_weights.end(), 0.0);
    if (total <= 0.0) {
      acc[static_cast<std::size_t>(n.label)] += scale;
      return;
    }
    for (std::size_t l = 0; l < acc.size(); ++l) acc[l] += scale * n.class_weights[l] / total;
    return;
  }
  const ValueId v = inst.slots[static_cast<std::size_t>(n.feature)];
  if (v != kMissing) {
    for (std::size_t b = 0; b < n.branch_values.size(); ++b) {
      if (n.branch_values[b] == v) {
        distribution(n.children[b], inst, scale, acc);
        return;
      }
    }
  }
  // Missing or never seen at this node.
  const double known = std::accumulate(n.branch_weights.begin(), n.branch_weights.end(), 0.0);
  for (std::size_t b = 0; b < n.children.size(); ++b) {
    distribution(n.children[b], inst, scale * n.branch_weights[b] / known, acc);
  }
}

Prediction TreeModel::predict(const Instance& inst) const {
  Prediction p;
  p.distribution.assign(num_labels_, 0.0);
  distribution(0, inst, 1.0, p.distribution);
  const double total = std::accumulate(p.distribution.begin(), p.distribution.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : p.distribution) v /= total;
  }
  p.label = argmax_label(p.distribution);
  return p;
}

std::vector<std::size_t> TreeModel::split_features() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) out.push_back(static_cast<std::size_t>(n.feature));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void write_leaf(std::ostream& out, const TreeNode& n, const Dataset& schema) {
  const double total = std::accumulate(n.class_weights.begin(), n.class_weights.end(), 0.0);
  const double errors = total - n.class_weights[static_cast<std::size_t>(n.label)];
  out << ": " << schema.labels.at(static_cast<std::size_t>(n.label)) << " (" << total;
  if (errors > 1e-9) out << '/' << errors;
  out << ")\n";
}

void write_node(std::ostream& out, const std::vector<TreeNode>& nodes, std::size_t index,
                const Dataset& schema, int indent) {
  const TreeNode& n = nodes[index];
  const Feature& f = schema.features.at(static_cast<std::size_t>(n.feature));
  for (std::size_t b = 0; b < n.children.size(); ++b) {
    for (int i = 0; i < indent; ++i) out << "|   ";
    out << f.name << " = " << f.values.at(static_cast<std::size_t>(n.branch_values[b]));
    const auto child = static_cast<std::size_t>(n.children[b]);
    if (nodes[child].is_leaf()) {
      write_leaf(out, nodes[child], schema);
    } else {
      out << '\n';
      write_node(out, nodes, child, schema, indent + 1);
    }
  }
}

}  // namespace

void TreeModel::write(std::ostream& out, const Dataset& schema) const {
  if (nodes_.front().is_leaf()) {
    write_leaf(out, nodes_.front(), schema);
  } else {
    write_node(out, nodes_, 0, schema, 0);
  }
  out << "\nNumber of Leaves  : " << num_leaves() << "\nSize of the tree : " << size() << '\n';
}

}  // namespace valsel
