#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "valsel/data.hpp"

namespace valsel {

struct TreeOptions {
  int min_leaf = 2;    // minimum weight in at least two branches of a split
  double cf = 0.25;    // pruning confidence; 1 disables pruning

  void validate() const;
  bool prunes() const { return cf < 1.0; }
};

struct TreeNode {
  std::int32_t feature = -1;                // -1 for a leaf
  std::vector<ValueId> branch_values;       // one branch per value seen here
  std::vector<std::int32_t> children;       // parallel to branch_values
  std::vector<double> branch_weights;       // known training weight per branch
  std::vector<double> class_weights;        // training weight per label
  LabelId label = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Prediction {
  LabelId label = 0;
  std::vector<double> distribution;  // sums to 1
};

// Multiway C4.5-style tree over categorical features. Node 0 is the root.
class TreeModel {
 public:
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t num_labels() const { return num_labels_; }

  // Internal nodes plus leaves.
  std::size_t size() const { return nodes_.size(); }
  // Root-to-leaf paths, i.e. the rule count of the tree.
  std::size_t num_leaves() const;
  std::size_t depth() const;

  // Missing or unseen values fan out over all branches by training weight.
  Prediction predict(const Instance& inst) const;

  // Features tested anywhere in the tree, ascending.
  std::vector<std::size_t> split_features() const;

  void write(std::ostream& out, const Dataset& schema) const;

 private:
  friend TreeModel train_tree(const Dataset& d, const TreeOptions& options);

  void distribution(std::int32_t node, const Instance& inst, double scale,
                    std::vector<double>& acc) const;

  std::vector<TreeNode> nodes_;
  std::size_t num_labels_ = 0;
};

// Splits on the best gain ratio among features whose gain is at least the
// average, distributing instances with a missing split value across
// branches by weight. Pessimistic-error pruning collapses subtrees whose
// leaf estimate does not exceed the subtree estimate.
TreeModel train_tree(const Dataset& d, const TreeOptions& options = {});

// Upper-confidence extra errors for e errors out of n at confidence cf.
double pessimistic_extra_errors(double n, double e, double cf);

}  // namespace valsel
