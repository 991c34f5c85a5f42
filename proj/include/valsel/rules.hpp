#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "valsel/data.hpp"

namespace valsel {

struct Condition {
  std::size_t feature = 0;
  ValueId value = 0;

  bool operator==(const Condition&) const = default;
};

struct Rule {
  std::vector<Condition> conditions;  // conjunction
  LabelId label = 0;

  bool matches(const Instance& inst) const;
};

struct RuleOptions {
  double prune_fraction = 1.0 / 3.0;  // share of data held out to prune each rule
  std::uint64_t seed = 1;             // grow/prune split

  void validate() const;
};

// Ordered decision list; the first matching rule fires, else the default.
class RuleModel {
 public:
  using Rules = std::vector<Rule>;

  const Rules& rules() const { return rules_; }
  LabelId default_label() const { return default_label_; }

  // Rules including the default rule.
  std::size_t size() const { return rules_.size() + 1; }

  LabelId predict(const Instance& inst) const;

  // One rule per line: (f = v) and (g = w) => class=l
  void write(std::ostream& out, const Dataset& schema) const;

 private:
  friend RuleModel train_rules(const Dataset& d, const RuleOptions& options);

  Rules rules_;
  LabelId default_label_ = 0;
};

// Sequential covering in the RIPPER style without its optimization passes:
// classes from rarest to most frequent, FOIL-gain growing, (p-n)/(p+n)
// tail pruning, stop once a rule no longer beats the default rule on the
// prune-split instances it covers.
RuleModel train_rules(const Dataset& d, const RuleOptions& options = {});

}  // namespace valsel
