#include "valsel/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "valsel/error.hpp"
#include "valsel/random.hpp"

namespace valsel {

bool Rule::matches(const Instance& inst) const {
  return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) {
    return inst.slots[c.feature] == c.value;
  });
}

void RuleOptions::validate() const {
  if (!(prune_fraction >= 0.0 && prune_fraction < 1.0)) {
    throw ConfigError("prune_fraction must lie in [0, 1)");
  }
}

LabelId RuleModel::predict(const Instance& inst) const {
  for (const auto& r : rules_) {
    if (r.matches(inst)) return r.label;
  }
  return default_label_;
}

void RuleModel::write(std::ostream& out, const Dataset& schema) const {
  for (const auto& r : rules_) {
    for (std::size_t i = 0; i < r.conditions.size(); ++i) {
      const auto& c = r.conditions[i];
      const Feature& f = schema.features.at(c.feature);
      if (i > 0) out << " and ";
      out << '(' << f.name << " = "
          << quote_token(f.values.at(static_cast<std::size_t>(c.value))) << ')';
    }
    out << " => " << schema.class_name << '=' << schema.labels.at(static_cast<std::size_t>(r.label))
        << '\n';
  }
  out << " => " << schema.class_name << '='
      << schema.labels.at(static_cast<std::size_t>(default_label_)) << '\n';
  out << "\nNumber of Rules : " << size() << '\n';
}

namespace {

struct Coverage {
  double pos = 0.0;
  double neg = 0.0;
};

class RuleLearner {
 public:
  RuleLearner(const Dataset& d, const RuleOptions& opt) : d_(d), opt_(opt), rng_(opt.seed) {}

  RuleModel::Rules run(LabelId& default_label) {
    const std::size_t nl = d_.num_labels();
    std::vector<double> class_weight(nl, 0.0);
    for (const auto& inst : d_.instances) {
      class_weight[static_cast<std::size_t>(inst.label)] += inst.weight;
    }
    std::vector<LabelId> order(nl);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](LabelId a, LabelId b) {
      return class_weight[static_cast<std::size_t>(a)] < class_weight[static_cast<std::size_t>(b)];
    });
    // Labels that never occur cannot get rules.
    std::erase_if(order, [&](LabelId l) { return class_weight[static_cast<std::size_t>(l)] <= 0; });

    std::vector<std::size_t> remaining(d_.num_instances());
    std::iota(remaining.begin(), remaining.end(), 0);

    RuleModel::Rules rules;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const LabelId target = order[k];
      while (true) {
        std::vector<std::size_t> pos, neg;
        for (auto y : remaining) {
          (d_.instances[y].label == target ? pos : neg).push_back(y);
        }
        if (pos.empty()) break;
        auto [grow_pos, prune_pos] = split(pos);
        auto [grow_neg, prune_neg] = split(neg);

        Rule rule = grow(target, grow_pos, grow_neg);
        if (rule.conditions.empty()) break;
        const bool have_prune_set = !prune_pos.empty() || !prune_neg.empty();
        const auto& eval_pos = have_prune_set ? prune_pos : grow_pos;
        const auto& eval_neg = have_prune_set ? prune_neg : grow_neg;
        if (have_prune_set) prune(rule, eval_pos, eval_neg);

        const Coverage covered = coverage(rule, eval_pos, eval_neg);
        if (covered.pos + covered.neg <= 0.0) break;
        // Keep the rule only if it beats the default rule on what it covers.
        double default_hits = 0.0;
        for (auto y : eval_neg) {
          const auto& inst = d_.instances[y];
          if (inst.label == order.back() && rule.matches(inst)) default_hits += inst.weight;
        }
        if (covered.pos <= default_hits) break;

        std::erase_if(remaining, [&](std::size_t y) { return rule.matches(d_.instances[y]); });
        rules.push_back(std::move(rule));
      }
    }

    if (remaining.empty()) {
      default_label = order.empty() ? 0 : order.back();
    } else {
      std::vector<double> w(nl, 0.0);
      for (auto y : remaining) w[static_cast<std::size_t>(d_.instances[y].label)] += d_.instances[y].weight;
      default_label = static_cast<LabelId>(std::max_element(w.begin(), w.end()) - w.begin());
    }
    return rules;
  }

 private:
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::vector<std::size_t> rows) {
    rng_.shuffle(rows.begin(), rows.end());
    auto grow_n = static_cast<std::size_t>(
        std::ceil((1.0 - opt_.prune_fraction) * static_cast<double>(rows.size())));
    grow_n = std::min(grow_n, rows.size());
    std::vector<std::size_t> grow(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(grow_n));
    std::vector<std::size_t> held(rows.begin() + static_cast<std::ptrdiff_t>(grow_n), rows.end());
    std::sort(grow.begin(), grow.end());
    std::sort(held.begin(), held.end());
    return {std::move(grow), std::move(held)};
  }

  double total_weight(const std::vector<std::size_t>& rows) const {
    double w = 0.0;
    for (auto y : rows) w += d_.instances[y].weight;
    return w;
  }

  Coverage coverage(const Rule& rule, const std::vector<std::size_t>& pos,
                    const std::vector<std::size_t>& neg) const {
    Coverage c;
    for (auto y : pos) {
      if (rule.matches(d_.instances[y])) c.pos += d_.instances[y].weight;
    }
    for (auto y : neg) {
      if (rule.matches(d_.instances[y])) c.neg += d_.instances[y].weight;
    }
    return c;
  }

  // Adds the condition with the largest FOIL gain until no negatives remain
  // covered or nothing improves.
  Rule grow(LabelId target, std::vector<std::size_t> pos, std::vector<std::size_t> neg) const {
    Rule rule;
    rule.label = target;
    std::vector<bool> used(d_.num_features(), false);
    while (!neg.empty() && !pos.empty()) {
      const double p0 = total_weight(pos);
      const double n0 = total_weight(neg);
      const double before = std::log2(p0 / (p0 + n0));

      double best_gain = 0.0;
      std::optional<Condition> best;
      for (std::size_t x = 0; x < d_.num_features(); ++x) {
        if (used[x]) continue;
        const std::size_t nv = d_.features[x].values.size();
        std::vector<double> p(nv, 0.0), n(nv, 0.0);
        for (auto y : pos) {
          const ValueId z = d_.instances[y].slots[x];
          if (z != kMissing) p[static_cast<std::size_t>(z)] += d_.instances[y].weight;
        }
        for (auto y : neg) {
          const ValueId z = d_.instances[y].slots[x];
          if (z != kMissing) n[static_cast<std::size_t>(z)] += d_.instances[y].weight;
        }
        for (std::size_t z = 0; z < nv; ++z) {
          if (p[z] <= 0.0) continue;
          const double gain = p[z] * (std::log2(p[z] / (p[z] + n[z])) - before);
          if (gain > best_gain + 1e-12) {
            best_gain = gain;
            best = Condition{x, static_cast<ValueId>(z)};
          }
        }
      }
      if (!best) break;
      rule.conditions.push_back(*best);
      used[best->feature] = true;
      auto keep = [&](std::size_t y) { return d_.instances[y].slots[best->feature] == best->value; };
      std::erase_if(pos, [&](std::size_t y) { return !keep(y); });
      std::erase_if(neg, [&](std::size_t y) { return !keep(y); });
    }
    return rule;
  }

  // Keeps the prefix of conditions maximizing (p - n) / (p + n); ties go to
  // the shorter rule.
  void prune(Rule& rule, const std::vector<std::size_t>& pos,
             const std::vector<std::size_t>& neg) const {
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t best_len = rule.conditions.size();
    for (std::size_t len = 1; len <= rule.conditions.size(); ++len) {
      Rule prefix{{rule.conditions.begin(),
                   rule.conditions.begin() + static_cast<std::ptrdiff_t>(len)},
                  rule.label};
      const Coverage c = coverage(prefix, pos, neg);
      const double value = c.pos + c.neg > 0.0 ? (c.pos - c.neg) / (c.pos + c.neg) : -1.0;
      if (value > best_value + 1e-12) {
        best_value = value;
        best_len = len;
      }
    }
    rule.conditions.resize(best_len);
  }

  const Dataset& d_;
  const RuleOptions& opt_;
  Rng rng_;
};

}  // namespace

RuleModel train_rules(const Dataset& d, const RuleOptions& options) {
  options.validate();
  if (d.instances.empty()) throw DataError("cannot train rules on an empty dataset");
  RuleModel model;
  RuleLearner learner(d, options);
  model.rules_ = learner.run(model.default_label_);
  return model;
}

}  // namespace valsel
