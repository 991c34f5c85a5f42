#include "valsel/learner.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "valsel/error.hpp"

namespace valsel {

MajorityModel train_majority(const Dataset& d) {
  if (d.instances.empty()) throw DataError("cannot train on an empty dataset");
  std::vector<double> w(d.num_labels(), 0.0);
  for (const auto& inst : d.instances) w[static_cast<std::size_t>(inst.label)] += inst.weight;
  return {static_cast<LabelId>(std::max_element(w.begin(), w.end()) - w.begin())};
}

std::string_view to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::tree: return "tree";
    case LearnerKind::rules: return "rules";
    case LearnerKind::majority: return "majority";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view text) {
  if (text == "tree") return LearnerKind::tree;
  if (text == "rules") return LearnerKind::rules;
  if (text == "majority") return LearnerKind::majority;
  throw ConfigError("unknown learner '" + std::string{text} + "'");
}

void LearnerSpec::validate() const {
  tree.validate();
  rules.validate();
}

Model train(const LearnerSpec& spec, const Dataset& d) {
  switch (spec.kind) {
    case LearnerKind::tree: return train_tree(d, spec.tree);
    case LearnerKind::rules: return train_rules(d, spec.rules);
    case LearnerKind::majority: return train_majority(d);
  }
  throw ConfigError("unknown learner kind");
}

LabelId predict(const Model& m, const Instance& inst) {
  return std::visit(
      [&](const auto& model) -> LabelId {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          return model.predict(inst).label;
        } else if constexpr (std::is_same_v<T, RuleModel>) {
          return model.predict(inst);
        } else {
          return model.label;
        }
      },
      m);
}

std::size_t model_size(const TreeModel& m) { return m.size(); }
std::size_t model_size(const RuleModel& m) { return m.size(); }

std::size_t model_size(const Model& m) {
  return std::visit(
      [](const auto& model) -> std::size_t {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, MajorityModel>) {
          return 1;
        } else {
          return model.size();
        }
      },
      m);
}

void write_model(std::ostream& out, const Model& m, const Dataset& schema) {
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, MajorityModel>) {
          out << " => " << schema.class_name << '='
              << schema.labels.at(static_cast<std::size_t>(model.label)) << '\n';
        } else {
          model.write(out, schema);
        }
      },
      m);
}

}  // namespace valsel
