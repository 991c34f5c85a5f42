#pragma once

#include <iosfwd>
#include <string_view>
#include <variant>

#include "valsel/data.hpp"
#include "valsel/rules.hpp"
#include "valsel/tree.hpp"

namespace valsel {

// Predicts the weighted majority label of its training data. Size 1.
struct MajorityModel {
  LabelId label = 0;
};

MajorityModel train_majority(const Dataset& d);

enum class LearnerKind { tree, rules, majority };

std::string_view to_string(LearnerKind k);
LearnerKind parse_learner_kind(std::string_view text);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::tree;
  TreeOptions tree;
  RuleOptions rules;

  void validate() const;
};

using Model = std::variant<TreeModel, RuleModel, MajorityModel>;

Model train(const LearnerSpec& spec, const Dataset& d);
LabelId predict(const Model& m, const Instance& inst);

std::size_t model_size(const TreeModel& m);
std::size_t model_size(const RuleModel& m);
std::size_t model_size(const Model& m);

void write_model(std::ostream& out, const Model& m, const Dataset& schema);

}  // namespace valsel
