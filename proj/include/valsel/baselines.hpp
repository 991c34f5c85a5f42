#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "valsel/data.hpp"
#include "valsel/learner.hpp"

namespace valsel {

struct BaselineConfig {
  double reservoir_fraction = 1.0 / 20.0;
  std::vector<std::string> drop_columns;
  double random_value_rate = 0.1;
  int misclassified_folds = 10;

  void validate() const;
};

// Each filter can report the input row index of every surviving instance
// through kept_rows.

// Keeps ceil(fraction * |I|) instances chosen uniformly without replacement
// by a single reservoir pass (Algorithm R). Survivors keep their input order.
Dataset reservoir_select(const Dataset& d, double fraction, std::uint64_t seed,
                         std::vector<std::size_t>* kept_rows = nullptr);

// Drops every instance whose out-of-fold prediction disagrees with its label.
Dataset misclassified_filter(const Dataset& d, const LearnerSpec& learner, int folds,
                             std::uint64_t seed, std::vector<std::size_t>* kept_rows = nullptr);

// Removes the named features. Unknown names are a ConfigError.
Dataset drop_columns(const Dataset& d, const std::vector<std::string>& names);

// Each observed slot becomes MISSING with probability rate; rows left without
// any value are dropped.
Dataset random_value_removal(const Dataset& d, double rate, std::uint64_t seed,
                             std::vector<std::size_t>* kept_rows = nullptr);

}  // namespace valsel
