#pragma once

#include <sstream>
#include <string>

#include "valsel/data.hpp"
#include "valsel/random.hpp"

namespace valsel::testing {

// Five instances over f1..f4 with "-" for missing: 4 missing slots.
inline const char* kTable2Csv =
    "f1,f2,f3,f4,class\n"
    "-,1,2,1,1\n"
    "1,-,1,1,1\n"
    "-1,-2,1,-1,0\n"
    "-1,-,1,-2,0\n"
    "1,1,-1,-,1\n";

inline Dataset worked_example() {
  std::istringstream in(kTable2Csv);
  CsvOptions opts;
  opts.missing_token = "-";
  return read_csv(in, opts, "worked_example");
}

inline Dataset from_csv(const std::string& text, const std::string& missing = "?") {
  std::istringstream in(text);
  CsvOptions opts;
  opts.missing_token = missing;
  return read_csv(in, opts, "fixture");
}

// Uniformly random categorical data; missing_rate of slots are MISSING.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t num_features,
                              std::size_t num_labels, std::size_t max_values,
                              double missing_rate = 0.0) {
  Dataset d;
  d.name = "random";
  for (std::size_t l = 0; l < num_labels; ++l) d.labels.push_back("c" + std::to_string(l));
  for (std::size_t x = 0; x < num_features; ++x) {
    Feature f;
    f.name = "f" + std::to_string(x);
    const std::size_t nv = 1 + rng.index(max_values);
    for (std::size_t z = 0; z < nv; ++z) f.values.push_back("v" + std::to_string(z));
    d.features.push_back(std::move(f));
  }
  for (std::size_t y = 0; y < n; ++y) {
    Instance inst;
    inst.label = static_cast<LabelId>(rng.index(num_labels));
    for (std::size_t x = 0; x < num_features; ++x) {
      if (rng.uniform() < missing_rate) {
        inst.slots.push_back(kMissing);
      } else {
        inst.slots.push_back(static_cast<ValueId>(rng.index(d.features[x].values.size())));
      }
    }
    d.instances.push_back(std::move(inst));
  }
  return d;
}

}  // namespace valsel::testing
