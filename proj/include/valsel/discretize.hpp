#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valsel/data.hpp"

namespace valsel {

enum class DiscretizationMethod { none, binning, frequency, mdl };

std::string_view to_string(DiscretizationMethod m);
DiscretizationMethod parse_discretization_method(std::string_view text);

inline constexpr int kDefaultBins = 10;

struct FeatureCuts {
  std::string name;
  std::vector<double> cuts;  // strictly increasing

  bool operator==(const FeatureCuts&) const = default;
};

struct DiscretizationSpec {
  DiscretizationMethod method = DiscretizationMethod::frequency;
  int bins = kDefaultBins;
  std::size_t num_features = 0;       // schema width the spec was fitted on
  std::vector<FeatureCuts> features;  // numeric features only, in schema order

  const FeatureCuts* find(std::string_view name) const;

  bool operator==(const DiscretizationSpec&) const = default;
};

// Column of a feature as numbers. nullopt when any token is not a finite number.
std::optional<std::vector<std::optional<double>>> numeric_column(const Dataset& d,
                                                                 std::size_t feature);

// True for ARFF numeric features and for categorical features whose every
// token parses as a finite number. Discretized features never qualify.
bool is_numeric_feature(const Feature& f);

// Single-column fitters. feature_name is used only in error messages.
std::vector<double> fit_equal_width(std::span<const std::optional<double>> column, int bins,
                                    std::string_view feature_name = {});
std::vector<double> fit_equal_frequency(std::span<const std::optional<double>> column,
                                        int bins, std::string_view feature_name = {});
// Fayyad-Irani recursive entropy minimization with the MDLPC stopping rule.
std::vector<double> fit_mdl(std::span<const std::optional<double>> column,
                            std::span<const LabelId> labels, std::string_view feature_name = {});

DiscretizationSpec fit_discretization(const Dataset& d, DiscretizationMethod method,
                                      int bins = kDefaultBins);

// Replaces every feature named in the spec by its interval-labelled version.
// Other features pass through untouched.
Dataset apply_discretization(const DiscretizationSpec& spec, const Dataset& d);

// "(-inf-c1]", "(c1-c2]", ..., "(ck-inf)"; "(-inf-inf)" for zero cuts.
std::vector<std::string> interval_labels(std::span<const double> cuts);
// Index of the interval holding value: the number of cuts strictly below it.
std::size_t interval_index(std::span<const double> cuts, double value);

void write_spec(std::ostream& out, const DiscretizationSpec& spec);
DiscretizationSpec read_spec(std::istream& in);
void save_spec(const DiscretizationSpec& spec, const std::filesystem::path& path);
DiscretizationSpec load_spec(const std::filesystem::path& path);

}  // namespace valsel
