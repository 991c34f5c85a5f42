#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valsel/baselines.hpp"
#include "valsel/data.hpp"
#include "valsel/discretize.hpp"
#include "valsel/learner.hpp"
#include "valsel/selection.hpp"

namespace valsel {

// ---- cross-validation ------------------------------------------------------

// Fold index per instance: seeded shuffle, then instances grouped by label
// (label order) and dealt round-robin with one running counter.
std::vector<int> stratified_folds(const Dataset& d, int folds, std::uint64_t seed);

struct FoldRecord {
  int fold = 0;
  double accuracy = 0.0;
  std::size_t model_size = 0;
};

struct CvResult {
  std::vector<FoldRecord> folds;
  double mean_accuracy = 0.0;
  double mean_model_size = 0.0;
  std::size_t empty_train_folds = 0;  // folds scored with the majority fallback
};

// Optional per-fold preparation of (train, test) before the learner runs.
// A fold whose prepared training set is empty predicts the majority label of
// its unprepared training rows.
using FoldPrep = std::function<std::pair<Dataset, Dataset>(Dataset train, Dataset test, int fold)>;

CvResult cross_validate(const Dataset& d, const LearnerSpec& learner, int folds,
                        std::uint64_t seed, const FoldPrep& prep = {});

// Out-of-fold predicted label for every instance.
std::vector<LabelId> out_of_fold_predictions(const Dataset& d, const LearnerSpec& learner,
                                             int folds, std::uint64_t seed);

// ---- reduction metrics -----------------------------------------------------

// Model size reduction (original - processed) / original.
double mr(double size_original, double size_processed);
// Accuracy ratio processed / original; original must be positive.
double ar(double acc_original, double acc_processed);
// 2 AR MR / (AR + MR); nullopt ("undefined, no reduction") unless both are positive.
std::optional<double> harmonic(double ar_value, double mr_value);

// ---- experiments -----------------------------------------------------------

enum class Method { none, pvs, pvs_plus, reservoir, misclassified, drop_columns, random_value };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct ExperimentConfig {
  DiscretizationMethod discretization = DiscretizationMethod::frequency;
  int bins = kDefaultBins;
  Method method = Method::pvs_plus;
  VSConfig selection;
  BaselineConfig baseline;
  LearnerSpec learner;
  int folds = 10;
  int repeats = 5;
  std::uint64_t seed = 1;
  bool fold_safe = false;
  int jobs = 1;
  bool record_timings = false;

  // Throws ConfigError on any inconsistency; called before any compute.
  void validate() const;
};

struct RunRecord {
  std::uint64_t seed = 0;
  int fold = 0;
  double accuracy = 0.0;
  std::size_t model_size = 0;
};

struct StageTimings {
  double discretize_s = 0.0;
  double filter_s = 0.0;
  double evaluate_s = 0.0;
};

struct EvalReport {
  std::string dataset;
  ExperimentConfig config;
  std::vector<RunRecord> original_runs;
  std::vector<RunRecord> processed_runs;
  double acc_original = 0.0;
  double acc_processed = 0.0;
  double size_original = 0.0;
  double size_processed = 0.0;
  double mr = 0.0;
  double ar = 0.0;
  std::optional<double> harmonic;
  double mean_kept_instances = 0.0;  // instances surviving preprocessing
  double mean_missing_fraction = 0.0;
  std::size_t empty_train_folds = 0;
  std::optional<StageTimings> timings;
};

// Discretize, preprocess once per repeat (seeds seed..seed+repeats-1), then
// cross-validate both arms on identical folds. The processed arm trains on the
// preprocessed survivors of the training folds and is scored on the unfiltered
// held-out rows. With fold_safe, discretization and preprocessing are refitted
// on each training fold instead of the whole dataset.
EvalReport run_experiment(const Dataset& raw, const ExperimentConfig& cfg);

// Mean accuracy / size over records; used for aggregation and for checking it.
double mean_accuracy(const std::vector<RunRecord>& runs);
double mean_model_size(const std::vector<RunRecord>& runs);

void write_report_json(std::ostream& out, const EvalReport& report);
// JSON array, one object per report (epsilon sweeps).
void write_reports_json(std::ostream& out, const std::vector<EvalReport>& reports);
// Aligned text table: dataset, method, metric, epsilon, Acc_o, Acc_p, |M_o|, |M_p|, AR, MR, X.
void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace valsel
