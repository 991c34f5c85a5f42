#include "valsel/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "valsel/error.hpp"
#include "valsel/random.hpp"

namespace valsel {

std::vector<int> stratified_folds(const Dataset& d, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  const std::size_t n = d.num_instances();
  if (n < static_cast<std::size_t>(folds)) {
    throw DataError(std::to_string(folds) + "-fold cross-validation on " + std::to_string(n) +
                    " instances");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  std::vector<std::size_t> per_label(d.num_labels(), 0);
  for (const auto& inst : d.instances) per_label[static_cast<std::size_t>(inst.label)] += 1;
  for (std::size_t l = 0; l < per_label.size(); ++l) {
    if (per_label[l] > 0 && per_label[l] < static_cast<std::size_t>(folds)) {
      warn("label '" + d.labels[l] + "' has " + std::to_string(per_label[l]) +
           " instances, fewer than " + std::to_string(folds) + " folds");
    }
  }

  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.instances[a].label < d.instances[b].label;
  });
  std::vector<int> fold_of(n, 0);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return fold_of;
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold_rows(
    const std::vector<int>& fold_of, int fold) {
  std::vector<std::size_t> train, test;
  for (std::size_t y = 0; y < fold_of.size(); ++y) {
    (fold_of[y] == fold ? test : train).push_back(y);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace

CvResult cross_validate(const Dataset& d, const LearnerSpec& learner, int folds,
                        std::uint64_t seed, const FoldPrep& prep) {
  learner.validate();
  const auto fold_of = stratified_folds(d, folds, seed);
  CvResult result;
  for (int f = 0; f < folds; ++f) {
    auto [train_rows, test_rows] = fold_rows(fold_of, f);
    Dataset train_set = d.subset(train_rows);
    Dataset test_set = d.subset(test_rows);
    // A preparation step may leave no training rows; the fold then falls back
    // to the majority label of its unprepared training rows.
    const LabelId fallback = train_majority(train_set).label;
    if (prep) std::tie(train_set, test_set) = prep(std::move(train_set), std::move(test_set), f);
    Model model = MajorityModel{fallback};
    if (train_set.instances.empty()) {
      ++result.empty_train_folds;
    } else {
      model = train(learner, train_set);
    }
    std::size_t correct = 0;
    for (const auto& inst : test_set.instances) {
      if (predict(model, inst) == inst.label) ++correct;
    }
    FoldRecord rec;
    rec.fold = f;
    rec.accuracy = test_set.instances.empty()
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(test_set.num_instances());
    rec.model_size = model_size(model);
    result.folds.push_back(rec);
  }
  for (const auto& r : result.folds) {
    result.mean_accuracy += r.accuracy;
    result.mean_model_size += static_cast<double>(r.model_size);
  }
  result.mean_accuracy /= folds;
  result.mean_model_size /= folds;
  return result;
}

std::vector<LabelId> out_of_fold_predictions(const Dataset& d, const LearnerSpec& learner,
                                             int folds, std::uint64_t seed) {
  learner.validate();
  const auto fold_of = stratified_folds(d, folds, seed);
  std::vector<LabelId> predicted(d.num_instances(), 0);
  for (int f = 0; f < folds; ++f) {
    auto [train_rows, test_rows] = fold_rows(fold_of, f);
    const Model model = train(learner, d.subset(train_rows));
    for (auto y : test_rows) predicted[y] = predict(model, d.instances[y]);
  }
  return predicted;
}

double mr(double size_original, double size_processed) {
  if (!(size_original > 0.0)) throw DataError("model size reduction needs a positive original size");
  return (size_original - size_processed) / size_original;
}

double ar(double acc_original, double acc_processed) {
  if (!(acc_original > 0.0)) throw DataError("accuracy ratio undefined for zero original accuracy");
  return acc_processed / acc_original;
}

std::optional<double> harmonic(double ar_value, double mr_value) {
  if (!(ar_value > 0.0) || !(mr_value > 0.0)) return std::nullopt;
  // Exact when the two are equal.
  return ar_value * (2.0 * mr_value / (ar_value + mr_value));
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::pvs: return "pvs";
    case Method::pvs_plus: return "pvs_plus";
    case Method::reservoir: return "reservoir";
    case Method::misclassified: return "misclassified";
    case Method::drop_columns: return "drop_columns";
    case Method::random_value: return "random_value";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "none") return Method::none;
  if (text == "pvs") return Method::pvs;
  if (text == "pvs_plus" || text == "pvs+" || text == "p+vs") return Method::pvs_plus;
  if (text == "reservoir") return Method::reservoir;
  if (text == "misclassified") return Method::misclassified;
  if (text == "drop_columns") return Method::drop_columns;
  if (text == "random_value") return Method::random_value;
  throw ConfigError("unknown method '" + std::string{text} + "'");
}

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if ((discretization == DiscretizationMethod::binning ||
       discretization == DiscretizationMethod::frequency) &&
      bins < 1) {
    throw ConfigError("bins must be >= 1");
  }
  check_epsilon(selection.epsilon);
  baseline.validate();
  learner.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Training data after the configured preprocessing, plus the input row of
// every surviving instance.
Dataset preprocess(const Dataset& d, const ExperimentConfig& cfg, std::uint64_t seed,
                   std::vector<std::size_t>& rows) {
  rows.clear();
  switch (cfg.method) {
    case Method::pvs:
    case Method::pvs_plus: {
      VSConfig vs = cfg.selection;
      vs.mode = cfg.method == Method::pvs ? SelectionMode::pvs : SelectionMode::pvs_plus;
      vs.seed = seed;
      vs.repeats = cfg.repeats;
      auto outcome = select_values(d, vs);
      std::vector<bool> removed(d.num_instances(), false);
      for (auto y : outcome.removed_instances) removed[y] = true;
      for (std::size_t y = 0; y < d.num_instances(); ++y) {
        if (!removed[y]) rows.push_back(y);
      }
      return std::move(outcome.filtered);
    }
    case Method::reservoir:
      return reservoir_select(d, cfg.baseline.reservoir_fraction, seed, &rows);
    case Method::misclassified:
      return misclassified_filter(d, cfg.learner, cfg.baseline.misclassified_folds, seed, &rows);
    case Method::random_value:
      return random_value_removal(d, cfg.baseline.random_value_rate, seed, &rows);
    case Method::none:
    case Method::drop_columns:
      break;
  }
  rows.resize(d.num_instances());
  std::iota(rows.begin(), rows.end(), 0);
  return cfg.method == Method::drop_columns ? drop_columns(d, cfg.baseline.drop_columns) : d;
}

// Held-out rows see the same schema as the training rows but are never filtered.
Dataset prepare_test(Dataset test_set, const ExperimentConfig& cfg) {
  if (cfg.method == Method::drop_columns) return drop_columns(test_set, cfg.baseline.drop_columns);
  return test_set;
}

double missing_fraction(const Dataset& d) {
  const double cells = static_cast<double>(d.num_instances() * d.num_features());
  return cells > 0 ? static_cast<double>(d.count_missing()) / cells : 0.0;
}

struct RepeatResult {
  CvResult original;
  CvResult processed;
  double kept = 0.0;
  double missing = 0.0;
  StageTimings timings;
};

RepeatResult run_repeat(const Dataset& raw, const Dataset& base, const ExperimentConfig& cfg,
                        std::uint64_t seed) {
  RepeatResult out;
  if (!cfg.fold_safe) {
    // Preprocessing sees the whole discretized dataset once; each fold trains
    // on the survivors outside it and is scored on its own unfiltered rows.
    auto t0 = Clock::now();
    out.original = cross_validate(base, cfg.learner, cfg.folds, seed);
    out.timings.evaluate_s += seconds_since(t0);

    t0 = Clock::now();
    std::vector<std::size_t> rows;
    const Dataset processed = preprocess(base, cfg, seed, rows);
    out.timings.filter_s += seconds_since(t0);
    out.kept = static_cast<double>(processed.num_instances());
    out.missing = missing_fraction(processed);

    t0 = Clock::now();
    const auto fold_of = stratified_folds(base, cfg.folds, seed);
    const FoldPrep prep = [&](Dataset, Dataset test_set, int fold) {
      std::vector<std::size_t> keep;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (fold_of[rows[k]] != fold) keep.push_back(k);
      }
      return std::make_pair(processed.subset(keep), prepare_test(std::move(test_set), cfg));
    };
    out.processed = cross_validate(base, cfg.learner, cfg.folds, seed, prep);
    out.timings.evaluate_s += seconds_since(t0);
    return out;
  }

  // Fold-safe: discretization and preprocessing only ever see training rows.
  auto discretize_fold = [&](Dataset train_set, Dataset test_set) {
    const auto t0 = Clock::now();
    const auto spec = fit_discretization(train_set, cfg.discretization, cfg.bins);
    auto result = std::make_pair(apply_discretization(spec, train_set),
                                 apply_discretization(spec, test_set));
    out.timings.discretize_s += seconds_since(t0);
    return result;
  };
  const FoldPrep original_prep = [&](Dataset train_set, Dataset test_set, int) {
    return discretize_fold(std::move(train_set), std::move(test_set));
  };
  double kept = 0.0, missing = 0.0;
  const FoldPrep processed_prep = [&](Dataset train_set, Dataset test_set, int) {
    auto [train_d, test_d] = discretize_fold(std::move(train_set), std::move(test_set));
    const auto t0 = Clock::now();
    std::vector<std::size_t> rows;
    Dataset filtered = preprocess(train_d, cfg, seed, rows);
    out.timings.filter_s += seconds_since(t0);
    kept += static_cast<double>(filtered.num_instances());
    missing += missing_fraction(filtered);
    return std::make_pair(std::move(filtered), prepare_test(std::move(test_d), cfg));
  };
  auto t0 = Clock::now();
  out.original = cross_validate(raw, cfg.learner, cfg.folds, seed, original_prep);
  out.processed = cross_validate(raw, cfg.learner, cfg.folds, seed, processed_prep);
  out.timings.evaluate_s += seconds_since(t0);
  out.kept = kept / cfg.folds;
  out.missing = missing / cfg.folds;
  return out;
}

}  // namespace

double mean_accuracy(const std::vector<RunRecord>& runs) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.accuracy;
  return s / static_cast<double>(runs.size());
}

double mean_model_size(const std::vector<RunRecord>& runs) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += static_cast<double>(r.model_size);
  return s / static_cast<double>(runs.size());
}

EvalReport run_experiment(const Dataset& raw, const ExperimentConfig& cfg) {
  cfg.validate();
  if (raw.instances.empty()) throw DataError("dataset '" + raw.name + "' is empty");
  if (cfg.method == Method::drop_columns) drop_columns(raw.empty_like(), cfg.baseline.drop_columns);

  EvalReport report;
  report.dataset = raw.name;
  report.config = cfg;
  StageTimings timings;

  Dataset base;
  if (!cfg.fold_safe) {
    const auto t0 = Clock::now();
    const auto spec = fit_discretization(raw, cfg.discretization, cfg.bins);
    base = apply_discretization(spec, raw);
    timings.discretize_s = seconds_since(t0);
  }

  std::vector<RepeatResult> results(static_cast<std::size_t>(cfg.repeats));
  std::vector<std::exception_ptr> errors(results.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < results.size(); r = next++) {
      try {
        results[r] = run_repeat(raw, base, cfg, cfg.seed + r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), results.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t r = 0; r < results.size(); ++r) {
    const std::uint64_t seed = cfg.seed + r;
    for (const auto& f : results[r].original.folds) {
      report.original_runs.push_back({seed, f.fold, f.accuracy, f.model_size});
    }
    for (const auto& f : results[r].processed.folds) {
      report.processed_runs.push_back({seed, f.fold, f.accuracy, f.model_size});
    }
    report.empty_train_folds += results[r].processed.empty_train_folds;
    report.mean_kept_instances += results[r].kept;
    report.mean_missing_fraction += results[r].missing;
    timings.discretize_s += results[r].timings.discretize_s;
    timings.filter_s += results[r].timings.filter_s;
    timings.evaluate_s += results[r].timings.evaluate_s;
  }
  report.mean_kept_instances /= static_cast<double>(results.size());
  report.mean_missing_fraction /= static_cast<double>(results.size());

  if (report.empty_train_folds > 0) {
    warn(std::to_string(report.empty_train_folds) +
         " preprocessed training folds were empty; they used a majority-label leaf");
  }

  report.acc_original = mean_accuracy(report.original_runs);
  report.acc_processed = mean_accuracy(report.processed_runs);
  report.size_original = mean_model_size(report.original_runs);
  report.size_processed = mean_model_size(report.processed_runs);
  report.mr = mr(report.size_original, report.size_processed);
  report.ar = ar(report.acc_original, report.acc_processed);
  report.harmonic = harmonic(report.ar, report.mr);
  if (cfg.record_timings) report.timings = timings;
  return report;
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  const auto& cfg = report.config;
  ordered_json j;
  j["dataset"] = report.dataset;
  j["config"] = {
      {"discretization", to_string(cfg.discretization)},
      {"bins", cfg.bins},
      {"method", to_string(cfg.method)},
      {"metric", to_string(cfg.selection.metric)},
      {"epsilon", cfg.selection.epsilon},
      {"reservoir_fraction", cfg.baseline.reservoir_fraction},
      {"random_value_rate", cfg.baseline.random_value_rate},
      {"drop_columns", cfg.baseline.drop_columns},
      {"learner", to_string(cfg.learner.kind)},
      {"min_leaf", cfg.learner.tree.min_leaf},
      {"cf", cfg.learner.tree.cf},
      {"prune_fraction", cfg.learner.rules.prune_fraction},
      {"folds", cfg.folds},
      {"repeats", cfg.repeats},
      {"seed", cfg.seed},
      {"fold_safe", cfg.fold_safe},
  };
  ordered_json agg;
  agg["acc_original"] = report.acc_original;
  agg["acc_processed"] = report.acc_processed;
  agg["size_original"] = report.size_original;
  agg["size_processed"] = report.size_processed;
  agg["mr"] = report.mr;
  agg["ar"] = report.ar;
  if (report.harmonic) {
    agg["harmonic"] = *report.harmonic;
  } else {
    agg["harmonic"] = "undefined (no reduction)";
  }
  agg["mean_kept_instances"] = report.mean_kept_instances;
  agg["mean_missing_fraction"] = report.mean_missing_fraction;
  agg["empty_train_folds"] = report.empty_train_folds;
  j["aggregates"] = agg;
  auto runs = [](const std::vector<RunRecord>& rs) {
    ordered_json a = ordered_json::array();
    for (const auto& r : rs) {
      a.push_back({{"seed", r.seed}, {"fold", r.fold}, {"accuracy", r.accuracy},
                   {"model_size", r.model_size}});
    }
    return a;
  };
  j["runs"] = {{"original", runs(report.original_runs)},
               {"processed", runs(report.processed_runs)}};
  if (report.timings) {
    j["timings_s"] = {{"discretize", report.timings->discretize_s},
                      {"filter", report.timings->filter_s},
                      {"evaluate", report.timings->evaluate_s}};
  }
  return j;
}

}  // namespace

void write_report_json(std::ostream& out, const EvalReport& report) {
  out << report_json(report).dump(2) << '\n';
}

void write_reports_json(std::ostream& out, const std::vector<EvalReport>& reports) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& r : reports) a.push_back(report_json(r));
  out << a.dump(2) << '\n';
}

void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-14s %-9s %7s %8s %8s %9s %9s %7s %7s %7s\n",
                "dataset", "method", "metric", "epsilon", "Acc_o", "Acc_p", "|M_o|", "|M_p|",
                "AR", "MR", "X");
  out << line;
  for (const auto& r : reports) {
    const auto& cfg = r.config;
    char x[16];
    if (r.harmonic) {
      std::snprintf(x, sizeof x, "%7.4f", *r.harmonic);
    } else {
      std::snprintf(x, sizeof x, "%7s", "undef");
    }
    std::snprintf(line, sizeof line, "%-16s %-14s %-9s %7.2f %8.4f %8.4f %9.2f %9.2f %7.4f %7.4f %s\n",
                  r.dataset.substr(0, 16).c_str(), std::string{to_string(cfg.method)}.c_str(),
                  std::string{to_string(cfg.selection.metric)}.c_str(), cfg.selection.epsilon,
                  r.acc_original, r.acc_processed, r.size_original, r.size_processed, r.ar, r.mr,
                  x);
    out << line;
  }
}

}  // namespace valsel
