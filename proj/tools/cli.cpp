#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "valsel/baselines.hpp"
#include "valsel/data.hpp"
#include "valsel/discretize.hpp"
#include "valsel/error.hpp"
#include "valsel/evaluation.hpp"
#include "valsel/learner.hpp"
#include "valsel/metrics.hpp"
#include "valsel/selection.hpp"

namespace valsel::cli {
namespace {

namespace fs = std::filesystem;

struct InputArgs {
  std::string path;
  std::string format = "auto";
  int class_index = -1;  // -1: last column
  std::string missing = "?";
  bool no_header = false;
  char delimiter = ',';

  void add_to(CLI::App& app, bool required = true) {
    auto* opt = app.add_option("-i,--input", path, "dataset file (.csv or .arff)");
    if (required) opt->required();
    app.add_option("--format", format, "auto, csv or arff")->capture_default_str();
    app.add_option("--class-index", class_index, "0-based class column, -1 for the last")
        ->capture_default_str();
    app.add_option("--missing", missing, "missing-value token")->capture_default_str();
    app.add_flag("--no-header", no_header, "CSV has no header row");
    app.add_option("--delimiter", delimiter, "CSV field delimiter")->capture_default_str();
  }

  CsvOptions csv() const {
    CsvOptions o;
    if (class_index >= 0) o.class_index = static_cast<std::size_t>(class_index);
    o.missing_token = missing;
    o.header = !no_header;
    o.delimiter = delimiter;
    return o;
  }

  FileFormat file_format() const {
    if (format == "csv") return FileFormat::csv;
    if (format == "arff") return FileFormat::arff;
    if (format != "auto") throw ConfigError("unknown format '" + format + "'");
    return format_from_path(path);
  }

  Dataset load() const { return load_dataset(path, file_format(), csv()); }
};

struct LearnerArgs {
  std::string kind = "tree";
  int min_leaf = TreeOptions{}.min_leaf;
  double cf = TreeOptions{}.cf;
  double prune_fraction = RuleOptions{}.prune_fraction;

  void add_to(CLI::App& app) {
    app.add_option("--learner", kind, "tree, rules or majority")->capture_default_str();
    app.add_option("--min-leaf", min_leaf, "tree: minimum instances per branch")
        ->capture_default_str();
    app.add_option("--cf", cf, "tree: pruning confidence, 1 disables pruning")
        ->capture_default_str();
    app.add_option("--prune-fraction", prune_fraction, "rules: share of data held out for pruning")
        ->capture_default_str();
  }

  LearnerSpec spec(std::uint64_t seed) const {
    LearnerSpec s;
    s.kind = parse_learner_kind(kind);
    s.tree.min_leaf = min_leaf;
    s.tree.cf = cf;
    s.rules.prune_fraction = prune_fraction;
    s.rules.seed = seed;
    s.validate();
    return s;
  }
};

// Relative output paths land under VALSEL_OUTPUT_DIR when it is set.
fs::path output_path(const std::string& path) {
  fs::path p{path};
  if (const char* dir = std::getenv("VALSEL_OUTPUT_DIR"); dir && *dir && p.is_relative()) {
    p = fs::path{dir} / p;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

// "0.5" or "a..b" stepped by step, endpoints included.
std::vector<double> parse_epsilons(const std::string& text, double step) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("bad epsilon '" + text + "'");
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {number(text)};
  const double lo = number(text.substr(0, dots));
  const double hi = number(text.substr(dots + 2));
  if (!(step > 0.0)) throw ConfigError("epsilon step must be positive");
  if (hi < lo) throw ConfigError("empty epsilon range '" + text + "'");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    // Rounded so that 0.1 + 2 * 0.1 prints and compares as 0.3.
    const double v = std::round((lo + k * step) * 1e9) / 1e9;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

Dataset discretized(const Dataset& d, const std::string& method, int bins) {
  const auto m = parse_discretization_method(method);
  return apply_discretization(fit_discretization(d, m, bins), d);
}

void add_discretization(CLI::App& app, std::string& method, int& bins) {
  app.add_option("--discretization", method, "none, binning, frequency or mdl")
      ->capture_default_str();
  app.add_option("--bins", bins, "bins for binning and frequency")->capture_default_str();
}

// ---- discretize ------------------------------------------------------------

struct DiscretizeCmd {
  InputArgs input;
  std::string method = "frequency";
  int bins = kDefaultBins;
  std::string output;
  std::string spec_out;
  std::string apply_spec;

  void add_to(CLI::App& app) {
    input.add_to(app);
    app.add_option("--method", method, "binning, frequency or mdl")->capture_default_str();
    app.add_option("--bins", bins, "bins for binning and frequency")->capture_default_str();
    app.add_option("-o,--output", output, "discretized dataset")->required();
    app.add_option("--spec-out", spec_out, "cut-point spec (default: <output>.spec)");
    app.add_option("--apply-spec", apply_spec, "reuse an existing spec instead of fitting");
  }

  int run(std::ostream& out) const {
    const Dataset d = input.load();
    const DiscretizationSpec spec = apply_spec.empty()
                                        ? fit_discretization(d, parse_discretization_method(method), bins)
                                        : load_spec(apply_spec);
    const Dataset result = apply_discretization(spec, d);
    const auto data_path = output_path(output);
    save_dataset(result, data_path, format_from_path(data_path), input.csv());
    const auto spec_path = output_path(spec_out.empty() ? output + ".spec" : spec_out);
    save_spec(spec, spec_path);
    out << "wrote " << data_path.string() << " and " << spec_path.string() << '\n';
    return kOk;
  }
};

// ---- filter ----------------------------------------------------------------

struct FilterCmd {
  InputArgs input;
  std::string discretization = "frequency";
  int bins = kDefaultBins;
  std::string method = "pvs_plus";
  std::string metric = "entropy";
  double epsilon = VSConfig{}.epsilon;
  std::uint64_t seed = 1;
  double fraction = BaselineConfig{}.reservoir_fraction;
  double rate = BaselineConfig{}.random_value_rate;
  std::vector<std::string> drop;
  int folds = BaselineConfig{}.misclassified_folds;
  LearnerArgs learner;
  std::string output;
  std::string mask;

  void add_to(CLI::App& app) {
    input.add_to(app);
    add_discretization(app, discretization, bins);
    app.add_option("--method", method,
                   "none, pvs, pvs_plus, reservoir, misclassified, drop_columns, random_value")
        ->capture_default_str();
    app.add_option("--iota,--metric", metric, "entropy or infogain")->capture_default_str();
    app.add_option("--epsilon", epsilon, "amplifier in (0, 1]")->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--fraction", fraction, "reservoir: share of instances kept")
        ->capture_default_str();
    app.add_option("--rate", rate, "random_value: removal rate")->capture_default_str();
    app.add_option("--drop", drop, "drop_columns: feature names");
    app.add_option("--folds", folds, "misclassified: cross-validation folds")->capture_default_str();
    learner.add_to(app);
    app.add_option("-o,--output", output, "filtered dataset")->required();
    app.add_option("--mask", mask, "value/slot audit mask (default: <output>.mask.tsv)");
  }

  int run(std::ostream& out) const {
    const Method m = parse_method(method);
    const InfoMetric iota = parse_info_metric(metric);
    const Dataset d = discretized(input.load(), discretization, bins);
    const auto data_path = output_path(output);
    const auto format = format_from_path(data_path);

    if (m == Method::pvs || m == Method::pvs_plus) {
      VSConfig cfg;
      cfg.mode = m == Method::pvs ? SelectionMode::pvs : SelectionMode::pvs_plus;
      cfg.metric = iota;
      cfg.epsilon = epsilon;
      cfg.seed = seed;
      cfg.validate();
      const FilterOutcome outcome = select_values(d, cfg);
      save_dataset(outcome.filtered, data_path, format, input.csv());
      const auto mask_path = output_path(mask.empty() ? output + ".mask.tsv" : mask);
      auto mask_out = open_output(mask_path);
      write_mask(mask_out, outcome, d);
      out << "kept " << outcome.filtered.num_instances() << " of " << d.num_instances()
          << " instances; " << outcome.removed_features.size() << " features emptied\n";
      return kOk;
    }

    BaselineConfig base;
    base.reservoir_fraction = fraction;
    base.random_value_rate = rate;
    base.drop_columns = drop;
    base.misclassified_folds = folds;
    base.validate();
    Dataset result;
    switch (m) {
      case Method::none: result = d; break;
      case Method::reservoir: result = reservoir_select(d, fraction, seed); break;
      case Method::misclassified:
        result = misclassified_filter(d, learner.spec(seed), folds, seed);
        break;
      case Method::drop_columns: result = drop_columns(d, drop); break;
      case Method::random_value: result = random_value_removal(d, rate, seed); break;
      default: break;
    }
    save_dataset(result, data_path, format, input.csv());
    out << "kept " << result.num_instances() << " of " << d.num_instances() << " instances\n";
    return kOk;
  }
};

// ---- experiment ------------------------------------------------------------

struct ExperimentCmd {
  InputArgs input;
  std::string discretization = "frequency";
  int bins = kDefaultBins;
  std::string method = "pvs_plus";
  std::string metric = "entropy";
  std::string epsilon = "0.5";
  double step = 0.1;
  std::uint64_t seed = 1;
  int repeats = 5;
  int folds = 10;
  bool fold_safe = false;
  double fraction = BaselineConfig{}.reservoir_fraction;
  double rate = BaselineConfig{}.random_value_rate;
  std::vector<std::string> drop;
  int misclassified_folds = BaselineConfig{}.misclassified_folds;
  LearnerArgs learner;
  int jobs = 1;
  bool timings = false;
  std::string output;
  std::string table;
  std::string write_config;

  std::string config_file;

  void add_to(CLI::App& a) {
    input.add_to(a, false);
    add_discretization(a, discretization, bins);
    a.add_option("--method", method,
                 "none, pvs, pvs_plus, reservoir, misclassified, drop_columns, random_value")
        ->capture_default_str();
    a.add_option("--iota,--metric", metric, "entropy or infogain")->capture_default_str();
    a.add_option("--epsilon", epsilon, "amplifier, or a sweep lo..hi")->capture_default_str();
    a.add_option("--step", step, "sweep step")->capture_default_str();
    a.add_option("--seed", seed)->capture_default_str();
    a.add_option("--repeats", repeats)->capture_default_str();
    a.add_option("--folds", folds)->capture_default_str();
    a.add_flag("--fold-safe", fold_safe, "refit discretization and filter inside each fold");
    a.add_option("--fraction", fraction, "reservoir: share of instances kept")->capture_default_str();
    a.add_option("--rate", rate, "random_value: removal rate")->capture_default_str();
    a.add_option("--drop", drop, "drop_columns: feature names");
    a.add_option("--misclassified-folds", misclassified_folds)->capture_default_str();
    learner.add_to(a);
    a.add_option("--jobs", jobs, "repeats evaluated in parallel")->capture_default_str();
    a.add_flag("--timings", timings, "record per-stage wall-clock time in the report");
    a.add_option("-o,--output", output, "JSON report");
    a.add_option("--table", table, "text table (stdout when omitted)");
    a.add_option("--write-config", write_config, "save the effective configuration and exit");
    a.add_option("--config", config_file, "key=value file; command-line flags take precedence");
  }

  // Options absent from the command line take their value from the file.
  void apply_config(CLI::App& a) {
    if (config_file.empty()) return;
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigINI{}.from_file(config_file);
    } catch (const CLI::FileError& e) {
      throw ConfigError(e.what());
    }
    for (const auto& item : items) {
      if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "experiment")) {
        throw ConfigError("unexpected section in " + config_file);
      }
      if (item.name == "config" || item.name == "write-config") {
        throw ConfigError("'" + item.name + "' is not allowed in a config file");
      }
      CLI::Option* opt = nullptr;
      try {
        opt = a.get_option("--" + item.name);
      } catch (const CLI::OptionNotFound&) {
        throw ConfigError("unknown key '" + item.name + "' in " + config_file);
      }
      if (opt->count() > 0) continue;
      opt->add_result(item.inputs);
      try {
        opt->run_callback();
      } catch (const CLI::ParseError& e) {
        throw ConfigError("bad value for '" + item.name + "' in " + config_file + ": " + e.what());
      }
    }
  }

  ExperimentConfig config(double eps) const {
    ExperimentConfig cfg;
    cfg.discretization = parse_discretization_method(discretization);
    cfg.bins = bins;
    cfg.method = parse_method(method);
    cfg.selection.metric = parse_info_metric(metric);
    cfg.selection.epsilon = eps;
    cfg.selection.seed = seed;
    cfg.selection.repeats = repeats;
    cfg.baseline.reservoir_fraction = fraction;
    cfg.baseline.random_value_rate = rate;
    cfg.baseline.drop_columns = drop;
    cfg.baseline.misclassified_folds = misclassified_folds;
    cfg.learner = learner.spec(seed);
    cfg.folds = folds;
    cfg.repeats = repeats;
    cfg.seed = seed;
    cfg.fold_safe = fold_safe;
    cfg.jobs = jobs;
    cfg.record_timings = timings;
    cfg.validate();
    return cfg;
  }

  // Every setting as key=value, readable back through --config.
  void save_config(const fs::path& p) const {
    auto out = open_output(p);
    auto num = [](double v) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, res.ptr);
    };
    auto str = [](const std::string& v) { return '"' + v + '"'; };
    auto flag = [](bool v) { return std::string{v ? "true" : "false"}; };
    out << "input=" << str(input.path) << '\n'
        << "format=" << str(input.format) << '\n'
        << "class-index=" << input.class_index << '\n'
        << "missing=" << str(input.missing) << '\n'
        << "no-header=" << flag(input.no_header) << '\n'
        << "delimiter=" << str(std::string(1, input.delimiter)) << '\n'
        << "discretization=" << str(discretization) << '\n'
        << "bins=" << bins << '\n'
        << "method=" << str(method) << '\n'
        << "iota=" << str(metric) << '\n'
        << "epsilon=" << str(epsilon) << '\n'
        << "step=" << num(step) << '\n'
        << "seed=" << seed << '\n'
        << "repeats=" << repeats << '\n'
        << "folds=" << folds << '\n'
        << "fold-safe=" << flag(fold_safe) << '\n'
        << "fraction=" << num(fraction) << '\n'
        << "rate=" << num(rate) << '\n';
    if (!drop.empty()) {
      out << "drop=[";
      for (std::size_t k = 0; k < drop.size(); ++k) out << (k ? "," : "") << str(drop[k]);
      out << "]\n";
    }
    out << "misclassified-folds=" << misclassified_folds << '\n'
        << "learner=" << str(learner.kind) << '\n'
        << "min-leaf=" << learner.min_leaf << '\n'
        << "cf=" << num(learner.cf) << '\n'
        << "prune-fraction=" << num(learner.prune_fraction) << '\n'
        << "jobs=" << jobs << '\n';
    if (!output.empty()) out << "output=" << str(output) << '\n';
    if (!table.empty()) out << "table=" << str(table) << '\n';
  }

  int run(CLI::App& a, std::ostream& out) {
    apply_config(a);
    if (input.path.empty()) throw ConfigError("--input is required");
    const auto epsilons = parse_epsilons(epsilon, step);
    std::vector<ExperimentConfig> configs;
    for (double e : epsilons) configs.push_back(config(e));
    if (!write_config.empty()) {
      const auto p = output_path(write_config);
      save_config(p);
      out << "wrote " << p.string() << '\n';
      return kOk;
    }

    Dataset d = input.load();
    std::vector<EvalReport> reports;
    for (const auto& cfg : configs) reports.push_back(run_experiment(d, cfg));

    if (!output.empty()) {
      auto json = open_output(output_path(output));
      if (reports.size() == 1) {
        write_report_json(json, reports.front());
      } else {
        write_reports_json(json, reports);
      }
    }
    if (table.empty()) {
      write_report_table(out, reports);
    } else {
      auto t = open_output(output_path(table));
      write_report_table(t, reports);
    }
    return kOk;
  }
};

// ---- stats -----------------------------------------------------------------

struct StatsCmd {
  InputArgs input;
  std::string discretization = "frequency";
  int bins = kDefaultBins;
  std::string metric = "entropy";
  double epsilon = VSConfig{}.epsilon;
  std::string confusion = "sum";
  std::string output;

  void add_to(CLI::App& app) {
    input.add_to(app);
    add_discretization(app, discretization, bins);
    app.add_option("--iota,--metric", metric, "entropy or infogain")->capture_default_str();
    app.add_option("--epsilon", epsilon, "amplifier for the removal probability column")
        ->capture_default_str();
    app.add_option("--confusion", confusion, "dataset confusion: sum (of value entropies) or class")
        ->capture_default_str();
    app.add_option("-o,--output", output, "TSV table (stdout when omitted)");
  }

  int run(std::ostream& out) const {
    StatsOptions opts;
    if (confusion == "sum") {
      opts.confusion = DatasetConfusion::sum_of_values;
    } else if (confusion == "class") {
      opts.confusion = DatasetConfusion::class_entropy;
    } else {
      throw ConfigError("unknown confusion '" + confusion + "'");
    }
    const InfoMetric iota = parse_info_metric(metric);
    check_epsilon(epsilon);
    const Dataset d = discretized(input.load(), discretization, bins);
    const MetricTable table = compute_stats(d, opts);
    if (output.empty()) {
      write_stats_table(out, table, d, iota, epsilon);
    } else {
      auto f = open_output(output_path(output));
      write_stats_table(f, table, d, iota, epsilon);
    }
    return kOk;
  }
};

// ---- train -----------------------------------------------------------------

struct TrainCmd {
  InputArgs input;
  std::string discretization = "frequency";
  int bins = kDefaultBins;
  LearnerArgs learner;
  std::uint64_t seed = 1;
  std::string output;

  void add_to(CLI::App& app) {
    input.add_to(app);
    add_discretization(app, discretization, bins);
    learner.add_to(app);
    app.add_option("--seed", seed, "rules: grow/prune split seed")->capture_default_str();
    app.add_option("-o,--output", output, "model text (stdout when omitted)");
  }

  int run(std::ostream& out) const {
    const LearnerSpec spec = learner.spec(seed);
    const Dataset d = discretized(input.load(), discretization, bins);
    const Model model = train(spec, d);
    std::size_t correct = 0;
    for (const auto& inst : d.instances) {
      if (predict(model, inst) == inst.label) ++correct;
    }
    if (output.empty()) {
      write_model(out, model, d);
    } else {
      auto f = open_output(output_path(output));
      write_model(f, model, d);
    }
    out << "model size " << model_size(model) << ", training accuracy " << correct << '/'
        << d.num_instances() << '\n';
    return kOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic value selection toolkit", "valsel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "valsel 1.0");

  DiscretizeCmd discretize;
  FilterCmd filter;
  ExperimentCmd experiment;
  StatsCmd stats;
  TrainCmd train_cmd;
  auto* c_discretize = app.add_subcommand("discretize", "discretize numeric features");
  auto* c_filter = app.add_subcommand("filter", "apply value selection or a baseline filter");
  auto* c_experiment = app.add_subcommand("experiment", "cross-validated comparison report");
  auto* c_stats = app.add_subcommand("stats", "per-value entropy and information gain");
  auto* c_train = app.add_subcommand("train", "train and print a model");
  discretize.add_to(*c_discretize);
  filter.add_to(*c_filter);
  experiment.add_to(*c_experiment);
  stats.add_to(*c_stats);
  train_cmd.add_to(*c_train);

  const auto previous = set_warning_handler([&err](std::string_view msg) {
    err << "warning: " << msg << '\n';
  });
  int code = kOk;
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      code = app.exit(e, out, err);
      set_warning_handler(previous);
      return code == 0 ? kOk : kConfigError;
    }
    if (c_discretize->parsed()) code = discretize.run(out);
    if (c_filter->parsed()) code = filter.run(out);
    if (c_experiment->parsed()) code = experiment.run(*c_experiment, out);
    if (c_stats->parsed()) code = stats.run(out);
    if (c_train->parsed()) code = train_cmd.run(out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    code = kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    code = kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kDataError;
  }
  set_warning_handler(previous);
  return code;
}

}  // namespace valsel::cli
