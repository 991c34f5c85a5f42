// Acceptance checks: one PASS/FAIL/SKIP line per criterion; exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "cli.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"
#include "valsel/baselines.hpp"
#include "valsel/error.hpp"
#include "valsel/evaluation.hpp"
#include "valsel/metrics.hpp"
#include "valsel/selection.hpp"
#include "valsel/tree.hpp"

using namespace valsel;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

VSConfig vs(SelectionMode mode, double eps, std::uint64_t seed) {
  VSConfig c;
  c.mode = mode;
  c.epsilon = eps;
  c.seed = seed;
  return c;
}

// 1. Worked-example entropies.
Outcome entropy_oracle() {
  const Dataset d = testing::worked_example();
  const MetricTable t = compute_stats(d);
  const double expected[] = {0.0, 0.9183, 0.0};
  const char* tokens[] = {"2", "1", "-1"};
  double worst = 0.0;
  std::string got;
  for (int k = 0; k < 3; ++k) {
    const double h = t.find(2, *d.features[2].find(tokens[k]))->entropy;
    worst = std::max(worst, std::abs(h - expected[k]));
    got += fmt("%sH(v=%s)=%.4f", k ? " " : "", tokens[k], h);
  }
  return verdict(worst <= 1e-4, got + fmt(", max error %.1e", worst));
}

// 2. Expected confusion on random data, against a from-scratch recount.
Outcome confusion_proposition() {
  Rng rng(2024);
  double worst = 0.0;
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    const std::size_t nf = 1 + rng.index(10);
    const std::size_t nl = 1 + rng.index(5);
    const Dataset d = testing::random_dataset(rng, n, nf, nl, 1 + rng.index(6), 0.1 * rng.uniform());
    bool observed = false;
    for (const auto& inst : d.instances) {
      observed |= std::any_of(inst.slots.begin(), inst.slots.end(), [](ValueId z) { return z != kMissing; });
    }
    if (!observed) continue;

    double before = 0.0, after = 0.0, wh2 = 0.0;
    for (std::size_t x = 0; x < nf; ++x) {
      double seen = 0.0;
      std::vector<std::vector<double>> counts(d.features[x].values.size(), std::vector<double>(nl, 0.0));
      for (const auto& inst : d.instances) {
        if (inst.slots[x] == kMissing) continue;
        counts[static_cast<std::size_t>(inst.slots[x])][static_cast<std::size_t>(inst.label)] += 1;
        seen += 1;
      }
      for (const auto& c : counts) {
        double support = 0.0;
        for (double v : c) support += v;
        if (support == 0.0) continue;
        double h = 0.0;
        for (double v : c) {
          if (v > 0 && nl > 1) h -= v / support * std::log(v / support) / std::log(static_cast<double>(nl));
        }
        const double w = support / seen;
        const double w_after = h >= 1.0 ? 0.0 : w * (1.0 - h);
        before += w * h;
        after += w_after * h;
        wh2 += w * h * h;
      }
    }
    const MetricTable t = compute_stats(d);
    const ConfusionReport r = confusion_report(t, expected_after_weights(t));
    if (r.after > r.before + 1e-12) ++violations;
    worst = std::max({worst, std::abs((r.before - r.after) - wh2), std::abs(r.before - before),
                      std::abs(r.after - after)});
  }
  return verdict(violations == 0 && worst <= 1e-9,
                 fmt("100 datasets, %d increases, max |diff - sum wH^2| %.1e", violations, worst));
}

// A single feature whose values carry exactly the requested entropies, via
// two weighted instances per value.
Dataset weighted_entropy_fixture(const std::vector<double>& entropies) {
  Dataset d;
  d.name = "calibration";
  d.labels = {"P", "Q"};
  Feature f;
  f.name = "f1";
  for (std::size_t k = 0; k < entropies.size(); ++k) f.values.push_back("v" + std::to_string(k));
  d.features.push_back(f);
  for (std::size_t k = 0; k < entropies.size(); ++k) {
    const double p = testing::purity_for_entropy(entropies[k]);
    d.instances.push_back({{static_cast<ValueId>(k)}, 0, p});
    d.instances.push_back({{static_cast<ValueId>(k)}, 1, 1.0 - p});
  }
  return d;
}

// 3. PVS and P+VS removal frequencies against min(1, H / eps).
Outcome removal_calibration() {
  const std::vector<double> hs = {0.2, 0.5, 0.9};
  const double eps = 0.5;
  const Dataset d = weighted_entropy_fixture(hs);
  const MetricTable stats = compute_stats(d);
  const int trials = 20000;
  std::vector<double> pvs_hits(3, 0.0), plus_hits(3, 0.0), plus_total(3, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto a = pvs(d, vs(SelectionMode::pvs, eps, static_cast<std::uint64_t>(t) + 1), stats);
    for (std::size_t k = 0; k < 3; ++k) pvs_hits[k] += a.value_mask[0][k] ? 1 : 0;
    const auto b = pvs_plus(d, vs(SelectionMode::pvs_plus, eps, static_cast<std::uint64_t>(t) + 1), stats);
    for (std::size_t y = 0; y < d.num_instances(); ++y) {
      const auto k = static_cast<std::size_t>(d.instances[y].slots[0]);
      plus_hits[k] += b.slot_mask[y][0] ? 1 : 0;
      plus_total[k] += 1;
    }
  }
  double worst = 0.0;
  std::string got;
  for (std::size_t k = 0; k < 3; ++k) {
    const double h = stats.find(0, static_cast<ValueId>(k))->entropy;
    const double target = std::min(1.0, h / eps);
    const double fp = pvs_hits[k] / trials;
    const double fq = plus_hits[k] / plus_total[k];
    worst = std::max({worst, std::abs(fp - target), std::abs(fq - target)});
    got += fmt("%sH=%.1f target %.3f pvs %.4f p+vs %.4f", k ? "; " : "", hs[k], target, fp, fq);
  }
  return verdict(worst <= 0.015, got);
}

// 4. missRate 3/4 deletes with probability 0.75.
Outcome miss_rate_deletion() {
  const Dataset d = testing::from_csv("f1,f2,f3,f4,class\n?,?,?,a,X\nb,b,b,b,Y\n");
  const MetricTable stats = compute_stats(d);
  const int trials = 20000;
  int deleted = 0;
  for (int t = 0; t < trials; ++t) {
    const auto o = pvs_plus(d, vs(SelectionMode::pvs_plus, 0.5, static_cast<std::uint64_t>(t) + 1), stats);
    deleted += std::count(o.removed_instances.begin(), o.removed_instances.end(), 0u) ? 1 : 0;
  }
  const double f = static_cast<double>(deleted) / trials;
  return verdict(miss_rate(d.instances[0]) == 0.75 && std::abs(f - 0.75) <= 0.015,
                 fmt("missRate %.2f, deleted %.4f of %d trials", miss_rate(d.instances[0]), f, trials));
}

// 5. Case-study arithmetic.
Outcome metric_exactness() {
  const double m = mr(1981, 991);
  const double a = ar(0.883, 0.798);
  bool exact = true;
  for (double x : {0.1, 0.2, 0.3, 0.49975, 0.9037, 1.0 / 3, 0.7, 1.0}) exact &= harmonic(x, x).value() == x;
  return verdict(std::abs(m - 0.49975) <= 1e-4 && std::abs(a - 0.9037) <= 1e-4 && exact,
                 fmt("mr %.5f, ar %.4f, harmonic(x,x)==x %s", m, a, exact ? "yes" : "no"));
}

// 6. Mean MR falls and mean AR rises with epsilon.
Outcome epsilon_sweep() {
  const Dataset d = testing::mixed_entropy_dataset(1000, 6, 10, 1);
  std::vector<double> mrs, ars;
  for (int e = 1; e <= 10; ++e) {
    double m = 0.0, a = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ExperimentConfig cfg;
      cfg.selection.epsilon = e / 10.0;
      cfg.seed = seed;
      cfg.repeats = 1;
      const EvalReport r = run_experiment(d, cfg);
      m += r.mr;
      a += r.ar;
    }
    mrs.push_back(m / 20);
    ars.push_back(a / 20);
  }
  int violations = 0;
  for (std::size_t k = 1; k < mrs.size(); ++k) {
    violations += mrs[k] > mrs[k - 1] ? 1 : 0;
    violations += ars[k] < ars[k - 1] ? 1 : 0;
  }
  return verdict(violations <= 1, fmt("MR %.3f -> %.3f, AR %.3f -> %.3f, %d adjacent violations",
                                       mrs.front(), mrs.back(), ars.front(), ars.back(), violations));
}

// 7. German credit with P+VS defaults.
Outcome german_credit() {
  fs::path p = "data/german_credit.csv";
  if (const char* env = std::getenv("VALSEL_GERMAN_CREDIT"); env && *env) p = env;
  if (!fs::exists(p)) {
    return {Status::skip, "german credit not found (set VALSEL_GERMAN_CREDIT or place data/german_credit.csv)"};
  }
  const Dataset d = load_dataset(p, format_from_path(p));
  ExperimentConfig cfg;
  cfg.jobs = 5;
  const EvalReport r = run_experiment(d, cfg);
  return verdict(r.mr >= 0.85 && r.ar >= 0.90,
                 fmt("%zu instances, Acc_o %.4f Acc_p %.4f |M_o| %.1f |M_p| %.1f, MR %.4f AR %.4f, "
                     "%zu/%d folds trained on an emptied set",
                     d.num_instances(), r.acc_original, r.acc_processed, r.size_original,
                     r.size_processed, r.mr, r.ar, r.empty_train_folds, cfg.folds * cfg.repeats));
}

// 8. Reservoir chi-square.
Outcome reservoir_uniformity() {
  std::string text = "id,class\n";
  for (int i = 0; i < 20; ++i) text += std::to_string(i) + ",c\n";
  const Dataset d = testing::from_csv(text);
  const int draws = 50000;
  std::vector<double> hits(20, 0.0);
  for (int r = 0; r < draws; ++r) {
    std::vector<std::size_t> kept;
    reservoir_select(d, 5.0 / 20.0, static_cast<std::uint64_t>(r) + 1, &kept);
    for (auto y : kept) hits[y] += 1;
  }
  const double expected = draws * 5.0 / 20.0;
  double chi2 = 0.0;
  for (double h : hits) chi2 += (h - expected) * (h - expected) / expected;
  const double critical = boost::math::quantile(boost::math::chi_squared(19), 0.99);
  return verdict(chi2 < critical, fmt("chi2 %.2f, critical %.2f (df 19, alpha 0.01)", chi2, critical));
}

// 9. Two identical experiment invocations.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "valsel_acceptance";
  fs::create_directories(dir);
  const fs::path input = dir / "pendigits_like.csv";
  std::ofstream(input, std::ios::binary) << testing::pendigits_like_csv(500, 4, 12, 10, 3.0, 7);
  std::string reports[2];
  for (int k = 0; k < 2; ++k) {
    const std::string out = (dir / ("report" + std::to_string(k) + ".json")).string();
    const std::string in = input.string();
    const char* argv[] = {"valsel", "experiment", "-i", in.c_str(), "-o", out.c_str(), "--jobs", "2"};
    std::ostringstream sink, err;
    if (cli::run(8, argv, sink, err) != 0) return {Status::fail, "experiment failed: " + err.str()};
    std::ifstream f(out, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    reports[k] = s.str();
  }
  return verdict(!reports[0].empty() && reports[0] == reports[1],
                 fmt("%zu-byte reports %s", reports[0].size(),
                     reports[0] == reports[1] ? "identical" : "differ"));
}

// 10. A feature of H = 1 values is removed and never split on.
Outcome fs_subsumption() {
  std::string text = "noise,signal,class\n";
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    // noise: each value sees both labels equally often.
    const char* noise = (i / 2) % 2 ? "n1" : "n2";
    const char* signal = i % 10 == 0 ? "s_mixed" : (pos ? "s_pos" : "s_neg");
    text += std::string(noise) + "," + signal + "," + (pos ? "Y" : "N") + "\n";
  }
  const Dataset d = testing::from_csv(text);
  const MetricTable stats = compute_stats(d);
  bool all_one = true;
  for (const auto& s : stats.feature(0)) all_one &= s.entropy == 1.0;
  int removed = 0, trials = 0, split_on = 0;
  for (double eps : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ++trials;
      const auto o = pvs(d, vs(SelectionMode::pvs, eps, seed), stats);
      const bool gone = std::find(o.removed_features.begin(), o.removed_features.end(), 0u) !=
                        o.removed_features.end();
      removed += gone ? 1 : 0;
      if (o.filtered.instances.empty()) continue;
      TreeOptions unpruned;
      unpruned.min_leaf = 1;
      unpruned.cf = 1.0;
      const auto used = train_tree(o.filtered, unpruned).split_features();
      split_on += std::find(used.begin(), used.end(), 0u) != used.end() ? 1 : 0;
    }
  }
  return verdict(all_one && removed == trials && split_on == 0,
                 fmt("noise feature H=1 everywhere: %s; removed in %d/%d runs; split on in %d",
                     all_one ? "yes" : "no", removed, trials, split_on));
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  set_warning_handler([](std::string_view) {});
  const std::vector<Criterion> criteria = {
      {1, "entropy oracle", 1.0, entropy_oracle},
      {2, "confusion proposition", 10.0, confusion_proposition},
      {3, "removal-probability calibration", 30.0, removal_calibration},
      {4, "missRate deletion", 0.0, miss_rate_deletion},
      {5, "metric exactness", 0.0, metric_exactness},
      {6, "epsilon-sweep shape", 120.0, epsilon_sweep},
      {7, "german-credit reproduction", 120.0, german_credit},
      {8, "reservoir uniformity", 0.0, reservoir_uniformity},
      {9, "determinism", 0.0, determinism},
      {10, "FS/IS subsumption", 0.0, fs_subsumption},
  };
  bool failed = false;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::pass && c.limit_s > 0 && secs >= c.limit_s) {
      o.status = Status::fail;
      o.detail += fmt("; runtime limit %.0f s exceeded", c.limit_s);
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("%s %2d %s: %s (%.2f s)\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed |= o.status == Status::fail;
  }
  return failed ? 1 : 0;
}
