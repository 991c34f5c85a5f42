#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "support/fixtures.hpp"
#include "valsel/error.hpp"
#include "valsel/metrics.hpp"

using namespace valsel;

namespace {

const ValueStats& stat_of(const MetricTable& t, const Dataset& d, std::size_t x,
                          const std::string& token) {
  const auto z = d.features[x].find(token);
  REQUIRE(z.has_value());
  const ValueStats* s = t.find(x, *z);
  REQUIRE(s != nullptr);
  return *s;
}

// Brute force: rescan the dataset for every (feature, value).
struct Oracle {
  double entropy = 0.0;
  double weight = 0.0;
  std::vector<double> probs;
};

Oracle brute(const Dataset& d, std::size_t x, ValueId z) {
  Oracle o;
  const std::size_t nl = d.num_labels();
  std::vector<double> counts(nl, 0.0);
  double n = 0.0, observed = 0.0;
  for (const auto& inst : d.instances) {
    if (inst.slots[x] != kMissing) observed += 1;
    if (inst.slots[x] != z) continue;
    counts[static_cast<std::size_t>(inst.label)] += 1;
    n += 1;
  }
  o.weight = n / observed;
  for (double c : counts) {
    const double p = c / n;
    o.probs.push_back(p);
    if (p > 0 && nl > 1) o.entropy -= p * std::log(p) / std::log(static_cast<double>(nl));
  }
  return o;
}

void silence() {
  set_warning_handler([](std::string_view) {});
}

}  // namespace

TEST_CASE("worked example: f3 entropies") {
  const Dataset d = valsel::testing::worked_example();
  const MetricTable t = compute_stats(d);
  CHECK(stat_of(t, d, 2, "2").entropy == doctest::Approx(0.0).epsilon(1e-12));
  const double h1 = -(1.0 / 3) * std::log2(1.0 / 3) - (2.0 / 3) * std::log2(2.0 / 3);
  CHECK(stat_of(t, d, 2, "1").entropy == doctest::Approx(h1).epsilon(1e-12));
  CHECK(stat_of(t, d, 2, "1").entropy == doctest::Approx(0.9183).epsilon(1e-4));
  CHECK(stat_of(t, d, 2, "-1").entropy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stat_of(t, d, 2, "1").support == 3);
  CHECK(stat_of(t, d, 2, "1").proportion == doctest::Approx(0.6));
}

TEST_CASE("dataset confusion is the literal sum of value entropies") {
  const Dataset d = valsel::testing::worked_example();
  const MetricTable t = compute_stats(d);
  double sum = 0.0;
  for (const auto* s : t.all()) sum += s->entropy;
  CHECK(t.dataset_confusion() == doctest::Approx(sum));
  for (const auto* s : t.all()) CHECK(s->info_gain == doctest::Approx(sum - s->entropy));

  StatsOptions opts;
  opts.confusion = DatasetConfusion::class_entropy;
  const MetricTable c = compute_stats(d, opts);
  const double h = -(0.4 * std::log2(0.4) + 0.6 * std::log2(0.6));
  CHECK(c.dataset_confusion() == doctest::Approx(h));
}

TEST_CASE("single-label data: every entropy 0, every normalized gain 1") {
  std::string warned;
  set_warning_handler([&](std::string_view m) { warned = m; });
  const Dataset d = valsel::testing::from_csv("a,b,class\nx,p,k\ny,q,k\nx,q,k\n");
  const MetricTable t = compute_stats(d);
  for (const auto* s : t.all()) {
    CHECK(s->entropy == 0.0);
    CHECK(s->norm_info_gain == 1.0);
  }
  CHECK(!warned.empty());
  set_warning_handler({});
}

TEST_CASE("property: statistics match a brute-force recount") {
  silence();
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = valsel::testing::random_dataset(rng, 50, 4, 2 + rng.index(4), 5, 0.1);
    const MetricTable t = compute_stats(d);
    double total = 0.0;
    std::size_t entries = 0;
    for (std::size_t x = 0; x < d.num_features(); ++x) {
      double wsum = 0.0;
      double max_ig = 0.0;
      for (std::size_t z = 0; z < d.features[x].values.size(); ++z) {
        const ValueStats* s = t.find(x, static_cast<ValueId>(z));
        bool observed = false;
        for (const auto& inst : d.instances) observed |= inst.slots[x] == static_cast<ValueId>(z);
        CHECK((s != nullptr) == observed);
        if (!s) continue;
        ++entries;
        const Oracle o = brute(d, x, static_cast<ValueId>(z));
        CHECK(s->entropy == doctest::Approx(o.entropy).epsilon(1e-12));
        CHECK(s->proportion == doctest::Approx(o.weight).epsilon(1e-12));
        for (std::size_t l = 0; l < o.probs.size(); ++l) {
          CHECK(s->class_probs[l] == doctest::Approx(o.probs[l]).epsilon(1e-12));
        }
        CHECK(s->entropy >= 0.0);
        CHECK(s->entropy <= 1.0);
        CHECK(std::accumulate(s->class_probs.begin(), s->class_probs.end(), 0.0) ==
              doctest::Approx(1.0));
        total += o.entropy;
        wsum += s->proportion;
      }
      if (wsum > 0) CHECK(wsum == doctest::Approx(1.0));
      for (const auto& s : t.feature(x)) max_ig = std::max(max_ig, s.info_gain);
      for (const auto& s : t.feature(x)) {
        CHECK(s.norm_info_gain >= 0.0);
        CHECK(s.norm_info_gain <= 1.0);
        if (max_ig > 1e-12) CHECK(s.norm_info_gain == doctest::Approx(s.info_gain / max_ig));
      }
    }
    CHECK(t.size() == entries);
    CHECK(t.dataset_confusion() == doctest::Approx(total).epsilon(1e-12));
  }
  set_warning_handler({});
}

TEST_CASE("property: ascending entropy order equals descending gain order") {
  silence();
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = valsel::testing::random_dataset(rng, 80, 3, 3, 6);
    const MetricTable t = compute_stats(d);
    for (std::size_t x = 0; x < d.num_features(); ++x) {
      auto by_h = t.feature(x);
      auto by_ig = t.feature(x);
      std::stable_sort(by_h.begin(), by_h.end(),
                       [](const ValueStats& a, const ValueStats& b) { return a.entropy < b.entropy; });
      std::stable_sort(by_ig.begin(), by_ig.end(), [](const ValueStats& a, const ValueStats& b) {
        return a.info_gain > b.info_gain;
      });
      for (std::size_t k = 0; k < by_h.size(); ++k) CHECK(by_h[k].value == by_ig[k].value);
    }
  }
  set_warning_handler({});
}

TEST_CASE("property: invariant under instance and feature reordering") {
  silence();
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Dataset d = valsel::testing::random_dataset(rng, 40, 4, 3, 4, 0.2);
    Dataset shuffled = d;
    rng.shuffle(shuffled.instances.begin(), shuffled.instances.end());
    std::vector<std::size_t> perm(d.num_features());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    Dataset permuted = shuffled;
    for (std::size_t k = 0; k < perm.size(); ++k) permuted.features[k] = d.features[perm[k]];
    for (std::size_t y = 0; y < d.num_instances(); ++y) {
      for (std::size_t k = 0; k < perm.size(); ++k) {
        permuted.instances[y].slots[k] = shuffled.instances[y].slots[perm[k]];
      }
    }
    const MetricTable a = compute_stats(d);
    const MetricTable b = compute_stats(permuted);
    CHECK(a.dataset_confusion() == doctest::Approx(b.dataset_confusion()));
    for (std::size_t k = 0; k < perm.size(); ++k) {
      const auto& fa = a.feature(perm[k]);
      const auto& fb = b.feature(k);
      REQUIRE(fa.size() == fb.size());
      for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(fa[i].value == fb[i].value);
        CHECK(fa[i].entropy == doctest::Approx(fb[i].entropy));
        CHECK(fa[i].norm_info_gain == doctest::Approx(fb[i].norm_info_gain));
      }
    }
  }
  set_warning_handler({});
}

TEST_CASE("removal probability") {
  ValueStats s;
  s.entropy = 0.4;
  CHECK(removal_probability(s, InfoMetric::entropy, 0.5) == doctest::Approx(0.8));
  s.entropy = 0.9183;
  CHECK(removal_probability(s, InfoMetric::entropy, 0.5) == 1.0);
  s.norm_info_gain = 1.0;
  for (double eps : {0.1, 0.5, 1.0}) CHECK(removal_probability(s, InfoMetric::infogain, eps) == 0.0);
  s.norm_info_gain = 0.7;
  CHECK(removal_probability(s, InfoMetric::infogain, 0.6) == doctest::Approx(0.5));
  CHECK_THROWS_AS(removal_probability(s, InfoMetric::entropy, 0.0), ConfigError);
  CHECK_THROWS_AS(removal_probability(s, InfoMetric::entropy, 1.01), ConfigError);
  CHECK_THROWS_AS(check_epsilon(-1), ConfigError);
  CHECK_NOTHROW(check_epsilon(1.0));
}

TEST_CASE("confusion report") {
  silence();
  SUBCASE("worked example: before - after equals sum of w H^2") {
    const MetricTable t = compute_stats(valsel::testing::worked_example());
    const auto r = confusion_report(t, expected_after_weights(t));
    double wh2 = 0.0;
    for (const auto* s : t.all()) wh2 += s->proportion * s->entropy * s->entropy;
    CHECK(r.after <= r.before);
    CHECK(r.before - r.after == doctest::Approx(wh2).epsilon(1e-12));
    CHECK(wh2 > 0.0);
  }
  SUBCASE("all H = 0") {
    const MetricTable t = compute_stats(valsel::testing::from_csv("a,class\nx,p\ny,q\n"));
    const auto r = confusion_report(t, expected_after_weights(t));
    CHECK(r.before == 0.0);
    CHECK(r.after == 0.0);
  }
  SUBCASE("all H = 1") {
    const MetricTable t = compute_stats(valsel::testing::from_csv("a,class\nx,p\nx,q\n"));
    const auto r = confusion_report(t, expected_after_weights(t));
    CHECK(r.before == doctest::Approx(1.0));
    CHECK(r.after == 0.0);
  }
  SUBCASE("mismatched weights") {
    const MetricTable t = compute_stats(valsel::testing::worked_example());
    CHECK_THROWS_AS(confusion_report(t, std::vector<double>(t.size() + 1, 0.0)), DataError);
  }
  set_warning_handler({});
}

TEST_CASE("errors and stats table") {
  const Dataset d = valsel::testing::worked_example();
  CHECK_THROWS_AS(compute_stats(d.empty_like()), DataError);
  Dataset blank = d;
  for (auto& inst : blank.instances) std::fill(inst.slots.begin(), inst.slots.end(), kMissing);
  CHECK_THROWS_AS(compute_stats(blank), DataError);

  std::ostringstream out;
  write_stats_table(out, compute_stats(d), d, InfoMetric::entropy, 0.5);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(compute_stats(d).size() + 1));
  CHECK(text.find("f3") != std::string::npos);
  CHECK(parse_info_metric("infogain") == InfoMetric::infogain);
  CHECK_THROWS_AS(parse_info_metric("gini"), ConfigError);
}
