#include "valsel/discretize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "valsel/error.hpp"

namespace valsel {

std::string_view to_string(DiscretizationMethod m) {
  switch (m) {
    case DiscretizationMethod::none: return "none";
    case DiscretizationMethod::binning: return "binning";
    case DiscretizationMethod::frequency: return "frequency";
    case DiscretizationMethod::mdl: return "mdl";
  }
  return "?";
}

DiscretizationMethod parse_discretization_method(std::string_view text) {
  if (text == "none") return DiscretizationMethod::none;
  if (text == "binning" || text == "width") return DiscretizationMethod::binning;
  if (text == "frequency") return DiscretizationMethod::frequency;
  if (text == "mdl") return DiscretizationMethod::mdl;
  throw ConfigError("unknown discretization method '" + std::string{text} + "'");
}

const FeatureCuts* DiscretizationSpec::find(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

namespace {

std::optional<double> parse_finite(std::string_view token) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::vector<double> observed(std::span<const std::optional<double>> column,
                             std::string_view feature_name) {
  std::vector<double> out;
  out.reserve(column.size());
  for (const auto& v : column) {
    if (v) out.push_back(*v);
  }
  if (out.empty()) {
    throw DataError("feature '" + std::string{feature_name} + "' has no non-missing values");
  }
  return out;
}

void check_bins(int bins) {
  if (bins < 1) throw ConfigError("bins must be >= 1, got " + std::to_string(bins));
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace

std::optional<std::vector<std::optional<double>>> numeric_column(const Dataset& d,
                                                                 std::size_t feature) {
  const Feature& f = d.features.at(feature);
  std::vector<std::optional<double>> by_value(f.values.size());
  for (std::size_t z = 0; z < f.values.size(); ++z) {
    by_value[z] = parse_finite(f.values[z]);
    if (!by_value[z]) return std::nullopt;
  }
  std::vector<std::optional<double>> column;
  column.reserve(d.instances.size());
  for (const auto& inst : d.instances) {
    const ValueId z = inst.slots[feature];
    column.push_back(z == kMissing ? std::nullopt : by_value[static_cast<std::size_t>(z)]);
  }
  return column;
}

bool is_numeric_feature(const Feature& f) {
  if (f.kind == FeatureKind::numeric) return true;
  if (f.kind == FeatureKind::discretized || f.values.empty()) return false;
  return std::all_of(f.values.begin(), f.values.end(),
                     [](const std::string& v) { return parse_finite(v).has_value(); });
}

std::vector<double> fit_equal_width(std::span<const std::optional<double>> column, int bins,
                                    std::string_view feature_name) {
  check_bins(bins);
  const auto values = observed(column, feature_name);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> cuts;
  if (*lo == *hi) return cuts;
  const double width = (*hi - *lo) / bins;
  for (int k = 1; k < bins; ++k) {
    const double c = *lo + k * width;
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  return cuts;
}

std::vector<double> fit_equal_frequency(std::span<const std::optional<double>> column,
                                        int bins, std::string_view feature_name) {
  check_bins(bins);
  auto sorted = observed(column, feature_name);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  auto is_boundary = [&](std::size_t p) { return sorted[p - 1] < sorted[p]; };

  std::vector<double> cuts;
  for (int k = 1; k < bins; ++k) {
    const std::size_t target = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins);
    if (target == 0 || target >= n) continue;
    std::optional<std::size_t> chosen;
    if (is_boundary(target)) {
      chosen = target;
    } else {
      // Ties never straddle a cut: move to the nearest change of value.
      std::optional<std::size_t> below, above;
      for (std::size_t q = target - 1; q >= 1; --q) {
        if (is_boundary(q)) {
          below = q;
          break;
        }
      }
      for (std::size_t q = target + 1; q < n; ++q) {
        if (is_boundary(q)) {
          above = q;
          break;
        }
      }
      if (below && (!above || target - *below <= *above - target)) {
        chosen = below;
      } else {
        chosen = above;
      }
    }
    if (!chosen) continue;
    const double c = (sorted[*chosen - 1] + sorted[*chosen]) / 2.0;
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  return cuts;
}

namespace {

struct LabelledPoint {
  double value;
  LabelId label;
};

double entropy_bits(const std::vector<double>& counts, double total) {
  if (total <= 0) return 0.0;
  double h = 0;
  for (double c : counts) {
    if (c > 0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

int classes_present(const std::vector<double>& counts) {
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
}

class MdlSplitter {
 public:
  MdlSplitter(std::vector<LabelledPoint> points, std::size_t num_classes)
      : points_(std::move(points)), num_classes_(num_classes) {}

  std::vector<double> run() {
    split(0, points_.size());
    std::sort(cuts_.begin(), cuts_.end());
    return cuts_;
  }

 private:
  std::vector<double> counts(std::size_t lo, std::size_t hi) const {
    std::vector<double> c(num_classes_, 0.0);
    for (std::size_t i = lo; i < hi; ++i) c[static_cast<std::size_t>(points_[i].label)] += 1;
    return c;
  }

  void split(std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n < 2) return;
    const auto total = counts(lo, hi);
    const double ent = entropy_bits(total, static_cast<double>(n));

    std::vector<double> left(num_classes_, 0.0);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_at = 0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      left[static_cast<std::size_t>(points_[i - 1].label)] += 1;
      if (!(points_[i - 1].value < points_[i].value)) continue;
      std::vector<double> right(num_classes_);
      for (std::size_t c = 0; c < num_classes_; ++c) right[c] = total[c] - left[c];
      const double nl = static_cast<double>(i - lo);
      const double nr = static_cast<double>(hi - i);
      const double e = (nl * entropy_bits(left, nl) + nr * entropy_bits(right, nr)) / n;
      if (e < best - 1e-12) {
        best = e;
        best_at = i;
      }
    }
    if (best_at == 0) return;

    const auto lc = counts(lo, best_at);
    const auto rc = counts(best_at, hi);
    const double e1 = entropy_bits(lc, static_cast<double>(best_at - lo));
    const double e2 = entropy_bits(rc, static_cast<double>(hi - best_at));
    const double k = classes_present(total);
    const double k1 = classes_present(lc);
    const double k2 = classes_present(rc);
    const double gain = ent - best;
    const double delta = std::log2(std::pow(3.0, k) - 2.0) - (k * ent - k1 * e1 - k2 * e2);
    const double threshold = (std::log2(static_cast<double>(n - 1)) + delta) / n;
    if (!(gain > threshold)) return;

    cuts_.push_back((points_[best_at - 1].value + points_[best_at].value) / 2.0);
    split(lo, best_at);
    split(best_at, hi);
  }

  std::vector<LabelledPoint> points_;
  std::size_t num_classes_;
  std::vector<double> cuts_;
};

}  // namespace

std::vector<double> fit_mdl(std::span<const std::optional<double>> column,
                            std::span<const LabelId> labels, std::string_view feature_name) {
  if (column.size() != labels.size()) {
    throw DataError("feature '" + std::string{feature_name} + "': " +
                    std::to_string(column.size()) + " values but " +
                    std::to_string(labels.size()) + " labels");
  }
  std::vector<LabelledPoint> points;
  LabelId max_label = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (!column[i]) continue;
    if (labels[i] < 0) throw DataError("negative label id in MDL input");
    points.push_back({*column[i], labels[i]});
    max_label = std::max(max_label, labels[i]);
  }
  if (points.empty()) {
    throw DataError("feature '" + std::string{feature_name} + "' has no non-missing values");
  }
  std::sort(points.begin(), points.end(), [](const LabelledPoint& a, const LabelledPoint& b) {
    return a.value < b.value || (a.value == b.value && a.label < b.label);
  });
  return MdlSplitter(std::move(points), static_cast<std::size_t>(max_label) + 1).run();
}

DiscretizationSpec fit_discretization(const Dataset& d, DiscretizationMethod method, int bins) {
  if (method != DiscretizationMethod::mdl && method != DiscretizationMethod::none) {
    check_bins(bins);
  }
  DiscretizationSpec spec;
  spec.method = method;
  spec.bins = bins;
  spec.num_features = d.num_features();
  if (method == DiscretizationMethod::none) return spec;

  std::vector<LabelId> labels;
  labels.reserve(d.num_instances());
  for (const auto& inst : d.instances) labels.push_back(inst.label);

  for (std::size_t x = 0; x < d.num_features(); ++x) {
    const Feature& f = d.features[x];
    if (!is_numeric_feature(f)) continue;
    auto column = numeric_column(d, x);
    if (!column) continue;
    FeatureCuts fc{f.name, {}};
    switch (method) {
      case DiscretizationMethod::binning: fc.cuts = fit_equal_width(*column, bins, f.name); break;
      case DiscretizationMethod::frequency:
        fc.cuts = fit_equal_frequency(*column, bins, f.name);
        break;
      case DiscretizationMethod::mdl: fc.cuts = fit_mdl(*column, labels, f.name); break;
      case DiscretizationMethod::none: break;
    }
    spec.features.push_back(std::move(fc));
  }
  return spec;
}

std::vector<std::string> interval_labels(std::span<const double> cuts) {
  std::vector<std::string> text(cuts.size());
  std::transform(cuts.begin(), cuts.end(), text.begin(), compact);
  if (std::set<std::string>(text.begin(), text.end()).size() != text.size()) {
    std::transform(cuts.begin(), cuts.end(), text.begin(), shortest);
  }
  std::vector<std::string> labels;
  labels.reserve(cuts.size() + 1);
  if (cuts.empty()) {
    labels.emplace_back("(-inf-inf)");
    return labels;
  }
  labels.push_back("(-inf-" + text.front() + "]");
  for (std::size_t i = 1; i < text.size(); ++i) {
    labels.push_back("(" + text[i - 1] + "-" + text[i] + "]");
  }
  labels.push_back("(" + text.back() + "-inf)");
  return labels;
}

std::size_t interval_index(std::span<const double> cuts, double value) {
  return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), value) -
                                  cuts.begin());
}

Dataset apply_discretization(const DiscretizationSpec& spec, const Dataset& d) {
  if (spec.method == DiscretizationMethod::none) return d;
  if (d.num_features() != spec.num_features) {
    throw DataError("discretization spec expects " + std::to_string(spec.num_features) +
                    " features, dataset has " + std::to_string(d.num_features()));
  }
  Dataset out = d;
  std::size_t matched = 0;
  for (std::size_t x = 0; x < d.num_features(); ++x) {
    const FeatureCuts* fc = spec.find(d.features[x].name);
    if (!fc) continue;
    ++matched;
    const Feature& src = d.features[x];
    std::vector<std::size_t> bin_of(src.values.size());
    for (std::size_t z = 0; z < src.values.size(); ++z) {
      auto v = parse_finite(src.values[z]);
      if (!v) {
        throw DataError("feature '" + src.name + "' value '" + src.values[z] +
                        "' is not numeric");
      }
      bin_of[z] = interval_index(fc->cuts, *v);
    }
    Feature& dst = out.features[x];
    dst.kind = FeatureKind::discretized;
    dst.values = interval_labels(fc->cuts);
    for (auto& inst : out.instances) {
      ValueId& slot = inst.slots[x];
      if (slot != kMissing) slot = static_cast<ValueId>(bin_of[static_cast<std::size_t>(slot)]);
    }
  }
  if (matched != spec.features.size()) {
    throw DataError("discretization spec names features absent from dataset '" + d.name + "'");
  }
  return out;
}

// Format:
//   valsel-discretization 1
//   method <name>
//   bins <n>
//   features <schema width>
//   cuts "<feature name>" <c1> <c2> ...
void write_spec(std::ostream& out, const DiscretizationSpec& spec) {
  out << "valsel-discretization 1\n";
  out << "method " << to_string(spec.method) << '\n';
  out << "bins " << spec.bins << '\n';
  out << "features " << spec.num_features << '\n';
  for (const auto& fc : spec.features) {
    out << "cuts " << std::quoted(fc.name);
    for (double c : fc.cuts) out << ' ' << shortest(c);
    out << '\n';
  }
}

DiscretizationSpec read_spec(std::istream& in) {
  DiscretizationSpec spec;
  std::string line;
  if (!std::getline(in, line) || line != "valsel-discretization 1") {
    throw DataError("not a discretization spec (bad header)");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "method") {
      std::string m;
      ls >> m;
      spec.method = parse_discretization_method(m);
    } else if (key == "bins") {
      ls >> spec.bins;
    } else if (key == "features") {
      ls >> spec.num_features;
    } else if (key == "cuts") {
      FeatureCuts fc;
      ls >> std::quoted(fc.name);
      std::string tok;
      while (ls >> tok) {
        auto v = parse_finite(tok);
        if (!v) throw DataError("bad cut point '" + tok + "' in spec");
        if (!fc.cuts.empty() && *v <= fc.cuts.back()) {
          throw DataError("cut points for '" + fc.name + "' are not strictly increasing");
        }
        fc.cuts.push_back(*v);
      }
      spec.features.push_back(std::move(fc));
    } else {
      throw DataError("unknown spec line '" + line + "'");
    }
    if (ls.fail() && !ls.eof()) throw DataError("malformed spec line '" + line + "'");
  }
  return spec;
}

void save_spec(const DiscretizationSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_spec(out, spec);
  if (!out) throw DataError("I/O failure while writing '" + path.string() + "'");
}

DiscretizationSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_spec(in);
}

}  // namespace valsel
