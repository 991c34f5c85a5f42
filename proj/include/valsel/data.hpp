#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace valsel {

// Per-feature interned value identifier. Identifiers index Feature::values.
using ValueId = std::int32_t;
using LabelId = std::int32_t;

inline constexpr ValueId kMissing = -1;

enum class FeatureKind {
  categorical,  // tokens as read; numeric-looking CSV columns land here too
  numeric,      // declared numeric in an ARFF header, not yet discretized
  discretized,  // interval labels produced by the discretizer
};

struct Feature {
  std::string name;
  std::vector<std::string> values;
  FeatureKind kind = FeatureKind::categorical;

  std::optional<ValueId> find(std::string_view token) const;
  // Returns the identifier of token, appending it to values if new.
  ValueId intern(std::string_view token);

  bool operator==(const Feature&) const = default;
};

struct Instance {
  std::vector<ValueId> slots;
  LabelId label = 0;
  double weight = 1.0;

  bool operator==(const Instance&) const = default;
};

// Discretized/categorical table. Plain aggregate: treat as immutable once
// built and call validate() after constructing one by hand.
struct Dataset {
  std::string name;
  std::string class_name = "class";
  std::vector<Feature> features;
  std::vector<std::string> labels;
  std::vector<Instance> instances;

  std::size_t num_features() const { return features.size(); }
  std::size_t num_instances() const { return instances.size(); }
  std::size_t num_labels() const { return labels.size(); }

  std::size_t count_missing() const;

  // Copy with the same schema holding only the given instances, in order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  // Copy with the same schema and no instances.
  Dataset empty_like() const;

  // Throws DataError naming the first broken invariant.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// 64-bit FNV-1a over schema sizes, slots and labels. Used to check that a
// statistics table was computed on a given dataset.
std::uint64_t fingerprint(const Dataset& d);

// ---- CSV -------------------------------------------------------------------

struct CsvOptions {
  // Column holding the class label; nullopt means the last column.
  std::optional<std::size_t> class_index;
  std::string missing_token = "?";
  bool header = true;
  char delimiter = ',';
};

Dataset read_csv(std::istream& in, const CsvOptions& options, std::string name = "data");
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
void write_csv(std::ostream& out, const Dataset& d, const CsvOptions& options = {});

// ---- ARFF ------------------------------------------------------------------

// Reads the dense ARFF subset: @relation, nominal and numeric @attribute
// lines, @data rows with '?' as missing. class_index defaults to the last
// attribute, which must be nominal.
Dataset read_arff(std::istream& in, std::optional<std::size_t> class_index = std::nullopt);
Dataset load_arff(const std::filesystem::path& path,
                  std::optional<std::size_t> class_index = std::nullopt);
void write_arff(std::ostream& out, const Dataset& d);

// ---- generic ---------------------------------------------------------------

enum class FileFormat { csv, arff };

// .arff selects ARFF, anything else CSV.
FileFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, FileFormat format,
                     const CsvOptions& csv_options = {});
void save_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format,
                  const CsvOptions& csv_options = {});

// Single-quotes a token the way Weka prints nominal values when it contains
// characters outside [A-Za-z0-9_.+-]; plain tokens are returned unchanged.
std::string quote_token(std::string_view token);

}  // namespace valsel
