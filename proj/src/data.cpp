#include "valsel/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "valsel/error.hpp"

namespace valsel {

std::optional<ValueId> Feature::find(std::string_view token) const {
  for (std::size_t z = 0; z < values.size(); ++z) {
    if (values[z] == token) return static_cast<ValueId>(z);
  }
  return std::nullopt;
}

ValueId Feature::intern(std::string_view token) {
  if (auto id = find(token)) return *id;
  values.emplace_back(token);
  return static_cast<ValueId>(values.size() - 1);
}

std::size_t Dataset::count_missing() const {
  std::size_t n = 0;
  for (const auto& inst : instances) {
    n += static_cast<std::size_t>(std::count(inst.slots.begin(), inst.slots.end(), kMissing));
  }
  return n;
}

Dataset Dataset::empty_like() const {
  Dataset out;
  out.name = name;
  out.class_name = class_name;
  out.features = features;
  out.labels = labels;
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out = empty_like();
  out.instances.reserve(rows.size());
  for (auto r : rows) out.instances.push_back(instances.at(r));
  return out;
}

void Dataset::validate() const {
  if (labels.empty() && !instances.empty()) {
    throw DataError("dataset '" + name + "' has instances but no class labels");
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
      if (!seen.insert(l).second) throw DataError("duplicate class label '" + l + "'");
    }
  }
  for (const auto& f : features) {
    std::unordered_set<std::string> seen;
    for (const auto& v : f.values) {
      if (!seen.insert(v).second) {
        throw DataError("feature '" + f.name + "' has duplicate value '" + v + "'");
      }
    }
  }
  for (std::size_t y = 0; y < instances.size(); ++y) {
    const auto& inst = instances[y];
    if (inst.slots.size() != features.size()) {
      throw DataError("instance " + std::to_string(y) + " has " +
                      std::to_string(inst.slots.size()) + " slots, expected " +
                      std::to_string(features.size()));
    }
    for (std::size_t x = 0; x < inst.slots.size(); ++x) {
      const ValueId z = inst.slots[x];
      if (z == kMissing) continue;
      if (z < 0 || static_cast<std::size_t>(z) >= features[x].values.size()) {
        throw DataError("instance " + std::to_string(y) + " slot " + std::to_string(x) +
                        " holds unknown value id " + std::to_string(z));
      }
    }
    if (inst.label < 0 || static_cast<std::size_t>(inst.label) >= labels.size()) {
      throw DataError("instance " + std::to_string(y) + " has unknown label id");
    }
    if (!(inst.weight >= 0.0) || !std::isfinite(inst.weight)) {
      throw DataError("instance " + std::to_string(y) + " has invalid weight");
    }
  }
}

std::uint64_t fingerprint(const Dataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(d.features.size());
  mix(d.labels.size());
  for (const auto& f : d.features) mix(f.values.size());
  mix(d.instances.size());
  for (const auto& inst : d.instances) {
    for (auto z : inst.slots) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(z)));
    mix(static_cast<std::uint64_t>(inst.label));
  }
  return h;
}

// ---- CSV -------------------------------------------------------------------

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// RFC-4180 record splitter. Quoted fields may span lines; "" escapes a quote.
std::vector<CsvRecord> split_csv(std::istream& in, char delim) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF: let the '\n' close the record
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field starting near line " +
                                 std::to_string(current.line));
  if (!field.empty() || field_was_quoted || !current.fields.empty()) end_record();
  return records;
}

bool csv_needs_quotes(std::string_view token, char delim) {
  return token.find_first_of(std::string{delim} + "\"\r\n") != std::string_view::npos;
}

void write_csv_field(std::ostream& out, std::string_view token, char delim) {
  if (!csv_needs_quotes(token, delim)) {
    out << token;
    return;
  }
  out << '"';
  for (char c : token) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& options, std::string name) {
  auto records = split_csv(in, options.delimiter);
  if (records.empty()) throw DataError("CSV input '" + name + "' is empty");

  const std::size_t arity = records.front().fields.size();
  for (const auto& rec : records) {
    if (rec.fields.size() != arity) {
      throw DataError("ragged CSV row at line " + std::to_string(rec.line) + ": " +
                      std::to_string(rec.fields.size()) + " fields, expected " +
                      std::to_string(arity));
    }
  }
  const std::size_t class_col = options.class_index.value_or(arity - 1);
  if (class_col >= arity) {
    throw DataError("class index " + std::to_string(class_col) + " out of range for " +
                    std::to_string(arity) + " columns");
  }

  Dataset d;
  d.name = std::move(name);
  std::size_t first_row = 0;
  std::vector<std::string> header(arity);
  if (options.header) {
    header = records.front().fields;
    first_row = 1;
  } else {
    for (std::size_t c = 0; c < arity; ++c) header[c] = "f" + std::to_string(c + 1);
    header[class_col] = "class";
  }
  d.class_name = header[class_col];
  for (std::size_t c = 0; c < arity; ++c) {
    if (c == class_col) continue;
    d.features.push_back(Feature{header[c], {}, FeatureKind::categorical});
  }

  Feature label_domain;
  for (std::size_t r = first_row; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    Instance inst;
    inst.slots.reserve(d.features.size());
    std::size_t x = 0;
    for (std::size_t c = 0; c < arity; ++c) {
      if (c == class_col) continue;
      if (fields[c] == options.missing_token) {
        inst.slots.push_back(kMissing);
      } else {
        inst.slots.push_back(d.features[x].intern(fields[c]));
      }
      ++x;
    }
    if (fields[class_col] == options.missing_token) {
      throw DataError("missing class label at line " + std::to_string(records[r].line));
    }
    inst.label = label_domain.intern(fields[class_col]);
    d.instances.push_back(std::move(inst));
  }
  d.labels = std::move(label_domain.values);
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, options, path.stem().string());
}

void write_csv(std::ostream& out, const Dataset& d, const CsvOptions& options) {
  const char delim = options.delimiter;
  const std::size_t n_cols = d.features.size() + 1;
  const std::size_t class_col = std::min(options.class_index.value_or(n_cols - 1), n_cols - 1);

  auto write_row = [&](auto&& cell) {
    std::size_t x = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c > 0) out << delim;
      if (c == class_col) {
        write_csv_field(out, cell(std::nullopt), delim);
      } else {
        write_csv_field(out, cell(std::optional<std::size_t>{x}), delim);
        ++x;
      }
    }
    out << '\n';
  };

  if (options.header) {
    write_row([&](std::optional<std::size_t> x) -> std::string_view {
      return x ? std::string_view{d.features[*x].name} : std::string_view{d.class_name};
    });
  }
  for (const auto& inst : d.instances) {
    write_row([&](std::optional<std::size_t> x) -> std::string_view {
      if (!x) return d.labels.at(static_cast<std::size_t>(inst.label));
      const ValueId z = inst.slots[*x];
      if (z == kMissing) return options.missing_token;
      return d.features[*x].values.at(static_cast<std::size_t>(z));
    });
  }
}

// ---- ARFF ------------------------------------------------------------------

std::string quote_token(std::string_view token) {
  const bool plain = !token.empty() && token != "?" &&
                     std::all_of(token.begin(), token.end(), [](char c) {
                       return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                              c == '.' || c == '+' || c == '-';
                     });
  if (plain) return std::string{token};
  std::string out = "'";
  for (char c : token) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '\'';
  return out;
}

namespace {

struct ArffToken {
  std::string text;
  bool quoted = false;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out{s};
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Reads one possibly-quoted token starting at pos; stops at any char in stops
// (outside quotes). Unquoted tokens are whitespace-trimmed.
ArffToken read_token(std::string_view line, std::size_t& pos, std::string_view stops,
                     std::size_t line_no) {
  while (pos < line.size() && is_space(line[pos])) ++pos;
  ArffToken tok;
  if (pos < line.size() && (line[pos] == '\'' || line[pos] == '"')) {
    const char q = line[pos++];
    tok.quoted = true;
    while (true) {
      if (pos >= line.size()) {
        throw DataError("unterminated quote in ARFF line " + std::to_string(line_no));
      }
      char c = line[pos++];
      if (c == q) break;
      if (c == '\\' && pos < line.size()) {
        char e = line[pos++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 'r': c = '\r'; break;
          case 't': c = '\t'; break;
          default: c = e;
        }
      }
      tok.text.push_back(c);
    }
    while (pos < line.size() && is_space(line[pos])) ++pos;
    return tok;
  }
  const std::size_t start = pos;
  while (pos < line.size() && stops.find(line[pos]) == std::string_view::npos) ++pos;
  std::string_view raw = line.substr(start, pos - start);
  while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);
  tok.text = std::string{raw};
  return tok;
}

std::vector<ArffToken> split_arff_list(std::string_view body, std::size_t line_no) {
  std::vector<ArffToken> out;
  std::size_t pos = 0;
  while (true) {
    out.push_back(read_token(body, pos, ",", line_no));
    if (pos >= body.size()) break;
    if (body[pos] != ',') {
      throw DataError("malformed ARFF list in line " + std::to_string(line_no));
    }
    ++pos;
  }
  return out;
}

struct ArffAttribute {
  std::string name;
  bool nominal = false;
  std::vector<std::string> domain;
};

}  // namespace

Dataset read_arff(std::istream& in, std::optional<std::size_t> class_index) {
  std::string relation = "data";
  std::vector<ArffAttribute> attrs;
  std::vector<std::pair<std::vector<ArffToken>, std::size_t>> rows;
  bool in_data = false;
  bool saw_anything = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = 0;
    while (first < line.size() && is_space(line[first])) ++first;
    if (first == line.size() || line[first] == '%') continue;
    std::string_view body = std::string_view{line}.substr(first);
    saw_anything = true;

    if (in_data) {
      if (body.front() == '{') {
        throw UnsupportedFeatureError("sparse ARFF rows are not supported (line " +
                                      std::to_string(line_no) + ")");
      }
      rows.emplace_back(split_arff_list(body, line_no), line_no);
      continue;
    }
    if (body.front() != '@') {
      throw DataError("unexpected ARFF header line " + std::to_string(line_no));
    }
    std::size_t kw_end = 0;
    while (kw_end < body.size() && !is_space(body[kw_end])) ++kw_end;
    const std::string keyword = lower(body.substr(0, kw_end));
    std::size_t pos = kw_end;

    if (keyword == "@relation") {
      relation = read_token(body, pos, " \t", line_no).text;
    } else if (keyword == "@attribute") {
      ArffAttribute attr;
      attr.name = read_token(body, pos, " \t{", line_no).text;
      while (pos < body.size() && is_space(body[pos])) ++pos;
      std::string_view type = body.substr(pos);
      if (!type.empty() && type.front() == '{') {
        const auto close = type.rfind('}');
        if (close == std::string_view::npos) {
          throw DataError("unterminated nominal domain in line " + std::to_string(line_no));
        }
        attr.nominal = true;
        std::string_view inner = type.substr(1, close - 1);
        bool blank = std::all_of(inner.begin(), inner.end(), is_space);
        if (!blank) {
          for (auto& tok : split_arff_list(inner, line_no)) attr.domain.push_back(tok.text);
        }
      } else {
        std::size_t t = 0;
        while (t < type.size() && !is_space(type[t])) ++t;
        const std::string tname = lower(type.substr(0, t));
        if (tname == "numeric" || tname == "real" || tname == "integer") {
          attr.nominal = false;
        } else if (tname == "string" || tname == "date" || tname == "relational") {
          throw UnsupportedFeatureError("ARFF attribute type '" + tname +
                                        "' is not supported (attribute '" + attr.name + "')");
        } else {
          throw DataError("unknown ARFF attribute type '" + tname + "' in line " +
                          std::to_string(line_no));
        }
      }
      attrs.push_back(std::move(attr));
    } else if (keyword == "@data") {
      in_data = true;
    } else if (keyword == "@end") {
      throw UnsupportedFeatureError("relational ARFF attributes are not supported");
    } else {
      throw DataError("unknown ARFF directive '" + keyword + "' in line " +
                      std::to_string(line_no));
    }
  }
  if (!saw_anything) throw DataError("ARFF input is empty");
  if (!in_data) throw DataError("ARFF input has no @data section");
  if (attrs.empty()) throw DataError("ARFF input declares no attributes");

  const std::size_t class_col = class_index.value_or(attrs.size() - 1);
  if (class_col >= attrs.size()) {
    throw DataError("class index " + std::to_string(class_col) + " out of range");
  }
  if (!attrs[class_col].nominal) {
    throw UnsupportedFeatureError("numeric class attribute '" + attrs[class_col].name +
                                  "' is not supported");
  }

  Dataset d;
  d.name = relation;
  d.class_name = attrs[class_col].name;
  d.labels = attrs[class_col].domain;
  std::vector<std::size_t> feature_of(attrs.size(), 0);
  for (std::size_t c = 0; c < attrs.size(); ++c) {
    if (c == class_col) continue;
    feature_of[c] = d.features.size();
    Feature f;
    f.name = attrs[c].name;
    f.kind = attrs[c].nominal ? FeatureKind::categorical : FeatureKind::numeric;
    if (attrs[c].nominal) f.values = attrs[c].domain;
    d.features.push_back(std::move(f));
  }

  for (auto& [tokens, row_line] : rows) {
    double weight = 1.0;
    if (tokens.size() == attrs.size() + 1 && !tokens.back().quoted &&
        tokens.back().text.size() >= 2 && tokens.back().text.front() == '{' &&
        tokens.back().text.back() == '}') {
      const std::string w = tokens.back().text.substr(1, tokens.back().text.size() - 2);
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
      if (ec != std::errc{} || ptr != w.data() + w.size()) {
        throw DataError("bad instance weight in ARFF line " + std::to_string(row_line));
      }
      tokens.pop_back();
    }
    if (tokens.size() != attrs.size()) {
      throw DataError("ARFF row at line " + std::to_string(row_line) + " has " +
                      std::to_string(tokens.size()) + " values, expected " +
                      std::to_string(attrs.size()));
    }
    Instance inst;
    inst.weight = weight;
    inst.slots.assign(d.features.size(), kMissing);
    for (std::size_t c = 0; c < attrs.size(); ++c) {
      const auto& tok = tokens[c];
      const bool missing = !tok.quoted && tok.text == "?";
      if (c == class_col) {
        if (missing) {
          throw DataError("missing class label in ARFF line " + std::to_string(row_line));
        }
        auto it = std::find(d.labels.begin(), d.labels.end(), tok.text);
        if (it == d.labels.end()) {
          throw DataError("label '" + tok.text + "' not declared (line " +
                          std::to_string(row_line) + ")");
        }
        inst.label = static_cast<LabelId>(it - d.labels.begin());
        continue;
      }
      if (missing) continue;
      Feature& f = d.features[feature_of[c]];
      if (attrs[c].nominal) {
        auto id = f.find(tok.text);
        if (!id) {
          throw DataError("value '" + tok.text + "' not in domain of '" + f.name + "' (line " +
                          std::to_string(row_line) + ")");
        }
        inst.slots[feature_of[c]] = *id;
      } else {
        inst.slots[feature_of[c]] = f.intern(tok.text);
      }
    }
    d.instances.push_back(std::move(inst));
  }
  d.validate();
  return d;
}

Dataset load_arff(const std::filesystem::path& path, std::optional<std::size_t> class_index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_arff(in, class_index);
}

namespace {

std::string format_weight(double w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, w);
  return std::string(buf, ptr);
}

}  // namespace

void write_arff(std::ostream& out, const Dataset& d) {
  out << "@relation " << quote_token(d.name) << "\n\n";
  auto write_domain = [&out](const std::vector<std::string>& values) {
    out << '{';
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out << ',';
      out << quote_token(values[i]);
    }
    out << '}';
  };
  for (const auto& f : d.features) {
    out << "@attribute " << quote_token(f.name) << ' ';
    if (f.kind == FeatureKind::numeric) {
      out << "numeric";
    } else {
      write_domain(f.values);
    }
    out << '\n';
  }
  out << "@attribute " << quote_token(d.class_name) << ' ';
  write_domain(d.labels);
  out << "\n\n@data\n";
  for (const auto& inst : d.instances) {
    for (std::size_t x = 0; x < d.features.size(); ++x) {
      const ValueId z = inst.slots[x];
      out << (z == kMissing ? std::string{"?"}
                            : quote_token(d.features[x].values[static_cast<std::size_t>(z)]))
          << ',';
    }
    out << quote_token(d.labels.at(static_cast<std::size_t>(inst.label)));
    if (inst.weight != 1.0) out << ",{" << format_weight(inst.weight) << '}';
    out << '\n';
  }
}

// ---- generic ---------------------------------------------------------------

FileFormat format_from_path(const std::filesystem::path& path) {
  return lower(path.extension().string()) == ".arff" ? FileFormat::arff : FileFormat::csv;
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format,
                     const CsvOptions& csv_options) {
  if (format == FileFormat::arff) return load_arff(path, csv_options.class_index);
  return load_csv(path, csv_options);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, FileFormat format,
                  const CsvOptions& csv_options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  if (format == FileFormat::arff) {
    write_arff(out, d);
  } else {
    write_csv(out, d, csv_options);
  }
  out.flush();
  if (!out) throw DataError("I/O failure while writing '" + path.string() + "'");
}

}  // namespace valsel
