#pragma once

// Multi-domain tabular data: schema, CSV ingestion, standardization,
// train/validation splitting and domain weights.

#include <dapdag/format.hpp>
#include <dapdag/numerics.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dapdag {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { continuous, binary };

inline const char* to_string(VarKind k) { return k == VarKind::binary ? "binary" : "continuous"; }

inline VarKind parse_var_kind(const std::string& s) {
  if (s == "continuous") return VarKind::continuous;
  if (s == "binary") return VarKind::binary;
  throw DataError("unknown variable kind '" + s + "'");
}

/// Column names and kinds. The label is always the last column, so the
/// features are columns [0, d) and the label is column d.
struct VariableSchema {
  std::vector<std::string> names;
  std::vector<VarKind> kinds;

  int variable_count() const { return static_cast<int>(kinds.size()); }
  int feature_count() const { return variable_count() - 1; }
  int label_index() const { return variable_count() - 1; }
  VarKind label_kind() const { return kinds.back(); }

  void validate() const {
    if (kinds.size() < 2) throw DataError("schema needs at least one feature and a label");
    if (names.size() != kinds.size()) throw DataError("schema names/kinds length mismatch");
  }

  friend bool operator==(const VariableSchema&, const VariableSchema&) = default;
};

inline nlohmann::json schema_to_json(const VariableSchema& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < s.kinds.size(); ++i) {
    cols.push_back({{"name", s.names[i]}, {"kind", to_string(s.kinds[i])}});
  }
  return {{"format", "dapdag-schema/1"}, {"columns", cols}, {"label", s.names.back()}};
}

inline VariableSchema schema_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns") || !j.contains("label")) {
    throw DataError("schema: expected object with 'columns' and 'label'");
  }
  VariableSchema s;
  for (const auto& c : j.at("columns")) {
    s.names.push_back(c.at("name").get<std::string>());
    s.kinds.push_back(parse_var_kind(c.at("kind").get<std::string>()));
  }
  s.validate();
  const auto label = j.at("label").get<std::string>();
  if (label != s.names.back()) {
    throw DataError("schema: label column '" + label + "' must be the last column");
  }
  return s;
}

inline VariableSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema file " + path.string() + ": " + e.what());
  }
  return schema_from_json(j);
}

inline void save_schema(const VariableSchema& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write schema file " + path.string());
  out << schema_to_json(s).dump(2) << '\n';
}

struct DomainDataset {
  std::string id;
  Matrix data;  // n x (d+1)
  VariableSchema schema;
  bool labeled = true;

  Eigen::Index rows() const { return data.rows(); }
  Matrix features() const { return data.leftCols(schema.feature_count()); }
  Vector labels() const { return data.col(schema.label_index()); }
};

inline void check_binary(const DomainDataset& ds) {
  for (int c = 0; c < ds.schema.variable_count(); ++c) {
    if (ds.schema.kinds[c] != VarKind::binary) continue;
    if (!ds.labeled && c == ds.schema.label_index()) continue;
    for (Eigen::Index r = 0; r < ds.data.rows(); ++r) {
      const double v = ds.data(r, c);
      if (v != 0.0 && v != 1.0) {
        throw DataError("schema violation: binary column '" + ds.schema.names[c] +
                        "' has value " + format_double(v) + " at row " + std::to_string(r + 1));
      }
    }
  }
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
}  // namespace detail

/// Reads a CSV with a one-line header. An unlabeled file may omit the label
/// column; it is then filled with zeros.
inline DomainDataset load_csv(const std::filesystem::path& path, const VariableSchema& schema,
                              bool labeled = true) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  const auto full = static_cast<std::size_t>(schema.variable_count());
  const bool without_label = !labeled && header.size() + 1 == full;
  if (header.size() != full && !without_label) {
    throw DataError(path.string() + ": column-count mismatch, header has " +
                    std::to_string(header.size()) + " columns, schema has " +
                    std::to_string(full));
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    for (const auto& cell : cells) {
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed numeric cell '" + cell + "'");
      }
      values.push_back(v);
    }
    if (without_label) values.push_back(0.0);
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": empty domain");

  DomainDataset ds;
  ds.id = path.stem().string();
  ds.schema = schema;
  ds.labeled = labeled;
  ds.data = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(full));
  check_binary(ds);
  return ds;
}

inline void write_csv(const DomainDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < ds.schema.names.size(); ++i) {
    if (i) out << ',';
    out << ds.schema.names[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < ds.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.data.cols(); ++c) {
      if (c) out << ',';
      out << format_double(ds.data(r, c));
    }
    out << '\n';
  }
}

// ---- standardization -------------------------------------------------------

/// Per-column affine map fitted on pooled source rows. Binary and
/// zero-variance columns keep mean 0 and scale 1, i.e. pass through.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }

  void apply_inplace(Matrix& data) const {
    if (static_cast<std::size_t>(data.cols()) != mean.size()) {
      throw DataError("standardizer: column-count mismatch");
    }
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      const auto i = static_cast<std::size_t>(c);
      if (mean[i] == 0.0 && scale[i] == 1.0) continue;
      data.col(c) = (data.col(c).array() - mean[i]) / scale[i];
    }
  }

  /// Applies only the first `cols` columns (features of an unlabeled set).
  Matrix apply_features(const Matrix& features) const {
    Matrix out = features;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const auto i = static_cast<std::size_t>(c);
      if (mean[i] == 0.0 && scale[i] == 1.0) continue;
      out.col(c) = (out.col(c).array() - mean[i]) / scale[i];
    }
    return out;
  }

  DomainDataset apply(const DomainDataset& ds) const {
    DomainDataset out = ds;
    apply_inplace(out.data);
    return out;
  }

  double inverse(int column, double v) const {
    const auto i = static_cast<std::size_t>(column);
    return v * scale[i] + mean[i];
  }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

inline Standardizer fit_standardizer(const std::vector<DomainDataset>& sources) {
  if (sources.empty()) throw DataError("fit_standardizer: no source datasets");
  const VariableSchema& schema = sources.front().schema;
  const auto cols = static_cast<std::size_t>(schema.variable_count());
  Standardizer st;
  st.mean.assign(cols, 0.0);
  st.scale.assign(cols, 1.0);
  for (std::size_t c = 0; c < cols; ++c) {
    if (schema.kinds[c] == VarKind::binary) continue;
    double sum = 0.0;
    double count = 0.0;
    for (const auto& ds : sources) {
      sum += ds.data.col(static_cast<Eigen::Index>(c)).sum();
      count += static_cast<double>(ds.rows());
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& ds : sources) {
      ss += (ds.data.col(static_cast<Eigen::Index>(c)).array() - mean).square().sum();
    }
    const double sd = std::sqrt(ss / count);  // population
    if (sd > 0.0 && std::isfinite(sd)) {
      st.mean[c] = mean;
      st.scale[c] = sd;
    }
  }
  return st;
}

inline nlohmann::json standardizer_to_json(const Standardizer& s) {
  return {{"mean", s.mean}, {"scale", s.scale}};
}
inline Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw DataError("standardizer: length mismatch");
  return s;
}

// ---- splitting -------------------------------------------------------------

inline DomainDataset take_rows(const DomainDataset& ds, const std::vector<Eigen::Index>& idx) {
  DomainDataset out;
  out.id = ds.id;
  out.schema = ds.schema;
  out.labeled = ds.labeled;
  out.data.resize(static_cast<Eigen::Index>(idx.size()), ds.data.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.data.row(static_cast<Eigen::Index>(i)) = ds.data.row(idx[i]);
  }
  return out;
}

/// Validation gets clamp(round(p*n), 1, n-1) rows; both parts keep the
/// original row order.
template <class Rng>
std::pair<DomainDataset, DomainDataset> split_train_val(const DomainDataset& ds, double p,
                                                        Rng& rng) {
  const Eigen::Index n = ds.rows();
  if (n < 2) throw DataError("split_train_val: need at least 2 rows, domain '" + ds.id + "'");
  if (!(p > 0.0 && p < 1.0)) throw DataError("split_train_val: ratio must be in (0,1)");
  auto val_n = static_cast<Eigen::Index>(std::llround(p * static_cast<double>(n)));
  val_n = std::clamp<Eigen::Index>(val_n, 1, n - 1);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  // Fisher-Yates with an explicit draw so the result does not depend on the
  // standard library's shuffle.
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Eigen::Index> val(perm.begin(), perm.begin() + val_n);
  std::vector<Eigen::Index> train(perm.begin() + val_n, perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {take_rows(ds, train), take_rows(ds, val)};
}

inline std::vector<double> domain_weights(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw DataError("domain_weights: empty list");
  double total = 0.0;
  for (auto s : sizes) {
    if (s == 0) throw DataError("domain_weights: domain with zero training rows");
    total += static_cast<double>(s);
  }
  std::vector<double> w;
  w.reserve(sizes.size());
  for (auto s : sizes) w.push_back(static_cast<double>(s) / total);
  return w;
}

}  // namespace dapdag
