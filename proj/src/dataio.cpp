#include "gsbag/dataio.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string_view>
#include <unordered_set>

#include "gsbag/error.hpp"

namespace gsbag {
namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  return in;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool parse_finite(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end && std::isfinite(value);
}

void check_unique(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw InputError("empty " + what + " id");
    if (!seen.insert(id).second) throw InputError("duplicate " + what + " id '" + id + "'");
  }
}

}  // namespace

void ExpressionMatrix::validate() const {
  check_unique(feature_ids, "feature");
  check_unique(sample_ids, "sample");
  if (static_cast<std::size_t>(values.rows()) != feature_ids.size() ||
      static_cast<std::size_t>(values.cols()) != sample_ids.size())
    throw InputError(fmt::format("matrix is {}x{} but has {} feature ids and {} sample ids",
                                 values.rows(), values.cols(), feature_ids.size(),
                                 sample_ids.size()));
  if (!values.allFinite()) throw InputError("matrix contains non-finite values");
}

bool ExpressionMatrix::operator==(const ExpressionMatrix& other) const {
  return feature_ids == other.feature_ids && sample_ids == other.sample_ids &&
         values.rows() == other.values.rows() && values.cols() == other.values.cols() &&
         values == other.values;
}

void PhenotypeTable::validate() const {
  check_unique(sample_ids, "sample");
  if (group.size() != sample_ids.size()) throw InputError("group vector length mismatch");
  if (levels.size() != 2) throw InputError("phenotype needs exactly two group levels");
  std::size_t counts[2] = {0, 0};
  for (int z : group) {
    if (z != 0 && z != 1) throw InputError("group codes must be 0 or 1");
    ++counts[z];
  }
  for (int g = 0; g < 2; ++g)
    if (counts[g] < 2)
      throw InputError(fmt::format("group '{}' has {} sample(s); at least 2 are required",
                                   levels[g], counts[g]));
  if (static_cast<std::size_t>(covariates.rows()) != sample_ids.size() && covariates.size() != 0)
    throw InputError("covariate rows do not match samples");
  if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size())
    throw InputError("covariate columns do not match names");
  if (!covariates.allFinite()) throw InputError("covariates contain non-finite values");
}

ExpressionMatrix parse_expression_matrix(const std::string& path) {
  auto in = open_input(path);
  return parse_expression_matrix(in, path);
}

ExpressionMatrix parse_expression_matrix(std::istream& in, const std::string& name) {
  std::string line;
  if (!read_line(in, line)) throw ParseError(name, 1, "empty file");
  auto header = split_tabs(line);
  if (header.size() < 2) throw ParseError(name, 1, "header has no sample columns");

  ExpressionMatrix m;
  m.sample_ids.assign(header.begin() + 1, header.end());
  {
    std::unordered_set<std::string> seen;
    for (const auto& s : m.sample_ids) {
      if (s.empty()) throw ParseError(name, 1, "empty sample id");
      if (!seen.insert(s).second) throw ParseError(name, 1, "duplicate sample id '" + s + "'");
    }
  }

  const std::size_t n = m.sample_ids.size();
  std::vector<double> data;
  std::unordered_set<std::string> seen_features;
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != n + 1)
      throw ParseError(name, line_no,
                       fmt::format("expected {} fields, found {}", n + 1, fields.size()));
    if (fields[0].empty()) throw ParseError(name, line_no, "empty feature id");
    if (!seen_features.insert(fields[0]).second)
      throw ParseError(name, line_no, "duplicate feature id '" + fields[0] + "'");
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (!parse_finite(fields[j + 1], v))
        throw ParseError(name, line_no,
                         fmt::format("column {} (sample '{}', feature '{}'): non-numeric value '{}'",
                                     j + 2, m.sample_ids[j], fields[0], fields[j + 1]));
      data.push_back(v);
    }
    m.feature_ids.push_back(std::move(fields[0]));
  }
  if (m.feature_ids.empty()) throw ParseError(name, line_no, "no feature rows");

  m.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), static_cast<Eigen::Index>(m.feature_ids.size()), static_cast<Eigen::Index>(n));
  return m;
}

void write_expression_matrix(const ExpressionMatrix& matrix, std::ostream& out) {
  out << "feature_id";
  for (const auto& s : matrix.sample_ids) out << '\t' << s;
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    out << matrix.feature_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j)
      out << '\t' << fmt::format("{}", matrix.values(i, j));
    out << '\n';
  }
}

void write_expression_matrix(const ExpressionMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open for writing");
  write_expression_matrix(matrix, out);
}

PhenotypeTable parse_phenotype(const std::string& path, const std::string& group_column) {
  auto in = open_input(path);
  return parse_phenotype(in, group_column, path);
}

PhenotypeTable make_phenotype(std::vector<std::string> sample_ids, std::vector<std::string> labels,
                              std::vector<std::string> covariate_names,
                              Eigen::MatrixXd covariates) {
  if (labels.size() != sample_ids.size())
    throw InputError("group labels and sample ids differ in length");
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != 2)
    throw InputError(fmt::format("group column must have exactly 2 distinct values, found {}",
                                 distinct.size()));
  PhenotypeTable p;
  p.sample_ids = std::move(sample_ids);
  p.levels.assign(distinct.begin(), distinct.end());
  p.group.reserve(labels.size());
  for (const auto& l : labels) p.group.push_back(l == p.levels[0] ? 0 : 1);
  p.covariate_names = std::move(covariate_names);
  if (covariates.size() == 0) covariates.resize(static_cast<Eigen::Index>(p.sample_ids.size()), 0);
  p.covariates = std::move(covariates);
  p.validate();
  return p;
}

PhenotypeTable parse_phenotype(std::istream& in, const std::string& group_column,
                               const std::string& name) {
  std::string line;
  if (!read_line(in, line)) throw ParseError(name, 1, "empty file");
  const auto header = split_tabs(line);
  const auto find_col = [&](const std::string& col) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), col);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t id_col = find_col("sample_id");
  if (id_col < 0) throw ParseError(name, 1, "missing 'sample_id' column");
  const std::ptrdiff_t group_col = find_col(group_column);
  if (group_col < 0) throw ParseError(name, 1, "missing group column '" + group_column + "'");

  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == id_col || static_cast<std::ptrdiff_t>(c) == group_col)
      continue;
    if (header[c].empty()) throw ParseError(name, 1, fmt::format("column {} has no name", c + 1));
    cov_cols.push_back(c);
    cov_names.push_back(header[c]);
  }

  std::vector<std::string> ids, labels;
  std::vector<double> cov_values;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != header.size())
      throw ParseError(name, line_no,
                       fmt::format("expected {} fields, found {}", header.size(), fields.size()));
    const auto& id = fields[static_cast<std::size_t>(id_col)];
    if (id.empty()) throw ParseError(name, line_no, "empty sample id");
    if (!seen.insert(id).second) throw ParseError(name, line_no, "duplicate sample id '" + id + "'");
    const auto& label = fields[static_cast<std::size_t>(group_col)];
    if (label.empty()) throw ParseError(name, line_no, "empty group value");
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      double v = 0.0;
      if (!parse_finite(fields[cov_cols[k]], v))
        throw ParseError(name, line_no,
                         fmt::format("covariate '{}': non-numeric value '{}'", cov_names[k],
                                     fields[cov_cols[k]]));
      cov_values.push_back(v);
    }
    ids.push_back(id);
    labels.push_back(label);
  }
  if (ids.empty()) throw ParseError(name, line_no, "no sample rows");

  Eigen::MatrixXd cov =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          cov_values.data(), static_cast<Eigen::Index>(ids.size()),
          static_cast<Eigen::Index>(cov_cols.size()));
  try {
    return make_phenotype(std::move(ids), std::move(labels), std::move(cov_names), std::move(cov));
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  }
}

GeneSetCollection parse_gmt(const std::string& path) {
  auto in = open_input(path);
  return parse_gmt(in, path);
}

GeneSetCollection parse_gmt(std::istream& in, const std::string& name) {
  GeneSetCollection collection;
  std::unordered_set<std::string> seen_sets;
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3)
      throw ParseError(name, line_no,
                       fmt::format("expected set id, description and genes; found {} field(s)",
                                   fields.size()));
    if (fields[0].empty()) throw ParseError(name, line_no, "empty set id");
    if (!seen_sets.insert(fields[0]).second)
      throw ParseError(name, line_no, "duplicate set id '" + fields[0] + "'");
    GeneSet set{std::move(fields[0]), std::move(fields[1]), {}};
    std::unordered_set<std::string> genes;
    for (std::size_t k = 2; k < fields.size(); ++k) {
      if (fields[k].empty()) continue;
      if (genes.insert(fields[k]).second) set.genes.push_back(std::move(fields[k]));
    }
    if (set.genes.empty()) throw ParseError(name, line_no, "set '" + set.id + "' has no genes");
    collection.sets.push_back(std::move(set));
  }
  return collection;
}

void write_gmt(const GeneSetCollection& collection, std::ostream& out) {
  for (const auto& s : collection.sets) {
    out << s.id << '\t' << s.description;
    for (const auto& g : s.genes) out << '\t' << g;
    out << '\n';
  }
}

Annotation parse_annotation(const std::string& path) {
  auto in = open_input(path);
  return parse_annotation(in, path);
}

Annotation parse_annotation(std::istream& in, const std::string& name) {
  std::string line;
  if (!read_line(in, line)) throw ParseError(name, 1, "empty file");
  if (split_tabs(line).size() < 2)
    throw ParseError(name, 1, "header must have feature and gene columns");
  Annotation annotation;
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2)
      throw ParseError(name, line_no, "expected feature id and gene id");
    if (fields[0].empty()) throw ParseError(name, line_no, "empty feature id");
    if (annotation.count(fields[0]) != 0)
      throw ParseError(name, line_no, "feature '" + fields[0] + "' annotated more than once");
    annotation.emplace(std::move(fields[0]), std::move(fields[1]));
  }
  return annotation;
}

Annotation identity_annotation(const ExpressionMatrix& matrix) {
  Annotation a;
  a.reserve(matrix.feature_ids.size());
  for (const auto& f : matrix.feature_ids) a.emplace(f, f);
  return a;
}

AnalysisBundle build_bundle(const ExpressionMatrix& matrix, const PhenotypeTable& phenotype,
                            const GeneSetCollection& sets, const Annotation& annotation,
                            const BundleOptions& options) {
  matrix.validate();
  phenotype.validate();

  // Align phenotype rows to the matrix sample order.
  std::unordered_map<std::string, std::size_t> pheno_row;
  for (std::size_t j = 0; j < phenotype.sample_ids.size(); ++j)
    pheno_row.emplace(phenotype.sample_ids[j], j);
  if (pheno_row.size() != matrix.n_samples())
    throw InputError(fmt::format("matrix has {} samples but phenotype has {}", matrix.n_samples(),
                                 pheno_row.size()));
  std::vector<std::size_t> order;
  order.reserve(matrix.n_samples());
  for (const auto& s : matrix.sample_ids) {
    auto it = pheno_row.find(s);
    if (it == pheno_row.end())
      throw InputError("sample '" + s + "' is in the matrix but not in the phenotype table");
    order.push_back(it->second);
  }

  AnalysisBundle bundle;
  bundle.matrix = matrix;
  auto& pheno = bundle.phenotype;
  pheno.levels = phenotype.levels;
  pheno.covariate_names = phenotype.covariate_names;
  pheno.covariates.resize(static_cast<Eigen::Index>(order.size()), phenotype.covariates.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    pheno.sample_ids.push_back(phenotype.sample_ids[order[j]]);
    pheno.group.push_back(phenotype.group[order[j]]);
    if (phenotype.covariates.cols() > 0)
      pheno.covariates.row(static_cast<Eigen::Index>(j)) =
          phenotype.covariates.row(static_cast<Eigen::Index>(order[j]));
  }

  // gene -> features (ascending feature index)
  std::unordered_map<std::string, std::vector<std::size_t>> gene_features;
  std::vector<bool> annotated(matrix.n_features(), false);
  for (std::size_t i = 0; i < matrix.n_features(); ++i) {
    auto it = annotation.find(matrix.feature_ids[i]);
    if (it == annotation.end() || it->second.empty()) continue;
    annotated[i] = true;
    gene_features[it->second].push_back(i);
  }

  std::vector<bool> in_universe(matrix.n_features(), false);
  if (options.universe == UniversePolicy::annotated) in_universe = annotated;
  if (options.universe == UniversePolicy::all_features) in_universe.assign(matrix.n_features(), true);

  for (const auto& set : sets.sets) {
    std::vector<std::size_t> members;
    for (const auto& gene : set.genes) {
      auto it = gene_features.find(gene);
      if (it == gene_features.end()) continue;
      members.insert(members.end(), it->second.begin(), it->second.end());
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.size() < options.min_set_size || members.empty()) {
      bundle.excluded.push_back({set.id, members.size()});
      continue;
    }
    bundle.sets.push_back({set.id, set.description, std::move(members), {}});
  }
  if (bundle.sets.empty())
    throw InputError(fmt::format("zero sets survive filtering (min set size {}, {} sets excluded)",
                                 options.min_set_size, bundle.excluded.size()));

  if (options.universe == UniversePolicy::in_sets)
    for (const auto& s : bundle.sets)
      for (std::size_t f : s.features) in_universe[f] = true;

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> position(matrix.n_features(), kNone);
  for (std::size_t i = 0; i < matrix.n_features(); ++i) {
    if (!in_universe[i]) continue;
    position[i] = bundle.universe.size();
    bundle.universe.push_back(i);
  }
  for (auto& s : bundle.sets) {
    s.universe_positions.reserve(s.features.size());
    for (std::size_t f : s.features) s.universe_positions.push_back(position[f]);
  }
  if (bundle.universe.size() < 2) throw InputError("enrichment universe has fewer than 2 features");
  return bundle;
}

}  // namespace gsbag
