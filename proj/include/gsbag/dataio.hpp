#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace gsbag {

/// Features x samples matrix of preprocessed measurements.
struct ExpressionMatrix {
  std::vector<std::string> feature_ids;
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd values;  // rows = features, cols = samples

  std::size_t n_features() const { return feature_ids.size(); }
  std::size_t n_samples() const { return sample_ids.size(); }

  /// Throws InputError if any invariant is broken.
  void validate() const;
  bool operator==(const ExpressionMatrix& other) const;
};

/// Two-level outcome per sample plus optional numeric adjustment covariates.
struct PhenotypeTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> levels;  ///< levels[0] is encoded as z = 0
  std::vector<int> group;           ///< z_j in {0, 1}
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;  // rows = samples, cols = covariates

  std::size_t n_samples() const { return sample_ids.size(); }
  void validate() const;
};

struct GeneSet {
  std::string id;
  std::string description;
  std::vector<std::string> genes;  ///< unique, in first-seen order
};

using Annotation = std::unordered_map<std::string, std::string>;  // feature_id -> gene_id

struct GeneSetCollection {
  std::vector<GeneSet> sets;
  Annotation annotation;
};

/// Which features are eligible for enrichment testing.
enum class UniversePolicy {
  annotated,     ///< every measured feature with a gene annotation (default)
  all_features,  ///< every measured feature, annotated or not
  in_sets,       ///< only features belonging to at least one surviving set
};

struct BundleOptions {
  std::size_t min_set_size = 5;
  UniversePolicy universe = UniversePolicy::annotated;
};

struct SetMembership {
  std::string id;
  std::string description;
  std::vector<std::size_t> features;           ///< sorted indices into feature_ids
  std::vector<std::size_t> universe_positions;  ///< same members, as indices into universe
  std::size_t size() const { return features.size(); }
};

struct ExcludedSet {
  std::string id;
  std::size_t size;  ///< member features after restriction
};

/// Inputs aligned and resolved to feature-level set membership.
struct AnalysisBundle {
  ExpressionMatrix matrix;
  PhenotypeTable phenotype;  ///< rows in matrix sample order
  std::vector<SetMembership> sets;
  std::vector<std::size_t> universe;  ///< sorted feature indices
  std::vector<ExcludedSet> excluded;
};

ExpressionMatrix parse_expression_matrix(const std::string& path);
ExpressionMatrix parse_expression_matrix(std::istream& in, const std::string& name = "<stream>");
void write_expression_matrix(const ExpressionMatrix& matrix, std::ostream& out);
void write_expression_matrix(const ExpressionMatrix& matrix, const std::string& path);

PhenotypeTable parse_phenotype(const std::string& path, const std::string& group_column);
PhenotypeTable parse_phenotype(std::istream& in, const std::string& group_column,
                               const std::string& name = "<stream>");

/// Builds a phenotype from already-decoded values (simulation, bindings).
PhenotypeTable make_phenotype(std::vector<std::string> sample_ids, std::vector<std::string> labels,
                              std::vector<std::string> covariate_names = {},
                              Eigen::MatrixXd covariates = {});

GeneSetCollection parse_gmt(const std::string& path);
GeneSetCollection parse_gmt(std::istream& in, const std::string& name = "<stream>");
void write_gmt(const GeneSetCollection& collection, std::ostream& out);

/// Two-column TSV with a header row: feature id, gene id. An empty gene id
/// leaves the feature unannotated.
Annotation parse_annotation(const std::string& path);
Annotation parse_annotation(std::istream& in, const std::string& name = "<stream>");

/// Maps every feature to a gene of the same name.
Annotation identity_annotation(const ExpressionMatrix& matrix);

AnalysisBundle build_bundle(const ExpressionMatrix& matrix, const PhenotypeTable& phenotype,
                            const GeneSetCollection& sets, const Annotation& annotation,
                            const BundleOptions& options = {});

}  // namespace gsbag
