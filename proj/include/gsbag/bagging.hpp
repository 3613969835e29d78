#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsbag/diffexpr.hpp"
#include "gsbag/enrichment.hpp"
#include "gsbag/rng.hpp"

namespace gsbag {

struct AnalysisBundle;

enum class MethodSelection { hypergeometric, wilcoxon, both };

/// How genes are called significant before the hypergeometric test.
enum class GeneCriterion { raw_p, q_value };

struct BaggingConfig {
  int B = 100;
  double alpha = 0.05;       ///< set-level threshold for counting replication
  double alpha_gene = 0.05;  ///< gene-level threshold feeding the hypergeometric test
  MethodSelection method = MethodSelection::both;
  GeneCriterion gene_criterion = GeneCriterion::raw_p;
  RankAlternative rank_alternative = RankAlternative::absolute;
  double pi0_lambda = 0.5;
  std::uint64_t seed = 1;
  int threads = 1;
  bool retain_pmatrix = false;
  int max_redraws = 10;  ///< extra draws allowed per iteration for a rank-deficient design

  void validate() const;
  std::vector<EnrichmentMethod> methods() const;
};

/// Set-level p-values for one (possibly resampled) dataset.
struct SetPValues {
  std::optional<std::vector<double>> hypergeometric;
  std::optional<std::vector<double>> wilcoxon;
  std::size_t n_degenerate = 0;  ///< features with zero residual variance
  ModerationParams moderation;
};

/// Steps 1-2: differential test on `values` (features x samples) against the
/// design, then enrichment of every bundle set.
SetPValues set_pvalues(const AnalysisBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& values,
                       const Design& design, const BaggingConfig& config);
SetPValues observed_set_pvalues(const AnalysisBundle& bundle, const BaggingConfig& config);

/// Within-group bootstrap: position j receives a uniformly drawn sample of the
/// same group as j, so group sizes and the group column are preserved.
std::vector<std::size_t> stratified_resample_indices(std::span<const int> groups, Rng& rng);

/// r_hat for each row: fraction of entries strictly below alpha.
std::vector<double> replication_probability(const std::vector<std::vector<double>>& p_matrix,
                                            double alpha);

struct MethodBagging {
  EnrichmentMethod method = EnrichmentMethod::hypergeometric;
  std::vector<double> p_observed;
  std::vector<double> q_set;           ///< q-values of p_observed across sets
  std::vector<int> counts;             ///< #{b : p_b < alpha}
  std::vector<double> r_hat;           ///< counts / B
  std::vector<std::vector<double>> p_matrix;  ///< [set][b], only when retained
};

struct IterationDiagnostics {
  int attempts = 1;  ///< draws used, including redraws after rank-deficient designs
  std::size_t n_degenerate = 0;
};

struct BaggingResult {
  std::vector<std::string> set_ids;
  std::vector<std::size_t> set_sizes;
  std::optional<MethodBagging> hypergeometric;
  std::optional<MethodBagging> wilcoxon;
  BaggingConfig config;
  std::size_t observed_degenerate = 0;
  std::vector<IterationDiagnostics> iterations;

  const MethodBagging& get(EnrichmentMethod method) const;
};

/// The full procedure: observed set p-values, B stratified bootstrap
/// replicates of the whole differential + enrichment pipeline, and the
/// replication probability of every set. Results do not depend on the number
/// of threads.
BaggingResult run_bagging(const AnalysisBundle& bundle, const BaggingConfig& config);

/// Interpretation of (observed significance, r_hat) pairs.
std::string consistency_label(bool significant, double r_hat);

}  // namespace gsbag
