#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsbag {

struct AnalysisBundle;
struct PhenotypeTable;

/// Model matrix: intercept, group indicator, then covariates.
struct Design {
  Eigen::MatrixXd matrix;  // samples x columns
  std::vector<std::string> column_names;
  Eigen::Index group_column = 1;
};

Design make_design(std::span<const int> group, const Eigen::MatrixXd& covariates,
                   const std::vector<std::string>& covariate_names = {});
Design make_design(const PhenotypeTable& phenotype);

/// Per-feature least-squares fit of the group coefficient.
struct LinearFit {
  std::vector<double> effect;
  std::vector<double> stdev_unscaled;
  std::vector<double> sigma2;
  std::vector<double> df_residual;

  std::size_t size() const { return effect.size(); }
};

/// OLS of every row of `values` on the design. Residual sums of squares that
/// are zero up to rounding (relative to the feature's centred sum of squares)
/// are reported as exactly zero. Throws DesignError if the design is rank
/// deficient or leaves no residual degrees of freedom.
LinearFit fit_linear_per_feature(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                 const Design& design);
LinearFit fit_linear_per_feature(const AnalysisBundle& bundle);

/// Scaled inverse-chi-square prior on the feature variances.
struct ModerationParams {
  double d0 = std::numeric_limits<double>::infinity();
  double s0_sq = 1.0;

  bool infinite() const { return d0 == std::numeric_limits<double>::infinity(); }
  /// d0 == 0 disables shrinkage; this is accepted for comparisons with the ordinary t.
  static ModerationParams none() { return {0.0, 1.0}; }
  void validate() const;
};

/// Moment estimate of (d0, s0^2) from log residual variances. Zero variances
/// are skipped; throws InputError if fewer than 3 remain.
ModerationParams fit_moderation(std::span<const double> sigma2, std::span<const double> df_residual);

/// Solves trigamma(x) = y for x by bisection on (1e-6, 1e6). Returns nullopt
/// when the root lies above the bracket (y too small).
std::optional<double> trigamma_inverse(double y);

struct ModeratedT {
  std::vector<double> t;
  std::vector<double> df_total;
  std::vector<double> p_value;
  std::vector<std::uint8_t> degenerate;  ///< zero residual variance: t = 0, p = 1
  std::size_t n_degenerate = 0;
};

ModeratedT moderated_t(const LinearFit& fit, const ModerationParams& params);

/// Two-sided Student-t tail probability; df may be +infinity.
double two_sided_t_pvalue(double t, double df);

struct QValueOptions {
  double lambda = 0.5;
  std::optional<double> pi0;  ///< fixed pi0 instead of estimating it
};

double estimate_pi0(std::span<const double> p, double lambda = 0.5);
std::vector<double> qvalues(std::span<const double> p, const QValueOptions& options = {});

struct DifferentialOptions {
  bool compute_q = true;
  QValueOptions q;
};

struct DifferentialResult {
  LinearFit fit;
  ModerationParams moderation;
  ModeratedT test;
  std::vector<double> q_value;  ///< empty when not requested

  std::size_t size() const { return fit.size(); }
};

/// Linear fit, variance moderation and p/q-values for every row of `values`.
DifferentialResult differential_analysis(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                         const Design& design,
                                         const DifferentialOptions& options = {});
DifferentialResult differential_analysis(const AnalysisBundle& bundle,
                                         const DifferentialOptions& options = {});

}  // namespace gsbag
