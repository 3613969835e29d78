#include "gsbag/diffexpr.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsbag/dataio.hpp"
#include "gsbag/error.hpp"

namespace gsbag {
namespace {

// RSS below this fraction of the centred sum of squares is rounding noise.
constexpr double kZeroRssRelative = 1e-24;
constexpr double kRankThreshold = 1e-10;

}  // namespace

Design make_design(std::span<const int> group, const Eigen::MatrixXd& covariates,
                   const std::vector<std::string>& covariate_names) {
  const auto n = static_cast<Eigen::Index>(group.size());
  const Eigen::Index k = covariates.size() == 0 ? 0 : covariates.cols();
  if (k > 0 && covariates.rows() != n) throw InputError("covariate rows do not match samples");
  Design d;
  d.matrix.resize(n, 2 + k);
  d.matrix.col(0).setOnes();
  for (Eigen::Index j = 0; j < n; ++j) d.matrix(j, 1) = group[static_cast<std::size_t>(j)];
  if (k > 0) d.matrix.rightCols(k) = covariates;
  d.column_names = {"intercept", "group"};
  for (Eigen::Index c = 0; c < k; ++c)
    d.column_names.push_back(static_cast<std::size_t>(c) < covariate_names.size()
                                 ? covariate_names[static_cast<std::size_t>(c)]
                                 : fmt::format("covariate{}", c + 1));
  return d;
}

Design make_design(const PhenotypeTable& phenotype) {
  return make_design(phenotype.group, phenotype.covariates, phenotype.covariate_names);
}

LinearFit fit_linear_per_feature(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                 const Design& design) {
  const Eigen::MatrixXd& x = design.matrix;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (values.cols() != n)
    throw InputError(fmt::format("values have {} samples but design has {}", values.cols(), n));
  if (n <= p)
    throw DesignError(fmt::format("{} samples leave no residual degrees of freedom for {} model columns",
                                  n, p));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p)
    throw DesignError(fmt::format("design matrix is rank deficient (rank {} < {} columns)",
                                  qr.rank(), p));

  // Row of (X'X)^-1 X' for the group coefficient, and an orthonormal basis of col(X).
  const Eigen::MatrixXd coef_map = qr.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd w = coef_map.row(design.group_column).transpose();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);

  // Centring removes the feature mean exactly; with an intercept in the model
  // it changes only the intercept estimate.
  Eigen::MatrixXd centred = values.colwise() - values.rowwise().mean();
  const Eigen::VectorXd css = centred.rowwise().squaredNorm();
  const Eigen::VectorXd effect = centred * w;
  centred.noalias() -= (centred * q) * q.transpose();
  const Eigen::VectorXd rss = centred.rowwise().squaredNorm();

  const auto m = static_cast<std::size_t>(values.rows());
  const auto df = static_cast<double>(n - p);
  LinearFit fit;
  fit.effect.assign(effect.data(), effect.data() + m);
  fit.stdev_unscaled.assign(m, w.norm());
  fit.df_residual.assign(m, df);
  fit.sigma2.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    fit.sigma2[i] = rss(r) <= kZeroRssRelative * css(r) ? 0.0 : rss(r) / df;
  }
  return fit;
}

LinearFit fit_linear_per_feature(const AnalysisBundle& bundle) {
  return fit_linear_per_feature(bundle.matrix.values, make_design(bundle.phenotype));
}

void ModerationParams::validate() const {
  const bool ok = (std::isfinite(d0) && d0 >= 0.0 && std::isfinite(s0_sq) && s0_sq > 0.0) ||
                  (infinite() && std::isfinite(s0_sq) && s0_sq > 0.0);
  if (!ok) throw InputError(fmt::format("invalid moderation parameters d0={} s0^2={}", d0, s0_sq));
}

std::optional<double> trigamma_inverse(double y) {
  constexpr double lo_bound = 1e-6;
  constexpr double hi_bound = 1e6;
  if (!(y > boost::math::trigamma(hi_bound))) return std::nullopt;
  if (y >= boost::math::trigamma(lo_bound)) return lo_bound;
  // trigamma is strictly decreasing; bisect in log space for uniform relative precision
  double lo = std::log(lo_bound);
  double hi = std::log(hi_bound);
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (boost::math::trigamma(std::exp(mid)) > y)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

ModerationParams fit_moderation(std::span<const double> sigma2, std::span<const double> df_residual) {
  if (sigma2.size() != df_residual.size())
    throw InputError("sigma2 and df_residual differ in length");
  std::vector<double> e;
  double trigamma_mean = 0.0;
  double sigma2_sum = 0.0;
  for (std::size_t i = 0; i < sigma2.size(); ++i) {
    const double s2 = sigma2[i];
    const double df = df_residual[i];
    if (!(s2 > 0.0) || !std::isfinite(s2) || !(df > 0.0)) continue;
    const double half = 0.5 * df;
    e.push_back(std::log(s2) - boost::math::digamma(half) + std::log(half));
    trigamma_mean += boost::math::trigamma(half);
    sigma2_sum += s2;
  }
  const std::size_t n = e.size();
  if (n < 3)
    throw InputError(fmt::format("variance moderation needs at least 3 positive variances, got {}", n));
  trigamma_mean /= static_cast<double>(n);

  const double e_mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : e) ss += (v - e_mean) * (v - e_mean);
  const double excess = ss / static_cast<double>(n - 1) - trigamma_mean;

  if (excess > 0.0) {
    if (auto half_d0 = trigamma_inverse(excess)) {
      return {2.0 * *half_d0,
              std::exp(e_mean + boost::math::digamma(*half_d0) - std::log(*half_d0))};
    }
  }
  return {std::numeric_limits<double>::infinity(), sigma2_sum / static_cast<double>(n)};
}

double two_sided_t_pvalue(double t, double df) {
  const double a = std::fabs(t);
  if (std::isinf(df)) return std::erfc(a / std::sqrt(2.0));
  boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, a)));
}

ModeratedT moderated_t(const LinearFit& fit, const ModerationParams& params) {
  params.validate();
  const std::size_t m = fit.size();
  ModeratedT out;
  out.t.resize(m);
  out.df_total.resize(m);
  out.p_value.resize(m);
  out.degenerate.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double df = fit.df_residual[i];
    double post_var = 0.0;
    if (params.infinite()) {
      post_var = params.s0_sq;
      out.df_total[i] = params.d0;
    } else {
      post_var = (params.d0 * params.s0_sq + df * fit.sigma2[i]) / (params.d0 + df);
      out.df_total[i] = params.d0 + df;
    }
    const double denom = std::sqrt(post_var) * fit.stdev_unscaled[i];
    if (fit.sigma2[i] == 0.0 || !(denom > 0.0)) {
      out.t[i] = 0.0;
      out.p_value[i] = 1.0;
      out.degenerate[i] = 1;
      ++out.n_degenerate;
      continue;
    }
    out.t[i] = fit.effect[i] / denom;
    out.p_value[i] = two_sided_t_pvalue(out.t[i], out.df_total[i]);
  }
  return out;
}

double estimate_pi0(std::span<const double> p, double lambda) {
  if (p.empty()) throw InputError("cannot estimate pi0 from zero p-values");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw InputError("pi0 lambda must be in [0, 1)");
  const auto above = static_cast<double>(std::count_if(p.begin(), p.end(), [&](double v) { return v > lambda; }));
  // At least one pseudo-count above lambda keeps pi0 positive.
  const double pi0 = std::max(above, 1.0) / (static_cast<double>(p.size()) * (1.0 - lambda));
  return std::min(1.0, pi0);
}

std::vector<double> qvalues(std::span<const double> p, const QValueOptions& options) {
  if (p.empty()) throw InputError("qvalues: empty input");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw InputError(fmt::format("qvalues: p-value {} outside [0,1]", v));
  const double pi0 = options.pi0 ? *options.pi0 : estimate_pi0(p, options.lambda);
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw InputError("qvalues: pi0 must be in (0, 1]");

  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const std::size_t i = order[r];
    const double candidate = pi0 * static_cast<double>(m) * p[i] / static_cast<double>(r + 1);
    running = std::min(running, candidate);
    q[i] = std::clamp(running, 0.0, 1.0);
  }
  return q;
}

DifferentialResult differential_analysis(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                         const Design& design, const DifferentialOptions& options) {
  DifferentialResult result;
  result.fit = fit_linear_per_feature(values, design);
  result.moderation = fit_moderation(result.fit.sigma2, result.fit.df_residual);
  result.test = moderated_t(result.fit, result.moderation);
  if (options.compute_q) result.q_value = qvalues(result.test.p_value, options.q);
  return result;
}

DifferentialResult differential_analysis(const AnalysisBundle& bundle,
                                         const DifferentialOptions& options) {
  return differential_analysis(bundle.matrix.values, make_design(bundle.phenotype), options);
}

}  // namespace gsbag
