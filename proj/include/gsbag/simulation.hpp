#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsbag/bagging.hpp"
#include "gsbag/dataio.hpp"
#include "gsbag/rng.hpp"

namespace gsbag {

/// Spike-in design: m_ij = beta_i z_j + e_ij, e_ij ~ N(noise_mean, noise_sd),
/// beta_i ~ N(beta_mean, beta_sd) for spiked genes and 0 otherwise.
struct SimulationSpec {
  std::size_t n_sets = 100;
  std::size_t n_spiked_genes = 100;
  std::size_t n_cases = 50;
  std::size_t n_controls = 50;
  double noise_mean = 6.0;
  double noise_sd = 1.0;
  double beta_mean = 1.0;
  double beta_sd = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// What stays fixed across repeated studies: the sampled sets, the spiked
/// genes and their effects.
struct SimulationTruth {
  GeneSetCollection sets;
  std::vector<std::string> genes;  ///< union of the sampled sets, sorted
  std::vector<double> beta;        ///< per gene, 0 for unspiked genes
  std::vector<std::string> spiked_genes;
  std::vector<double> spike_fraction;  ///< per sampled set
  AnalysisBundle layout;               ///< bundle with the simulated design and zero values
};

struct SimulatedDataset {
  AnalysisBundle bundle;
  std::vector<std::string> spiked_genes;
  std::vector<double> spike_fraction;
};

SimulationTruth draw_truth(const GeneSetCollection& collection, const SimulationSpec& spec, Rng& rng);
SimulatedDataset generate_dataset(const SimulationTruth& truth, const SimulationSpec& spec, Rng& rng);

/// Draws a truth and one dataset from the same stream.
SimulatedDataset spike_in_dataset(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  Rng& rng);

/// Pearson correlation of midranks. Throws InputError for mismatched lengths,
/// fewer than 2 points, or a constant vector.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf);

/// KS distance of p-values from Uniform(0,1).
double ks_uniform(std::span<const double> p);

struct Simulation1Method {
  EnrichmentMethod method;
  std::vector<double> significance_frequency;  ///< fraction of datasets with p_observed < alpha
  std::vector<double> mean_r_hat;
  std::optional<double> spearman;  ///< empty when either vector is constant
};

struct Simulation1Result {
  std::vector<std::string> set_ids;
  std::vector<double> spike_fraction;
  std::size_t n_datasets = 0;
  std::vector<Simulation1Method> methods;
};

/// Repeated studies under one fixed truth: does the mean r_hat track how often
/// each set is actually significant?
Simulation1Result run_simulation1(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  std::size_t n_datasets, const BaggingConfig& bagging, int threads = 1);

struct ReplicateSummary {
  std::vector<double> p_observed;
  std::vector<double> r_hat;
};

struct PairCorrelations {
  std::optional<double> r_hat_all, p_all;
  std::optional<double> r_hat_significant, p_significant;
  std::size_t n_significant = 0;  ///< sets with min(p1, p2) < alpha
};

/// Spearman correlations between two independent replicates, on all sets and
/// on sets significant in at least one replicate.
PairCorrelations compare_replicates(const ReplicateSummary& a, const ReplicateSummary& b, double alpha);

struct Distribution {
  std::size_t n = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
};

/// Median and quartiles (linear interpolation between order statistics).
Distribution summarize(std::vector<double> values);

struct Simulation2Method {
  EnrichmentMethod method;
  std::vector<PairCorrelations> pairs;
  Distribution r_hat_all, p_all, r_hat_significant, p_significant;
};

struct Simulation2Result {
  std::size_t n_pairs = 0;
  std::vector<Simulation2Method> methods;
};

/// Independent pairs of datasets sharing a truth: which of r_hat and p
/// replicates better across the pair?
Simulation2Result run_simulation2(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  std::size_t n_pairs, const BaggingConfig& bagging, int threads = 1);

/// Plain bootstrap of the mean of z compared with analytic references.
///
/// The resampled means approximate draws from the posterior of the mean
/// under a flat prior. The plug-in normal N(mean, s^2/n), with s^2 the
/// 1/n variance, is the reference used for the KS distance. The marginal
/// posterior under the Jeffreys prior is a Student-t with n-1 degrees of
/// freedom; its variance is larger than s^2/n, so bootstrap means
/// understate the posterior spread.
struct PosteriorDemo {
  std::vector<double> bootstrap_means;
  double mean = 0.0;         ///< z bar
  double bootstrap_sd = 0.0; ///< sd of the bootstrap means
  double plugin_sd = 0.0;    ///< sqrt(s^2 / n)
  double jeffreys_df = 0.0;  ///< n - 1
  double jeffreys_scale = 0.0;
  double jeffreys_sd = 0.0;  ///< posterior sd, infinite when n <= 3
  double ks_plugin = 1.0;
  double ks_jeffreys = 1.0;
  bool degenerate = false;  ///< constant input; KS reported as 1
};

PosteriorDemo bootstrap_posterior_demo(std::span<const double> z, std::size_t n_boot, Rng& rng);

// ---------------------------------------------------------------------------

template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace gsbag
