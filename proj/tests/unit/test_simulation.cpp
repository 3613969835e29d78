#include <gtest/gtest.h>

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "gsbag/diffexpr.hpp"
#include "gsbag/enrichment.hpp"
#include "gsbag/error.hpp"
#include "gsbag/simulation.hpp"

namespace gsbag {
namespace {

const GeneSetCollection& collection() {
  static const GeneSetCollection c = parse_gmt(testing::data_path("simulation/go_like_100.gmt"));
  return c;
}

TEST(Collection, HundredSetsCover2288Genes) {
  ASSERT_EQ(collection().sets.size(), 100u);
  std::set<std::string> genes;
  for (const auto& s : collection().sets) genes.insert(s.genes.begin(), s.genes.end());
  EXPECT_EQ(genes.size(), 2288u);
  SimulationSpec spec;
  Rng rng(1);
  EXPECT_EQ(draw_truth(collection(), spec, rng).genes.size(), 2288u);
}

TEST(SpikeIn, LayoutAndReproducibility) {
  SimulationSpec spec;
  spec.n_sets = 10;
  spec.n_spiked_genes = 20;
  spec.n_cases = 4;
  spec.n_controls = 3;
  Rng a(5), b(5);
  const auto da = spike_in_dataset(collection(), spec, a);
  const auto db = spike_in_dataset(collection(), spec, b);
  EXPECT_TRUE(da.bundle.matrix == db.bundle.matrix);
  EXPECT_EQ(da.spiked_genes, db.spiked_genes);
  EXPECT_EQ(da.bundle.phenotype.group, (std::vector<int>{0, 0, 0, 1, 1, 1, 1}));
  EXPECT_EQ(da.spiked_genes.size(), 20u);
  EXPECT_EQ(da.bundle.sets.size(), 10u);
  const std::set<std::string> ids(da.bundle.matrix.feature_ids.begin(), da.bundle.matrix.feature_ids.end());
  for (const auto& g : da.spiked_genes) EXPECT_TRUE(ids.count(g));
  for (double f : da.spike_fraction) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(SpikeIn, InfeasibleSpecsThrow) {
  SimulationSpec spec;
  spec.n_sets = 101;
  Rng rng(1);
  EXPECT_THROW(spike_in_dataset(collection(), spec, rng), InputError);
  spec.n_sets = 2;
  spec.n_spiked_genes = 5000;
  EXPECT_THROW(spike_in_dataset(collection(), spec, rng), InputError);
  spec = {};
  spec.n_cases = 1;
  EXPECT_THROW(spike_in_dataset(collection(), spec, rng), InputError);
}

TEST(SpikeIn, FixedEffectIsRecovered) {
  SimulationSpec spec;
  spec.n_sets = 40;
  spec.n_spiked_genes = 500;
  spec.n_cases = spec.n_controls = 100;
  spec.beta_sd = 0.0;
  Rng rng(31);
  const auto ds = spike_in_dataset(collection(), spec, rng);
  const std::set<std::string> spiked(ds.spiked_genes.begin(), ds.spiked_genes.end());
  const auto& m = ds.bundle.matrix;
  int within = 0, total = 0;
  for (std::size_t i = 0; i < m.n_features(); ++i) {
    if (!spiked.count(m.feature_ids[i])) continue;
    const auto row = m.values.row(static_cast<Eigen::Index>(i));
    const double diff = row.tail(100).mean() - row.head(100).mean();
    within += std::fabs(diff - 1.0) <= 0.3;
    ++total;
  }
  EXPECT_EQ(total, 500);
  EXPECT_GE(within, 0.95 * total);
}

TEST(SpikeIn, NullDataRarelyEnriched) {
  SimulationSpec spec;
  spec.n_sets = 30;
  spec.n_spiked_genes = 0;
  spec.n_cases = spec.n_controls = 25;
  std::size_t below = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    Rng rng = Rng::substream(123, {rep});
    const auto ds = spike_in_dataset(collection(), spec, rng);
    const auto diff = differential_analysis(ds.bundle);
    std::vector<std::uint8_t> sig(diff.size());
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = diff.test.p_value[i] < 0.05;
    for (double p : enrichment_pvalues(ds.bundle, diff.test.t, sig, EnrichmentMethod::hypergeometric)) {
      below += p < 0.05;
      ++total;
    }
  }
  EXPECT_LE(static_cast<double>(below) / static_cast<double>(total), 0.08);
}

TEST(Spearman, HandExamples) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {10, 9, 30, 40};
  EXPECT_NEAR(spearman(x, y), 0.8, 1e-15);
  EXPECT_NEAR(spearman(x, x), 1.0, 1e-15);
  const std::vector<double> rev = {4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-15);
  // ties use midranks: ranks (1.5, 1.5, 3, 4) against (1, 2, 3, 4)
  const std::vector<double> tied = {5, 5, 6, 7};
  EXPECT_NEAR(spearman(tied, x), 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
}

TEST(Spearman, UndefinedCasesThrow) {
  const std::vector<double> x = {1, 2, 3}, c = {2, 2, 2}, shorter = {1, 2};
  EXPECT_THROW(spearman(x, c), InputError);
  EXPECT_THROW(spearman(x, shorter), InputError);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), InputError);
}

TEST(Summaries, QuantilesInterpolateLinearly) {
  const auto d = summarize({4, 1, 3, 2});
  EXPECT_EQ(d.n, 4u);
  EXPECT_DOUBLE_EQ(d.median, 2.5);
  EXPECT_DOUBLE_EQ(d.q1, 1.75);
  EXPECT_DOUBLE_EQ(d.q3, 3.25);
  EXPECT_EQ(summarize({}).n, 0u);
}

TEST(Summaries, KsUniform) {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000);
  EXPECT_NEAR(ks_uniform(grid), 0.0005, 1e-12);
  EXPECT_NEAR(ks_uniform(std::vector<double>(10, 0.0)), 1.0, 1e-12);
}

TEST(CompareReplicates, IdenticalReplicatesCorrelatePerfectly) {
  ReplicateSummary a{{0.01, 0.2, 0.03, 0.5, 0.001}, {0.9, 0.1, 0.6, 0.0, 1.0}};
  const auto pc = compare_replicates(a, a, 0.05);
  EXPECT_EQ(*pc.r_hat_all, 1.0);
  EXPECT_EQ(*pc.p_all, 1.0);
  EXPECT_EQ(*pc.r_hat_significant, 1.0);
  EXPECT_EQ(*pc.p_significant, 1.0);
  EXPECT_EQ(pc.n_significant, 3u);
}

TEST(CompareReplicates, EmptySignificantSubsetContributesNothing) {
  ReplicateSummary a{{0.2, 0.3, 0.4}, {0.1, 0.2, 0.0}};
  ReplicateSummary b{{0.5, 0.6, 0.1}, {0.0, 0.3, 0.2}};
  const auto pc = compare_replicates(a, b, 0.05);
  EXPECT_TRUE(pc.p_all.has_value());
  EXPECT_FALSE(pc.r_hat_significant.has_value());
  EXPECT_FALSE(pc.p_significant.has_value());
  EXPECT_EQ(pc.n_significant, 0u);
}

BaggingConfig quick_bagging() {
  BaggingConfig c;
  c.B = 10;
  return c;
}

TEST(Simulation1, NeedsTwoDatasets) {
  SimulationSpec spec;
  EXPECT_THROW(run_simulation1(collection(), spec, 1, quick_bagging()), InputError);
}

TEST(Simulation1, DeterministicAcrossThreads) {
  SimulationSpec spec;
  spec.n_sets = 12;
  spec.n_spiked_genes = 40;
  spec.n_cases = spec.n_controls = 10;
  const auto a = run_simulation1(collection(), spec, 6, quick_bagging(), 1);
  const auto b = run_simulation1(collection(), spec, 6, quick_bagging(), 3);
  ASSERT_EQ(a.methods.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(a.methods[m].mean_r_hat, b.methods[m].mean_r_hat);
    EXPECT_EQ(a.methods[m].significance_frequency, b.methods[m].significance_frequency);
  }
  EXPECT_EQ(a.set_ids.size(), 12u);
}

TEST(Simulation2, DeterministicAcrossThreads) {
  SimulationSpec spec;
  spec.n_sets = 20;
  spec.n_spiked_genes = 100;
  spec.n_cases = spec.n_controls = 8;
  const auto a = run_simulation2(collection(), spec, 4, quick_bagging(), 1);
  const auto b = run_simulation2(collection(), spec, 4, quick_bagging(), 4);
  ASSERT_EQ(a.methods.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    ASSERT_EQ(a.methods[m].pairs.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(a.methods[m].pairs[k].r_hat_all, b.methods[m].pairs[k].r_hat_all);
      EXPECT_EQ(a.methods[m].pairs[k].p_all, b.methods[m].pairs[k].p_all);
    }
  }
}

std::vector<double> standard_normal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  for (auto& v : z) v = normal(rng);
  return z;
}

TEST(PosteriorDemo, ConstantDataIsDegenerate) {
  const std::vector<double> z(20, 3.5);
  Rng rng(1);
  const auto demo = bootstrap_posterior_demo(z, 200, rng);
  EXPECT_TRUE(demo.degenerate);
  EXPECT_EQ(demo.ks_plugin, 1.0);
  for (double m : demo.bootstrap_means) EXPECT_EQ(m, 3.5);
}

TEST(PosteriorDemo, BootstrapMeansApproximatePluginNormal) {
  const auto z = standard_normal(50, 8);
  Rng rng(9);
  const auto demo = bootstrap_posterior_demo(z, 2000, rng);
  EXPECT_LT(demo.ks_plugin, 0.1);
  const double zbar = std::accumulate(z.begin(), z.end(), 0.0) / 50.0;
  const double mean_of_means =
      std::accumulate(demo.bootstrap_means.begin(), demo.bootstrap_means.end(), 0.0) / 2000.0;
  double s2 = 0;
  for (double v : z) s2 += (v - zbar) * (v - zbar);
  s2 /= 49.0;
  EXPECT_NEAR(mean_of_means, zbar, 3 * std::sqrt(s2) / (std::sqrt(50.0) * std::sqrt(2000.0)));
  EXPECT_NEAR(demo.bootstrap_sd, demo.plugin_sd, 0.1 * demo.plugin_sd);
  // the Jeffreys posterior is wider than the plug-in normal
  EXPECT_GT(demo.jeffreys_sd, demo.plugin_sd);
  EXPECT_EQ(demo.jeffreys_df, 49.0);
}

TEST(PosteriorDemo, PermutingDataLeavesDistributionUnchanged) {
  auto z = standard_normal(40, 12);
  Rng r1(100);
  const auto a = bootstrap_posterior_demo(z, 2000, r1);
  std::reverse(z.begin(), z.end());
  Rng r2(200);
  const auto b = bootstrap_posterior_demo(z, 2000, r2);
  EXPECT_DOUBLE_EQ(a.mean, b.mean);
  std::vector<double> sorted_b = b.bootstrap_means;
  std::sort(sorted_b.begin(), sorted_b.end());
  const double d = ks_distance(a.bootstrap_means, [&](double x) {
    return static_cast<double>(std::upper_bound(sorted_b.begin(), sorted_b.end(), x) - sorted_b.begin()) /
           static_cast<double>(sorted_b.size());
  });
  EXPECT_LT(d, 0.07);
}

TEST(PosteriorDemo, RejectsTinyInputs) {
  Rng rng(1);
  EXPECT_THROW(bootstrap_posterior_demo(std::vector<double>{1, 2, 3, 4}, 500, rng), InputError);
  EXPECT_THROW(bootstrap_posterior_demo(standard_normal(10, 1), 50, rng), InputError);
}

}  // namespace
}  // namespace gsbag
