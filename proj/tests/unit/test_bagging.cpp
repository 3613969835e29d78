#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "gsbag/bagging.hpp"
#include "gsbag/dataio.hpp"
#include "gsbag/diffexpr.hpp"
#include "gsbag/enrichment.hpp"
#include "gsbag/error.hpp"
#include "gsbag/simulation.hpp"

namespace gsbag {
namespace {

TEST(StratifiedResample, KeepsDrawsWithinGroups) {
  const std::vector<int> groups = {0, 0, 1, 1};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto idx = stratified_resample_indices(groups, rng);
    ASSERT_EQ(idx.size(), 4u);
    EXPECT_LT(idx[0], 2u);
    EXPECT_LT(idx[1], 2u);
    EXPECT_GE(idx[2], 2u);
    EXPECT_GE(idx[3], 2u);
  }
}

TEST(StratifiedResample, DeterministicPerStream) {
  const std::vector<int> groups = {1, 0, 0, 1, 1, 0, 1};
  Rng a = Rng::substream(3, StreamTag::bagging, {5, 0});
  Rng b = Rng::substream(3, StreamTag::bagging, {5, 0});
  EXPECT_EQ(stratified_resample_indices(groups, a), stratified_resample_indices(groups, b));
}

TEST(StratifiedResample, UniformWithinGroup) {
  const std::vector<int> groups = {0, 0, 0, 1, 1};
  std::vector<int> counts(3, 0);
  Rng rng(17);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto idx = stratified_resample_indices(groups, rng);
    ++counts[idx[0]];
  }
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / draws, 1.0 / 3.0, 0.02);
}

TEST(StratifiedResample, RejectsTinyGroups) {
  Rng rng(1);
  EXPECT_THROW(stratified_resample_indices(std::vector<int>{0, 1, 1}, rng), std::invalid_argument);
  EXPECT_THROW(stratified_resample_indices(std::vector<int>{0, 0, 2, 2}, rng), std::invalid_argument);
}

TEST(ReplicationProbability, CountsStrictlyBelowAlpha) {
  EXPECT_EQ(replication_probability({{0.2, 0.6, 0.04, 0.5}}, 0.05)[0], 0.25);
  EXPECT_EQ(replication_probability({std::vector<double>(100, 0.01)}, 0.05)[0], 1.0);
  EXPECT_EQ(replication_probability({std::vector<double>(100, 0.5)}, 0.05)[0], 0.0);
  EXPECT_EQ(replication_probability({std::vector<double>(10, 0.05)}, 0.05)[0], 0.0);
  EXPECT_EQ(replication_probability({{0.01, 0.8}, {0.9, 0.9}}, 0.05), (std::vector<double>{0.5, 0.0}));
}

TEST(ReplicationProbability, RejectsBadInput) {
  EXPECT_THROW(replication_probability({}, 0.05), InputError);
  EXPECT_THROW(replication_probability({{}}, 0.05), InputError);
  EXPECT_THROW(replication_probability({{0.1, 1.2}}, 0.05), InputError);
}

TEST(ReplicationProbability, MonotoneInAlpha) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::vector<double>> pm(5, std::vector<double>(37));
    for (auto& row : pm)
      for (auto& v : row) v = std::pow(u(gen), 1 + rep % 4);
    std::vector<double> prev(5, 0.0);
    for (int k = 1; k <= 20; ++k) {
      const auto r = replication_probability(pm, 0.05 * k - 0.0001);
      for (std::size_t l = 0; l < 5; ++l) ASSERT_GE(r[l], prev[l]);
      prev = r;
    }
  }
}

TEST(BaggingConfig, Validation) {
  BaggingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.B = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.alpha_gene = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.threads = 0;
  EXPECT_THROW(c.validate(), InputError);
}

BaggingConfig small_config(int B = 100) {
  BaggingConfig c;
  c.B = B;
  c.retain_pmatrix = true;
  return c;
}

TEST(RunBagging, RHatIsCountOverB) {
  const auto bundle = testing::tiny_bundle();
  const auto result = run_bagging(bundle, small_config(37));
  for (auto method : {EnrichmentMethod::hypergeometric, EnrichmentMethod::wilcoxon}) {
    const auto& m = result.get(method);
    ASSERT_EQ(m.r_hat.size(), bundle.sets.size());
    for (std::size_t l = 0; l < m.r_hat.size(); ++l) {
      EXPECT_GE(m.counts[l], 0);
      EXPECT_LE(m.counts[l], 37);
      EXPECT_EQ(m.r_hat[l], m.counts[l] / 37.0);
      EXPECT_EQ(m.r_hat[l] * 37, std::round(m.r_hat[l] * 37));
    }
    EXPECT_EQ(replication_probability(m.p_matrix, 0.05), m.r_hat);
  }
  EXPECT_EQ(result.iterations.size(), 37u);
}

TEST(RunBagging, ObservedPValuesMatchDirectPipeline) {
  const auto bundle = testing::tiny_bundle();
  const auto config = small_config(5);
  const auto result = run_bagging(bundle, config);
  const auto direct = observed_set_pvalues(bundle, config);
  EXPECT_EQ(result.hypergeometric->p_observed, *direct.hypergeometric);
  EXPECT_EQ(result.wilcoxon->p_observed, *direct.wilcoxon);
}

TEST(RunBagging, MatchesFrozenReference) {
  const auto bundle = testing::tiny_bundle();
  const auto result = run_bagging(bundle, small_config(100));
  std::ifstream in(std::string(GSBAG_TEST_DATA_DIR) + "/tiny_expected_rhat.tsv");
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  std::size_t l = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string id;
    double p_hyper, p_wilcox;
    int c_hyper, c_wilcox, B;
    row >> id >> p_hyper >> p_wilcox >> c_hyper >> c_wilcox >> B;
    ASSERT_LT(l, result.set_ids.size());
    EXPECT_EQ(result.set_ids[l], id);
    EXPECT_NEAR(result.hypergeometric->p_observed[l], p_hyper, 1e-9);
    EXPECT_NEAR(result.wilcoxon->p_observed[l], p_wilcox, 1e-9);
    EXPECT_EQ(result.hypergeometric->counts[l], c_hyper) << id;
    EXPECT_EQ(result.wilcoxon->counts[l], c_wilcox) << id;
    ++l;
  }
  EXPECT_EQ(l, result.set_ids.size());
}

TEST(RunBagging, IndependentOfThreadCount) {
  const auto bundle = testing::tiny_bundle();
  auto config = small_config(60);
  const auto one = run_bagging(bundle, config);
  for (int threads : {2, 8}) {
    config.threads = threads;
    const auto many = run_bagging(bundle, config);
    for (auto method : {EnrichmentMethod::hypergeometric, EnrichmentMethod::wilcoxon}) {
      EXPECT_EQ(one.get(method).r_hat, many.get(method).r_hat);
      EXPECT_EQ(one.get(method).p_matrix, many.get(method).p_matrix);
    }
  }
}

TEST(RunBagging, SeedChangesResamples) {
  const auto bundle = testing::tiny_bundle();
  auto config = small_config(30);
  const auto a = run_bagging(bundle, config);
  config.seed = 2;
  const auto b = run_bagging(bundle, config);
  EXPECT_NE(a.wilcoxon->p_matrix, b.wilcoxon->p_matrix);
}

TEST(RunBagging, SingleMethod) {
  const auto bundle = testing::tiny_bundle();
  auto config = small_config(10);
  config.method = MethodSelection::hypergeometric;
  const auto r = run_bagging(bundle, config);
  EXPECT_TRUE(r.hypergeometric.has_value());
  EXPECT_FALSE(r.wilcoxon.has_value());
  EXPECT_THROW(r.get(EnrichmentMethod::wilcoxon), std::logic_error);
}

TEST(RunBagging, QValueGeneCriterionFeedsHypergeometric) {
  const auto bundle = testing::tiny_bundle();
  auto config = small_config(5);
  config.gene_criterion = GeneCriterion::q_value;
  config.alpha_gene = 0.1;
  const auto r = run_bagging(bundle, config);
  const auto diff = differential_analysis(bundle);
  std::vector<std::uint8_t> sig(diff.size());
  for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = diff.q_value[i] < 0.1;
  EXPECT_EQ(r.hypergeometric->p_observed, enrichment_pvalues(bundle, diff.test.t, sig, EnrichmentMethod::hypergeometric));
}

// Two controls with distinct ages and four cases sharing one age: a resample
// that repeats a single control makes age collinear with the group column.
AnalysisBundle collinear_prone_bundle() {
  ExpressionMatrix m;
  m.sample_ids = {"c1", "c2", "k1", "k2", "k3", "k4"};
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneSetCollection sets;
  sets.sets.push_back({"S1", "", {}});
  sets.sets.push_back({"S2", "", {}});
  m.values.resize(40, 6);
  for (int i = 0; i < 40; ++i) {
    m.feature_ids.push_back("g" + std::to_string(i));
    sets.sets[static_cast<std::size_t>(i % 2)].genes.push_back(m.feature_ids.back());
    for (int j = 0; j < 6; ++j) m.values(i, j) = normal(gen) + (i < 10 && j >= 2 ? 2.0 : 0.0);
  }
  Eigen::MatrixXd age(6, 1);
  age << 30, 60, 45, 45, 45, 45;
  const auto pheno = make_phenotype(m.sample_ids, {"control", "control", "case", "case", "case", "case"},
                                    {"age"}, age);
  return build_bundle(m, pheno, sets, identity_annotation(m));
}

TEST(RunBagging, RankDeficientReplicatesAreRedrawn) {
  const auto bundle = collinear_prone_bundle();
  auto config = small_config(40);
  const auto r = run_bagging(bundle, config);
  int redrawn = 0;
  for (const auto& it : r.iterations) {
    EXPECT_GE(it.attempts, 1);
    redrawn += it.attempts > 1;
  }
  EXPECT_GT(redrawn, 5);
  EXPECT_EQ(r.hypergeometric->p_matrix[0].size(), 40u);
  config.threads = 4;
  EXPECT_EQ(run_bagging(bundle, config).wilcoxon->p_matrix, r.wilcoxon->p_matrix);
}

TEST(RunBagging, RedrawBudgetExhaustedIsAnError) {
  const auto bundle = collinear_prone_bundle();
  auto config = small_config(40);
  config.max_redraws = 0;
  EXPECT_THROW(run_bagging(bundle, config), DesignError);
}

TEST(RunBagging, DegenerateFeaturesAreCountedAndKept) {
  auto bundle = testing::tiny_bundle();
  bundle.matrix.values.row(2).setConstant(5.0);
  const auto r = run_bagging(bundle, small_config(20));
  EXPECT_EQ(r.observed_degenerate, 1u);
  for (const auto& it : r.iterations) EXPECT_GE(it.n_degenerate, 1u);
}

TEST(RunBagging, PureNoiseRarelyReplicates) {
  const auto collection = parse_gmt(testing::data_path("simulation/go_like_100.gmt"));
  SimulationSpec spec;
  spec.n_sets = 30;
  spec.n_spiked_genes = 0;
  spec.n_cases = spec.n_controls = 25;
  Rng rng = Rng::substream(9, {1});
  const auto ds = spike_in_dataset(collection, spec, rng);
  auto config = small_config(50);
  config.threads = 2;
  const auto r = run_bagging(ds.bundle, config);
  for (auto method : {EnrichmentMethod::hypergeometric, EnrichmentMethod::wilcoxon}) {
    const auto& rh = r.get(method).r_hat;
    EXPECT_LT(std::accumulate(rh.begin(), rh.end(), 0.0) / static_cast<double>(rh.size()), 0.15);
  }
}

TEST(ConsistencyLabel, FollowsInterpretationTable) {
  const double rows[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const char* significant[] = {"very inconsistent", "very inconsistent", "inconsistent", "somewhat consistent",
                               "very consistent"};
  const char* not_significant[] = {"very consistent", "somewhat consistent", "inconsistent",
                                   "very inconsistent", "very inconsistent"};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(consistency_label(true, rows[i]), significant[i]);
    EXPECT_EQ(consistency_label(false, rows[i]), not_significant[i]);
  }
  EXPECT_EQ(consistency_label(true, 0.8), "somewhat consistent");
  EXPECT_EQ(consistency_label(true, 0.9), "very consistent");
  EXPECT_EQ(consistency_label(false, 0.1), "very consistent");
  EXPECT_THROW(consistency_label(true, 1.5), std::invalid_argument);
}

}  // namespace
}  // namespace gsbag
