#include "gsbag/simulation.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "gsbag/error.hpp"
#include "gsbag/parallel.hpp"
#include "gsbag/ranks.hpp"

namespace gsbag {
namespace {

constexpr std::uint64_t kSim1 = 1;
constexpr std::uint64_t kSim2 = 2;

// k distinct indices from [0, n), returned in ascending order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double normal_draw(Rng& rng, double mean, double sd) {
  if (sd == 0.0) return mean;
  boost::random::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

ReplicateSummary summarize_replicate(const BaggingResult& r, EnrichmentMethod method) {
  const auto& m = r.get(method);
  return {m.p_observed, m.r_hat};
}

std::optional<double> try_spearman(std::span<const double> x, std::span<const double> y) {
  try {
    return spearman(x, y);
  } catch (const InputError&) {
    return std::nullopt;
  }
}

}  // namespace

void SimulationSpec::validate() const {
  if (n_sets < 1) throw InputError("simulation needs at least one gene set");
  if (n_cases < 2 || n_controls < 2) throw InputError("simulation needs at least 2 cases and 2 controls");
  if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw InputError("noise sd must be positive");
  if (!(beta_sd >= 0.0) || !std::isfinite(beta_sd)) throw InputError("beta sd must be non-negative");
  if (!std::isfinite(noise_mean) || !std::isfinite(beta_mean)) throw InputError("means must be finite");
}

SimulationTruth draw_truth(const GeneSetCollection& collection, const SimulationSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.n_sets > collection.sets.size())
    throw InputError(fmt::format("simulation asks for {} sets but the collection has {}", spec.n_sets,
                                 collection.sets.size()));

  SimulationTruth truth;
  for (std::size_t idx : sample_without_replacement(collection.sets.size(), spec.n_sets, rng))
    truth.sets.sets.push_back(collection.sets[idx]);

  std::set<std::string> genes;
  for (const auto& s : truth.sets.sets) genes.insert(s.genes.begin(), s.genes.end());
  truth.genes.assign(genes.begin(), genes.end());
  if (spec.n_spiked_genes > truth.genes.size())
    throw InputError(fmt::format("cannot spike {} genes: sampled sets cover only {}",
                                 spec.n_spiked_genes, truth.genes.size()));

  truth.beta.assign(truth.genes.size(), 0.0);
  std::unordered_map<std::string, bool> spiked;
  for (std::size_t idx : sample_without_replacement(truth.genes.size(), spec.n_spiked_genes, rng)) {
    truth.spiked_genes.push_back(truth.genes[idx]);
    spiked[truth.genes[idx]] = true;
  }
  for (std::size_t i = 0; i < truth.genes.size(); ++i)
    if (spiked.count(truth.genes[i])) truth.beta[i] = normal_draw(rng, spec.beta_mean, spec.beta_sd);

  for (const auto& s : truth.sets.sets) {
    std::size_t hit = 0;
    for (const auto& g : s.genes) hit += spiked.count(g);
    truth.spike_fraction.push_back(static_cast<double>(hit) / static_cast<double>(s.genes.size()));
  }

  // One feature per gene; controls first, then cases.
  ExpressionMatrix layout;
  layout.feature_ids = truth.genes;
  const std::size_t n = spec.n_controls + spec.n_cases;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < n; ++j) {
    layout.sample_ids.push_back(fmt::format("s{}", j + 1));
    labels.emplace_back(j < spec.n_controls ? "0" : "1");
  }
  layout.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(truth.genes.size()),
                                        static_cast<Eigen::Index>(n));
  const PhenotypeTable phenotype = make_phenotype(layout.sample_ids, labels);
  truth.layout = build_bundle(layout, phenotype, truth.sets, identity_annotation(layout),
                              BundleOptions{1, UniversePolicy::annotated});
  return truth;
}

SimulatedDataset generate_dataset(const SimulationTruth& truth, const SimulationSpec& spec, Rng& rng) {
  SimulatedDataset ds;
  ds.bundle = truth.layout;
  ds.spiked_genes = truth.spiked_genes;
  ds.spike_fraction = truth.spike_fraction;
  auto& values = ds.bundle.matrix.values;
  const auto& group = ds.bundle.phenotype.group;
  boost::random::normal_distribution<double> noise(spec.noise_mean, spec.noise_sd);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double beta = truth.beta[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      values(i, j) = beta * group[static_cast<std::size_t>(j)] + noise(rng);
  }
  return ds;
}

SimulatedDataset spike_in_dataset(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  Rng& rng) {
  const SimulationTruth truth = draw_truth(collection, spec, rng);
  return generate_dataset(truth, spec, rng);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: vectors differ in length");
  if (x.size() < 2) throw InputError("spearman: need at least 2 observations");
  const auto rx = midranks(x).ranks;
  const auto ry = midranks(y).ranks;
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // midranks always average to (n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InputError("spearman: correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ks_uniform(std::span<const double> p) {
  return ks_distance(std::vector<double>(p.begin(), p.end()),
                     [](double v) { return std::clamp(v, 0.0, 1.0); });
}

Simulation1Result run_simulation1(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  std::size_t n_datasets, const BaggingConfig& bagging, int threads) {
  if (n_datasets < 2)
    throw InputError("simulation 1 needs at least 2 datasets for a correlation to be defined");
  bagging.validate();
  Rng truth_rng = Rng::substream(spec.seed, StreamTag::sim_truth, {kSim1});
  const SimulationTruth truth = draw_truth(collection, spec, truth_rng);
  const auto methods = bagging.methods();
  const std::size_t n_sets = truth.layout.sets.size();

  std::vector<BaggingResult> runs(n_datasets);
  parallel_for(n_datasets, threads, [&](std::size_t d) {
    Rng rng = Rng::substream(spec.seed, StreamTag::sim_dataset, {kSim1, d});
    const SimulatedDataset ds = generate_dataset(truth, spec, rng);
    BaggingConfig config = bagging;
    config.threads = 1;
    config.retain_pmatrix = false;
    config.seed = Rng::substream(spec.seed, StreamTag::sim_bagging, {kSim1, d})();
    runs[d] = run_bagging(ds.bundle, config);
  });

  Simulation1Result out;
  out.n_datasets = n_datasets;
  out.spike_fraction = truth.spike_fraction;
  for (const auto& s : truth.layout.sets) out.set_ids.push_back(s.id);
  for (EnrichmentMethod method : methods) {
    Simulation1Method sm{method, std::vector<double>(n_sets, 0.0), std::vector<double>(n_sets, 0.0), {}};
    for (const auto& run : runs) {
      const auto& m = run.get(method);
      for (std::size_t l = 0; l < n_sets; ++l) {
        sm.significance_frequency[l] += m.p_observed[l] < bagging.alpha ? 1.0 : 0.0;
        sm.mean_r_hat[l] += m.r_hat[l];
      }
    }
    for (std::size_t l = 0; l < n_sets; ++l) {
      sm.significance_frequency[l] /= static_cast<double>(n_datasets);
      sm.mean_r_hat[l] /= static_cast<double>(n_datasets);
    }
    sm.spearman = try_spearman(sm.mean_r_hat, sm.significance_frequency);
    out.methods.push_back(std::move(sm));
  }
  return out;
}

PairCorrelations compare_replicates(const ReplicateSummary& a, const ReplicateSummary& b, double alpha) {
  const std::size_t n = a.p_observed.size();
  if (b.p_observed.size() != n || a.r_hat.size() != n || b.r_hat.size() != n)
    throw InputError("replicates have different numbers of sets");
  PairCorrelations pc;
  pc.r_hat_all = try_spearman(a.r_hat, b.r_hat);
  pc.p_all = try_spearman(a.p_observed, b.p_observed);

  std::vector<double> ra, rb, pa, pb;
  for (std::size_t l = 0; l < n; ++l) {
    if (std::min(a.p_observed[l], b.p_observed[l]) >= alpha) continue;
    ra.push_back(a.r_hat[l]);
    rb.push_back(b.r_hat[l]);
    pa.push_back(a.p_observed[l]);
    pb.push_back(b.p_observed[l]);
  }
  pc.n_significant = ra.size();
  if (ra.size() >= 2) {
    pc.r_hat_significant = try_spearman(ra, rb);
    pc.p_significant = try_spearman(pa, pb);
  }
  return pc;
}

Distribution summarize(std::vector<double> values) {
  Distribution d;
  d.n = values.size();
  if (values.empty()) {
    d.median = d.q1 = d.q3 = std::numeric_limits<double>::quiet_NaN();
    return d;
  }
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  d.q1 = quantile(0.25);
  d.median = quantile(0.5);
  d.q3 = quantile(0.75);
  return d;
}

Simulation2Result run_simulation2(const GeneSetCollection& collection, const SimulationSpec& spec,
                                  std::size_t n_pairs, const BaggingConfig& bagging, int threads) {
  if (n_pairs < 1) throw InputError("simulation 2 needs at least one pair");
  bagging.validate();
  const auto methods = bagging.methods();

  std::vector<std::array<BaggingResult, 2>> runs(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t k) {
    Rng truth_rng = Rng::substream(spec.seed, StreamTag::sim_truth, {kSim2, k});
    const SimulationTruth truth = draw_truth(collection, spec, truth_rng);
    for (std::uint64_t side = 0; side < 2; ++side) {
      Rng rng = Rng::substream(spec.seed, StreamTag::sim_dataset, {kSim2, k, side});
      const SimulatedDataset ds = generate_dataset(truth, spec, rng);
      BaggingConfig config = bagging;
      config.threads = 1;
      config.retain_pmatrix = false;
      config.seed = Rng::substream(spec.seed, StreamTag::sim_bagging, {kSim2, k, side})();
      runs[k][side] = run_bagging(ds.bundle, config);
    }
  });

  Simulation2Result out;
  out.n_pairs = n_pairs;
  for (EnrichmentMethod method : methods) {
    Simulation2Method sm{method, {}, {}, {}, {}, {}};
    std::vector<double> r_all, p_all, r_sig, p_sig;
    for (const auto& pair : runs) {
      auto pc = compare_replicates(summarize_replicate(pair[0], method),
                                   summarize_replicate(pair[1], method), bagging.alpha);
      if (pc.r_hat_all) r_all.push_back(*pc.r_hat_all);
      if (pc.p_all) p_all.push_back(*pc.p_all);
      if (pc.r_hat_significant) r_sig.push_back(*pc.r_hat_significant);
      if (pc.p_significant) p_sig.push_back(*pc.p_significant);
      sm.pairs.push_back(pc);
    }
    sm.r_hat_all = summarize(r_all);
    sm.p_all = summarize(p_all);
    sm.r_hat_significant = summarize(r_sig);
    sm.p_significant = summarize(p_sig);
    out.methods.push_back(std::move(sm));
  }
  return out;
}

PosteriorDemo bootstrap_posterior_demo(std::span<const double> z, std::size_t n_boot, Rng& rng) {
  if (z.size() < 5) throw InputError("posterior demo needs at least 5 observations");
  if (n_boot < 100) throw InputError("posterior demo needs at least 100 bootstrap draws");
  for (double v : z)
    if (!std::isfinite(v)) throw InputError("posterior demo: non-finite observation");

  const std::size_t n = z.size();
  const double nd = static_cast<double>(n);
  PosteriorDemo demo;
  demo.mean = std::accumulate(z.begin(), z.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : z) ss += (v - demo.mean) * (v - demo.mean);
  demo.plugin_sd = std::sqrt(ss / nd / nd);
  demo.jeffreys_df = nd - 1.0;
  demo.jeffreys_scale = std::sqrt(ss / (nd * (nd - 1.0)));
  demo.jeffreys_sd = demo.jeffreys_df > 2.0
                         ? demo.jeffreys_scale * std::sqrt(demo.jeffreys_df / (demo.jeffreys_df - 2.0))
                         : std::numeric_limits<double>::infinity();

  demo.bootstrap_means.reserve(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += z[rng.uniform_index(n)];
    demo.bootstrap_means.push_back(sum / nd);
  }
  {
    const double bm = std::accumulate(demo.bootstrap_means.begin(), demo.bootstrap_means.end(), 0.0) /
                      static_cast<double>(n_boot);
    double bss = 0.0;
    for (double v : demo.bootstrap_means) bss += (v - bm) * (v - bm);
    demo.bootstrap_sd = std::sqrt(bss / static_cast<double>(n_boot - 1));
  }

  if (ss == 0.0) {
    demo.degenerate = true;
    // every resample has the same mean; report the point mass exactly
    std::fill(demo.bootstrap_means.begin(), demo.bootstrap_means.end(), demo.mean);
    demo.ks_plugin = demo.ks_jeffreys = 1.0;
    return demo;
  }
  const boost::math::normal_distribution<double> plugin(demo.mean, demo.plugin_sd);
  const boost::math::students_t_distribution<double> jeffreys(demo.jeffreys_df);
  demo.ks_plugin = ks_distance(demo.bootstrap_means, [&](double x) { return boost::math::cdf(plugin, x); });
  demo.ks_jeffreys = ks_distance(demo.bootstrap_means, [&](double x) {
    return boost::math::cdf(jeffreys, (x - demo.mean) / demo.jeffreys_scale);
  });
  return demo;
}

}  // namespace gsbag
