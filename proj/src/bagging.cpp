#include "gsbag/bagging.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <stdexcept>

#include "gsbag/dataio.hpp"
#include "gsbag/error.hpp"
#include "gsbag/parallel.hpp"

namespace gsbag {

void BaggingConfig::validate() const {
  if (B < 1) throw InputError(fmt::format("B must be at least 1 (got {})", B));
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError(fmt::format("alpha must be in (0,1) (got {})", alpha));
  if (!(alpha_gene > 0.0 && alpha_gene < 1.0))
    throw InputError(fmt::format("alpha_gene must be in (0,1) (got {})", alpha_gene));
  if (!(pi0_lambda >= 0.0 && pi0_lambda < 1.0)) throw InputError("pi0 lambda must be in [0,1)");
  if (threads < 1) throw InputError("threads must be at least 1");
  if (max_redraws < 0) throw InputError("max_redraws must be non-negative");
}

std::vector<EnrichmentMethod> BaggingConfig::methods() const {
  switch (method) {
    case MethodSelection::hypergeometric: return {EnrichmentMethod::hypergeometric};
    case MethodSelection::wilcoxon: return {EnrichmentMethod::wilcoxon};
    case MethodSelection::both: break;
  }
  return {EnrichmentMethod::hypergeometric, EnrichmentMethod::wilcoxon};
}

const MethodBagging& BaggingResult::get(EnrichmentMethod method) const {
  const auto& slot = method == EnrichmentMethod::hypergeometric ? hypergeometric : wilcoxon;
  if (!slot) throw std::logic_error("method '" + to_string(method) + "' was not run");
  return *slot;
}

SetPValues set_pvalues(const AnalysisBundle& bundle, const Eigen::Ref<const Eigen::MatrixXd>& values,
                       const Design& design, const BaggingConfig& config) {
  const auto methods = config.methods();
  const bool use_hyper = methods.front() == EnrichmentMethod::hypergeometric;
  const bool use_wilcox = methods.back() == EnrichmentMethod::wilcoxon;

  DifferentialOptions options;
  options.compute_q = use_hyper && config.gene_criterion == GeneCriterion::q_value;
  options.q.lambda = config.pi0_lambda;
  const DifferentialResult diff = differential_analysis(values, design, options);

  SetPValues out;
  out.n_degenerate = diff.test.n_degenerate;
  out.moderation = diff.moderation;
  if (use_hyper) {
    const auto& gene_p = options.compute_q ? diff.q_value : diff.test.p_value;
    std::vector<std::uint8_t> significant(gene_p.size());
    for (std::size_t i = 0; i < gene_p.size(); ++i) significant[i] = gene_p[i] < config.alpha_gene;
    out.hypergeometric = enrichment_pvalues(bundle, diff.test.t, significant,
                                            EnrichmentMethod::hypergeometric);
  }
  if (use_wilcox)
    out.wilcoxon = enrichment_pvalues(bundle, diff.test.t, {}, EnrichmentMethod::wilcoxon,
                                      config.rank_alternative);
  return out;
}

SetPValues observed_set_pvalues(const AnalysisBundle& bundle, const BaggingConfig& config) {
  return set_pvalues(bundle, bundle.matrix.values, make_design(bundle.phenotype), config);
}

std::vector<std::size_t> stratified_resample_indices(std::span<const int> groups, Rng& rng) {
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j] != 0 && groups[j] != 1) throw std::invalid_argument("group codes must be 0 or 1");
    members[static_cast<std::size_t>(groups[j])].push_back(j);
  }
  for (const auto& m : members)
    if (m.size() < 2) throw std::invalid_argument("each group needs at least 2 samples to resample");

  std::vector<std::size_t> out(groups.size());
  for (const auto& m : members)
    for (std::size_t pos : m) out[pos] = m[rng.uniform_index(m.size())];
  return out;
}

std::vector<double> replication_probability(const std::vector<std::vector<double>>& p_matrix,
                                            double alpha) {
  if (p_matrix.empty()) throw InputError("replication_probability: empty p-value matrix");
  std::vector<double> r_hat;
  r_hat.reserve(p_matrix.size());
  for (const auto& row : p_matrix) {
    if (row.empty()) throw InputError("replication_probability: set with zero iterations");
    std::size_t count = 0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("p-value {} outside [0,1]", p));
      if (p < alpha) ++count;
    }
    r_hat.push_back(static_cast<double>(count) / static_cast<double>(row.size()));
  }
  return r_hat;
}

BaggingResult run_bagging(const AnalysisBundle& bundle, const BaggingConfig& config) {
  config.validate();
  if (bundle.sets.empty()) throw InputError("bundle has no gene sets");

  const std::size_t n_sets = bundle.sets.size();
  const auto n_boot = static_cast<std::size_t>(config.B);
  const Design design = make_design(bundle.phenotype);
  const Eigen::MatrixXd& values = bundle.matrix.values;

  BaggingResult result;
  result.config = config;
  for (const auto& s : bundle.sets) {
    result.set_ids.push_back(s.id);
    result.set_sizes.push_back(s.size());
  }

  const SetPValues observed = set_pvalues(bundle, values, design, config);
  result.observed_degenerate = observed.n_degenerate;

  std::vector<SetPValues> boot(n_boot);
  result.iterations.resize(n_boot);
  parallel_for(n_boot, config.threads, [&](std::size_t b) {
    for (int attempt = 0; attempt <= config.max_redraws; ++attempt) {
      Rng rng = Rng::substream(config.seed, StreamTag::bagging,
                               {static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt)});
      const auto idx = stratified_resample_indices(bundle.phenotype.group, rng);
      Design resampled;
      resampled.matrix = design.matrix(idx, Eigen::all);
      resampled.column_names = design.column_names;
      resampled.group_column = design.group_column;
      try {
        boot[b] = set_pvalues(bundle, values(Eigen::all, idx), resampled, config);
      } catch (const DesignError&) {
        continue;
      }
      result.iterations[b] = {attempt + 1, boot[b].n_degenerate};
      return;
    }
    throw DesignError(fmt::format("bootstrap iteration {}: design still rank deficient after {} draws",
                                  b + 1, config.max_redraws + 1));
  });

  for (EnrichmentMethod method : config.methods()) {
    const bool hyper = method == EnrichmentMethod::hypergeometric;
    MethodBagging mb;
    mb.method = method;
    mb.p_observed = hyper ? *observed.hypergeometric : *observed.wilcoxon;
    mb.q_set = qvalues(mb.p_observed, {config.pi0_lambda, std::nullopt});
    mb.counts.assign(n_sets, 0);
    if (config.retain_pmatrix) mb.p_matrix.assign(n_sets, std::vector<double>(n_boot));
    for (std::size_t b = 0; b < n_boot; ++b) {
      const auto& p = hyper ? *boot[b].hypergeometric : *boot[b].wilcoxon;
      for (std::size_t l = 0; l < n_sets; ++l) {
        if (p[l] < config.alpha) ++mb.counts[l];
        if (config.retain_pmatrix) mb.p_matrix[l][b] = p[l];
      }
    }
    mb.r_hat.reserve(n_sets);
    for (int c : mb.counts) mb.r_hat.push_back(static_cast<double>(c) / static_cast<double>(n_boot));
    (hyper ? result.hypergeometric : result.wilcoxon) = std::move(mb);
  }
  return result;
}

std::string consistency_label(bool significant, double r_hat) {
  static const char* const kSignificant[] = {"very inconsistent", "very inconsistent", "inconsistent",
                                             "somewhat consistent", "very consistent"};
  static const char* const kNotSignificant[] = {"very consistent", "somewhat consistent",
                                                "inconsistent", "very inconsistent",
                                                "very inconsistent"};
  if (!(r_hat >= 0.0 && r_hat <= 1.0)) throw std::invalid_argument("r_hat outside [0,1]");
  // nearest of the tabulated values 0, 0.25, 0.5, 0.75, 1
  const auto row = static_cast<std::size_t>(std::floor(r_hat * 4.0 + 0.5));
  return significant ? kSignificant[row] : kNotSignificant[row];
}

}  // namespace gsbag
