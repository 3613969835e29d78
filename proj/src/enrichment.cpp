#include "gsbag/enrichment.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsbag/dataio.hpp"
#include "gsbag/ranks.hpp"

namespace gsbag {
namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  using boost::math::lgamma;
  return lgamma(static_cast<double>(n + 1)) - lgamma(static_cast<double>(k + 1)) -
         lgamma(static_cast<double>(n - k + 1));
}

// Coefficients of the Gaussian binomial [universe choose smaller]_q, i.e. the
// frequencies of U = 0..smaller*(universe-smaller), converted to upper tails.
std::vector<double> mann_whitney_upper_tail(std::size_t universe, std::size_t smaller) {
  const std::size_t m = smaller;
  const std::size_t rest = universe - m;
  const std::size_t degree = m * rest;
  std::vector<double> c(degree + m + 1, 0.0);
  c[0] = 1.0;
  std::size_t deg = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t a = rest + i;
    for (std::size_t j = deg + a; j >= a; --j) c[j] -= c[j - a];
    deg += a;
    for (std::size_t j = i; j <= deg; ++j) c[j] += c[j - i];
    deg -= i;
  }
  c.resize(degree + 1);
  std::vector<double> tail(degree + 2, 0.0);
  double acc = 0.0;
  for (std::size_t j = degree + 1; j-- > 0;) {
    acc += std::max(c[j], 0.0);
    tail[j] = acc;
  }
  const double total = acc;
  for (double& t : tail) t = std::min(1.0, t / total);
  return tail;
}

}  // namespace

std::string to_string(EnrichmentMethod method) {
  return method == EnrichmentMethod::hypergeometric ? "hyper" : "wilcox";
}

double hypergeometric_test(std::int64_t universe, std::int64_t set_size,
                           std::int64_t significant_total, std::int64_t overlap) {
  const std::int64_t n_all = universe, k_set = set_size, n_sig = significant_total, k = overlap;
  if (n_all < 0 || k_set < 0 || n_sig < 0 || k < 0 || k_set > n_all || n_sig > n_all ||
      k > std::min(k_set, n_sig) || k < std::max<std::int64_t>(0, n_sig + k_set - n_all))
    throw std::invalid_argument(fmt::format(
        "inconsistent 2x2 table: universe={} set_size={} significant={} overlap={}", n_all, k_set,
        n_sig, k));

  const std::int64_t lower = std::max<std::int64_t>(0, n_sig + k_set - n_all);
  const std::int64_t upper = std::min(k_set, n_sig);
  if (k <= lower) return 1.0;

  // log pmf at k, then the ratio recurrence up to the end of the support
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(upper - k + 1));
  double lp = log_choose(k_set, k) + log_choose(n_all - k_set, n_sig - k) - log_choose(n_all, n_sig);
  for (std::int64_t x = k; x <= upper; ++x) {
    log_terms.push_back(lp);
    if (x == upper) break;
    lp += std::log(static_cast<double>((k_set - x) * (n_sig - x))) -
          std::log(static_cast<double>((x + 1) * (n_all - k_set - n_sig + x + 1)));
  }
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  std::vector<double> scaled;
  scaled.reserve(log_terms.size());
  for (double t : log_terms) scaled.push_back(std::exp(t - top));
  std::sort(scaled.begin(), scaled.end());
  double sum = 0.0;
  for (double s : scaled) sum += s;
  return std::clamp(std::exp(top) * sum, 0.0, 1.0);
}

RankedUniverse rank_universe(std::span<const double> statistics, RankAlternative alternative) {
  std::vector<double> keyed(statistics.begin(), statistics.end());
  for (double& v : keyed) {
    if (!std::isfinite(v)) throw std::invalid_argument("rank test statistics must be finite");
    switch (alternative) {
      case RankAlternative::absolute: v = std::fabs(v); break;
      case RankAlternative::up: break;
      case RankAlternative::down: v = -v; break;
    }
  }
  RankInfo info = midranks(keyed);
  return {std::move(info.ranks), info.tie_term, info.has_ties};
}

double WilcoxonExactCache::upper_tail(std::size_t universe, std::size_t smaller, std::int64_t u) {
  auto key = std::make_pair(universe, smaller);
  auto it = tails_.find(key);
  if (it == tails_.end()) it = tails_.emplace(key, mann_whitney_upper_tail(universe, smaller)).first;
  const auto& tail = it->second;
  if (u <= 0) return 1.0;
  if (static_cast<std::size_t>(u) >= tail.size()) return 0.0;
  return tail[static_cast<std::size_t>(u)];
}

double wilcoxon_mean_rank_test(const RankedUniverse& ranked, std::span<const std::size_t> members,
                               WilcoxonExactCache* cache) {
  const std::size_t n_total = ranked.size();
  const std::size_t n_in = members.size();
  if (n_in == 0 || n_in >= n_total)
    throw std::invalid_argument(
        fmt::format("rank test needs 1 <= set size < universe size (got {} of {})", n_in, n_total));
  const std::size_t n_out = n_total - n_in;

  double rank_sum = 0.0;
  for (std::size_t pos : members) {
    if (pos >= n_total) throw std::invalid_argument("set member outside the universe");
    rank_sum += ranked.ranks[pos];
  }
  const double n1 = static_cast<double>(n_in);
  const double n2 = static_cast<double>(n_out);
  const double u = rank_sum - n1 * (n1 + 1.0) / 2.0;

  if (!ranked.has_ties && std::min(n_in, n_out) <= kWilcoxonExactMaxSize) {
    WilcoxonExactCache local;
    WilcoxonExactCache& c = cache ? *cache : local;
    return c.upper_tail(n_total, std::min(n_in, n_out), std::llround(u));
  }

  const double n = static_cast<double>(n_total);
  const double variance = n1 * n2 / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) return 1.0;
  const double z = (u - n1 * n2 / 2.0 - 0.5) / std::sqrt(variance);
  return std::clamp(0.5 * std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

double wilcoxon_mean_rank_test(std::span<const double> statistics,
                               std::span<const std::size_t> members, RankAlternative alternative) {
  const RankedUniverse ranked = rank_universe(statistics, alternative);
  return wilcoxon_mean_rank_test(ranked, members);
}

std::vector<EnrichmentResult> enrich_all_sets(const AnalysisBundle& bundle,
                                              std::span<const double> statistics,
                                              std::span<const std::uint8_t> significant,
                                              EnrichmentMethod method, RankAlternative alternative) {
  const std::size_t n_features = bundle.matrix.n_features();
  const std::size_t n_universe = bundle.universe.size();
  std::vector<EnrichmentResult> results;
  results.reserve(bundle.sets.size());

  if (method == EnrichmentMethod::hypergeometric) {
    if (significant.size() != n_features)
      throw std::invalid_argument("significance flags are not aligned with the features");
    std::int64_t n_sig = 0;
    for (std::size_t f : bundle.universe) n_sig += significant[f] ? 1 : 0;
    for (const auto& set : bundle.sets) {
      std::size_t overlap = 0;
      for (std::size_t f : set.features) overlap += significant[f] ? 1 : 0;
      const double p = hypergeometric_test(static_cast<std::int64_t>(n_universe),
                                           static_cast<std::int64_t>(set.size()), n_sig,
                                           static_cast<std::int64_t>(overlap));
      results.push_back({set.id, set.size(), overlap, p, method});
    }
    return results;
  }

  if (statistics.size() != n_features)
    throw std::invalid_argument("statistics are not aligned with the features");
  std::vector<double> universe_stats(n_universe);
  for (std::size_t pos = 0; pos < n_universe; ++pos) universe_stats[pos] = statistics[bundle.universe[pos]];
  const RankedUniverse ranked = rank_universe(universe_stats, alternative);
  WilcoxonExactCache cache;
  for (const auto& set : bundle.sets) {
    const double p = set.size() >= n_universe
                         ? 1.0
                         : wilcoxon_mean_rank_test(ranked, set.universe_positions, &cache);
    results.push_back({set.id, set.size(), std::nullopt, p, method});
  }
  return results;
}

std::vector<double> enrichment_pvalues(const AnalysisBundle& bundle,
                                       std::span<const double> statistics,
                                       std::span<const std::uint8_t> significant,
                                       EnrichmentMethod method, RankAlternative alternative) {
  auto results = enrich_all_sets(bundle, statistics, significant, method, alternative);
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  return p;
}

}  // namespace gsbag
