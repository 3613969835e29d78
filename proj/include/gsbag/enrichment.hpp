#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gsbag {

struct AnalysisBundle;

enum class EnrichmentMethod { hypergeometric, wilcoxon };

std::string to_string(EnrichmentMethod method);

/// Upper tail P(X >= overlap) for X ~ Hypergeometric(universe, set_size, significant_total).
/// Throws std::invalid_argument for an inconsistent 2x2 table.
double hypergeometric_test(std::int64_t universe, std::int64_t set_size,
                           std::int64_t significant_total, std::int64_t overlap);

/// What "larger rank" means for the mean-rank test.
enum class RankAlternative {
  absolute,  ///< rank |statistic|: enrichment in either direction
  up,        ///< rank statistic: set members shifted upward
  down,      ///< rank -statistic: set members shifted downward
};

/// Universe statistics ranked once and shared by every set test.
struct RankedUniverse {
  std::vector<double> ranks;
  double tie_term = 0.0;
  bool has_ties = false;
  std::size_t size() const { return ranks.size(); }
};

RankedUniverse rank_universe(std::span<const double> statistics,
                             RankAlternative alternative = RankAlternative::absolute);

/// Upper-tail null distributions of the Mann-Whitney U statistic, keyed by
/// (universe size, smaller group size). Not thread-safe; use one per thread.
class WilcoxonExactCache {
 public:
  /// P(U >= u) for integer u.
  double upper_tail(std::size_t universe, std::size_t smaller, std::int64_t u);

 private:
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> tails_;
};

/// Largest smaller-group size for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactMaxSize = 8;

/// One-sided rank-sum test that set members carry larger ranks than the rest.
/// `members` are positions into the ranked universe. Exact when the smaller
/// group has at most 8 members and there are no ties; otherwise a normal
/// approximation with tie-corrected variance and continuity correction.
double wilcoxon_mean_rank_test(const RankedUniverse& ranked, std::span<const std::size_t> members,
                               WilcoxonExactCache* cache = nullptr);
double wilcoxon_mean_rank_test(std::span<const double> statistics,
                               std::span<const std::size_t> members,
                               RankAlternative alternative = RankAlternative::absolute);

struct EnrichmentResult {
  std::string set_id;
  std::size_t set_size = 0;
  std::optional<std::size_t> overlap;  ///< hypergeometric only
  double p_value = 1.0;
  EnrichmentMethod method = EnrichmentMethod::hypergeometric;
};

/// Per-set p-values over the bundle universe.
///
/// `statistics` and `significant` are indexed by feature (bundle.matrix rows).
/// The hypergeometric test uses the significance flags; the rank test uses
/// the statistics. A set covering the whole universe gets p = 1.
std::vector<EnrichmentResult> enrich_all_sets(const AnalysisBundle& bundle,
                                              std::span<const double> statistics,
                                              std::span<const std::uint8_t> significant,
                                              EnrichmentMethod method,
                                              RankAlternative alternative = RankAlternative::absolute);

/// Convenience: per-set p-values only, in bundle set order.
std::vector<double> enrichment_pvalues(const AnalysisBundle& bundle,
                                       std::span<const double> statistics,
                                       std::span<const std::uint8_t> significant,
                                       EnrichmentMethod method,
                                       RankAlternative alternative = RankAlternative::absolute);

}  // namespace gsbag
