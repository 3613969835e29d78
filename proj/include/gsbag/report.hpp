#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gsbag/bagging.hpp"
#include "gsbag/diffexpr.hpp"
#include "gsbag/enrichment.hpp"
#include "gsbag/simulation.hpp"

namespace gsbag {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// feature_id, effect, t, df, p, q
void write_differential_tsv(std::ostream& out, const std::vector<std::string>& feature_ids,
                            const DifferentialResult& result);

/// set_id, set_size, p_observed_<m>..., q_set_<m>..., r_hat_<m>..., B, alpha
void write_bagging_tsv(std::ostream& out, const BaggingResult& result);

/// set_id, method, p_observed, r_hat, significant, interpretation
void write_interpretation_tsv(std::ostream& out, const BaggingResult& result);

/// {"set_ids": [...], "B": .., "alpha": .., "p_matrix": {"hyper": [[...], ...]}}
void write_pmatrix_json(std::ostream& out, const BaggingResult& result);

/// set_id, size, overlap, p_value, q_set, method (one row per set and method)
void write_enrichment_tsv(std::ostream& out, const std::vector<std::vector<EnrichmentResult>>& per_method,
                          double pi0_lambda);

void write_excluded_tsv(std::ostream& out, const std::vector<ExcludedSet>& excluded);

/// set_id, spike_fraction, method, significance_frequency, mean_r_hat
void write_simulation1_tsv(std::ostream& out, const Simulation1Result& result);

/// pair, method, n_significant, rho_r_hat_all, rho_p_all, rho_r_hat_significant, rho_p_significant
void write_simulation2_tsv(std::ostream& out, const Simulation2Result& result);

}  // namespace gsbag
