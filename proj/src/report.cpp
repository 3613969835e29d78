#include "gsbag/report.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <ostream>

#include "gsbag/dataio.hpp"

namespace gsbag {
namespace {

std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : "NA"; }

std::vector<const MethodBagging*> present_methods(const BaggingResult& r) {
  std::vector<const MethodBagging*> out;
  if (r.hypergeometric) out.push_back(&*r.hypergeometric);
  if (r.wilcoxon) out.push_back(&*r.wilcoxon);
  return out;
}

}  // namespace

std::string format_real(double value) { return fmt::format("{}", value); }

void write_differential_tsv(std::ostream& out, const std::vector<std::string>& feature_ids,
                            const DifferentialResult& result) {
  out << "feature_id\teffect\tt\tdf\tp\tq\n";
  for (std::size_t i = 0; i < result.size(); ++i) {
    out << feature_ids[i] << '\t' << format_real(result.fit.effect[i]) << '\t'
        << format_real(result.test.t[i]) << '\t' << format_real(result.test.df_total[i]) << '\t'
        << format_real(result.test.p_value[i]) << '\t'
        << (result.q_value.empty() ? std::string("NA") : format_real(result.q_value[i])) << '\n';
  }
}

void write_bagging_tsv(std::ostream& out, const BaggingResult& result) {
  const auto methods = present_methods(result);
  out << "set_id\tset_size";
  for (const auto* m : methods) out << "\tp_observed_" << to_string(m->method);
  for (const auto* m : methods) out << "\tq_set_" << to_string(m->method);
  for (const auto* m : methods) out << "\tr_hat_" << to_string(m->method);
  out << "\tB\talpha\n";
  for (std::size_t l = 0; l < result.set_ids.size(); ++l) {
    out << result.set_ids[l] << '\t' << result.set_sizes[l];
    for (const auto* m : methods) out << '\t' << format_real(m->p_observed[l]);
    for (const auto* m : methods) out << '\t' << format_real(m->q_set[l]);
    for (const auto* m : methods) out << '\t' << format_real(m->r_hat[l]);
    out << '\t' << result.config.B << '\t' << format_real(result.config.alpha) << '\n';
  }
}

void write_interpretation_tsv(std::ostream& out, const BaggingResult& result) {
  out << "set_id\tmethod\tp_observed\tr_hat\tsignificant\tinterpretation\n";
  for (const auto* m : present_methods(result)) {
    for (std::size_t l = 0; l < result.set_ids.size(); ++l) {
      const bool significant = m->p_observed[l] < result.config.alpha;
      out << result.set_ids[l] << '\t' << to_string(m->method) << '\t' << format_real(m->p_observed[l])
          << '\t' << format_real(m->r_hat[l]) << '\t' << (significant ? "yes" : "no") << '\t'
          << consistency_label(significant, m->r_hat[l]) << '\n';
    }
  }
}

void write_pmatrix_json(std::ostream& out, const BaggingResult& result) {
  nlohmann::ordered_json j;
  j["set_ids"] = result.set_ids;
  j["B"] = result.config.B;
  j["alpha"] = result.config.alpha;
  nlohmann::ordered_json matrices = nlohmann::ordered_json::object();
  for (const auto* m : present_methods(result)) matrices[to_string(m->method)] = m->p_matrix;
  j["p_matrix"] = std::move(matrices);
  out << j.dump(1) << '\n';
}

void write_enrichment_tsv(std::ostream& out, const std::vector<std::vector<EnrichmentResult>>& per_method,
                          double pi0_lambda) {
  out << "set_id\tsize\toverlap\tp_value\tq_set\tmethod\n";
  for (const auto& results : per_method) {
    if (results.empty()) continue;
    std::vector<double> p;
    for (const auto& r : results) p.push_back(r.p_value);
    const auto q = qvalues(p, {pi0_lambda, std::nullopt});
    for (std::size_t l = 0; l < results.size(); ++l) {
      const auto& r = results[l];
      out << r.set_id << '\t' << r.set_size << '\t'
          << (r.overlap ? std::to_string(*r.overlap) : std::string("NA")) << '\t'
          << format_real(r.p_value) << '\t' << format_real(q[l]) << '\t' << to_string(r.method) << '\n';
    }
  }
}

void write_excluded_tsv(std::ostream& out, const std::vector<ExcludedSet>& excluded) {
  out << "set_id\tsize\n";
  for (const auto& e : excluded) out << e.id << '\t' << e.size << '\n';
}

void write_simulation1_tsv(std::ostream& out, const Simulation1Result& result) {
  out << "set_id\tspike_fraction\tmethod\tsignificance_frequency\tmean_r_hat\n";
  for (const auto& m : result.methods)
    for (std::size_t l = 0; l < result.set_ids.size(); ++l)
      out << result.set_ids[l] << '\t' << format_real(result.spike_fraction[l]) << '\t'
          << to_string(m.method) << '\t' << format_real(m.significance_frequency[l]) << '\t'
          << format_real(m.mean_r_hat[l]) << '\n';
}

void write_simulation2_tsv(std::ostream& out, const Simulation2Result& result) {
  out << "pair\tmethod\tn_significant\trho_r_hat_all\trho_p_all\trho_r_hat_significant\trho_p_significant\n";
  for (const auto& m : result.methods)
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      const auto& pc = m.pairs[k];
      out << k + 1 << '\t' << to_string(m.method) << '\t' << pc.n_significant << '\t'
          << format_optional(pc.r_hat_all) << '\t' << format_optional(pc.p_all) << '\t'
          << format_optional(pc.r_hat_significant) << '\t' << format_optional(pc.p_significant) << '\n';
    }
}

}  // namespace gsbag
