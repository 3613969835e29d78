#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gsbag/bagging.hpp"
#include "gsbag/cli.hpp"
#include "gsbag/dataio.hpp"
#include "gsbag/diffexpr.hpp"
#include "gsbag/enrichment.hpp"
#include "gsbag/error.hpp"
#include "gsbag/simulation.hpp"

namespace py = pybind11;
using namespace gsbag;

namespace {

UniversePolicy parse_universe(const std::string& name) {
  if (name == "annotated") return UniversePolicy::annotated;
  if (name == "all") return UniversePolicy::all_features;
  if (name == "in-sets") return UniversePolicy::in_sets;
  throw InputError("unknown universe policy: " + name);
}

MethodSelection parse_method(const std::string& name) {
  if (name == "hyper") return MethodSelection::hypergeometric;
  if (name == "wilcox") return MethodSelection::wilcoxon;
  if (name == "both") return MethodSelection::both;
  throw InputError("unknown method: " + name);
}

RankAlternative parse_alternative(const std::string& name) {
  if (name == "abs") return RankAlternative::absolute;
  if (name == "up") return RankAlternative::up;
  if (name == "down") return RankAlternative::down;
  throw InputError("unknown rank alternative: " + name);
}

py::dict method_dict(const MethodBagging& m) {
  py::dict d;
  d["p_observed"] = m.p_observed;
  d["q_set"] = m.q_set;
  d["counts"] = m.counts;
  d["r_hat"] = m.r_hat;
  if (!m.p_matrix.empty()) d["p_matrix"] = m.p_matrix;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gene set bagging: replication probabilities for gene set enrichment";
  m.attr("__version__") = kVersion;

  // translators run newest first, so the subclass is registered last
  const auto& input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DesignError>(m, "DesignError", input_error.ptr());

  py::class_<AnalysisBundle>(m, "Bundle")
      .def_property_readonly("feature_ids", [](const AnalysisBundle& b) { return b.matrix.feature_ids; })
      .def_property_readonly("sample_ids", [](const AnalysisBundle& b) { return b.matrix.sample_ids; })
      .def_property_readonly("values", [](const AnalysisBundle& b) { return b.matrix.values; })
      .def_property_readonly("group", [](const AnalysisBundle& b) { return b.phenotype.group; })
      .def_property_readonly("levels", [](const AnalysisBundle& b) { return b.phenotype.levels; })
      .def_property_readonly("set_ids",
                             [](const AnalysisBundle& b) {
                               std::vector<std::string> ids;
                               for (const auto& s : b.sets) ids.push_back(s.id);
                               return ids;
                             })
      .def_property_readonly("universe", [](const AnalysisBundle& b) { return b.universe; })
      .def_property_readonly("excluded_sets", [](const AnalysisBundle& b) {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& e : b.excluded) out.emplace_back(e.id, e.size);
        return out;
      });

  m.def(
      "load_bundle",
      [](const std::string& matrix, const std::string& phenotype, const std::string& group_column,
         const std::string& gmt, const std::string& annotation, std::size_t min_set_size,
         const std::string& universe) {
        const auto mat = parse_expression_matrix(matrix);
        const auto ann = annotation.empty() ? identity_annotation(mat) : parse_annotation(annotation);
        return build_bundle(mat, parse_phenotype(phenotype, group_column), parse_gmt(gmt), ann,
                            {min_set_size, parse_universe(universe)});
      },
      py::arg("matrix"), py::arg("phenotype"), py::arg("group_column"), py::arg("gmt"),
      py::arg("annotation") = "", py::arg("min_set_size") = 5, py::arg("universe") = "annotated",
      "Read and align a matrix, phenotype, GMT collection and optional annotation.");

  m.def(
      "differential",
      [](const Eigen::MatrixXd& values, const std::vector<int>& group, const Eigen::MatrixXd& covariates) {
        const auto r = differential_analysis(values, make_design(group, covariates));
        py::dict d;
        d["effect"] = r.fit.effect;
        d["t"] = r.test.t;
        d["df"] = r.test.df_total;
        d["p"] = r.test.p_value;
        d["q"] = r.q_value;
        d["d0"] = r.moderation.d0;
        d["s0_sq"] = r.moderation.s0_sq;
        return d;
      },
      py::arg("values"), py::arg("group"), py::arg("covariates") = Eigen::MatrixXd(),
      "Moderated t test of the group effect for every row of a features x samples matrix.");

  m.def("hypergeometric_test", &hypergeometric_test, py::arg("universe"), py::arg("set_size"),
        py::arg("significant_total"), py::arg("overlap"), "Upper tail P(X >= overlap).");

  m.def(
      "wilcoxon_test",
      [](const std::vector<double>& statistics, const std::vector<std::size_t>& members,
         const std::string& alternative) {
        return wilcoxon_mean_rank_test(statistics, members, parse_alternative(alternative));
      },
      py::arg("statistics"), py::arg("members"), py::arg("alternative") = "abs",
      "One-sided rank-sum test that members carry larger ranks.");

  m.def(
      "qvalues",
      [](const std::vector<double>& p, double lambda, std::optional<double> pi0) {
        return qvalues(p, {lambda, pi0});
      },
      py::arg("p"), py::arg("pi0_lambda") = 0.5, py::arg("pi0") = py::none());

  m.def("replication_probability", &replication_probability, py::arg("p_matrix"), py::arg("alpha"));

  m.def(
      "run_bagging",
      [](const AnalysisBundle& bundle, int B, double alpha, double alpha_gene, const std::string& method,
         const std::string& gene_criterion, std::uint64_t seed, int threads, bool retain_pmatrix) {
        BaggingConfig c;
        c.B = B;
        c.alpha = alpha;
        c.alpha_gene = alpha_gene;
        c.method = parse_method(method);
        if (gene_criterion != "p" && gene_criterion != "q")
          throw InputError("unknown gene criterion: " + gene_criterion);
        c.gene_criterion = gene_criterion == "q" ? GeneCriterion::q_value : GeneCriterion::raw_p;
        c.seed = seed;
        c.threads = threads;
        c.retain_pmatrix = retain_pmatrix;
        BaggingResult r;
        {
          py::gil_scoped_release release;
          r = run_bagging(bundle, c);
        }
        py::dict d;
        d["set_ids"] = r.set_ids;
        d["set_sizes"] = r.set_sizes;
        d["B"] = B;
        d["alpha"] = alpha;
        if (r.hypergeometric) d["hyper"] = method_dict(*r.hypergeometric);
        if (r.wilcoxon) d["wilcox"] = method_dict(*r.wilcoxon);
        return d;
      },
      py::arg("bundle"), py::arg("B") = 100, py::arg("alpha") = 0.05, py::arg("alpha_gene") = 0.05,
      py::arg("method") = "both", py::arg("gene_criterion") = "p", py::arg("seed") = 1, py::arg("threads") = 1,
      py::arg("retain_pmatrix") = false,
      "Observed set p-values and bootstrap replication probabilities.");

  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));

  m.def(
      "posterior_demo",
      [](const std::vector<double>& z, std::size_t n_boot, std::uint64_t seed) {
        Rng rng(seed);
        const auto r = bootstrap_posterior_demo(z, n_boot, rng);
        py::dict d;
        d["bootstrap_means"] = r.bootstrap_means;
        d["mean"] = r.mean;
        d["bootstrap_sd"] = r.bootstrap_sd;
        d["plugin_sd"] = r.plugin_sd;
        d["jeffreys_sd"] = r.jeffreys_sd;
        d["ks_plugin"] = r.ks_plugin;
        d["ks_jeffreys"] = r.ks_jeffreys;
        return d;
      },
      py::arg("z"), py::arg("n_boot") = 2000, py::arg("seed") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a gsbag command; returns (exit code, stdout, stderr).");
}
