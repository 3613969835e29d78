#include "gsbag/cli.hpp"

#include <openssl/evp.h>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gsbag/bagging.hpp"
#include "gsbag/dataio.hpp"
#include "gsbag/error.hpp"
#include "gsbag/report.hpp"
#include "gsbag/simulation.hpp"

#ifndef GSBAG_DATA_DIR
#define GSBAG_DATA_DIR "data"
#endif

namespace gsbag {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

const std::map<std::string, MethodSelection> kMethods = {
    {"hyper", MethodSelection::hypergeometric},
    {"wilcox", MethodSelection::wilcoxon},
    {"both", MethodSelection::both}};
const std::map<std::string, GeneCriterion> kCriteria = {{"p", GeneCriterion::raw_p},
                                                        {"q", GeneCriterion::q_value}};
const std::map<std::string, UniversePolicy> kUniverses = {{"annotated", UniversePolicy::annotated},
                                                          {"all", UniversePolicy::all_features},
                                                          {"in-sets", UniversePolicy::in_sets}};
const std::map<std::string, RankAlternative> kAlternatives = {{"abs", RankAlternative::absolute},
                                                              {"up", RankAlternative::up},
                                                              {"down", RankAlternative::down}};

template <class T>
std::vector<std::string> keys(const std::map<std::string, T>& m) {
  std::vector<std::string> k;
  for (const auto& [name, _] : m) k.push_back(name);
  return k;
}

struct InputOptions {
  std::string matrix, phenotype, group_column, gmt, annotation;
  std::size_t min_set_size = 5;
  std::string universe = "annotated";
};

struct AnalysisOptions {
  std::string method = "both";
  double alpha = 0.05;
  double alpha_gene = 0.05;
  std::string gene_criterion = "p";
  std::string rank_alternative = "abs";
  double pi0_lambda = 0.5;
  std::uint64_t seed = 1;
};

struct RunOptions {
  InputOptions input;
  AnalysisOptions analysis;
  int B = 100;
  int threads = 1;
  bool emit_pmatrix = false;
  std::string out;
};

struct SimulateOptions {
  std::string design = "sim1";
  double scale = 1.0;
  std::string collection = std::string(GSBAG_DATA_DIR) + "/simulation/go_like_100.gmt";
  std::size_t datasets = 0, pairs = 0, sets = 0, spiked = 0, cases = 0, controls = 0;
  int B = 0;
  std::size_t repetitions = 1;
  double noise_mean = 6.0, noise_sd = 1.0, beta_mean = 1.0, beta_sd = 0.5;
  std::size_t n = 50, n_boot = 2000;
  AnalysisOptions analysis;
  int threads = 1;
  std::string out;
};

void add_input_flags(CLI::App& cmd, InputOptions& o) {
  cmd.add_option("--matrix", o.matrix, "Expression matrix TSV (features x samples)")
      ->required()->check(CLI::ExistingFile);
  cmd.add_option("--phenotype", o.phenotype, "Phenotype TSV with a sample_id column")
      ->required()->check(CLI::ExistingFile);
  cmd.add_option("--group-column", o.group_column, "Phenotype column holding the two-level outcome")
      ->required();
  cmd.add_option("--gmt", o.gmt, "Gene set collection in GMT format")->required()->check(CLI::ExistingFile);
  cmd.add_option("--annotation", o.annotation,
                 "feature_id<TAB>gene_id TSV; without it feature ids are used as gene ids")
      ->check(CLI::ExistingFile);
  cmd.add_option("--min-set-size", o.min_set_size, "Drop sets with fewer member features")
      ->capture_default_str();
  cmd.add_option("--universe", o.universe, "Enrichment universe: annotated | all | in-sets")
      ->check(CLI::IsMember(keys(kUniverses)))->capture_default_str();
}

void add_analysis_flags(CLI::App& cmd, AnalysisOptions& o) {
  cmd.add_option("--method", o.method, "Enrichment test: hyper | wilcox | both")
      ->check(CLI::IsMember(keys(kMethods)))->capture_default_str();
  cmd.add_option("--alpha", o.alpha, "Set-level significance threshold")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd.add_option("--alpha-gene", o.alpha_gene, "Gene-level threshold for the hypergeometric test")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd.add_option("--gene-criterion", o.gene_criterion, "Call genes by raw p or q-value: p | q")
      ->check(CLI::IsMember(keys(kCriteria)))->capture_default_str();
  cmd.add_option("--rank-alternative", o.rank_alternative,
                 "Rank test direction: abs (either) | up | down")
      ->check(CLI::IsMember(keys(kAlternatives)))->capture_default_str();
  cmd.add_option("--pi0-lambda", o.pi0_lambda, "Lambda of the pi0 estimate used for q-values")
      ->check(CLI::Range(0.0, 0.999))->capture_default_str();
  cmd.add_option("--seed", o.seed, "Master random seed")->capture_default_str();
}

BaggingConfig make_config(const AnalysisOptions& o) {
  BaggingConfig c;
  c.method = kMethods.at(o.method);
  c.alpha = o.alpha;
  c.alpha_gene = o.alpha_gene;
  c.gene_criterion = kCriteria.at(o.gene_criterion);
  c.rank_alternative = kAlternatives.at(o.rank_alternative);
  c.pi0_lambda = o.pi0_lambda;
  c.seed = o.seed;
  return c;
}

Json analysis_json(const AnalysisOptions& o) {
  return {{"method", o.method},           {"alpha", o.alpha},
          {"alpha_gene", o.alpha_gene},   {"gene_criterion", o.gene_criterion},
          {"rank_alternative", o.rank_alternative}, {"pi0_lambda", o.pi0_lambda},
          {"seed", o.seed}};
}

Json input_json(const InputOptions& o) {
  return {{"matrix", o.matrix},         {"phenotype", o.phenotype},
          {"group_column", o.group_column}, {"gmt", o.gmt},
          {"annotation", o.annotation}, {"min_set_size", o.min_set_size},
          {"universe", o.universe}};
}

AnalysisBundle load_bundle(const InputOptions& o, std::ostream& err) {
  const ExpressionMatrix matrix = parse_expression_matrix(o.matrix);
  const PhenotypeTable phenotype = parse_phenotype(o.phenotype, o.group_column);
  const GeneSetCollection sets = parse_gmt(o.gmt);
  const Annotation annotation = o.annotation.empty() ? identity_annotation(matrix) : parse_annotation(o.annotation);
  AnalysisBundle bundle =
      build_bundle(matrix, phenotype, sets, annotation, {o.min_set_size, kUniverses.at(o.universe)});
  if (!bundle.excluded.empty())
    err << bundle.excluded.size() << " of " << sets.sets.size() << " sets excluded (fewer than "
        << o.min_set_size << " member features)\n";
  return bundle;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  return out;
}

Json input_digests(const std::vector<std::string>& paths) {
  Json d = Json::object();
  for (const auto& p : paths)
    if (!p.empty()) d[p] = file_sha256(p);
  return d;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    Json parameters, Json inputs, std::vector<std::string> outputs, double seconds) {
  Json m;
  m["tool"] = "gsbag";
  m["version"] = kVersion;
  m["command"] = command;
  m["arguments"] = args;
  m["parameters"] = std::move(parameters);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  m["duration_seconds"] = seconds;
  auto out = open_output(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

// Arguments after the subcommand name, minus --out so a replay can target a new directory.
std::vector<std::string> strip_out_flag(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  return kept;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_run(const RunOptions& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const AnalysisBundle bundle = load_bundle(o.input, err);
  BaggingConfig config = make_config(o.analysis);
  config.B = o.B;
  config.threads = o.threads;
  config.retain_pmatrix = o.emit_pmatrix;
  const BaggingResult result = run_bagging(bundle, config);

  DifferentialOptions diff_options;
  diff_options.q.lambda = config.pi0_lambda;
  const DifferentialResult diff = differential_analysis(bundle, diff_options);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::vector<std::string> outputs = {"bagging.tsv", "differential.tsv", "interpretation.tsv",
                                      "excluded_sets.tsv"};
  {
    auto f = open_output(dir / "bagging.tsv");
    write_bagging_tsv(f, result);
  }
  {
    auto f = open_output(dir / "differential.tsv");
    write_differential_tsv(f, bundle.matrix.feature_ids, diff);
  }
  {
    auto f = open_output(dir / "interpretation.tsv");
    write_interpretation_tsv(f, result);
  }
  {
    auto f = open_output(dir / "excluded_sets.tsv");
    write_excluded_tsv(f, bundle.excluded);
  }
  if (o.emit_pmatrix) {
    auto f = open_output(dir / "pmatrix.json");
    write_pmatrix_json(f, result);
    outputs.emplace_back("pmatrix.json");
  }

  std::size_t redraws = 0;
  for (const auto& it : result.iterations) redraws += static_cast<std::size_t>(it.attempts - 1);
  Json params = {{"input", input_json(o.input)},
                 {"analysis", analysis_json(o.analysis)},
                 {"B", o.B},
                 {"threads", o.threads},
                 {"emit_pmatrix", o.emit_pmatrix}};
  params["diagnostics"] = {{"sets_tested", bundle.sets.size()},
                           {"sets_excluded", bundle.excluded.size()},
                           {"universe_size", bundle.universe.size()},
                           {"observed_degenerate_features", result.observed_degenerate},
                           {"redraws", redraws}};
  write_manifest(dir, "run", strip_out_flag(args), std::move(params),
                 input_digests({o.input.matrix, o.input.phenotype, o.input.gmt, o.input.annotation}),
                 outputs, seconds_since(start));
  out << "tested " << bundle.sets.size() << " sets over " << bundle.universe.size()
      << " features with B=" << o.B << "; results in " << dir.string() << '\n';
  return 0;
}

int cmd_enrich(const RunOptions& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const AnalysisBundle bundle = load_bundle(o.input, err);
  const BaggingConfig config = make_config(o.analysis);

  DifferentialOptions diff_options;
  diff_options.q.lambda = config.pi0_lambda;
  const DifferentialResult diff = differential_analysis(bundle, diff_options);
  const auto& gene_p = config.gene_criterion == GeneCriterion::q_value ? diff.q_value : diff.test.p_value;
  std::vector<std::uint8_t> significant(gene_p.size());
  for (std::size_t i = 0; i < gene_p.size(); ++i) significant[i] = gene_p[i] < config.alpha_gene;

  std::vector<std::vector<EnrichmentResult>> per_method;
  for (EnrichmentMethod m : config.methods())
    per_method.push_back(enrich_all_sets(bundle, diff.test.t, significant, m, config.rank_alternative));

  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "enrichment.tsv");
    write_enrichment_tsv(f, per_method, config.pi0_lambda);
  }
  {
    auto f = open_output(dir / "differential.tsv");
    write_differential_tsv(f, bundle.matrix.feature_ids, diff);
  }
  {
    auto f = open_output(dir / "excluded_sets.tsv");
    write_excluded_tsv(f, bundle.excluded);
  }
  Json params = {{"input", input_json(o.input)}, {"analysis", analysis_json(o.analysis)}};
  write_manifest(dir, "enrich", strip_out_flag(args), std::move(params),
                 input_digests({o.input.matrix, o.input.phenotype, o.input.gmt, o.input.annotation}),
                 {"enrichment.tsv", "differential.tsv", "excluded_sets.tsv"}, seconds_since(start));
  out << "tested " << bundle.sets.size() << " sets over " << bundle.universe.size() << " features; results in "
      << dir.string() << '\n';
  return 0;
}

std::string fmt_stat(const Distribution& d) {
  if (d.n == 0) return "NA (no pairs)";
  return fmt::format("median={:.3f} IQR={:.3f}-{:.3f} (n={})", d.median, d.q1, d.q3, d.n);
}

int cmd_simulate(SimulateOptions o, const std::vector<std::string>& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (!(o.scale > 0.0)) throw InputError("--scale must be positive");
  const auto scaled = [&](std::size_t full_size, std::size_t floor_value) {
    return std::max(floor_value, static_cast<std::size_t>(std::llround(static_cast<double>(full_size) * o.scale)));
  };
  const bool sim1 = o.design == "sim1";
  const fs::path dir(o.out);
  fs::create_directories(dir);
  Json params = {{"design", o.design}, {"scale", o.scale}, {"threads", o.threads}};
  std::vector<std::string> outputs;

  if (o.design == "posterior") {
    if (o.n < 5 || o.n_boot < 100) throw InputError("posterior demo needs --n >= 5 and --n-boot >= 100");
    Rng data_rng = Rng::substream(o.analysis.seed, StreamTag::posterior, {0});
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(o.n);
    for (double& v : z) v = normal(data_rng);
    Rng boot_rng = Rng::substream(o.analysis.seed, StreamTag::posterior, {1});
    const PosteriorDemo demo = bootstrap_posterior_demo(z, o.n_boot, boot_rng);
    {
      auto f = open_output(dir / "posterior.tsv");
      f << "metric\tvalue\n"
        << "n\t" << o.n << "\nn_boot\t" << o.n_boot << "\nmean\t" << format_real(demo.mean)
        << "\nplugin_sd\t" << format_real(demo.plugin_sd) << "\njeffreys_df\t" << format_real(demo.jeffreys_df)
        << "\njeffreys_scale\t" << format_real(demo.jeffreys_scale) << "\njeffreys_sd\t"
        << format_real(demo.jeffreys_sd) << "\nbootstrap_sd\t" << format_real(demo.bootstrap_sd) << "\nks_plugin\t" << format_real(demo.ks_plugin)
        << "\nks_jeffreys\t" << format_real(demo.ks_jeffreys) << '\n';
    }
    {
      auto f = open_output(dir / "bootstrap_means.tsv");
      f << "b\tmean\n";
      for (std::size_t b = 0; b < demo.bootstrap_means.size(); ++b)
        f << b + 1 << '\t' << format_real(demo.bootstrap_means[b]) << '\n';
    }
    outputs = {"posterior.tsv", "bootstrap_means.tsv"};
    params["n"] = o.n;
    params["n_boot"] = o.n_boot;
    params["seed"] = o.analysis.seed;
    if (demo.degenerate) out << "warning: constant data; KS distance reported as 1\n";
    out << fmt::format("posterior demo: n={} n_boot={} KS distance to N(mean, s^2/n) = {:.4f}\n", o.n,
                       o.n_boot, demo.ks_plugin);
    out << fmt::format("bootstrap sd {:.4f}, plug-in sd {:.4f}, Jeffreys posterior sd {:.4f}\n",
                       demo.bootstrap_sd, demo.plugin_sd, demo.jeffreys_sd);
  } else {
    SimulationSpec spec;
    spec.n_sets = o.sets ? o.sets : 100;
    spec.n_spiked_genes = o.spiked ? o.spiked : (sim1 ? 100 : 500);
    spec.n_cases = o.cases ? o.cases : (sim1 ? 50 : 25);
    spec.n_controls = o.controls ? o.controls : (sim1 ? 50 : 25);
    spec.noise_mean = o.noise_mean;
    spec.noise_sd = o.noise_sd;
    spec.beta_mean = o.beta_mean;
    spec.beta_sd = o.beta_sd;
    spec.seed = o.analysis.seed;
    BaggingConfig config = make_config(o.analysis);
    config.B = o.B ? o.B : static_cast<int>(scaled(100, 10));
    const GeneSetCollection collection = parse_gmt(o.collection);
    params["analysis"] = analysis_json(o.analysis);
    params["B"] = config.B;
    params["spec"] = {{"n_sets", spec.n_sets},         {"n_spiked_genes", spec.n_spiked_genes},
                      {"n_cases", spec.n_cases},       {"n_controls", spec.n_controls},
                      {"noise_mean", spec.noise_mean}, {"noise_sd", spec.noise_sd},
                      {"beta_mean", spec.beta_mean},   {"beta_sd", spec.beta_sd}};
    if (sim1) {
      const std::size_t n_datasets = o.datasets ? o.datasets : scaled(1000, 2);
      params["datasets"] = n_datasets;
      out << fmt::format("simulation 1: {} datasets, {}/{} cases/controls, {} spiked genes, {} sets, B={}\n",
                         n_datasets, spec.n_cases, spec.n_controls, spec.n_spiked_genes, spec.n_sets, config.B);
      const Simulation1Result r = run_simulation1(collection, spec, n_datasets, config, o.threads);
      auto f = open_output(dir / "simulation1.tsv");
      write_simulation1_tsv(f, r);
      outputs = {"simulation1.tsv"};
      for (const auto& m : r.methods)
        out << fmt::format("{}: Spearman(mean r_hat, significance frequency) = {}\n", to_string(m.method),
                           m.spearman ? fmt::format("{:.3f}", *m.spearman) : std::string("NA"));
    } else {
      const std::size_t n_pairs = o.pairs ? o.pairs : scaled(100, 1);
      params["pairs"] = n_pairs;
      params["repetitions"] = o.repetitions;
      out << fmt::format("simulation 2: {} pairs x {} repetition(s), {}/{} cases/controls, {} spiked genes, "
                         "{} sets, B={}\n",
                         n_pairs, o.repetitions, spec.n_cases, spec.n_controls, spec.n_spiked_genes,
                         spec.n_sets, config.B);
      auto f = open_output(dir / "simulation2.tsv");
      f << "repetition\t";
      outputs = {"simulation2.tsv"};
      bool header_done = false;
      for (std::size_t rep = 0; rep < o.repetitions; ++rep) {
        SimulationSpec rep_spec = spec;
        rep_spec.seed = rep == 0 ? spec.seed : Rng::substream(spec.seed, {rep})();
        const Simulation2Result r = run_simulation2(collection, rep_spec, n_pairs, config, o.threads);
        std::ostringstream body;
        write_simulation2_tsv(body, r);
        std::istringstream lines(body.str());
        std::string line;
        std::getline(lines, line);
        if (!header_done) {
          f << line << '\n';
          header_done = true;
        }
        while (std::getline(lines, line)) f << rep + 1 << '\t' << line << '\n';
        for (const auto& m : r.methods) {
          out << fmt::format("[rep {}] {}: r_hat all {}\n", rep + 1, to_string(m.method), fmt_stat(m.r_hat_all));
          out << fmt::format("[rep {}] {}: p all {}\n", rep + 1, to_string(m.method), fmt_stat(m.p_all));
          out << fmt::format("[rep {}] {}: r_hat significant {}\n", rep + 1, to_string(m.method),
                             fmt_stat(m.r_hat_significant));
          out << fmt::format("[rep {}] {}: p significant {}\n", rep + 1, to_string(m.method),
                             fmt_stat(m.p_significant));
        }
      }
    }
    params["collection"] = o.collection;
    write_manifest(dir, "simulate", strip_out_flag(args), std::move(params), input_digests({o.collection}),
                   outputs, seconds_since(start));
    return 0;
  }
  write_manifest(dir, "simulate", strip_out_flag(args), std::move(params), Json::object(), outputs,
                 seconds_since(start));
  return 0;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError(manifest_path + ": cannot open manifest");
  Json m;
  try {
    m = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path + ": invalid JSON: " + e.what());
  }
  if (!m.contains("command") || !m.contains("arguments"))
    throw InputError(manifest_path + ": manifest lacks command or arguments");
  if (m.value("version", std::string()) != kVersion)
    err << "warning: manifest was written by version " << m.value("version", std::string("?")) << ", this is "
        << kVersion << '\n';
  std::vector<std::string> args = {m["command"].get<std::string>()};
  for (const auto& a : m["arguments"]) args.push_back(a.get<std::string>());
  args.insert(args.end(), {"--out", out_dir});
  return dispatch(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gene set bagging: replication probabilities for gene set enrichment"};
  app.name("gsbag");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Observed set p-values plus bootstrap replication probabilities");
  add_input_flags(*run_cmd, run.input);
  add_analysis_flags(*run_cmd, run.analysis);
  run_cmd->add_option("--B", run.B, "Bootstrap iterations")->check(CLI::Range(1, 1 << 30))->capture_default_str();
  run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::Range(1, 1 << 30))->capture_default_str();
  run_cmd->add_flag("--emit-pmatrix", run.emit_pmatrix, "Also write the sets x B p-value matrix as JSON");
  run_cmd->add_option("--out", run.out, "Output directory")->required();

  RunOptions enrich;
  auto* enrich_cmd = app.add_subcommand("enrich", "Observed set p-values only (no resampling)");
  add_input_flags(*enrich_cmd, enrich.input);
  add_analysis_flags(*enrich_cmd, enrich.analysis);
  enrich_cmd->add_option("--out", enrich.out, "Output directory")->required();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Spike-in simulations and the bootstrap posterior demo");
  sim_cmd->add_option("--design", sim.design, "sim1 | sim2 | posterior")
      ->check(CLI::IsMember({"sim1", "sim2", "posterior"}))->capture_default_str();
  sim_cmd->add_option("--scale", sim.scale, "Shrink dataset/pair counts and B by this factor")->capture_default_str();
  sim_cmd->add_option("--collection", sim.collection, "Gene set collection to sample from (GMT)")
      ->check(CLI::ExistingFile)->capture_default_str();
  sim_cmd->add_option("--datasets", sim.datasets, "sim1: number of repeated studies (default 1000)");
  sim_cmd->add_option("--pairs", sim.pairs, "sim2: number of dataset pairs (default 100)");
  sim_cmd->add_option("--repetitions", sim.repetitions, "sim2: independent repetitions of the experiment")
      ->check(CLI::Range(1, 1 << 30))->capture_default_str();
  sim_cmd->add_option("--sets", sim.sets, "Sets sampled from the collection (default 100)");
  sim_cmd->add_option("--spiked", sim.spiked, "Spiked genes (default 100 for sim1, 500 for sim2)");
  sim_cmd->add_option("--cases", sim.cases, "Cases per dataset (default 50 for sim1, 25 for sim2)");
  sim_cmd->add_option("--controls", sim.controls, "Controls per dataset (default 50 for sim1, 25 for sim2)");
  sim_cmd->add_option("--B", sim.B, "Bootstrap iterations (default 100, scaled)")->check(CLI::Range(1, 1 << 30));
  sim_cmd->add_option("--noise-mean", sim.noise_mean, "Mean of the noise term")->capture_default_str();
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "SD of the noise term")->capture_default_str();
  sim_cmd->add_option("--beta-mean", sim.beta_mean, "Mean spiked effect")->capture_default_str();
  sim_cmd->add_option("--beta-sd", sim.beta_sd, "SD of spiked effects")->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "posterior: observations")->capture_default_str();
  sim_cmd->add_option("--n-boot", sim.n_boot, "posterior: bootstrap resamples")->capture_default_str();
  add_analysis_flags(*sim_cmd, sim.analysis);
  sim_cmd->add_option("--threads", sim.threads, "Worker threads")->check(CLI::Range(1, 1 << 30))->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  std::string manifest, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest, "manifest.json written by a previous run")->required()
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--out", replay_out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun 'gsbag --help' for usage\n";
    return 1;
  }

  if (run_cmd->parsed()) return cmd_run(run, args, out, err);
  if (enrich_cmd->parsed()) return cmd_enrich(enrich, args, out, err);
  if (sim_cmd->parsed()) return cmd_simulate(sim, args, out);
  return cmd_replay(manifest, replay_out, out, err);
}

}  // namespace

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 initialisation failed");
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof buffer);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace gsbag
