// Command-line front end: instance generation, single SDP solves, dual
// certification, threshold queries, tail-bound experiments, and parallel
// (alpha, beta) sweeps with CSV/JSON/SVG outputs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "syncluster/json_io.hpp"
#include "syncluster/randlab.hpp"
#include "syncluster/recovery.hpp"
#include "syncluster/sweep.hpp"
#include "syncluster/thresholds.hpp"

namespace sc = syncluster;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitExtraction = 4;

int default_workers() {
  if (const char* env = std::getenv("SYNCLUSTER_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

sc::json load_json_file(const std::string& path) {
  return sc::json::parse(sc::read_text_file(path));
}

std::string out_path(const std::string& dir, const char* name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const sc::json cfg = load_json_file(config_path);
  sc::ModelParams params;
  params.n = cfg.at("n").get<int>();
  params.d = cfg.at("d").get<int>();
  params.K = cfg.at("K").get<int>();
  params.sizes = cfg.at("sizes").get<std::vector<int>>();
  params.seed = cfg.value("seed", std::uint64_t{0});
  if (cfg.contains("p")) {
    params.p = cfg.at("p").get<double>();
    params.q = cfg.at("q").get<double>();
  } else {
    params.p = sc::rate_to_probability(cfg.at("alpha").get<double>(), params.n);
    params.q = sc::rate_to_probability(cfg.at("beta").get<double>(), params.n);
  }
  params.validate();

  sc::Rng rng(sc::mix_seed(params.seed, 0x67));
  const sc::GroundTruth gt = sc::generate_ground_truth(params, rng);
  const sc::BlockMatrix a = sc::sample_observation(gt, params, sc::mix_seed(params.seed, 0xA0));
  sc::write_instance(out_dir, params, gt, a);
  std::cout << sc::json{{"instance", out_dir},
                        {"digest_A", sc::hex64(sc::digest_block_matrix(a))}}
                   .dump(2)
            << "\n";
  return kExitOk;
}

sc::SdpVariant variant_from_flags(const sc::Instance& inst, const std::string& name) {
  return sc::variant_from_name(name, inst.params.K, inst.params.sizes);
}

int cmd_solve(const std::string& instance_dir, const std::string& variant_name,
              const sc::SolverConfig& solver, const std::string& out_dir) {
  const sc::Instance inst = sc::read_instance(instance_dir);
  const sc::SdpVariant variant = variant_from_flags(inst, variant_name);
  const sc::SolveReport report = sc::solve(sc::build_problem(inst.a, variant), solver);

  const bool normalized = variant.kind == sc::SdpVariant::Kind::UnknownSizes;
  const sc::BlockMatrix& ref = normalized ? inst.gt.m_bar : inst.gt.m_star;
  const sc::RecoveryError err = sc::recovery_error(report.m, ref);

  sc::json doc = sc::to_json(report);
  doc["variant"] = variant.name();
  doc["error_log"] = err.log_value;
  doc["error_raw"] = err.raw;
  doc["exact"] = sc::is_exact(report.m, ref);
  sc::write_jcdb(out_path(out_dir, "M.jcdb"), report.m);
  sc::write_text_file(out_path(out_dir, "solve_report.json"), doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return report.converged ? kExitOk : kExitNoConvergence;
}

int cmd_certify(const std::string& instance_dir, const std::string& variant_name,
                std::vector<double> gamma_grid, const std::string& out_dir) {
  const sc::Instance inst = sc::read_instance(instance_dir);
  const sc::SdpVariant variant = variant_from_flags(inst, variant_name);
  if (gamma_grid.empty()) gamma_grid = sc::default_gamma_grid(variant.kind);
  const sc::CertifyOutcome outcome =
      sc::certify(inst.a, inst.gt, inst.params, variant.kind, gamma_grid);
  const sc::json doc = sc::to_json(outcome);
  sc::write_text_file(out_path(out_dir, "certify.json"), doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_round(const std::string& in_path, double epsilon, const std::string& out_file) {
  const sc::BlockMatrix m = sc::read_jcdb(in_path);
  const double eps =
      epsilon >= 0.0 ? epsilon : sc::default_rounding_epsilon(m.blocks(), m.block_dim());
  sc::write_jcdb(out_file, sc::round_solution(m, eps));
  std::cout << sc::json{{"epsilon", eps}, {"out", out_file}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_extract(const std::string& in_path, int k, const std::string& out_file) {
  const sc::BlockMatrix m = sc::read_jcdb(in_path);
  try {
    const sc::Extraction ex = sc::extract_clusters_and_rotations(m, k, m.block_dim());
    sc::json doc{{"labels", ex.labels}, {"rotations", sc::rotations_to_json(ex.rotations)}};
    sc::write_text_file(out_file, doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  } catch (const sc::ExtractionError& e) {
    std::cerr << "extraction failed: " << e.what() << "\n";
    return kExitExtraction;
  }
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int workers) {
  const sc::SweepConfig config = sc::SweepConfig::from_json(load_json_file(config_path));
  const sc::SweepOutput output = sc::run_sweep(config, workers);
  sc::write_text_file(out_path(out_dir, "results.csv"), output.csv);

  const sc::SweepAggregate agg = sc::aggregate_results_csv(output.csv);
  sc::json cells = sc::json::array();
  const int na = static_cast<int>(agg.alphas.size());
  for (std::size_t bi = 0; bi < agg.betas.size(); ++bi)
    for (int ai = 0; ai < na; ++ai)
      cells.push_back({{"alpha", agg.alphas[ai]},
                       {"beta", agg.betas[bi]},
                       {"mean_error_log", agg.mean_error_log[bi * na + ai]},
                       {"exact_rate", agg.exact_rate[bi * na + ai]},
                       {"failure_rate", agg.failure_rate[bi * na + ai]}});
  const sc::json summary{{"config", config.to_json_config()},
                         {"csv_digest", output.digest},
                         {"cells", cells}};
  sc::write_text_file(out_path(out_dir, "summary.json"), summary.dump(2) + "\n");

  const double rho =
      static_cast<double>(config.sizes.front()) / config.n;
  sc::write_sweep_figures(out_dir, output.csv, config.variant,
                          std::max(rho, 1.0 - rho), config.d);
  std::cout << sc::json{{"out", out_dir}, {"csv_digest", output.digest}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_threshold(const std::string& variant, double alpha, double beta, double rho, int d,
                  const sc::GridSpec& curve, const std::string& out_file) {
  sc::json doc{{"variant", variant}, {"alpha", alpha}, {"beta", beta}, {"rho", rho}, {"d", d}};
  const sc::RegimeParams rp{alpha, beta, rho, d};
  if (variant == "equal") {
    doc["holds"] = sc::condition_equal(rp);
  } else if (variant == "unequal") {
    doc["holds"] = sc::condition_unequal(rp);
  } else if (variant == "unknown") {
    doc["holds"] = sc::condition_unknown(rp);
  } else {
    throw std::invalid_argument("threshold: variant must be equal, unequal or unknown");
  }
  if (alpha > 1.0 / rho && alpha > 1.0 / (1.0 - rho)) {
    doc["tau1_star"] = sc::solve_tau_star(alpha, 1.0 / rho);
    doc["tau2_star"] = sc::solve_tau_star(alpha, 1.0 / (1.0 - rho));
  }
  const sc::ThresholdKind kind = variant == "equal"     ? sc::ThresholdKind::Equal
                                 : variant == "unequal" ? sc::ThresholdKind::Unequal
                                                        : sc::ThresholdKind::Unknown;
  sc::json samples = sc::json::array();
  for (double a : curve.values())
    samples.push_back({{"alpha", a}, {"beta", sc::boundary_beta(kind, a, rho, d)}});
  doc["boundary"] = samples;
  if (!out_file.empty()) sc::write_text_file(out_file, doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_bounds(const std::string& config_path, const std::string& out_dir) {
  const sc::json cfg = load_json_file(config_path);
  const std::string statistic = cfg.at("statistic").get<std::string>();
  const int trials = cfg.value("trials", 1000);
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  const double slack = cfg.value("slack", sc::randlab::kDefaultSlack);

  std::function<double(sc::Rng&)> stat;
  double bound = 0.0;
  double predicted_rate = 0.0;
  if (statistic == "rotation_sum") {
    const int m = cfg.at("m").get<int>();
    const double q = cfg.at("q").get<double>();
    const int d = cfg.at("d").get<int>();
    const double c = cfg.value("c", 1.0);
    const int n = cfg.value("n", m);
    stat = [=](sc::Rng& rng) { return sc::randlab::rotation_sum_statistic(m, q, d, rng); };
    bound = d == 2 ? slack * sc::randlab::sharp_d2_bound(m, q, c, n)
                   : slack * sc::randlab::bernstein_bound(m, q, d, c, n);
    predicted_rate = std::pow(static_cast<double>(n), -c);
  } else if (statistic == "block_opnorm") {
    const int m1 = cfg.at("m1").get<int>();
    const int m2 = cfg.at("m2").get<int>();
    const double q = cfg.at("q").get<double>();
    const int d = cfg.at("d").get<int>();
    const int n = cfg.value("n", m1 + m2);
    stat = [=](sc::Rng& rng) { return sc::randlab::block_opnorm_statistic(m1, m2, q, d, rng); };
    // Universal constants pinned by the pilot calibration (see tests).
    bound = 3.0 * (std::sqrt(q * m1) + std::sqrt(q * m2)) + 3.0 * std::sqrt(std::log((double)n));
    predicted_rate = 1.0 / n;
  } else if (statistic == "min_degree") {
    const int m = cfg.at("m").get<int>();
    const double p = cfg.at("p").get<double>();
    const double tau = cfg.value("tau", 1.0);
    const int n = cfg.value("n", m);
    const double rho = static_cast<double>(m) / n;
    stat = [=](sc::Rng& rng) {
      return static_cast<double>(sc::randlab::min_degree_statistic(m, p, rng));
    };
    bound = tau * rho * std::log(static_cast<double>(n));
    predicted_rate =
        std::pow(static_cast<double>(n), -sc::lemma_a1_exponent(p * n / std::log((double)n),
                                                                tau, rho));
  } else {
    throw std::invalid_argument("bounds: statistic must be rotation_sum, block_opnorm or min_degree");
  }

  const sc::randlab::TailReport report = sc::randlab::tail_report(stat, bound, trials, seed,
                                                                  predicted_rate);
  sc::write_text_file(out_path(out_dir, "tail_report.json"),
                      sc::to_json(report, false).dump(2) + "\n");
  std::string csv = "trial,statistic\n";
  for (int t = 0; t < report.trials; ++t)
    csv += std::to_string(t) + "," + sc::detail::fmt_double(report.samples[t]) + "\n";
  sc::write_text_file(out_path(out_dir, "tail_samples.csv"), csv);
  std::cout << sc::to_json(report, false).dump(2) << "\n";
  return kExitOk;
}

int cmd_plot(const std::string& csv_path, const std::string& out_dir,
             const std::string& variant, double rho, int d) {
  const std::string csv = sc::read_text_file(csv_path);
  sc::write_sweep_figures(out_dir, csv, variant, rho, d);
  std::cout << sc::json{{"out", out_dir}}.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint community detection and rotation synchronization toolkit"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::uint64_t global_seed = 0;
  int workers = default_workers();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", global_seed, "seed override for subcommands that accept one");
  app.add_option("--workers", workers, "worker threads for sweeps")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "sample a model instance to disk");
  std::string gen_config;
  gen->add_option("--config", gen_config, "model config JSON")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one SDP on an instance");
  std::string solve_instance, solve_variant = "equal";
  sc::SolverConfig solver;
  solve_cmd->add_option("--instance", solve_instance, "instance directory")->required();
  solve_cmd->add_option("--variant", solve_variant, "equal|unequal|unknown|general");
  solve_cmd->add_option("--rho", solver.rho, "ADMM penalty");
  solve_cmd->add_option("--max-iter", solver.max_iter, "iteration cap");
  solve_cmd->add_option("--tol-primal", solver.tol_primal, "primal tolerance");
  solve_cmd->add_option("--tol-dual", solver.tol_dual, "dual tolerance");
  solve_cmd->add_option("--over-relax", solver.over_relaxation, "over-relaxation in [1,2)");

  // certify
  auto* cert_cmd = app.add_subcommand("certify", "build dual certificates on an instance");
  std::string cert_instance, cert_variant = "equal";
  std::vector<double> gamma_grid;
  cert_cmd->add_option("--instance", cert_instance, "instance directory")->required();
  cert_cmd->add_option("--variant", cert_variant, "equal|unequal|unknown");
  cert_cmd->add_option("--gamma", gamma_grid, "gamma grid values (default per variant)");

  // round
  auto* round_cmd = app.add_subcommand("round", "blockwise rounding of a JCDB1 matrix");
  std::string round_in, round_out = "M_round.jcdb";
  double round_eps = -1.0;
  round_cmd->add_option("--in", round_in, "input JCDB1 file")->required();
  round_cmd->add_option("--epsilon", round_eps, "threshold (default sqrt(d)/(2n))");
  round_cmd->add_option("--out-file", round_out, "output JCDB1 file");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "clusters and rotations from a matrix");
  std::string extract_in, extract_out = "extract.json";
  int extract_k = 2;
  extract_cmd->add_option("--in", extract_in, "input JCDB1 file")->required();
  extract_cmd->add_option("--K", extract_k, "cluster count");
  extract_cmd->add_option("--out-file", extract_out, "output JSON file");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "parallel (alpha, beta) grid experiment");
  std::string sweep_config;
  sweep_cmd->add_option("--config", sweep_config, "sweep config JSON")->required();

  // threshold
  auto* thr_cmd = app.add_subcommand("threshold", "closed-form recovery conditions");
  std::string thr_variant = "equal", thr_out;
  double thr_alpha = 4.0, thr_beta = 0.0, thr_rho = 0.5;
  int thr_d = 2;
  sc::GridSpec thr_curve{2.0, 13.0, 45};
  thr_cmd->add_option("--variant", thr_variant, "equal|unequal|unknown");
  thr_cmd->add_option("--alpha", thr_alpha, "within-cluster rate");
  thr_cmd->add_option("--beta", thr_beta, "cross-cluster rate");
  thr_cmd->add_option("--rho", thr_rho, "larger-cluster fraction");
  thr_cmd->add_option("--d", thr_d, "rotation dimension");
  thr_cmd->add_option("--curve-min", thr_curve.min, "boundary curve alpha min");
  thr_cmd->add_option("--curve-max", thr_curve.max, "boundary curve alpha max");
  thr_cmd->add_option("--curve-steps", thr_curve.steps, "boundary curve samples");
  thr_cmd->add_option("--out-file", thr_out, "optional JSON output path");

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "concentration tail experiments");
  std::string bounds_config;
  bounds_cmd->add_option("--config", bounds_config, "lab config JSON")->required();

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "re-render sweep figures from a CSV");
  std::string plot_csv, plot_variant = "equal";
  double plot_rho = 0.5;
  int plot_d = 2;
  plot_cmd->add_option("--csv", plot_csv, "results CSV path")->required();
  plot_cmd->add_option("--variant", plot_variant, "variant for the overlay");
  plot_cmd->add_option("--rho", plot_rho, "larger-cluster fraction");
  plot_cmd->add_option("--d", plot_d, "rotation dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_config, out_dir);
    if (solve_cmd->parsed()) return cmd_solve(solve_instance, solve_variant, solver, out_dir);
    if (cert_cmd->parsed()) return cmd_certify(cert_instance, cert_variant, gamma_grid, out_dir);
    if (round_cmd->parsed())
      return cmd_round(round_in, round_eps, (fs::path(out_dir) / round_out).string());
    if (extract_cmd->parsed())
      return cmd_extract(extract_in, extract_k, (fs::path(out_dir) / extract_out).string());
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, out_dir, workers);
    if (thr_cmd->parsed())
      return cmd_threshold(thr_variant, thr_alpha, thr_beta, thr_rho, thr_d, thr_curve, thr_out);
    if (bounds_cmd->parsed()) return cmd_bounds(bounds_config, out_dir);
    if (plot_cmd->parsed()) return cmd_plot(plot_csv, out_dir, plot_variant, plot_rho, plot_d);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sc::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
