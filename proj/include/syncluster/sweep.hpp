#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "syncluster/certificate.hpp"
#include "syncluster/json_io.hpp"
#include "syncluster/model.hpp"
#include "syncluster/recovery.hpp"
#include "syncluster/sdp.hpp"
#include "syncluster/svg.hpp"
#include "syncluster/thresholds.hpp"

namespace syncluster {

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int steps = 1;

  std::vector<double> values() const {
    if (steps < 1) throw std::invalid_argument("GridSpec: steps must be >= 1");
    std::vector<double> v(steps);
    for (int i = 0; i < steps; ++i)
      v[i] = steps == 1 ? min : min + (max - min) * i / (steps - 1);
    return v;
  }
};

struct SweepConfig {
  std::string variant = "equal";  // equal | unequal | unknown | general
  int n = 0;
  int d = 2;
  std::vector<int> sizes;  // cluster sizes; for "unknown" these size the model
  GridSpec alpha_grid;
  GridSpec beta_grid;
  int trials = 10;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  std::string record = "both";  // solve | certify | both
  std::vector<double> gamma_grid;

  void validate() const {
    if (n < 2 || d < 1) throw std::invalid_argument("SweepConfig: n and d must be positive");
    if (trials < 1) throw std::invalid_argument("SweepConfig: trials must be >= 1");
    if (alpha_grid.steps < 1 || beta_grid.steps < 1)
      throw std::invalid_argument("SweepConfig: grids must be nonempty");
    if (record != "solve" && record != "certify" && record != "both")
      throw std::invalid_argument("SweepConfig: record must be solve, certify or both");
    int total = 0;
    for (int m : sizes) total += m;
    if (total != n) throw std::invalid_argument("SweepConfig: sizes must sum to n");
  }

  SdpVariant sdp_variant() const {
    return variant_from_name(variant, static_cast<int>(sizes.size()), sizes);
  }

  static SweepConfig from_json(const json& j) {
    SweepConfig c;
    c.variant = j.at("variant").get<std::string>();
    c.d = j.at("d").get<int>();
    c.sizes = j.at("sizes").get<std::vector<int>>();
    c.n = 0;
    for (int m : c.sizes) c.n += m;
    if (j.contains("n") && j.at("n").get<int>() != c.n)
      throw std::invalid_argument("SweepConfig: n does not match sizes");
    const auto grid = [](const json& g) {
      return GridSpec{g.at("min").get<double>(), g.at("max").get<double>(),
                      g.at("steps").get<int>()};
    };
    c.alpha_grid = grid(j.at("alpha_grid"));
    c.beta_grid = grid(j.at("beta_grid"));
    c.trials = j.value("trials", 10);
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    c.record = j.value("record", std::string("both"));
    if (j.contains("gamma_grid")) c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      c.solver.rho = s.value("rho", c.solver.rho);
      c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
      c.solver.tol_primal = s.value("tol_primal", c.solver.tol_primal);
      c.solver.tol_dual = s.value("tol_dual", c.solver.tol_dual);
      c.solver.over_relaxation = s.value("over_relaxation", c.solver.over_relaxation);
    }
    c.validate();
    return c;
  }

  json to_json_config() const {
    return json{{"variant", variant},
                {"n", n},
                {"d", d},
                {"sizes", sizes},
                {"alpha_grid", {{"min", alpha_grid.min}, {"max", alpha_grid.max}, {"steps", alpha_grid.steps}}},
                {"beta_grid", {{"min", beta_grid.min}, {"max", beta_grid.max}, {"steps", beta_grid.steps}}},
                {"trials", trials},
                {"master_seed", master_seed},
                {"record", record},
                {"gamma_grid", gamma_grid},
                {"solver",
                 {{"rho", solver.rho},
                  {"max_iter", solver.max_iter},
                  {"tol_primal", solver.tol_primal},
                  {"tol_dual", solver.tol_dual},
                  {"over_relaxation", solver.over_relaxation}}}};
  }
};

struct CellResult {
  int alpha_index = 0, beta_index = 0, trial = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0, beta = 0.0;
  double error_log = std::numeric_limits<double>::quiet_NaN();
  double error_raw = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;
  bool cert_success = false;
  double best_gamma = std::numeric_limits<double>::quiet_NaN();
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double runtime_ms = 0.0;
  std::string status = "ok";
};

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_row(const CellResult& r, bool with_runtime) {
  std::string row;
  row += fmt_double(r.alpha) + ",";
  row += fmt_double(r.beta) + ",";
  row += std::to_string(r.trial) + ",";
  row += std::to_string(r.seed) + ",";
  row += fmt_double(r.error_log) + ",";
  row += fmt_double(r.error_raw) + ",";
  row += std::string(r.exact ? "1" : "0") + ",";
  row += std::string(r.cert_success ? "1" : "0") + ",";
  row += fmt_double(r.best_gamma) + ",";
  row += fmt_double(r.lambda_min) + ",";
  row += std::to_string(r.iterations) + ",";
  row += std::string(r.converged ? "1" : "0") + ",";
  if (with_runtime) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", r.runtime_ms);
    row += buf;
  } else {
    row += "-";  // runtime is excluded from the reproducibility digest
  }
  row += ",";
  row += r.status;
  return row;
}

}  // namespace detail

inline const char* kSweepCsvHeader =
    "alpha,beta,trial,seed,error_log,error_raw,exact,cert_success,best_gamma,lambda_min,"
    "iterations,converged,runtime_ms,status";

// Runs one sweep cell trial. Seeds derive from (master, alpha_i, beta_i, t),
// so the outcome does not depend on scheduling.
inline CellResult run_cell(const SweepConfig& config, int ai, int bi, int trial, double alpha,
                           double beta) {
  CellResult result;
  result.alpha_index = ai;
  result.beta_index = bi;
  result.trial = trial;
  result.alpha = alpha;
  result.beta = beta;
  result.seed = mix_seed(config.master_seed, static_cast<std::uint64_t>(ai),
                         static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(trial));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ModelParams params{config.n,
                       config.d,
                       static_cast<int>(config.sizes.size()),
                       config.sizes,
                       rate_to_probability(alpha, config.n),
                       rate_to_probability(beta, config.n),
                       result.seed};
    Rng rng(mix_seed(result.seed, 0x67));
    const GroundTruth gt = generate_ground_truth(params, rng);
    const BlockMatrix a = sample_observation(gt, params, mix_seed(result.seed, 0xA0));
    const SdpVariant variant = config.sdp_variant();

    if (config.record != "certify") {
      const SolveReport report = solve(build_problem(a, variant), config.solver);
      const bool normalized = variant.kind == SdpVariant::Kind::UnknownSizes;
      const BlockMatrix& ref = normalized ? gt.m_bar : gt.m_star;
      const RecoveryError err = recovery_error(report.m, ref);
      result.error_log = err.log_value;
      result.error_raw = err.raw;
      result.exact = is_exact(report.m, ref);
      result.iterations = report.iterations;
      result.converged = report.converged;
    }
    if (config.record != "solve" && variant.kind != SdpVariant::Kind::GeneralKnown) {
      const std::vector<double>& grid = config.gamma_grid.empty()
                                            ? default_gamma_grid(variant.kind)
                                            : config.gamma_grid;
      const CertifyOutcome outcome = certify(a, gt, params, variant.kind, grid);
      result.cert_success = outcome.success;
      result.best_gamma = outcome.best_gamma;
      result.lambda_min = outcome.best_lambda_min;
    }
  } catch (const std::exception& e) {
    result.status = e.what();
    for (char& c : result.status)
      if (c == ',' || c == '\n') c = ';';
  }
  result.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

struct SweepOutput {
  std::vector<CellResult> rows;  // ordered by (alpha_index, beta_index, trial)
  std::string csv;
  std::string digest;  // FNV over the CSV with runtime_ms masked out
};

inline SweepOutput run_sweep(const SweepConfig& config, int workers, bool log_progress = true) {
  config.validate();
  const std::vector<double> alphas = config.alpha_grid.values();
  const std::vector<double> betas = config.beta_grid.values();
  const int na = static_cast<int>(alphas.size());
  const int nb = static_cast<int>(betas.size());
  const int total = na * nb * config.trials;

  SweepOutput out;
  out.rows.resize(total);
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex log_mutex;

  const auto worker = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= total) return;
      const int trial = task % config.trials;
      const int bi = (task / config.trials) % nb;
      const int ai = task / (config.trials * nb);
      out.rows[task] = run_cell(config, ai, bi, trial, alphas[ai], betas[bi]);
      const int finished = done.fetch_add(1) + 1;
      if (log_progress) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "[sweep] %d/%d alpha=%.3g beta=%.3g trial=%d %s\n", finished,
                     total, alphas[ai], betas[bi], trial, out.rows[task].status.c_str());
      }
    }
  };

  if (workers < 1) workers = 1;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string csv = kSweepCsvHeader;
  csv += "\n";
  std::string canonical = csv;
  for (const CellResult& r : out.rows) {
    csv += detail::csv_row(r, true) + "\n";
    canonical += detail::csv_row(r, false) + "\n";
  }
  out.csv = std::move(csv);
  out.digest = hex64(fnv1a64(canonical));
  return out;
}

// --------------------------------------------------------------------------
// Aggregation and figure emission (pure functions of the CSV content).

struct SweepAggregate {
  std::vector<double> alphas, betas;
  std::vector<double> mean_error_log;  // row-major [beta][alpha]
  std::vector<double> exact_rate;
  std::vector<double> failure_rate;  // 1 - certificate success rate
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline SweepAggregate aggregate_results_csv(const std::string& csv) {
  SweepAggregate agg;
  std::map<double, int> alpha_idx, beta_idx;
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string::npos) end = csv.size();
    const std::string line = csv.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() < 14) continue;
    rows.push_back(fields);
    alpha_idx.emplace(std::stod(fields[0]), 0);
    beta_idx.emplace(std::stod(fields[1]), 0);
  }
  int k = 0;
  for (auto& [a, idx] : alpha_idx) {
    idx = k++;
    agg.alphas.push_back(a);
  }
  k = 0;
  for (auto& [b, idx] : beta_idx) {
    idx = k++;
    agg.betas.push_back(b);
  }
  const int na = static_cast<int>(agg.alphas.size());
  const int nb = static_cast<int>(agg.betas.size());
  std::vector<double> err(na * nb, 0.0), exact(na * nb, 0.0), cert(na * nb, 0.0);
  std::vector<int> count(na * nb, 0);
  for (const auto& f : rows) {
    const int ai = alpha_idx[std::stod(f[0])];
    const int bi = beta_idx[std::stod(f[1])];
    const int cell = bi * na + ai;
    count[cell]++;
    const double el = std::strtod(f[4].c_str(), nullptr);
    err[cell] += std::isnan(el) ? 0.0 : el;
    exact[cell] += f[6] == "1" ? 1.0 : 0.0;
    cert[cell] += f[7] == "1" ? 1.0 : 0.0;
  }
  agg.mean_error_log.resize(na * nb);
  agg.exact_rate.resize(na * nb);
  agg.failure_rate.resize(na * nb);
  for (int c = 0; c < na * nb; ++c) {
    const int m = std::max(1, count[c]);
    agg.mean_error_log[c] = err[c] / m;
    agg.exact_rate[c] = exact[c] / m;
    agg.failure_rate[c] = 1.0 - cert[c] / m;
  }
  return agg;
}

// Writes the three heatmaps for a results CSV. The theorem boundary overlay
// comes from the closed-form threshold conditions.
inline void write_sweep_figures(const std::string& out_dir, const std::string& csv,
                                const std::string& variant, double rho, int d) {
  const SweepAggregate agg = aggregate_results_csv(csv);
  std::filesystem::create_directories(out_dir);

  std::vector<std::pair<double, double>> boundary;
  if (variant != "general" && agg.alphas.size() >= 2) {
    const ThresholdKind kind = variant == "equal"     ? ThresholdKind::Equal
                               : variant == "unequal" ? ThresholdKind::Unequal
                                                      : ThresholdKind::Unknown;
    const double a0 = agg.alphas.front(), a1 = agg.alphas.back();
    for (int s = 0; s <= 200; ++s) {
      const double a = a0 + (a1 - a0) * s / 200.0;
      boundary.emplace_back(a, boundary_beta(kind, a, rho, d));
    }
  }

  double emin = 1e9, emax = -1e9;
  for (double v : agg.mean_error_log) {
    emin = std::min(emin, v);
    emax = std::max(emax, v);
  }
  if (emax <= emin) emax = emin + 1.0;

  HeatmapSpec err{"mean log recovery error", agg.alphas, agg.betas, agg.mean_error_log,
                  emin,                      emax,       boundary};
  write_text_file((std::filesystem::path(out_dir) / "error_heatmap.svg").string(),
                  render_heatmap_svg(err));
  HeatmapSpec ex{"exact recovery rate", agg.alphas, agg.betas, agg.exact_rate, 0.0, 1.0,
                 boundary};
  write_text_file((std::filesystem::path(out_dir) / "exact_rate.svg").string(),
                  render_heatmap_svg(ex));
  HeatmapSpec fr{"certificate failure rate", agg.alphas, agg.betas, agg.failure_rate, 0.0, 1.0,
                 boundary};
  write_text_file((std::filesystem::path(out_dir) / "failure_rate.svg").string(),
                  render_heatmap_svg(fr));
}

}  // namespace syncluster
