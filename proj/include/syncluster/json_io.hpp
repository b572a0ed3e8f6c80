#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "syncluster/block_matrix.hpp"
#include "syncluster/certificate.hpp"
#include "syncluster/model.hpp"
#include "syncluster/randlab.hpp"
#include "syncluster/sdp.hpp"

namespace syncluster {

using nlohmann::json;

// FNV-1a over a byte string; used for file digests and CSV reproducibility
// checks (not cryptographic).
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t digest_block_matrix(const BlockMatrix& m) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * m.size() * sizeof(double));
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      const double v = m.matrix()(i, j);
      bytes.append(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  return fnv1a64(bytes);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --------------------------------------------------------------------------
// ModelParams / instance container

inline json to_json(const ModelParams& p) {
  return json{{"n", p.n},           {"d", p.d}, {"K", p.K}, {"sizes", p.sizes},
              {"p", p.p},           {"q", p.q}, {"seed", p.seed}};
}

inline ModelParams model_params_from_json(const json& j) {
  ModelParams p;
  p.n = j.at("n").get<int>();
  p.d = j.at("d").get<int>();
  p.K = j.at("K").get<int>();
  p.sizes = j.at("sizes").get<std::vector<int>>();
  p.p = j.at("p").get<double>();
  p.q = j.at("q").get<double>();
  p.seed = j.value("seed", std::uint64_t{0});
  p.validate();
  return p;
}

inline json rotations_to_json(const std::vector<Rotation>& rs) {
  json arr = json::array();
  for (const Rotation& r : rs) {
    json rows = json::array();
    for (int i = 0; i < r.dim(); ++i) {
      json row = json::array();
      for (int j = 0; j < r.dim(); ++j) row.push_back(r.matrix()(i, j));
      rows.push_back(row);
    }
    arr.push_back(rows);
  }
  return arr;
}

inline std::vector<Rotation> rotations_from_json(const json& arr) {
  std::vector<Rotation> out;
  for (const json& rows : arr) {
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = rows.at(i).at(j).get<double>();
    out.push_back(Rotation(m));
  }
  return out;
}

// Writes the instance container: instance.json plus JCDB1 binaries for A, M*
// and the normalized ground truth.
inline void write_instance(const std::string& dir, const ModelParams& params,
                           const GroundTruth& gt, const BlockMatrix& a) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  write_jcdb(path("A.jcdb"), a);
  write_jcdb(path("m_star.jcdb"), gt.m_star);
  write_jcdb(path("m_bar.jcdb"), gt.m_bar);
  json doc{{"params", to_json(params)},
           {"labels", gt.labels},
           {"rotations", rotations_to_json(gt.rotations)},
           {"files", {{"A", "A.jcdb"}, {"m_star", "m_star.jcdb"}, {"m_bar", "m_bar.jcdb"}}},
           {"digest_A", hex64(digest_block_matrix(a))}};
  write_text_file(path("instance.json"), doc.dump(2) + "\n");
}

struct Instance {
  ModelParams params;
  GroundTruth gt;
  BlockMatrix a;
};

inline Instance read_instance(const std::string& dir) {
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
  };
  const json doc = json::parse(read_text_file(path("instance.json")));
  ModelParams params = model_params_from_json(doc.at("params"));
  GroundTruth gt{doc.at("labels").get<std::vector<int>>(),
                 rotations_from_json(doc.at("rotations")),
                 read_jcdb(path(doc.at("files").at("m_star").get<std::string>())),
                 read_jcdb(path(doc.at("files").at("m_bar").get<std::string>()))};
  BlockMatrix a = read_jcdb(path(doc.at("files").at("A").get<std::string>()));
  if (static_cast<int>(gt.labels.size()) != params.n || a.blocks() != params.n)
    throw std::runtime_error("read_instance: inconsistent instance container");
  return Instance{std::move(params), std::move(gt), std::move(a)};
}

// --------------------------------------------------------------------------
// Reports

inline json to_json(const FeasibilityGaps& g) {
  return json{{"psd", g.psd},
              {"diagonal", g.diagonal},
              {"row_ball", g.row_ball},
              {"total_ball", g.total_ball}};
}

inline json to_json(const SolveReport& r, bool include_history = false) {
  json j{{"objective", r.objective},
         {"iterations", r.iterations},
         {"primal_residual", r.primal_residual},
         {"dual_residual", r.dual_residual},
         {"feasibility_gaps", to_json(r.gaps)},
         {"converged", r.converged},
         {"wall_time_s", r.wall_time_s}};
  if (include_history) j["residual_history"] = r.residual_history;
  return j;
}

inline json to_json(const CertifyOutcome& o) {
  json j{{"success", o.success},
         {"lambda_mins", o.lambda_mins},
         {"best_lambda_min", o.best_lambda_min}};
  if (!o.gammas.empty()) {
    j["gammas"] = o.gammas;
    j["best_gamma"] = o.best_gamma;
  }
  return j;
}

inline json to_json(const randlab::TailReport& r, bool include_samples) {
  json j{{"trials", r.trials},
         {"bound", r.bound},
         {"violation_fraction", r.violation_fraction},
         {"predicted_rate", r.predicted_rate}};
  if (include_samples) j["samples"] = r.samples;
  return j;
}

inline SdpVariant variant_from_name(const std::string& name, int k,
                                    const std::vector<int>& sizes) {
  if (name == "equal") {
    if (sizes.size() != 2 || sizes[0] != sizes[1])
      throw std::invalid_argument("equal variant needs two equal sizes");
    return SdpVariant::equal_known(sizes[0]);
  }
  if (name == "unequal") {
    if (sizes.size() != 2) throw std::invalid_argument("unequal variant needs two sizes");
    return SdpVariant::unequal_known(sizes[0], sizes[1]);
  }
  if (name == "unknown") return SdpVariant::unknown_sizes(k);
  if (name == "general") return SdpVariant::general_known(sizes);
  throw std::invalid_argument("unknown variant name: " + name);
}

}  // namespace syncluster
