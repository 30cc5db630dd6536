// File formats: counts JSON, chain JSON, CSV report helpers, and atomic
// writes (temp file + rename) so partially written outputs never appear.

#ifndef BAYESTOMO_IO_HPP
#define BAYESTOMO_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bayestomo/inference.hpp"
#include "bayestomo/measurements.hpp"

namespace bayestomo {

using json = nlohmann::json;

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
    f << content;
    if (!f.good()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open file: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Counts file
// ---------------------------------------------------------------------------

struct CountsFile {
  long d = 0;
  std::string type;  // "mub2" | "xz2qubit"
  CountData counts;
  std::optional<double> ground_truth_lambda;
};

inline json counts_to_json(const CountsFile& cf, const MeasurementSet& m) {
  if (cf.counts.settings() != m.settings())
    throw std::invalid_argument("counts_to_json: setting count mismatch");
  json settings = json::array();
  for (Eigen::Index q = 0; q < cf.counts.settings(); ++q) {
    settings.push_back({{"id", m.setting_ids[q]},
                        {"shots", cf.counts.per_setting_totals[q]},
                        {"counts", cf.counts.counts[q]}});
  }
  json j = {{"format_version", 1},
            {"d", cf.d},
            {"n_parties", 2},
            {"type", cf.type},
            {"settings", settings}};
  if (cf.ground_truth_lambda)
    j["ground_truth"] = {{"lambda", *cf.ground_truth_lambda}};
  return j;
}

inline CountsFile counts_from_json(const json& j) {
  CountsFile cf;
  try {
    if (j.at("format_version").get<int>() != 1)
      throw std::runtime_error("unsupported counts format_version");
    cf.d = j.at("d").get<long>();
    if (j.at("n_parties").get<int>() != 2)
      throw std::runtime_error("only two-party counts files are supported");
    cf.type = j.at("type").get<std::string>();
    for (const auto& s : j.at("settings")) {
      auto row = s.at("counts").get<std::vector<long>>();
      const long shots = s.at("shots").get<long>();
      long total = 0;
      for (long c : row) {
        if (c < 0) throw std::runtime_error("negative count");
        total += c;
      }
      if (total != shots)
        throw std::runtime_error("setting \"" + s.at("id").get<std::string>() +
                                 "\": counts do not sum to shots");
      cf.counts.counts.push_back(std::move(row));
    }
    cf.counts.recompute_totals();
    if (j.contains("ground_truth"))
      cf.ground_truth_lambda = j.at("ground_truth").at("lambda").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid counts file: ") + e.what());
  }
  return cf;
}

inline void save_counts(const std::filesystem::path& path, const CountsFile& cf,
                        const MeasurementSet& m) {
  atomic_write(path, counts_to_json(cf, m).dump(2) + "\n");
}

inline CountsFile load_counts(const std::filesystem::path& path) {
  return counts_from_json(load_json(path));
}

// ---------------------------------------------------------------------------
// Chain file
// ---------------------------------------------------------------------------

/// Settings echoed into a chain file so a run is reproducible from the file
/// alone (plus the counts file it references).
struct ChainFileConfig {
  long d = 0;
  std::string type;        // measurement type
  std::string likelihood;  // "full" | "pseudo" | "none"
  std::string sampler;     // "pcn" | "slice"
  double alpha = 1.0;
  double sigma2 = 0.0;  // pseudo only; 0 when unused
  long R = 0, T = 0, burn_in = 0;
  long adapt_window = 0;
  double adapt_factor = 0.0;
  double beta_y = 0.0, beta_z = 0.0;  // initial values
  std::uint64_t seed = 0;
};

struct ChainFile {
  ChainFileConfig config;
  double acceptance_rate = 0.0;
  long density_evals = 0;
  double final_beta_y = 0.0, final_beta_z = 0.0;
  bool compact = false;
  std::vector<ParamVector> samples;                    // full mode
  std::map<std::string, std::vector<double>> functionals;  // compact mode
};

inline json chain_to_json(const ChainFile& cf) {
  json cfg = {{"d", cf.config.d},
              {"type", cf.config.type},
              {"likelihood", cf.config.likelihood},
              {"sampler", cf.config.sampler},
              {"alpha", cf.config.alpha},
              {"sigma2", cf.config.sigma2},
              {"R", cf.config.R},
              {"T", cf.config.T},
              {"burn_in", cf.config.burn_in},
              {"adapt_window", cf.config.adapt_window},
              {"adapt_factor", cf.config.adapt_factor},
              {"beta_y", cf.config.beta_y},
              {"beta_z", cf.config.beta_z},
              {"seed", cf.config.seed}};
  json j = {{"format_version", 1},
            {"config", cfg},
            {"acceptance_rate", cf.acceptance_rate},
            {"density_evals", cf.density_evals},
            {"final_beta_y", cf.final_beta_y},
            {"final_beta_z", cf.final_beta_z}};
  if (cf.compact) {
    json f = json::object();
    for (const auto& [name, vals] : cf.functionals) f[name] = vals;
    j["samples_functional"] = f;
  } else {
    json samples = json::array();
    for (const auto& x : cf.samples) {
      json zre = json::array(), zim = json::array();
      for (Eigen::Index k = 0; k < x.dim(); ++k) {
        std::vector<double> re(x.dim()), im(x.dim());
        for (Eigen::Index i = 0; i < x.dim(); ++i) {
          re[i] = x.z(i, k).real();
          im[i] = x.z(i, k).imag();
        }
        zre.push_back(re);
        zim.push_back(im);
      }
      samples.push_back({{"y", std::vector<double>(x.y.data(), x.y.data() + x.dim())},
                         {"z_re", zre},
                         {"z_im", zim}});
    }
    j["samples"] = samples;
  }
  return j;
}

inline ChainFile chain_from_json(const json& j) {
  ChainFile cf;
  try {
    if (j.at("format_version").get<int>() != 1)
      throw std::runtime_error("unsupported chain format_version");
    const auto& c = j.at("config");
    cf.config.d = c.at("d").get<long>();
    cf.config.type = c.at("type").get<std::string>();
    cf.config.likelihood = c.at("likelihood").get<std::string>();
    cf.config.sampler = c.at("sampler").get<std::string>();
    cf.config.alpha = c.at("alpha").get<double>();
    cf.config.sigma2 = c.at("sigma2").get<double>();
    cf.config.R = c.at("R").get<long>();
    cf.config.T = c.at("T").get<long>();
    cf.config.burn_in = c.at("burn_in").get<long>();
    cf.config.adapt_window = c.at("adapt_window").get<long>();
    cf.config.adapt_factor = c.at("adapt_factor").get<double>();
    cf.config.beta_y = c.at("beta_y").get<double>();
    cf.config.beta_z = c.at("beta_z").get<double>();
    cf.config.seed = c.at("seed").get<std::uint64_t>();
    cf.acceptance_rate = j.at("acceptance_rate").get<double>();
    cf.density_evals = j.at("density_evals").get<long>();
    cf.final_beta_y = j.at("final_beta_y").get<double>();
    cf.final_beta_z = j.at("final_beta_z").get<double>();
    if (j.contains("samples_functional")) {
      cf.compact = true;
      for (const auto& [name, vals] : j.at("samples_functional").items())
        cf.functionals[name] = vals.get<std::vector<double>>();
    } else {
      for (const auto& s : j.at("samples")) {
        ParamVector x;
        const auto y = s.at("y").get<std::vector<double>>();
        const auto D = static_cast<Eigen::Index>(y.size());
        x.y = Eigen::Map<const RVec>(y.data(), D);
        x.z.resize(D, D);
        const auto& zre = s.at("z_re");
        const auto& zim = s.at("z_im");
        for (Eigen::Index k = 0; k < D; ++k)
          for (Eigen::Index i = 0; i < D; ++i)
            x.z(i, k) = cplx(zre.at(k).at(i).get<double>(),
                             zim.at(k).at(i).get<double>());
        cf.samples.push_back(std::move(x));
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid chain file: ") + e.what());
  }
  return cf;
}

inline void save_chain(const std::filesystem::path& path, const ChainFile& cf) {
  atomic_write(path, chain_to_json(cf).dump(2) + "\n");
}

inline ChainFile load_chain(const std::filesystem::path& path) {
  return chain_from_json(load_json(path));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Row-oriented CSV builder with fixed column order and 17-digit floats.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns_[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw std::invalid_argument("CsvWriter: cell count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream out_;
};

}  // namespace bayestomo

#endif  // BAYESTOMO_IO_HPP
