#pragma once

// Replication-study driver: builtin data models with analytic spectra,
// per-replication seed streams, a worker pool over replications, and the
// aggregated report table (errors, coverage, band widths per procedure).

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bnspec/io.hpp"
#include "bnspec/sampler.hpp"
#include "bnspec/summary.hpp"
#include "bnspec/var_model.hpp"

namespace bnspec {

enum class BuiltinModel { var2, vma1 };

inline const char* builtin_name(BuiltinModel m) {
  return m == BuiltinModel::var2 ? "var2" : "vma1";
}

inline std::optional<BuiltinModel> parse_builtin(const std::string& name) {
  if (name == "var2") return BuiltinModel::var2;
  if (name == "vma1") return BuiltinModel::vma1;
  return std::nullopt;
}

// Bivariate VAR(2): diagonal lag matrices diag(0.5, -0.3) and diag(0, -0.5),
// innovation covariance [[1, 0.9], [0.9, 1]].
inline VarParams var2_params() {
  VarParams params;
  params.coeffs.resize(2, 4);
  params.coeffs << 0.5, 0.0, 0.0, 0.0, 0.0, -0.3, 0.0, -0.5;
  params.sigma.resize(2, 2);
  params.sigma << 1.0, 0.9, 0.9, 1.0;
  return params;
}

// Bivariate VMA(1): z_t = e_t + Theta e_{t-1} with Theta = [[-0.75, 0.5],
// [0.5, 0.75]], innovation covariance [[1, 0.5], [0.5, 1]].
inline void vma1_params(RMatrix& theta, RMatrix& sigma) {
  theta.resize(2, 2);
  theta << -0.75, 0.5, 0.5, 0.75;
  sigma.resize(2, 2);
  sigma << 1.0, 0.5, 0.5, 1.0;
}

inline RMatrix simulate_builtin(BuiltinModel m, int n, std::uint64_t seed) {
  if (m == BuiltinModel::var2) return simulate_var(var2_params(), n, seed);
  RMatrix theta, sigma;
  vma1_params(theta, sigma);
  return simulate_vma(theta, sigma, n, seed);
}

// f(omega) = (2 pi)^{-1} (I + Theta e^{-i omega}) Sigma (I + Theta e^{-i omega})*.
inline CMatrix vma_spectral_density(const RMatrix& theta, const RMatrix& sigma,
                                    double omega) {
  const auto d = sigma.rows();
  const CMatrix transfer = CMatrix::Identity(d, d) +
                           theta.cast<Complex>() * std::exp(Complex(0.0, -omega));
  CMatrix f = transfer * sigma.cast<Complex>() * transfer.adjoint() / (2.0 * M_PI);
  return 0.5 * (f + f.adjoint());
}

inline std::vector<CMatrix> builtin_spectrum(BuiltinModel m, const FrequencyGrid& grid) {
  RMatrix theta, sigma;
  if (m == BuiltinModel::vma1) vma1_params(theta, sigma);
  const VarParams var = var2_params();
  std::vector<CMatrix> out(static_cast<std::size_t>(grid.half_size()));
  for (int g = 0; g < grid.half_size(); ++g) {
    CMatrix f = m == BuiltinModel::var2
                    ? var_spectral_density(var, grid.omega(g))
                    : vma_spectral_density(theta, sigma, grid.omega(g));
    if (grid.is_boundary(g)) f = f.real().cast<Complex>();
    out[static_cast<std::size_t>(g)] = f;
  }
  return out;
}

struct ProcedureSpec {
  Procedure procedure = Procedure::vnpc;
  int order = 1;  // var with order <= 0 selects the order by AIC per replication
};

struct StudyConfig {
  BuiltinModel model = BuiltinModel::var2;
  int n = 256;
  int replications = 30;
  std::vector<ProcedureSpec> procedures;
  long iterations = 20000;
  long burn_in = 8000;
  int thin = 5;
  int L = 0;
  int k_max = 300;
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0: hardware concurrency
  double level = 0.9;
  int aic_max = 15;
  std::string out_dir;  // empty: keep everything in memory
};

struct StudyRow {
  Procedure procedure = Procedure::vnpc;
  int order = 0;  // requested order; 0 stands for per-replication AIC selection
  int completed = 0;
  int failed = 0;
  double mean_l1 = 0.0;
  double mean_l2 = 0.0;
  double coverage = 0.0;
  RMatrix median_widths;  // realified layout
};

struct StudyReport {
  BuiltinModel model = BuiltinModel::var2;
  int n = 0;
  std::vector<StudyRow> rows;
  std::vector<std::string> failures;
};

// Deterministic substream: one 64-bit seed per (model, n, replication, slot).
// Slot 0 is the data stream, slot 1 + i the chain for procedure i.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint32_t model,
                                 std::uint32_t n, std::uint32_t rep,
                                 std::uint32_t slot) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu),
                    static_cast<std::uint32_t>(master >> 32), model, n, rep, slot};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace detail {

struct RepOutcome {
  bool ok = false;
  double l1 = 0.0, l2 = 0.0;
  bool covered = false;
  RMatrix widths;
  std::string error;
};

inline std::string procedure_tag(const ProcedureSpec& spec) {
  std::string tag = procedure_name(spec.procedure);
  if (spec.procedure != Procedure::vnp)
    tag += spec.order > 0 ? std::to_string(spec.order) : std::string("_aic");
  return tag;
}

}  // namespace detail

inline StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.replications < 1)
    throw contract_error("run_study: need at least one replication");
  if (cfg.procedures.empty())
    throw contract_error("run_study: no procedures requested");
  for (const ProcedureSpec& spec : cfg.procedures)
    if (spec.procedure == Procedure::vnpc && spec.order < 1)
      throw contract_error("run_study: vnpc needs a working order >= 1 (use vnp)");

  const FrequencyGrid grid(cfg.n);
  const std::vector<CMatrix> truth = builtin_spectrum(cfg.model, grid);
  const auto model_id = static_cast<std::uint32_t>(cfg.model);
  const int R = cfg.replications;
  const int P = static_cast<int>(cfg.procedures.size());

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  std::vector<std::vector<detail::RepOutcome>> outcomes(
      static_cast<std::size_t>(R),
      std::vector<detail::RepOutcome>(static_cast<std::size_t>(P)));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= R) return;
      const std::uint64_t data_seed =
          stream_seed(cfg.master_seed, model_id, static_cast<std::uint32_t>(cfg.n),
                      static_cast<std::uint32_t>(rep), 0);
      RMatrix z;
      try {
        z = simulate_builtin(cfg.model, cfg.n, data_seed);
      } catch (const std::exception& e) {
        for (int pi = 0; pi < P; ++pi)
          outcomes[rep][pi].error = std::string("data: ") + e.what();
        continue;
      }
      for (int pi = 0; pi < P; ++pi) {
        detail::RepOutcome& slot = outcomes[rep][pi];
        const ProcedureSpec& spec = cfg.procedures[static_cast<std::size_t>(pi)];
        try {
          McmcConfig mc;
          mc.procedure = spec.procedure;
          mc.order = spec.order;
          if (spec.procedure == Procedure::var && spec.order <= 0)
            mc.order = std::max(1, aic_order(elbow_table(z, cfg.aic_max)));
          mc.iterations = cfg.iterations;
          mc.burn_in = cfg.burn_in;
          mc.thin = cfg.thin;
          mc.L = cfg.L;
          mc.k_max = cfg.k_max;
          mc.seed = stream_seed(cfg.master_seed, model_id,
                                static_cast<std::uint32_t>(cfg.n),
                                static_cast<std::uint32_t>(rep),
                                static_cast<std::uint32_t>(1 + pi));
          const PosteriorDraws draws = run_chain(z, mc);
          const std::vector<CMatrix> median = pointwise_median(draws);
          const UniformRegion region = uniform_region(draws, cfg.level);
          const CoverageReport cov = coverage_and_width(region, truth);
          const auto errors = l1_l2_error(median, truth, draws.omegas);
          slot.ok = true;
          slot.l1 = errors.first;
          slot.l2 = errors.second;
          slot.covered = cov.covered;
          slot.widths = cov.widths;
          if (!cfg.out_dir.empty()) {
            char sub[64];
            std::snprintf(sub, sizeof(sub), "rep_%03d", rep);
            const std::string dir =
                cfg.out_dir + "/" + sub + "/" + detail::procedure_tag(spec);
            std::filesystem::create_directories(dir);
            SummaryBundle bundle = summarize(draws, cfg.level);
            nlohmann::json j = summary_json(mc, draws, bundle);
            j["model"] = builtin_name(cfg.model);
            j["replication"] = rep;
            j["errors"] = {{"l1", slot.l1}, {"l2", slot.l2}};
            j["covered"] = slot.covered;
            write_json(dir + "/summary.json", j);
          }
        } catch (const std::exception& e) {
          slot.error = e.what();
        }
      }
    }
  };

  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, R));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  StudyReport report;
  report.model = cfg.model;
  report.n = cfg.n;
  for (int pi = 0; pi < P; ++pi) {
    const ProcedureSpec& spec = cfg.procedures[static_cast<std::size_t>(pi)];
    StudyRow row;
    row.procedure = spec.procedure;
    row.order = spec.procedure == Procedure::vnp ? 0 : std::max(spec.order, 0);
    std::vector<detail::RepOutcome*> good;
    for (int rep = 0; rep < R; ++rep) {
      detail::RepOutcome& slot = outcomes[rep][pi];
      if (slot.ok) {
        good.push_back(&slot);
      } else {
        ++row.failed;
        char tag[64];
        std::snprintf(tag, sizeof(tag), "rep %d %s: ", rep,
                      detail::procedure_tag(spec).c_str());
        report.failures.push_back(tag + slot.error);
      }
    }
    row.completed = static_cast<int>(good.size());
    if (!good.empty()) {
      const auto d = good.front()->widths.rows();
      row.median_widths.resize(d, d);
      for (const detail::RepOutcome* slot : good) {
        row.mean_l1 += slot->l1;
        row.mean_l2 += slot->l2;
        row.coverage += slot->covered ? 1.0 : 0.0;
      }
      row.mean_l1 /= row.completed;
      row.mean_l2 /= row.completed;
      row.coverage /= row.completed;
      std::vector<double> buf(good.size());
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
          for (std::size_t r = 0; r < good.size(); ++r)
            buf[r] = good[r]->widths(i, j);
          row.median_widths(i, j) = detail::median_inplace(buf);
        }
    } else {
      row.mean_l1 = row.mean_l2 = row.coverage =
          std::numeric_limits<double>::quiet_NaN();
      row.median_widths.resize(0, 0);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline void write_study_report_csv(const std::string& path, const StudyReport& report) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << "model,n,procedure,order,completed,failed,mean_l1,mean_l2,coverage";
  const int d = report.rows.empty() || report.rows.front().median_widths.size() == 0
                    ? 2
                    : static_cast<int>(report.rows.front().median_widths.rows());
  for (const ComponentLabel& label : component_labels(d))
    out << ",width_" << label.name;
  out << "\n";
  for (const StudyRow& row : report.rows) {
    out << builtin_name(report.model) << "," << report.n << ","
        << procedure_name(row.procedure) << "," << row.order << "," << row.completed
        << "," << row.failed << "," << detail::fmt17(row.mean_l1) << ","
        << detail::fmt17(row.mean_l2) << "," << detail::fmt17(row.coverage);
    for (const ComponentLabel& label : component_labels(d))
      out << ","
          << detail::fmt17(row.median_widths.size() == 0
                               ? std::numeric_limits<double>::quiet_NaN()
                               : row.median_widths(label.i, label.j));
    out << "\n";
  }
  if (!out) throw io_error("short write to " + path);
}

}  // namespace bnspec
