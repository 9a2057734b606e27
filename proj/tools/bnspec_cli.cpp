// Command-line front end: simulate builtin models, pick a working order from
// the elbow table, fit one of the three procedures to a series, or run the
// replication study. Exit codes: 0 success, 2 I/O, 3 validation, 4 numerical.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bnspec/bnspec.hpp"

namespace {

using namespace bnspec;

struct DataOptions {
  std::string data;     // CSV path or builtin name (var2, vma1)
  std::string columns;  // comma-separated 1-based column selection
  bool standardize = false;
  bool difference = false;
  int n = 256;  // builtin series length
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--data", opt.data, "input CSV path or builtin model (var2, vma1)")
      ->required();
  cmd->add_option("--columns", opt.columns, "1-based columns to keep, e.g. 1,3");
  cmd->add_flag("--standardize", opt.standardize,
                "center and scale each column to unit variance");
  cmd->add_flag("--diff", opt.difference, "first differences (applied before scaling)");
  cmd->add_option("--n", opt.n, "length of a simulated builtin series");
}

std::vector<int> parse_columns(const std::string& spec) {
  std::vector<int> cols;
  std::string cell;
  std::stringstream in(spec);
  while (std::getline(in, cell, ',')) {
    char* end = nullptr;
    const long v = std::strtol(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0' || v < 1)
      throw contract_error("--columns must list 1-based indices, got '" + cell + "'");
    cols.push_back(static_cast<int>(v - 1));
  }
  if (cols.empty()) throw contract_error("--columns is empty");
  return cols;
}

RMatrix load_series(const DataOptions& opt, std::uint64_t seed) {
  RMatrix z;
  if (auto builtin = parse_builtin(opt.data)) {
    z = simulate_builtin(*builtin,opt.n,
                         stream_seed(seed, static_cast<std::uint32_t>(*builtin),
                                     static_cast<std::uint32_t>(opt.n), 0, 0));
  } else {
    z = read_series_csv(opt.data,
                        opt.columns.empty() ? std::vector<int>{} : parse_columns(opt.columns));
  }
  if (opt.difference) {
    if (z.rows() < 3) throw contract_error("--diff needs at least three rows");
    z = (z.bottomRows(z.rows() - 1) - z.topRows(z.rows() - 1)).eval();
  }
  if (opt.standardize) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const double mean = z.col(c).mean();
      const double sd =
          std::sqrt((z.col(c).array() - mean).square().sum() / (z.rows() - 1.0));
      if (!(sd > 0.0))
        throw contract_error("--standardize: column " + std::to_string(c + 1) +
                             " is constant");
      z.col(c) = (z.col(c).array() - mean) / sd;
    }
  }
  validate_series(z);
  return z;
}

std::vector<ProcedureSpec> parse_procedures(const std::string& spec) {
  std::vector<ProcedureSpec> out;
  std::string token;
  std::stringstream in(spec);
  while (std::getline(in, token, ',')) {
    ProcedureSpec p;
    std::string name = token, arg;
    if (const auto colon = token.find(':'); colon != std::string::npos) {
      name = token.substr(0, colon);
      arg = token.substr(colon + 1);
    }
    if (name == "vnpc") {
      p.procedure = Procedure::vnpc;
      p.order = arg.empty() ? 1 : std::atoi(arg.c_str());
      if (p.order < 1)
        throw contract_error("vnpc needs a working order >= 1; use vnp for order 0");
    } else if (name == "vnp") {
      p.procedure = Procedure::vnp;
      p.order = 0;
    } else if (name == "var") {
      p.procedure = Procedure::var;
      p.order = (arg.empty() || arg == "aic") ? 0 : std::atoi(arg.c_str());
      if (!arg.empty() && arg != "aic" && p.order < 1)
        throw contract_error("var order must be >= 1 or 'aic'");
    } else {
      throw contract_error("unknown procedure '" + name + "' (vnpc, vnp, var)");
    }
    out.push_back(p);
  }
  if (out.empty()) throw contract_error("--procedures is empty");
  return out;
}

void write_fit_plots(const std::string& dir, const SummaryBundle& bundle) {
  const auto d = bundle.uniform.center.empty()
                     ? 0
                     : static_cast<int>(bundle.uniform.center.front().rows());
  for (const ComponentLabel& label : component_labels(d)) {
    std::vector<double> median(bundle.omegas.size()), lo(bundle.omegas.size()),
        hi(bundle.omegas.size());
    for (std::size_t g = 0; g < bundle.omegas.size(); ++g) {
      median[g] = realify(bundle.median[g])(label.i, label.j);
      lo[g] = bundle.uniform.lower[g](label.i, label.j);
      hi[g] = bundle.uniform.upper[g](label.i, label.j);
    }
    write_polyline_svg(dir + "/spectrum_" + label.name + ".svg",
                       "spectral density " + label.name, "frequency", bundle.omegas,
                       {{"median", median}, {"uniform lower", lo}, {"uniform upper", hi}});
  }
  for (const CoherencyBand& band : bundle.coherency) {
    const std::string tag =
        std::to_string(band.i + 1) + "_" + std::to_string(band.j + 1);
    write_polyline_svg(dir + "/coherency_" + tag + ".svg", "squared coherency " + tag,
                       "frequency", bundle.omegas,
                       {{"median", band.median}, {"lower", band.lower},
                        {"upper", band.upper}});
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian spectral density matrix estimation for stationary "
               "multivariate time series"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "write a builtin-model series CSV");
  simulate->set_config("--config");
  DataOptions sim_data;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "series.csv";
  simulate->add_option("--data", sim_data.data, "builtin model (var2, vma1)")->required();
  simulate->add_option("--n", sim_data.n, "series length");
  simulate->add_option("--seed", sim_seed, "simulation seed");
  simulate->add_option("--out", sim_out, "output CSV path");
  simulate->callback([&] {
    const auto builtin = parse_builtin(sim_data.data);
    if (!builtin)
      throw contract_error("unknown builtin '" + sim_data.data + "' (var2, vma1)");
    write_series_csv(sim_out, simulate_builtin(*builtin, sim_data.n, sim_seed));
    std::cout << "wrote " << sim_out << " (" << sim_data.n << " rows)\n";
  });

  // elbow
  auto* elbow = app.add_subcommand(
      "elbow", "order-vs-negative-log-likelihood table for picking a working order");
  elbow->set_config("--config");
  DataOptions elbow_data;
  int p_max = 20;
  std::uint64_t elbow_seed = 1;
  std::string elbow_out = ".";
  bool elbow_plots = false;
  add_data_options(elbow, elbow_data);
  elbow->add_option("--pmax", p_max, "largest order to score");
  elbow->add_option("--seed", elbow_seed, "seed for builtin data");
  elbow->add_option("--out", elbow_out, "output directory");
  elbow->add_flag("--plots", elbow_plots, "write elbow.svg");
  elbow->callback([&] {
    const RMatrix z = load_series(elbow_data, elbow_seed);
    const ElbowTable table = elbow_table(z, p_max);
    std::filesystem::create_directories(elbow_out);
    RMatrix values(static_cast<Eigen::Index>(table.order.size()), 3);
    for (std::size_t r = 0; r < table.order.size(); ++r) {
      values(r, 0) = table.order[r];
      values(r, 1) = table.neg_max_loglik[r];
      values(r, 2) = table.aic[r];
    }
    write_csv_table(elbow_out + "/elbow.csv", {"order", "neg_max_loglik", "aic"}, values);
    if (elbow_plots) {
      std::vector<double> orders(table.order.begin(), table.order.end());
      write_polyline_svg(elbow_out + "/elbow.svg", "negative maximum log likelihood",
                         "order", orders, {{"neg_max_loglik", table.neg_max_loglik}});
    }
    std::cout << "wrote " << elbow_out << "/elbow.csv (aic minimizer: p="
              << aic_order(table) << ")\n";
  });

  // fit
  auto* fit = app.add_subcommand("fit", "run one procedure and write its summaries");
  fit->set_config("--config");
  DataOptions fit_data;
  McmcConfig mc;
  std::string procedure = "vnpc";
  std::string fit_out;
  double level = 0.9;
  bool fit_plots = false;
  add_data_options(fit, fit_data);
  fit->add_option("--procedure", procedure, "vnpc, vnp, or var");
  fit->add_option("--order", mc.order, "working or baseline VAR order");
  fit->add_option("--iters", mc.iterations, "MCMC iterations");
  fit->add_option("--burnin", mc.burn_in, "burn-in iterations");
  fit->add_option("--thin", mc.thin, "thinning stride");
  fit->add_option("--L", mc.L, "radial atom count (0: automatic)");
  fit->add_option("--kmax", mc.k_max, "largest polynomial degree");
  fit->add_option("--seed", mc.seed, "chain seed");
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_option("--level", level, "credible level for the bands");
  fit->add_flag("--plots", fit_plots, "write SVG plots");
  fit->callback([&] {
    if (procedure == "vnpc") {
      mc.procedure = Procedure::vnpc;
      if (mc.order < 1)
        throw contract_error("vnpc with order 0 is the vnp procedure; use "
                             "--procedure vnp");
    } else if (procedure == "vnp") {
      mc.procedure = Procedure::vnp;
    } else if (procedure == "var") {
      mc.procedure = Procedure::var;
      if (mc.order < 1) throw contract_error("var needs --order >= 1");
    } else {
      throw contract_error("unknown procedure '" + procedure + "' (vnpc, vnp, var)");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const RMatrix z = load_series(fit_data, mc.seed);
    const PosteriorDraws draws = run_chain(z, mc);
    const SummaryBundle bundle = summarize(draws, level);
    std::filesystem::create_directories(fit_out);
    write_draws_bin(fit_out + "/draws.bin", draws);
    write_trace_csv(fit_out + "/trace.csv", draws);
    write_summary_csvs(fit_out, bundle);
    write_coherency_csvs(fit_out, bundle);
    nlohmann::json j = summary_json(mc, draws, bundle);
    j["data"] = {{"source", fit_data.data},
                 {"rows", draws.n},
                 {"columns", draws.d},
                 {"standardize", fit_data.standardize},
                 {"diff", fit_data.difference}};
    j["wall_seconds"] = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    write_json(fit_out + "/summary.json", j);
    if (fit_plots) write_fit_plots(fit_out, bundle);
    std::cout << "wrote " << fit_out << " (" << draws.M
              << " draws, xi=" << bundle.uniform.xi << ")\n";
  });

  // study
  auto* study = app.add_subcommand(
      "study", "replication study over a builtin model with known truth");
  study->set_config("--config");
  StudyConfig sc;
  std::string model = "var2";
  std::string procedures = "vnpc:1,vnp,var:aic";
  std::string study_out;
  bool per_rep = false;
  study->add_option("--model", model, "builtin model (var2, vma1)");
  study->add_option("--n", sc.n, "series length");
  study->add_option("--reps", sc.replications, "number of replications");
  study->add_option("--procedures", procedures,
                    "comma list, e.g. vnpc:1,vnp,var:aic");
  study->add_option("--iters", sc.iterations, "MCMC iterations per chain");
  study->add_option("--burnin", sc.burn_in, "burn-in iterations");
  study->add_option("--thin", sc.thin, "thinning stride");
  study->add_option("--L", sc.L, "radial atom count (0: automatic)");
  study->add_option("--kmax", sc.k_max, "largest polynomial degree");
  study->add_option("--seed", sc.master_seed, "master seed");
  study->add_option("--workers", sc.workers, "worker threads (0: hardware)");
  study->add_option("--level", sc.level, "credible level");
  study->add_option("--aicmax", sc.aic_max, "largest order scanned by AIC");
  study->add_option("--out", study_out, "output directory")->required();
  study->add_flag("--per-rep", per_rep, "also write per-replication summaries");
  study->callback([&] {
    const auto builtin = parse_builtin(model);
    if (!builtin) throw contract_error("unknown builtin '" + model + "' (var2, vma1)");
    sc.model = *builtin;
    sc.procedures = parse_procedures(procedures);
    std::filesystem::create_directories(study_out);
    sc.out_dir = per_rep ? study_out + "/reps" : std::string();
    const StudyReport report = run_study(sc);
    write_study_report_csv(study_out + "/study_report.csv", report);
    if (!report.failures.empty()) {
      std::ofstream log(study_out + "/failures.log");
      for (const std::string& f : report.failures) log << f << "\n";
      std::cerr << report.failures.size() << " replication(s) failed, see "
                << study_out << "/failures.log\n";
    }
    std::cout << "model=" << builtin_name(report.model) << " n=" << report.n << "\n";
    for (const StudyRow& row : report.rows) {
      std::cout << procedure_name(row.procedure);
      if (row.procedure != Procedure::vnp)
        std::cout << "(" << (row.order > 0 ? std::to_string(row.order) : "aic") << ")";
      std::cout << ": completed=" << row.completed << " failed=" << row.failed
                << " L1=" << row.mean_l1 << " L2=" << row.mean_l2
                << " coverage=" << row.coverage << "\n";
    }
    std::cout << "wrote " << study_out << "/study_report.csv\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bnspec::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const bnspec::contract_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
