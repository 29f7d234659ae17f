#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "srl/experiments.hpp"
#include "srl/io.hpp"
#include "srl/sensitivity.hpp"

namespace {

using nlohmann::json;
using namespace srl;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIndeterminate = 3;
constexpr int kExitConditionFalse = 4;
constexpr int kExitNotConverged = 5;

json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const ColumnSelection& sel) {
  return json(std::vector<Index>(sel.indices().begin(), sel.indices().end()));
}

json pair_to_json(const PrimalDualPair& pair) {
  return json{{"x", to_json(pair.x)},
              {"y", to_json(pair.y)},
              {"residual_norm", pair.residual_norm},
              {"primal_value", pair.primal_value},
              {"dual_value", pair.dual_value},
              {"gap", pair.gap},
              {"iterations", pair.iterations},
              {"converged", pair.converged}};
}

void emit_report(const std::optional<std::string>& path, const json& report) {
  const std::string text = report.dump(2) + "\n";
  if (path.has_value()) {
    atomic_write_file(*path, text);
  } else {
    std::cout << text;
  }
}

void require_readable(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw IoError("input file does not exist: " + path);
}

struct CommonArgs {
  std::string matrix_path;
  std::string rhs_path;
  double lambda = 0.0;
  SolverSettings solver;
  std::optional<std::string> output;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--matrix", args.matrix_path, "CSV file holding A")
      ->required();
  cmd->add_option("--rhs", args.rhs_path, "CSV file holding b")->required();
  cmd->add_option("--lambda", args.lambda, "tuning parameter (positive)")
      ->required();
  cmd->add_option("--gap-tol", args.solver.gap_tol,
                  "relative duality-gap stopping tolerance");
  cmd->add_option("--max-iter", args.solver.max_iter, "iteration cap");
  cmd->add_option("--step-ratio", args.solver.step_ratio,
                  "primal/dual step balance");
  cmd->add_option("--output", args.output,
                  "report path (stdout when omitted)");
}

json solver_config_json(const CommonArgs& args, const char* program) {
  return json{{"matrix", args.matrix_path},
              {"rhs", args.rhs_path},
              {"lambda", args.lambda},
              {"program", program},
              {"gap_tol", args.solver.gap_tol},
              {"max_iter", args.solver.max_iter},
              {"step_ratio", args.solver.step_ratio}};
}

ProblemInstance load_instance(const CommonArgs& args) {
  require_readable(args.matrix_path);
  require_readable(args.rhs_path);
  ProblemInstance p{read_matrix_csv(args.matrix_path),
                    read_vector_csv(args.rhs_path), args.lambda};
  p.validate();
  return p;
}

int cmd_solve(const CommonArgs& args, const std::string& program_str) {
  const Program program = program_str == "uc" ? Program::UC : Program::SR;
  const ProblemInstance p = load_instance(args);
  const PrimalDualPair pair = solve(program, p, args.solver);
  json report = pair_to_json(pair);
  report["status"] = pair.converged ? "ok" : "not_converged";
  report["config"] = solver_config_json(args, program_name(program));
  emit_report(args.output, report);
  return pair.converged ? kExitOk : kExitNotConverged;
}

struct CheckArgs {
  CommonArgs common;
  RegularityOptions reg;
  double tol_equi = -1.0;  // resolved to tol_equi_factor * lambda when unset
  bool one_based = false;
};

int cmd_check(const CheckArgs& args) {
  const ProblemInstance p = load_instance(args.common);
  const PrimalDualPair pair = solve_srlasso(p, args.common.solver);
  const double tol_equi = args.tol_equi >= 0.0
                              ? args.tol_equi
                              : args.reg.tol_equi_factor * p.lambda;
  const SupportSets sets =
      detect_sets(p, pair, args.reg.tol_support, tol_equi);

  json report;
  report["config"] = solver_config_json(args.common, "sr");
  report["config"]["tol_support"] = args.reg.tol_support;
  report["config"]["tol_equi"] = tol_equi;
  report["config"]["strictness_margin"] = args.reg.strictness_margin;
  report["solve"] = pair_to_json(pair);
  if (!pair.converged) {
    report["status"] = "not_converged";
    emit_report(args.common.output, report);
    return kExitNotConverged;
  }

  const RegularityReport reg =
      assess_regularity(p, pair, sets, args.common.solver, args.reg);
  report["status"] = "ok";
  report["support_I"] = to_json(sets.support_I);
  report["equicorrelation_J"] = to_json(sets.equicorrelation_J);
  report["residual_nonzero"] = sets.residual_nonzero;
  report["weak"] = flag_name(reg.weak);
  report["intermediate"] = flag_name(reg.intermediate);
  report["strong"] = flag_name(reg.strong);
  if (reg.zstar_infinite) {
    report["Zstar"] = "infinite";
  } else {
    report["Zstar"] = reg.weak_optimum_zstar;
  }
  if (reg.weak_witness_z.has_value())
    report["witness_z"] = to_json(*reg.weak_witness_z);
  report["strong_margin"] = reg.strong_margin;
  report["rank_AI_full"] = reg.rank_AI_full;
  report["rank_AJ_full"] = reg.rank_AJ_full;
  report["b_in_range_AI"] = reg.b_in_range_AI;
  report["b_in_range_AJ"] = reg.b_in_range_AJ;
  report["vacuous_empty_J"] = reg.vacuous_empty_J;
  emit_report(args.common.output, report);

  if (args.one_based) {
    auto shift = [](const ColumnSelection& sel) {
      std::string out = "{";
      for (Index i : sel.indices())
        out += std::to_string(i + 1) + (i == sel.indices().back() ? "" : ",");
      return out + "}";
    };
    std::cerr << "weak=" << flag_name(reg.weak)
              << " intermediate=" << flag_name(reg.intermediate)
              << " strong=" << flag_name(reg.strong)
              << " I=" << shift(sets.support_I)
              << " J=" << shift(sets.equicorrelation_J) << " (1-based)\n";
  }

  if (reg.weak == Flag::True) return kExitOk;
  if (reg.weak == Flag::Indeterminate) return kExitIndeterminate;
  return kExitConditionFalse;
}

struct SensitivityArgs {
  CommonArgs common;
  RegularityOptions reg;
  std::optional<std::string> direction_path;
  double alpha = 0.0;
  bool validate = false;
};

int cmd_sensitivity(const SensitivityArgs& args) {
  const ProblemInstance p = load_instance(args.common);
  if (args.direction_path) require_readable(*args.direction_path);
  const PrimalDualPair pair = solve_srlasso(p, args.common.solver);
  json report;
  report["config"] = solver_config_json(args.common, "sr");
  report["config"]["alpha"] = args.alpha;
  if (args.direction_path) report["config"]["direction"] = *args.direction_path;
  report["solve"] = pair_to_json(pair);
  if (!pair.converged) {
    report["status"] = "not_converged";
    emit_report(args.common.output, report);
    return kExitNotConverged;
  }

  const SupportSets sets = detect_sets(p, pair, args.reg.tol_support,
                                       args.reg.tol_equi_factor * p.lambda);
  const RegularityReport reg =
      assess_regularity(p, pair, sets, args.common.solver, args.reg);
  report["weak"] = flag_name(reg.weak);
  report["intermediate"] = flag_name(reg.intermediate);
  report["strong"] = flag_name(reg.strong);
  report["support_I"] = to_json(sets.support_I);
  report["equicorrelation_J"] = to_json(sets.equicorrelation_J);

  const PrimalDualPair lasso = solve_lasso(p, args.common.solver);
  const SensitivityReport sens = lipschitz_bounds(
      p, pair, sets, reg, lasso.converged ? &lasso : nullptr, args.reg);
  if (sens.L_SR_bound_J) report["L_SR_bound_J"] = *sens.L_SR_bound_J;
  if (sens.L_SR_bound_I) report["L_SR_bound_I"] = *sens.L_SR_bound_I;
  if (sens.L_SR_lambda_bound)
    report["L_SR_lambda_bound"] = *sens.L_SR_lambda_bound;
  if (sens.L_UC_lambda_bound)
    report["L_UC_lambda_bound"] = *sens.L_UC_lambda_bound;
  if (sens.V) report["V"] = *sens.V;
  if (!sens.tighter_bound.empty()) report["tighter_bound"] = sens.tighter_bound;

  int exit_code = kExitOk;
  if (reg.intermediate == Flag::True && args.direction_path) {
    const Vector q = read_vector_csv(*args.direction_path);
    try {
      const DirectionalDerivative dd =
          directional_derivative(p, pair, sets, q, args.alpha);
      report["directional_derivative"] = to_json(dd.w);
      report["K_set"] = to_json(dd.K);
    } catch (const DegenerateError& e) {
      report["directional_derivative_error"] = e.what();
    }
  }
  if (reg.strong == Flag::True) {
    const JacobianStrong jac = jacobian_strong(p, pair, sets, args.reg);
    report["jacobian_b"] = to_json(jac.jacobian_b);
    report["jacobian_lambda"] = to_json(jac.jacobian_lambda);

    if (args.validate) {
      // central finite differences with tight re-solves
      SolverSettings tight = args.common.solver;
      tight.gap_tol = 1e-12;
      SolverState state;
      (void)solve_srlasso(p, tight, nullptr, &state);
      const double hb = 1e-6 * std::max(1.0, p.b.norm());
      double max_rel_b = 0.0;
      for (Index i = 0; i < p.A.rows(); ++i) {
        ProblemInstance pp = p;
        pp.b(i) += hb;
        const Vector xp = solve_srlasso(pp, tight, &state, nullptr).x;
        pp.b(i) -= 2 * hb;
        const Vector xm = solve_srlasso(pp, tight, &state, nullptr).x;
        const Vector fd = (xp - xm) / (2 * hb);
        const double scale =
            std::max(1.0, jac.jacobian_b.col(i).lpNorm<Eigen::Infinity>());
        max_rel_b = std::max(
            max_rel_b,
            (fd - jac.jacobian_b.col(i)).lpNorm<Eigen::Infinity>() / scale);
      }
      const double hl = 1e-6 * std::max(1.0, p.lambda);
      ProblemInstance pp = p;
      pp.lambda = p.lambda + hl;
      const Vector xp = solve_srlasso(pp, tight, &state, nullptr).x;
      pp.lambda = p.lambda - hl;
      const Vector xm = solve_srlasso(pp, tight, &state, nullptr).x;
      const Vector fd = (xp - xm) / (2 * hl);
      const double rel_l =
          (fd - jac.jacobian_lambda).lpNorm<Eigen::Infinity>() /
          std::max(1.0, jac.jacobian_lambda.lpNorm<Eigen::Infinity>());
      report["validation"] = {{"jacobian_b_rel_err", max_rel_b},
                              {"jacobian_lambda_rel_err", rel_l}};
    }
  } else if (args.validate) {
    report["validation"] = {{"skipped", "strong condition does not hold"}};
  }

  report["status"] = "ok";
  emit_report(args.common.output, report);
  return exit_code;
}

struct ExperimentArgs {
  std::string name;
  std::optional<std::string> config_path;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
};

int cmd_experiment(const ExperimentArgs& args) {
  ExperimentConfig cfg;
  if (args.config_path) {
    require_readable(*args.config_path);
    json j = json::parse(read_file(*args.config_path));
    j["experiment"] = args.name;  // --name wins over the config body
    cfg = experiment_config_from_json(j.dump());
  } else {
    cfg = default_experiment_config(experiment_from_string(args.name));
  }
  if (args.jobs) cfg.jobs = *args.jobs;
  if (args.output_dir) cfg.output_dir = *args.output_dir;
  if (const char* env_seed = std::getenv("SRLL_SEED")) {
    cfg.seeds = {static_cast<std::uint64_t>(std::strtoull(env_seed, nullptr, 10))};
  }
  cfg.validate();

  const ExperimentArtifacts art = run_experiment(cfg, true);
  json report;
  report["status"] = "ok";
  report["config"] = json::parse(experiment_config_to_json(cfg));
  report["csv"] = art.csv_paths;
  report["svg"] = art.svg_paths;
  report["records"] = art.records.size();
  const std::string path =
      (std::filesystem::path(cfg.output_dir) /
       (std::string(experiment_to_string(cfg.name)) + "_manifest.json"))
          .string();
  atomic_write_file(path, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"square-root LASSO solver, regularity certificates and "
               "sensitivity analysis"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  std::string solve_program = "sr";
  CLI::App* solve_cmd =
      app.add_subcommand("solve", "solve one instance and report a "
                                  "primal-dual pair with gap certificate");
  add_common(solve_cmd, solve_args);
  solve_cmd->add_option("--program", solve_program, "sr or uc")
      ->check(CLI::IsMember({"sr", "uc"}));

  CheckArgs check_args;
  CLI::App* check_cmd = app.add_subcommand(
      "check", "decide the weak/intermediate/strong regularity conditions");
  add_common(check_cmd, check_args.common);
  check_cmd->add_option("--tol-support", check_args.reg.tol_support,
                        "support detection tolerance");
  check_cmd->add_option("--tol-equi", check_args.tol_equi,
                        "equicorrelation tolerance (default 1e-6*lambda)");
  check_cmd->add_option("--strictness-margin",
                        check_args.reg.strictness_margin,
                        "margin for strict inequalities");
  check_cmd->add_flag("--one-based", check_args.one_based,
                      "print a 1-based summary to stderr");

  SensitivityArgs sens_args;
  CLI::App* sens_cmd = app.add_subcommand(
      "sensitivity",
      "derivatives, Lipschitz bounds and the V quantity at the solution");
  add_common(sens_cmd, sens_args.common);
  sens_cmd->add_option("--direction", sens_args.direction_path,
                       "CSV direction q for the directional derivative");
  sens_cmd->add_option("--alpha", sens_args.alpha,
                       "lambda component of the direction");
  sens_cmd->add_flag("--validate", sens_args.validate,
                     "cross-check derivatives by finite differences");

  ExperimentArgs exp_args;
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "run a synthetic study; emits CSV "
                                       "records and SVG figures");
  exp_cmd
      ->add_option("--name", exp_args.name,
                   "noise-robustness | lipschitz-comparison | gamma-m-facets "
                   "| uniqueness-curve | uniqueness-heatmap | bound-tightness")
      ->required();
  exp_cmd->add_option("--config", exp_args.config_path, "JSON config file");
  exp_cmd->add_option("--jobs", exp_args.jobs, "worker threads");
  exp_cmd->add_option("--output-dir", exp_args.output_dir,
                      "directory for artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args, solve_program);
    if (check_cmd->parsed()) return cmd_check(check_args);
    if (sens_cmd->parsed()) return cmd_sensitivity(sens_args);
    if (exp_cmd->parsed()) return cmd_experiment(exp_args);
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition not met: " << e.what() << "\n";
    return kExitConditionFalse;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
