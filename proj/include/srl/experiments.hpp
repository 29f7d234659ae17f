#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "srl/regularity.hpp"
#include "srl/sensitivity.hpp"

namespace srl {

/// Synthetic data model: x_sharp has s leading entries m + W_j sqrt(m),
/// A has iid N(0, 1/m) entries, b = A x_sharp + gamma w. The seed fully
/// determines all three draws through disjoint substreams.
struct DataModel {
  Index m = 0;
  Index n = 0;
  Index s = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedInstance {
  ProblemInstance instance;  // lambda left at 0; set per grid point
  Vector x_sharp;
};

GeneratedInstance generate_instance(const DataModel& d);

struct LambdaGrid {
  Program program = Program::SR;
  double center = 0.0;
  int count = 0;
  double log_lo = 0.0;
  double log_hi = 0.0;
  std::vector<double> values;  // strictly increasing, contains center
};

/// The order-optimal reference value: 1.1 Phi^{-1}(1 - 0.05/(2n)) for the
/// square-root program, sqrt(2 log n) for the squared one.
double order_optimal_center(Program program, Index n);

/// Log-spaced grid center * 10^{t_i} over [log_lo, log_hi] with count (odd)
/// points; the point nearest t = 0 is snapped so the grid contains the
/// center exactly.
LambdaGrid build_lambda_grid(Program program, Index n, int count,
                             double log_lo, double log_hi);

struct SweepPoint {
  double lambda = 0.0;
  PrimalDualPair pair;
  double err_to_sharp = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string status;
};

/// Solves one program across a lambda grid (warm-started, descending) and
/// reports every point; failed points carry a status and are never dropped.
std::vector<SweepPoint> sweep_lambda_grid(const ProblemInstance& base,
                                          Program program,
                                          const std::vector<double>& lambdas,
                                          const Vector& x_sharp,
                                          const SolverSettings& settings);

struct BestLambda {
  double lambda_best = 0.0;
  Vector x_best;
  double err_best = 0.0;
  std::size_t grid_index = 0;
};

/// argmin over the grid of ||x(lambda) - x_sharp||, ties toward smaller
/// lambda. Throws if no grid point solved.
BestLambda best_lambda(const std::vector<SweepPoint>& sweep,
                       const Vector& x_sharp);

/// One CSV row of an experiment. Quiet NaN marks an absent numeric field.
struct RunRecord {
  std::uint64_t seed = 0;
  Index m = 0, n = 0, s = 0;
  double gamma = 0.0;
  std::string program;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double lambda_nmz = std::numeric_limits<double>::quiet_NaN();
  double err_to_sharp = std::numeric_limits<double>::quiet_NaN();
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  double zstar = std::numeric_limits<double>::quiet_NaN();
  std::string weak, intermediate, strong;  // flag names or empty
  double L_SR = std::numeric_limits<double>::quiet_NaN();
  double L_UC = std::numeric_limits<double>::quiet_NaN();
  double V = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

std::string run_record_csv_header();
std::string run_record_csv_row(const RunRecord& r);

enum class ExperimentName {
  NoiseRobustness,
  LipschitzComparison,
  GammaMFacets,
  UniquenessCurve,
  UniquenessHeatmap,
  BoundTightness,
};

ExperimentName experiment_from_string(const std::string& name);
const char* experiment_to_string(ExperimentName name);

struct ExperimentConfig {
  ExperimentName name = ExperimentName::NoiseRobustness;
  std::vector<Index> m_list;
  Index n = 0;
  std::vector<Index> s_list;
  std::vector<double> gammas;
  int grid_count = 0;
  double grid_log_lo = 0.0;
  double grid_log_hi = 0.0;
  std::optional<std::vector<double>> lambdas;  // absolute grid override
  std::vector<std::uint64_t> seeds;
  SolverSettings solver;
  RegularityOptions regularity;
  std::string output_dir = ".";
  int jobs = 1;

  void validate() const;
};

/// Paper-parameter defaults for each experiment.
ExperimentConfig default_experiment_config(ExperimentName name);

/// Applies a JSON object (text) onto a config; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const std::string& json_text);

std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct ExperimentArtifacts {
  std::vector<std::string> csv_paths;
  std::vector<std::string> svg_paths;
  std::vector<RunRecord> records;  // everything written, in file order
};

/// Runs the named experiment: one CSV of run records per facet family and
/// one SVG per figure analog, deterministic given the seed list.
ExperimentArtifacts run_experiment(const ExperimentConfig& cfg,
                                   bool progress_to_stderr = false);

}  // namespace srl
