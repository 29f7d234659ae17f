#include "srl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "srl/io.hpp"
#include "srl/rng.hpp"
#include "srl/svg.hpp"

namespace srl {

using nlohmann::json;

void DataModel::validate() const {
  if (m < 1 || n < 1) throw InvalidConfigError("DataModel: m, n must be >= 1");
  if (s < 0 || s > n) throw InvalidConfigError("DataModel: need 0 <= s <= n");
  if (gamma < 0.0) throw InvalidConfigError("DataModel: gamma must be >= 0");
}

GeneratedInstance generate_instance(const DataModel& d) {
  d.validate();
  GeneratedInstance out;
  const double md = static_cast<double>(d.m);

  CounterRng signal(d.seed, CounterRng::kSignal);
  out.x_sharp = Vector::Zero(d.n);
  for (Index j = 0; j < d.s; ++j)
    out.x_sharp(j) = md + signal.next_normal() * std::sqrt(md);

  // Matrix entries are drawn row by row.
  CounterRng matrix(d.seed, CounterRng::kMatrix);
  const double scale = 1.0 / std::sqrt(md);
  Matrix A(d.m, d.n);
  for (Index i = 0; i < d.m; ++i)
    for (Index j = 0; j < d.n; ++j) A(i, j) = matrix.next_normal() * scale;

  CounterRng noise(d.seed, CounterRng::kNoise);
  Vector w(d.m);
  for (Index i = 0; i < d.m; ++i) w(i) = noise.next_normal();

  out.instance.A = std::move(A);
  out.instance.b = out.instance.A * out.x_sharp + d.gamma * w;
  out.instance.lambda = 0.0;  // set per grid point
  return out;
}

double order_optimal_center(Program program, Index n) {
  if (program == Program::SR)
    return 1.1 * inverse_normal_cdf(1.0 - 0.05 / (2.0 * static_cast<double>(n)));
  return std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

LambdaGrid build_lambda_grid(Program program, Index n, int count,
                             double log_lo, double log_hi) {
  if (count < 3 || count % 2 == 0)
    throw InvalidConfigError("lambda grid count must be odd and >= 3");
  if (!(log_lo < log_hi))
    throw InvalidConfigError("lambda grid needs log_lo < log_hi");
  if (log_lo > 0.0 || log_hi < 0.0)
    throw InvalidConfigError("lambda grid must contain the center (t = 0)");
  LambdaGrid grid;
  grid.program = program;
  grid.count = count;
  grid.log_lo = log_lo;
  grid.log_hi = log_hi;
  grid.center = order_optimal_center(program, n);
  grid.values.resize(static_cast<std::size_t>(count));
  const double step = (log_hi - log_lo) / static_cast<double>(count - 1);
  std::size_t nearest = 0;
  double nearest_abs = std::numeric_limits<double>::infinity();
  std::vector<double> ts(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ts[static_cast<std::size_t>(i)] = log_lo + step * i;
    const double a = std::abs(ts[static_cast<std::size_t>(i)]);
    if (a < nearest_abs) {
      nearest_abs = a;
      nearest = static_cast<std::size_t>(i);
    }
  }
  ts[nearest] = 0.0;  // contain the center exactly
  for (int i = 0; i < count; ++i)
    grid.values[static_cast<std::size_t>(i)] =
        grid.center * std::pow(10.0, ts[static_cast<std::size_t>(i)]);
  return grid;
}

std::vector<SweepPoint> sweep_lambda_grid(const ProblemInstance& base,
                                          Program program,
                                          const std::vector<double>& lambdas,
                                          const Vector& x_sharp,
                                          const SolverSettings& settings) {
  std::vector<std::size_t> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lambdas[a] > lambdas[b];
  });

  std::vector<SweepPoint> out(lambdas.size());
  ProblemInstance p = base;
  SolverState state;
  bool have_state = false;
  for (std::size_t k : order) {
    SweepPoint& pt = out[k];
    pt.lambda = lambdas[k];
    p.lambda = lambdas[k];
    try {
      SolverState next;
      pt.pair = solve(program, p, settings, have_state ? &state : nullptr,
                      &next);
      state = next;
      have_state = true;
      pt.ok = pt.pair.converged;
      pt.status = pt.pair.converged ? "ok" : "not_converged";
    } catch (const Error& e) {
      pt.ok = false;
      pt.status = std::string("error:") + e.what();
    }
    if (pt.pair.x.size() == base.A.cols() && x_sharp.size() == base.A.cols())
      pt.err_to_sharp = (pt.pair.x - x_sharp).norm();
  }
  return out;
}

BestLambda best_lambda(const std::vector<SweepPoint>& sweep,
                       const Vector& x_sharp) {
  std::vector<std::size_t> order(sweep.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sweep[a].lambda < sweep[b].lambda;
  });
  BestLambda best;
  bool found = false;
  for (std::size_t k : order) {
    const SweepPoint& pt = sweep[k];
    if (!pt.ok) continue;
    const double err = (pt.pair.x - x_sharp).norm();
    if (!found || err < best.err_best) {
      found = true;
      best.err_best = err;
      best.lambda_best = pt.lambda;
      best.x_best = pt.pair.x;
      best.grid_index = k;
    }
  }
  if (!found) throw Error("best_lambda: no grid point solved");
  return best;
}

std::string run_record_csv_header() {
  return "seed,m,n,s,gamma,program,lambda,lambda_nmz,err_to_sharp,rel_err,"
         "Zstar,weak,intermediate,strong,L_SR,L_UC,V,status";
}

namespace {

std::string field(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

}  // namespace

std::string run_record_csv_row(const RunRecord& r) {
  std::ostringstream ss;
  ss << r.seed << ',' << r.m << ',' << r.n << ',' << r.s << ','
     << format_double(r.gamma) << ',' << r.program << ',' << field(r.lambda)
     << ',' << field(r.lambda_nmz) << ',' << field(r.err_to_sharp) << ','
     << field(r.rel_err) << ',' << field(r.zstar) << ',' << r.weak << ','
     << r.intermediate << ',' << r.strong << ',' << field(r.L_SR) << ','
     << field(r.L_UC) << ',' << field(r.V) << ',' << r.status;
  return ss.str();
}

ExperimentName experiment_from_string(const std::string& name) {
  if (name == "noise-robustness") return ExperimentName::NoiseRobustness;
  if (name == "lipschitz-comparison") return ExperimentName::LipschitzComparison;
  if (name == "gamma-m-facets") return ExperimentName::GammaMFacets;
  if (name == "uniqueness-curve") return ExperimentName::UniquenessCurve;
  if (name == "uniqueness-heatmap") return ExperimentName::UniquenessHeatmap;
  if (name == "bound-tightness") return ExperimentName::BoundTightness;
  throw InvalidConfigError("unknown experiment '" + name + "'");
}

const char* experiment_to_string(ExperimentName name) {
  switch (name) {
    case ExperimentName::NoiseRobustness: return "noise-robustness";
    case ExperimentName::LipschitzComparison: return "lipschitz-comparison";
    case ExperimentName::GammaMFacets: return "gamma-m-facets";
    case ExperimentName::UniquenessCurve: return "uniqueness-curve";
    case ExperimentName::UniquenessHeatmap: return "uniqueness-heatmap";
    case ExperimentName::BoundTightness: return "bound-tightness";
  }
  throw InvalidConfigError("unknown experiment enum");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw InvalidConfigError("config: empty seed list");
  if (m_list.empty()) throw InvalidConfigError("config: empty m list");
  if (s_list.empty()) throw InvalidConfigError("config: empty s list");
  if (gammas.empty()) throw InvalidConfigError("config: empty gamma list");
  if (n < 1) throw InvalidConfigError("config: n must be >= 1");
  if (!lambdas.has_value()) {
    if (grid_count < 3 || grid_count % 2 == 0)
      throw InvalidConfigError("config: grid count must be odd and >= 3");
  } else if (lambdas->empty()) {
    throw InvalidConfigError("config: empty lambda list");
  }
  if (jobs < 1) throw InvalidConfigError("config: jobs must be >= 1");
  solver.validate();
}

namespace {

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] =
        std::pow(10.0, a + (b - a) * i / static_cast<double>(count - 1));
  return out;
}

std::vector<std::uint64_t> seed_range(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

}  // namespace

ExperimentConfig default_experiment_config(ExperimentName name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.grid_count = 501;
  cfg.grid_log_lo = -3.0;
  cfg.grid_log_hi = 2.0;
  cfg.seeds = {1};
  switch (name) {
    case ExperimentName::NoiseRobustness:
      cfg.m_list = {50};
      cfg.n = 100;
      cfg.s_list = {5};
      cfg.gammas = log_spaced(0.01, 10.0, 13);
      cfg.seeds = seed_range(1, 5);
      break;
    case ExperimentName::LipschitzComparison:
      cfg.m_list = {100};
      cfg.n = 200;
      cfg.s_list = {5};
      cfg.gammas = {0.5};
      break;
    case ExperimentName::GammaMFacets:
      cfg.m_list = {50, 100, 150, 200};
      cfg.n = 200;
      cfg.s_list = {7};
      cfg.gammas = {0.1, 0.5, 1.0, 5.0, 10.0};
      break;
    case ExperimentName::UniquenessCurve:
      cfg.m_list = {100};
      cfg.n = 200;
      cfg.s_list = {2};
      cfg.gammas = {0.1};
      break;
    case ExperimentName::UniquenessHeatmap:
      cfg.m_list = {100};
      cfg.n = 200;
      cfg.s_list = {2};
      cfg.gammas = log_spaced(0.01, 10.0, 7);
      cfg.lambdas = log_spaced(0.1, 10.0, 31);
      cfg.seeds = seed_range(1, 20);
      cfg.regularity.aux_decision_only = true;
      break;
    case ExperimentName::BoundTightness:
      cfg.m_list = {50, 100, 150, 200};
      cfg.n = 200;
      cfg.s_list = {3, 7, 15};
      cfg.gammas = {0.1, 0.5, 1.0, 5.0};
      break;
  }
  return cfg;
}

namespace {

std::vector<Index> to_index_list(const json& j, const char* key) {
  std::vector<Index> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<Index>());
  } else {
    out.push_back(j.get<Index>());
  }
  if (out.empty()) throw InvalidConfigError(std::string("empty list for ") + key);
  return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("bad config JSON: ") + e.what());
  }
  if (!j.contains("experiment"))
    throw InvalidConfigError("config: missing 'experiment'");
  ExperimentConfig cfg = default_experiment_config(
      experiment_from_string(j.at("experiment").get<std::string>()));

  static const std::set<std::string> known = {
      "experiment", "m", "n", "s", "gammas", "grid", "lambdas",
      "seeds", "solver", "regularity", "output_dir", "jobs"};
  for (const auto& el : j.items())
    if (!known.count(el.key()))
      throw InvalidConfigError("config: unknown key '" + el.key() + "'");

  if (j.contains("m")) cfg.m_list = to_index_list(j.at("m"), "m");
  if (j.contains("n")) cfg.n = j.at("n").get<Index>();
  if (j.contains("s")) cfg.s_list = to_index_list(j.at("s"), "s");
  if (j.contains("gammas")) cfg.gammas = j.at("gammas").get<std::vector<double>>();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("count")) cfg.grid_count = g.at("count").get<int>();
    if (g.contains("log_lo")) cfg.grid_log_lo = g.at("log_lo").get<double>();
    if (g.contains("log_hi")) cfg.grid_log_hi = g.at("log_hi").get<double>();
  }
  if (j.contains("lambdas"))
    cfg.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (j.contains("seeds"))
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("gap_tol")) cfg.solver.gap_tol = s.at("gap_tol").get<double>();
    if (s.contains("max_iter")) cfg.solver.max_iter = s.at("max_iter").get<long>();
    if (s.contains("step_ratio"))
      cfg.solver.step_ratio = s.at("step_ratio").get<double>();
  }
  if (j.contains("regularity")) {
    const auto& r = j.at("regularity");
    if (r.contains("tol_support"))
      cfg.regularity.tol_support = r.at("tol_support").get<double>();
    if (r.contains("tol_equi_factor"))
      cfg.regularity.tol_equi_factor = r.at("tol_equi_factor").get<double>();
    if (r.contains("strictness_margin"))
      cfg.regularity.strictness_margin = r.at("strictness_margin").get<double>();
    if (r.contains("aux_decision_only"))
      cfg.regularity.aux_decision_only = r.at("aux_decision_only").get<bool>();
  }
  if (j.contains("output_dir"))
    cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  cfg.validate();
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_to_string(cfg.name);
  j["m"] = cfg.m_list;
  j["n"] = cfg.n;
  j["s"] = cfg.s_list;
  j["gammas"] = cfg.gammas;
  if (cfg.lambdas.has_value()) {
    j["lambdas"] = *cfg.lambdas;
  } else {
    j["grid"] = {{"count", cfg.grid_count},
                 {"log_lo", cfg.grid_log_lo},
                 {"log_hi", cfg.grid_log_hi}};
  }
  j["seeds"] = cfg.seeds;
  j["solver"] = {{"gap_tol", cfg.solver.gap_tol},
                 {"max_iter", cfg.solver.max_iter},
                 {"step_ratio", cfg.solver.step_ratio}};
  j["regularity"] = {{"tol_support", cfg.regularity.tol_support},
                     {"tol_equi_factor", cfg.regularity.tol_equi_factor},
                     {"strictness_margin", cfg.regularity.strictness_margin},
                     {"aux_decision_only", cfg.regularity.aux_decision_only}};
  j["output_dir"] = cfg.output_dir;
  j["jobs"] = cfg.jobs;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// experiment drivers
// ---------------------------------------------------------------------------

namespace {

void run_pool(std::size_t count, int jobs,
              const std::function<void(std::size_t)>& fn, bool progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      fn(i);
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) std::fprintf(stderr, "\rcell %zu/%zu", d, count);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (progress) std::fprintf(stderr, "\n");
}

std::vector<double> grid_values(const ExperimentConfig& cfg, Program prog) {
  if (cfg.lambdas.has_value()) return *cfg.lambdas;
  return build_lambda_grid(prog, cfg.n, cfg.grid_count, cfg.grid_log_lo,
                           cfg.grid_log_hi)
      .values;
}

RunRecord base_record(const DataModel& d, Program prog) {
  RunRecord r;
  r.seed = d.seed;
  r.m = d.m;
  r.n = d.n;
  r.s = d.s;
  r.gamma = d.gamma;
  r.program = program_name(prog);
  return r;
}

struct ProgramSweepResult {
  std::vector<double> lambdas;
  std::vector<SweepPoint> points;
  BestLambda best;
};

ProgramSweepResult sweep_program(const GeneratedInstance& gi, Program prog,
                                 const ExperimentConfig& cfg) {
  ProgramSweepResult out;
  out.lambdas = grid_values(cfg, prog);
  out.points = sweep_lambda_grid(gi.instance, prog, out.lambdas, gi.x_sharp,
                                 cfg.solver);
  out.best = best_lambda(out.points, gi.x_sharp);
  return out;
}

SupportSets sets_for(const ExperimentConfig& cfg, const ProblemInstance& p,
                     const PrimalDualPair& pair) {
  return detect_sets(p, pair, cfg.regularity.tol_support,
                     cfg.regularity.tol_equi_factor * p.lambda);
}

void write_records_csv(const std::string& path,
                       const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << run_record_csv_header() << '\n';
  for (const auto& r : records) out << run_record_csv_row(r) << '\n';
  atomic_write_file(path, out.str());
}

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
  return (std::filesystem::path(cfg.output_dir) / file).string();
}

const char* kSrColor = "#1f6fb4";
const char* kUcColor = "#d95f02";

// Fig 1a analog: best lambda against noise scale for both programs.
ExperimentArtifacts run_noise_robustness(const ExperimentConfig& cfg,
                                         bool progress) {
  struct Cell {
    std::vector<RunRecord> recs;
  };
  const std::size_t n_cells = cfg.seeds.size() * cfg.gammas.size();
  std::vector<Cell> cells(n_cells);
  run_pool(
      n_cells, cfg.jobs,
      [&](std::size_t idx) {
        const std::size_t si = idx / cfg.gammas.size();
        const std::size_t gi = idx % cfg.gammas.size();
        DataModel d{cfg.m_list.front(), cfg.n, cfg.s_list.front(),
                    cfg.gammas[gi], cfg.seeds[si]};
        const GeneratedInstance inst = generate_instance(d);
        for (Program prog : {Program::SR, Program::UC}) {
          RunRecord rec = base_record(d, prog);
          try {
            const ProgramSweepResult sweep = sweep_program(inst, prog, cfg);
            rec.lambda = sweep.best.lambda_best;
            rec.lambda_nmz = 1.0;
            rec.err_to_sharp = sweep.best.err_best;
            rec.status = "best";
          } catch (const Error& e) {
            rec.status = std::string("error:") + e.what();
          }
          cells[idx].recs.push_back(std::move(rec));
        }
      },
      progress);

  ExperimentArtifacts art;
  for (auto& c : cells)
    art.records.insert(art.records.end(), c.recs.begin(), c.recs.end());
  const std::string csv = out_path(cfg, "noise-robustness.csv");
  write_records_csv(csv, art.records);
  art.csv_paths.push_back(csv);

  svg::Plot plot;
  plot.title = "best lambda vs noise scale";
  plot.x_label = "gamma";
  plot.y_label = "lambda_best";
  plot.x_log = true;
  plot.y_log = true;
  for (Program prog : {Program::SR, Program::UC}) {
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      svg::Series s;
      s.color = prog == Program::SR ? kSrColor : kUcColor;
      s.dashed = prog == Program::UC;
      if (si == 0) s.label = program_name(prog);
      for (const auto& r : art.records) {
        if (r.program != program_name(prog) || r.seed != cfg.seeds[si])
          continue;
        if (!std::isnan(r.lambda)) {
          s.x.push_back(r.gamma);
          s.y.push_back(r.lambda);
        }
      }
      plot.series.push_back(std::move(s));
    }
  }
  const std::string svg_path = out_path(cfg, "noise-robustness.svg");
  atomic_write_file(svg_path, svg::render(plot));
  art.svg_paths.push_back(svg_path);
  return art;
}

// Fig 1b analog: empirical Lipschitz behavior of both programs around their
// best lambda, with the theoretical bounds and the V relation.
ExperimentArtifacts run_lipschitz_comparison(const ExperimentConfig& cfg,
                                             bool progress) {
  struct Cell {
    std::vector<RunRecord> recs;
    double L_sr = std::numeric_limits<double>::quiet_NaN();
    double L_uc = std::numeric_limits<double>::quiet_NaN();
    double V = std::numeric_limits<double>::quiet_NaN();
    double best_sr = 0.0, best_uc = 0.0;
  };
  std::vector<Cell> cells(cfg.seeds.size());
  run_pool(
      cfg.seeds.size(), cfg.jobs,
      [&](std::size_t idx) {
        DataModel d{cfg.m_list.front(), cfg.n, cfg.s_list.front(),
                    cfg.gammas.front(), cfg.seeds[idx]};
        const GeneratedInstance inst = generate_instance(d);
        const ProgramSweepResult sr = sweep_program(inst, Program::SR, cfg);
        const ProgramSweepResult uc = sweep_program(inst, Program::UC, cfg);
        cells[idx].best_sr = sr.best.lambda_best;
        cells[idx].best_uc = uc.best.lambda_best;

        // bounds at the reference points
        ProblemInstance p = inst.instance;
        p.lambda = sr.best.lambda_best;
        const PrimalDualPair& sr_pair = sr.points[sr.best.grid_index].pair;
        const SupportSets sr_sets = sets_for(cfg, p, sr_pair);
        const RegularityReport reg =
            assess_regularity(p, sr_pair, sr_sets, cfg.solver, cfg.regularity);
        ProblemInstance p_uc = inst.instance;
        p_uc.lambda = uc.best.lambda_best;
        const PrimalDualPair& uc_pair = uc.points[uc.best.grid_index].pair;
        SupportSets uc_sets = sets_for(cfg, p_uc, uc_pair);
        const SensitivityReport sens = lipschitz_bounds(
            p, sr_pair, sr_sets, reg, nullptr, cfg.regularity);
        SensitivityReport sens_uc;
        {
          RegularityReport dummy;
          dummy.strong = Flag::False;
          dummy.intermediate = Flag::False;
          sens_uc = lipschitz_bounds(p_uc, uc_pair, uc_sets, dummy, &uc_pair,
                                     cfg.regularity);
        }
        if (sens.L_SR_lambda_bound) cells[idx].L_sr = *sens.L_SR_lambda_bound;
        if (sens.V) cells[idx].V = *sens.V;
        if (sens_uc.L_UC_lambda_bound)
          cells[idx].L_uc = *sens_uc.L_UC_lambda_bound;

        auto emit = [&](Program prog, const ProgramSweepResult& res) {
          for (std::size_t k = 0; k < res.points.size(); ++k) {
            const SweepPoint& pt = res.points[k];
            RunRecord rec = base_record(d, prog);
            rec.lambda = pt.lambda;
            rec.status = pt.status;
            if (pt.ok) {
              rec.lambda_nmz = pt.lambda / res.best.lambda_best;
              rec.err_to_sharp = pt.err_to_sharp;
              const double bn = res.best.x_best.norm();
              if (bn > 0.0)
                rec.rel_err = (pt.pair.x - res.best.x_best).norm() / bn;
              if (k == res.best.grid_index) {
                rec.status = "best";
                if (prog == Program::SR) {
                  rec.L_SR = cells[idx].L_sr;
                  rec.V = cells[idx].V;
                  if (reg.weak != Flag::Indeterminate)
                    rec.weak = flag_name(reg.weak);
                  rec.intermediate = flag_name(reg.intermediate);
                  rec.strong = flag_name(reg.strong);
                  rec.zstar = reg.zstar_infinite
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : reg.weak_optimum_zstar;
                } else {
                  rec.L_UC = cells[idx].L_uc;
                }
              }
            }
            cells[idx].recs.push_back(std::move(rec));
          }
        };
        emit(Program::SR, sr);
        emit(Program::UC, uc);
      },
      progress);

  ExperimentArtifacts art;
  for (auto& c : cells)
    art.records.insert(art.records.end(), c.recs.begin(), c.recs.end());
  const std::string csv = out_path(cfg, "lipschitz-comparison.csv");
  write_records_csv(csv, art.records);
  art.csv_paths.push_back(csv);

  // figure from the first seed
  const Cell& c0 = cells.front();
  svg::Plot plot;
  plot.title = "Lipschitz behavior about lambda_best";
  plot.x_label = "lambda_nmz";
  plot.y_label = "|x(lambda) - x(lambda_best)|";
  plot.x_log = true;
  plot.y_log = true;
  for (Program prog : {Program::SR, Program::UC}) {
    svg::Series emp;
    emp.color = prog == Program::SR ? kSrColor : kUcColor;
    emp.label = program_name(prog);
    svg::Series bound;
    bound.color = emp.color;
    bound.dashed = true;
    const double L = prog == Program::SR ? c0.L_sr : c0.L_uc;
    const double lb = prog == Program::SR ? c0.best_sr : c0.best_uc;
    for (const auto& r : c0.recs) {
      if (r.program != program_name(prog) || std::isnan(r.lambda_nmz)) continue;
      const double dx = r.rel_err;  // relative to best solution
      if (!std::isnan(dx)) {
        emp.x.push_back(r.lambda_nmz);
        emp.y.push_back(dx);
      }
      if (!std::isnan(L)) {
        bound.x.push_back(r.lambda_nmz);
        bound.y.push_back(L * std::abs(r.lambda_nmz * lb - lb));
      }
    }
    if (!std::isnan(L)) {
      std::ostringstream lbl;
      lbl.precision(3);
      lbl << "L_" << (prog == Program::SR ? "SR" : "UC");
      if (prog == Program::SR && !std::isnan(c0.V)) lbl << " (V=" << c0.V << ")";
      bound.label = lbl.str();
    }
    plot.series.push_back(std::move(emp));
    plot.series.push_back(std::move(bound));
  }
  const std::string svg_path = out_path(cfg, "lipschitz-comparison.svg");
  atomic_write_file(svg_path, svg::render(plot));
  art.svg_paths.push_back(svg_path);
  return art;
}

// Fig 2 analog: (gamma, m) facets of solution sensitivity for both programs.
ExperimentArtifacts run_gamma_m_facets(const ExperimentConfig& cfg,
                                       bool progress) {
  struct Cell {
    std::vector<RunRecord> recs;
  };
  const std::size_t n_cells =
      cfg.seeds.size() * cfg.gammas.size() * cfg.m_list.size();
  std::vector<Cell> cells(n_cells);
  run_pool(
      n_cells, cfg.jobs,
      [&](std::size_t idx) {
        std::size_t rest = idx;
        const std::size_t si = rest / (cfg.gammas.size() * cfg.m_list.size());
        rest %= cfg.gammas.size() * cfg.m_list.size();
        const std::size_t gi = rest / cfg.m_list.size();
        const std::size_t mi = rest % cfg.m_list.size();
        DataModel d{cfg.m_list[mi], cfg.n, cfg.s_list.front(), cfg.gammas[gi],
                    cfg.seeds[si]};
        const GeneratedInstance inst = generate_instance(d);
        for (Program prog : {Program::SR, Program::UC}) {
          try {
            const ProgramSweepResult res = sweep_program(inst, prog, cfg);
            const double bn = res.best.x_best.norm();
            for (std::size_t k = 0; k < res.points.size(); ++k) {
              const SweepPoint& pt = res.points[k];
              RunRecord rec = base_record(d, prog);
              rec.lambda = pt.lambda;
              rec.status = pt.status;
              if (pt.ok) {
                rec.lambda_nmz = pt.lambda / res.best.lambda_best;
                rec.err_to_sharp = pt.err_to_sharp;
                if (bn > 0.0)
                  rec.rel_err = (pt.pair.x - res.best.x_best).norm() / bn;
                if (k == res.best.grid_index) rec.status = "best";
              }
              cells[idx].recs.push_back(std::move(rec));
            }
          } catch (const Error& e) {
            RunRecord rec = base_record(d, prog);
            rec.status = std::string("error:") + e.what();
            cells[idx].recs.push_back(std::move(rec));
          }
        }
      },
      progress);

  ExperimentArtifacts art;
  for (auto& c : cells)
    art.records.insert(art.records.end(), c.recs.begin(), c.recs.end());
  const std::string csv = out_path(cfg, "gamma-m-facets.csv");
  write_records_csv(csv, art.records);
  art.csv_paths.push_back(csv);

  // one facet grid per figure: solution change and relative error
  for (int fig = 0; fig < 2; ++fig) {
    std::vector<svg::Plot> facets;
    for (double gamma : cfg.gammas) {
      for (Index m : cfg.m_list) {
        svg::Plot plot;
        std::ostringstream t;
        t << "gamma=" << gamma << ", m=" << m;
        plot.title = t.str();
        plot.x_label = fig == 0 ? "lambda_nmz" : "lambda";
        plot.y_label = fig == 0 ? "rel change" : "rel err";
        plot.x_log = true;
        plot.y_log = true;
        plot.legend = false;
        for (Program prog : {Program::SR, Program::UC}) {
          svg::Series s;
          s.color = prog == Program::SR ? kSrColor : kUcColor;
          s.dashed = prog == Program::UC;
          s.label = program_name(prog);
          for (const auto& r : art.records) {
            if (r.program != program_name(prog) || r.gamma != gamma ||
                r.m != m || r.seed != cfg.seeds.front())
              continue;
            if (std::isnan(r.rel_err)) continue;
            s.x.push_back(fig == 0 ? r.lambda_nmz : r.lambda);
            s.y.push_back(r.rel_err);
          }
          plot.series.push_back(std::move(s));
        }
        facets.push_back(std::move(plot));
      }
    }
    const std::string svg_path = out_path(
        cfg, fig == 0 ? "gamma-m-facets_change.svg" : "gamma-m-facets_relerr.svg");
    atomic_write_file(
        svg_path, svg::render_grid(facets, static_cast<int>(cfg.m_list.size())));
    art.svg_paths.push_back(svg_path);
  }
  return art;
}

// Fig 3 analog: Z*(lambda) against the diagonal, with the recovery error.
ExperimentArtifacts run_uniqueness_curve(const ExperimentConfig& cfg,
                                         bool progress) {
  struct Cell {
    std::vector<RunRecord> recs;
    double lambda_best = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Cell> cells(cfg.seeds.size());
  run_pool(
      cfg.seeds.size(), cfg.jobs,
      [&](std::size_t idx) {
        DataModel d{cfg.m_list.front(), cfg.n, cfg.s_list.front(),
                    cfg.gammas.front(), cfg.seeds[idx]};
        const GeneratedInstance inst = generate_instance(d);
        const ProgramSweepResult res = sweep_program(inst, Program::SR, cfg);
        cells[idx].lambda_best = res.best.lambda_best;
        for (const SweepPoint& pt : res.points) {
          RunRecord rec = base_record(d, Program::SR);
          rec.lambda = pt.lambda;
          rec.status = pt.status;
          rec.lambda_nmz = pt.lambda / res.best.lambda_best;
          rec.err_to_sharp = pt.err_to_sharp;
          const bool have_iterate = pt.pair.x.size() == inst.instance.A.cols();
          ProblemInstance p = inst.instance;
          p.lambda = pt.lambda;
          if (have_iterate) {
            const SupportSets sets = sets_for(cfg, p, pt.pair);
            if (!sets.residual_nonzero) {
              rec.status = "inapplicable";  // Z* = infinity flag
              rec.weak = flag_name(Flag::Indeterminate);
              cells[idx].recs.push_back(std::move(rec));
              continue;
            }
            if (pt.ok) {
              try {
                const RegularityReport reg = assess_regularity(
                    p, pt.pair, sets, cfg.solver, cfg.regularity);
                rec.zstar = reg.weak_optimum_zstar;
                rec.weak = flag_name(reg.weak);
                rec.intermediate = flag_name(reg.intermediate);
                rec.strong = flag_name(reg.strong);
              } catch (const Error& e) {
                rec.status = std::string("error:") + e.what();
              }
            }
          }
          cells[idx].recs.push_back(std::move(rec));
        }
      },
      progress);

  ExperimentArtifacts art;
  for (auto& c : cells)
    art.records.insert(art.records.end(), c.recs.begin(), c.recs.end());
  const std::string csv = out_path(cfg, "uniqueness-curve.csv");
  write_records_csv(csv, art.records);
  art.csv_paths.push_back(csv);

  const Cell& c0 = cells.front();
  svg::Plot plot;
  plot.title = "uniqueness sufficiency";
  plot.x_label = "lambda";
  plot.y_label = "error / Z*";
  plot.x_log = true;
  plot.y_log = true;
  svg::Series err, zs;
  err.label = "|x(lambda) - x_sharp|";
  err.color = "#333333";
  zs.label = "Z*";
  zs.color = kSrColor;
  for (const auto& r : c0.recs) {
    if (!std::isnan(r.err_to_sharp)) {
      err.x.push_back(r.lambda);
      err.y.push_back(r.err_to_sharp);
    }
    if (!std::isnan(r.zstar)) {
      zs.x.push_back(r.lambda);
      zs.y.push_back(r.zstar);
    }
    if (r.status == "inapplicable")
      plot.ref_lines.push_back(
          {svg::RefLine::Vertical, r.lambda, "#dddddd", ""});
  }
  plot.series.push_back(std::move(err));
  plot.series.push_back(std::move(zs));
  plot.ref_lines.push_back({svg::RefLine::Diagonal, 0.0, "#555555", ""});
  plot.ref_lines.push_back(
      {svg::RefLine::Vertical, c0.lambda_best, "#aa3333", ""});
  const std::string svg_path = out_path(cfg, "uniqueness-curve.svg");
  atomic_write_file(svg_path, svg::render(plot));
  art.svg_paths.push_back(svg_path);
  return art;
}

// Fig 4 analog: fraction of trials with Z* < lambda on a (lambda, gamma)
// grid; zero-residual cells are inapplicable, never zero.
ExperimentArtifacts run_uniqueness_heatmap(const ExperimentConfig& cfg,
                                           bool progress) {
  const std::vector<double> lambdas =
      cfg.lambdas.has_value() ? *cfg.lambdas : log_spaced(0.1, 10.0, 31);
  struct Cell {
    std::vector<RunRecord> recs;
  };
  const std::size_t n_cells = cfg.gammas.size() * cfg.seeds.size();
  std::vector<Cell> cells(n_cells);
  run_pool(
      n_cells, cfg.jobs,
      [&](std::size_t idx) {
        const std::size_t gi = idx / cfg.seeds.size();
        const std::size_t ti = idx % cfg.seeds.size();
        DataModel d{cfg.m_list.front(), cfg.n, cfg.s_list.front(),
                    cfg.gammas[gi], cfg.seeds[ti]};
        const GeneratedInstance inst = generate_instance(d);
        const std::vector<SweepPoint> points = sweep_lambda_grid(
            inst.instance, Program::SR, lambdas, inst.x_sharp, cfg.solver);
        double lambda_best = std::numeric_limits<double>::quiet_NaN();
        try {
          lambda_best = best_lambda(points, inst.x_sharp).lambda_best;
        } catch (const Error&) {
        }
        for (const SweepPoint& pt : points) {
          RunRecord rec = base_record(d, Program::SR);
          rec.lambda = pt.lambda;
          rec.status = pt.status;
          rec.err_to_sharp = pt.err_to_sharp;
          if (!std::isnan(lambda_best)) rec.lambda_nmz = pt.lambda / lambda_best;
          const bool have_iterate = pt.pair.x.size() == inst.instance.A.cols();
          ProblemInstance p = inst.instance;
          p.lambda = pt.lambda;
          if (have_iterate) {
            const SupportSets sets = sets_for(cfg, p, pt.pair);
            if (!sets.residual_nonzero) {
              // interpolating solve: the theory's A x != b premise fails
              rec.status = "inapplicable";
              rec.weak = flag_name(Flag::Indeterminate);
              cells[idx].recs.push_back(std::move(rec));
              continue;
            }
            if (pt.ok) {
              try {
                RegularityReport reg;
                check_intermediate(p, pt.pair, sets, cfg.regularity, reg);
                check_strong(p, pt.pair, sets, cfg.regularity, reg);
                check_weak(p, pt.pair, sets, cfg.solver, cfg.regularity, reg);
                rec.zstar = reg.weak_optimum_zstar;
                rec.weak = flag_name(reg.weak);
                rec.intermediate = flag_name(reg.intermediate);
                rec.strong = flag_name(reg.strong);
              } catch (const Error& e) {
                rec.status = std::string("error:") + e.what();
              }
            }
          }
          cells[idx].recs.push_back(std::move(rec));
        }
      },
      progress);

  ExperimentArtifacts art;
  for (auto& c : cells)
    art.records.insert(art.records.end(), c.recs.begin(), c.recs.end());
  const std::string csv = out_path(cfg, "uniqueness-heatmap.csv");
  write_records_csv(csv, art.records);
  art.csv_paths.push_back(csv);

  // heat cells: fraction of applicable trials with Z* < lambda
  svg::Plot heat;
  heat.title = "fraction of trials with Z* < lambda";
  heat.x_label = "lambda";
  heat.y_label = "gamma";
  heat.x_log = true;
  heat.y_log = true;
  heat.legend = false;
  for (double gamma : cfg.gammas) {
    for (double lambda : lambdas) {
      int applicable = 0, satisfied = 0;
      for (const auto& r : art.records) {
        if (r.gamma != gamma || r.lambda != lambda) continue;
        if (r.status == "inapplicable" || std::isnan(r.zstar)) continue;
        ++applicable;
        if (r.zstar < lambda) ++satisfied;
      }
      svg::HeatCell cell;
      cell.x = lambda;
      cell.y = gamma;
      cell.missing = applicable == 0;
      cell.value = applicable > 0
                       ? static_cast<double>(satisfied) / applicable
                       : 0.0;
      heat.heat.push_back(cell);
    }
  }

  svg::Plot errs;
  errs.title = "mean recovery error";
  errs.x_label = "lambda";
  errs.y_label = "|x(lambda) - x_sharp|";
  errs.x_log = true;
  errs.y_log = true;
  const std::size_t stride = cfg.gammas.size() > 4 ? (cfg.gammas.size() - 1) / 3
                                                   : 1;
  const char* palette[] = {"#1f6fb4", "#d95f02", "#1b9e77", "#7570b3"};
  int color_idx = 0;
  for (std::size_t gi = 0; gi < cfg.gammas.size(); gi += stride) {
    const double gamma = cfg.gammas[gi];
    svg::Series s;
    std::ostringstream lbl;
    lbl << "gamma=" << gamma;
    s.label = lbl.str();
    s.color = palette[color_idx % 4];
    ++color_idx;
    double best_err = std::numeric_limits<double>::infinity();
    double best_lam = std::numeric_limits<double>::quiet_NaN();
    for (double lambda : lambdas) {
      double sum = 0.0;
      int count = 0;
      for (const auto& r : art.records) {
        if (r.gamma != gamma || r.lambda != lambda) continue;
        if (std::isnan(r.err_to_sharp)) continue;
        sum += r.err_to_sharp;
        ++count;
      }
      if (count > 0) {
        const double mean = sum / count;
        s.x.push_back(lambda);
        s.y.push_back(mean);
        if (mean < best_err) {
          best_err = mean;
          best_lam = lambda;
        }
      }
    }
    if (!std::isnan(best_lam))
      errs.ref_lines.push_back(
          {svg::RefLine::Vertical, best_lam, s.color, ""});
    errs.series.push_back(std::move(s));
  }
  const std::string svg_path = out_path(cfg, "uniqueness-heatmap.svg");
  atomic_write_file(svg_path, svg::render_grid({errs, heat}, 1, 560, 420));
  art.svg_paths.push_back(svg_path);
  return art;
}

// Fig 5 analog: L(lambda_best) |lambda - lambda_best| against the empirical
// change, over (m, s) and (m, gamma) facet families; also emits a cluster of
// local samples |lambda_nmz - 1| <= 1e-3 used by the tightness check.
ExperimentArtifacts run_bound_tightness(const ExperimentConfig& cfg,
                                        bool progress) {
  struct Facet {
    Index m = 0, s = 0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    std::string family;
  };
  std::vector<Facet> facets;
  for (std::uint64_t seed : cfg.seeds) {
    for (Index m : cfg.m_list)
      for (Index s : cfg.s_list)
        facets.push_back({m, s, cfg.gammas.front(), seed, "ms"});
    const Index s_mid = cfg.s_list[cfg.s_list.size() / 2];
    for (Index m : cfg.m_list)
      for (double gamma : cfg.gammas)
        facets.push_back({m, s_mid, gamma, seed, "mg"});
  }
  struct Cell {
    std::vector<RunRecord> recs;
  };
  std::vector<Cell> cells(facets.size());
  run_pool(
      facets.size(), cfg.jobs,
      [&](std::size_t idx) {
        const Facet& f = facets[idx];
        DataModel d{f.m, cfg.n, f.s, f.gamma, f.seed};
        const GeneratedInstance inst = generate_instance(d);
        ProgramSweepResult res;
        try {
          res = sweep_program(inst, Program::SR, cfg);
        } catch (const Error& e) {
          RunRecord rec = base_record(d, Program::SR);
          rec.status = std::string("error:") + e.what();
          cells[idx].recs.push_back(std::move(rec));
          return;
        }
        const double lb = res.best.lambda_best;

        // tight reference solve at lambda_best; the local cluster compares
        // solution changes of order 1e-4 and needs accuracy well below that
        SolverSettings tight = cfg.solver;
        tight.gap_tol = std::min(cfg.solver.gap_tol, 1e-12);
        ProblemInstance local = inst.instance;
        local.lambda = lb;
        SolverState state;
        const PrimalDualPair ref = solve_srlasso(local, tight, nullptr, &state);
        const double ref_norm = ref.x.norm();

        const SupportSets sets = sets_for(cfg, local, ref);
        RegularityReport reg;
        check_intermediate(local, ref, sets, cfg.regularity, reg);
        check_strong(local, ref, sets, cfg.regularity, reg);
        double L = std::numeric_limits<double>::quiet_NaN();
        if (reg.strong == Flag::True) {
          const SensitivityReport sens = lipschitz_bounds(
              local, ref, sets, reg, nullptr, cfg.regularity);
          if (sens.L_SR_lambda_bound) L = *sens.L_SR_lambda_bound;
        }

        auto make_rec = [&](const SweepPoint& pt, const std::string& status) {
          RunRecord rec = base_record(d, Program::SR);
          rec.lambda = pt.lambda;
          rec.status = pt.ok ? status : pt.status;
          if (pt.ok) {
            rec.lambda_nmz = pt.lambda / lb;
            rec.err_to_sharp = pt.err_to_sharp;
            if (ref_norm > 0.0)
              rec.rel_err = (pt.pair.x - ref.x).norm() / ref_norm;
            rec.L_SR = L;
            rec.strong = flag_name(reg.strong);
            rec.intermediate = flag_name(reg.intermediate);
          }
          return rec;
        };

        for (std::size_t k = 0; k < res.points.size(); ++k)
          cells[idx].recs.push_back(make_rec(
              res.points[k], k == res.best.grid_index ? "best" : "ok"));

        // local cluster about lambda_best for the tightness check
        for (int k = 1; k <= 10; ++k) {
          for (double sign : {-1.0, 1.0}) {
            const double lam = lb * (1.0 + sign * 1e-4 * k);
            if (lam <= 0.0) continue;
            local.lambda = lam;
            SweepPoint pt;
            pt.lambda = lam;
            try {
              pt.pair = solve_srlasso(local, tight, &state, nullptr);
              pt.ok = pt.pair.converged;
              pt.status = pt.ok ? "local" : "not_converged";
              if (pt.ok) pt.err_to_sharp = (pt.pair.x - inst.x_sharp).norm();
            } catch (const Error& e) {
              pt.ok = false;
              pt.status = std::string("error:") + e.what();
            }
            cells[idx].recs.push_back(make_rec(pt, "local"));
          }
        }
      },
      progress);

  ExperimentArtifacts art;
  // split records by family in facet order
  std::vector<RunRecord> ms_records, mg_records;
  for (std::size_t i = 0; i < facets.size(); ++i) {
    auto& dst = facets[i].family == "ms" ? ms_records : mg_records;
    dst.insert(dst.end(), cells[i].recs.begin(), cells[i].recs.end());
  }
  const std::string csv_ms = out_path(cfg, "bound-tightness_ms.csv");
  const std::string csv_mg = out_path(cfg, "bound-tightness_mg.csv");
  write_records_csv(csv_ms, ms_records);
  write_records_csv(csv_mg, mg_records);
  art.csv_paths = {csv_ms, csv_mg};
  art.records = ms_records;
  art.records.insert(art.records.end(), mg_records.begin(), mg_records.end());

  auto render_family = [&](const std::vector<RunRecord>& records,
                           const std::string& family) {
    std::vector<svg::Plot> plots;
    for (std::size_t i = 0; i < facets.size(); ++i) {
      const Facet& f = facets[i];
      if (f.family != family || f.seed != cfg.seeds.front()) continue;
      svg::Plot plot;
      std::ostringstream t;
      t << "m=" << f.m
        << (family == "ms" ? ", s=" : ", gamma=");
      if (family == "ms")
        t << f.s;
      else
        t << f.gamma;
      plot.title = t.str();
      plot.x_label = "lambda_nmz";
      plot.y_label = "|x(lambda) - x(lambda_best)|";
      plot.x_log = true;
      plot.y_log = true;
      plot.legend = false;
      svg::Series emp, bound;
      emp.color = kSrColor;
      bound.color = "#444444";
      bound.dashed = true;
      double lb = std::numeric_limits<double>::quiet_NaN();
      for (const auto& r : records) {
        if (r.m != f.m || r.s != f.s || r.gamma != f.gamma ||
            r.seed != f.seed)
          continue;
        if (r.status == "best" && !std::isnan(r.lambda)) lb = r.lambda;
      }
      for (const auto& r : records) {
        if (r.m != f.m || r.s != f.s || r.gamma != f.gamma ||
            r.seed != f.seed || std::isnan(r.lambda_nmz))
          continue;
        if (!std::isnan(r.rel_err)) {
          emp.x.push_back(r.lambda_nmz);
          emp.y.push_back(r.rel_err);
        }
        if (!std::isnan(r.L_SR) && !std::isnan(lb)) {
          bound.x.push_back(r.lambda_nmz);
          bound.y.push_back(r.L_SR * std::abs(r.lambda - lb));
        }
      }
      plot.series.push_back(std::move(emp));
      plot.series.push_back(std::move(bound));
      plots.push_back(std::move(plot));
    }
    const std::string path =
        out_path(cfg, "bound-tightness_" + family + ".svg");
    atomic_write_file(path,
                      svg::render_grid(plots, static_cast<int>(cfg.m_list.size())));
    return path;
  };
  art.svg_paths.push_back(render_family(ms_records, "ms"));
  art.svg_paths.push_back(render_family(mg_records, "mg"));
  return art;
}

}  // namespace

ExperimentArtifacts run_experiment(const ExperimentConfig& cfg,
                                   bool progress_to_stderr) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  switch (cfg.name) {
    case ExperimentName::NoiseRobustness:
      return run_noise_robustness(cfg, progress_to_stderr);
    case ExperimentName::LipschitzComparison:
      return run_lipschitz_comparison(cfg, progress_to_stderr);
    case ExperimentName::GammaMFacets:
      return run_gamma_m_facets(cfg, progress_to_stderr);
    case ExperimentName::UniquenessCurve:
      return run_uniqueness_curve(cfg, progress_to_stderr);
    case ExperimentName::UniquenessHeatmap:
      return run_uniqueness_heatmap(cfg, progress_to_stderr);
    case ExperimentName::BoundTightness:
      return run_bound_tightness(cfg, progress_to_stderr);
  }
  throw InvalidConfigError("unknown experiment");
}

}  // namespace srl
