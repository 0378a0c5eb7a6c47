#include "lrda/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lrda {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: boolean expected for '" + key + "', got '" + v + "'");
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"ad_perfect",         "ad_partial",          "ad_rank_sweep",
          "precond_compare_440", "precond_compare_880", "lorenz40_perfect",
          "lorenz40_noisy_full", "lorenz40_noisy_partial", "lorenz150"};
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "ad_perfect") {
    return cfg;  // defaults describe this preset
  }
  if (name == "ad_partial" || name == "ad_rank_sweep") {
    cfg.obs_stride = 5;
    cfg.obs_offset = 4;
    cfg.obs_noise = true;
    cfg.background_expdecay = true;
    if (name == "ad_rank_sweep") cfg.ranks = {20, 5, 1};
    return cfg;
  }
  if (name == "precond_compare_440" || name == "precond_compare_880") {
    cfg.n = name == "precond_compare_440" ? 10 : 20;
    cfg.window = 19;
    cfg.forecast = 20;
    cfg.obs_stride = 5;
    cfg.obs_offset = 4;
    cfg.obs_noise = true;
    cfg.background_expdecay = true;
    cfg.ranks = {5};
    cfg.max_iter = 440;
    if (name == "precond_compare_440") {
      cfg.preconditioners = {"identity",        "ic_i",
                             "ic_lhat",         "ic_ih",
                             "schur_diag_lhat", "schur_diag_sylvester_m",
                             "block_triangular"};
    } else {
      cfg.preconditioners = {"identity", "ic_ih"};
    }
    return cfg;
  }
  if (name == "lorenz40_perfect" || name == "lorenz40_noisy_full" ||
      name == "lorenz40_noisy_partial") {
    cfg.model = ModelKind::Lorenz95;
    cfg.n = 40;
    cfg.dt = 5e-3;
    cfg.window = 199;
    cfg.forecast = 1300;
    cfg.n_outer = 3;
    if (name == "lorenz40_perfect") {
      cfg.obs_sigma2 = 1.0;  // fit weight only, the observations carry no noise
    } else {
      cfg.obs_noise = true;
      cfg.background_expdecay = true;
    }
    if (name == "lorenz40_noisy_partial") {
      cfg.obs_stride = 5;
      cfg.obs_offset = 4;
    }
    return cfg;
  }
  if (name == "lorenz150") {
    cfg.model = ModelKind::Lorenz95;
    cfg.n = 150;
    cfg.dt = 5e-3;
    cfg.window = 149;
    cfg.forecast = 500;
    cfg.n_outer = 3;
    cfg.obs_noise = true;
    cfg.background_expdecay = true;
    cfg.ranks = {20, 5};
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

PreconditionerSpec preconditioner_by_name(const std::string& name) {
  if (name == "identity") return PreconditionerSpec::identity();
  if (name == "ic_i") return PreconditionerSpec::inexact_constraint_i();
  if (name == "ic_lhat") return PreconditionerSpec::inexact_constraint_lhat();
  if (name == "ic_lhat_exact") return PreconditionerSpec::inexact_constraint_lhat(true);
  if (name == "ic_ih") return PreconditionerSpec::inexact_constraint_ih();
  if (name == "schur_diag_lhat") return PreconditionerSpec::schur_diag_lhat();
  if (name == "schur_diag_sylvester")
    return PreconditionerSpec::schur_diag_sylvester(ModelApprox::Identity);
  if (name == "schur_diag_sylvester_m")
    return PreconditionerSpec::schur_diag_sylvester(ModelApprox::Model);
  if (name == "schur_diag_sylvester_0")
    return PreconditionerSpec::schur_diag_sylvester(ModelApprox::Zero);
  if (name == "block_triangular") return PreconditionerSpec::block_triangular();
  if (name == "exact_constraint_l") return PreconditionerSpec::exact_constraint_l();
  if (name == "exact_schur_diag") return PreconditionerSpec::exact_schur_diag();
  throw std::invalid_argument("unknown preconditioner '" + name + "'");
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());

  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "preset") {
      cfg = preset_config(value);
    } else if (key == "name") {
      cfg.name = value;
    } else if (key == "model") {
      if (value == "ad") cfg.model = ModelKind::AdvectionDiffusion;
      else if (value == "lorenz95") cfg.model = ModelKind::Lorenz95;
      else throw std::invalid_argument("config: model must be 'ad' or 'lorenz95'");
    } else if (key == "n") { cfg.n = std::stol(value); }
    else if (key == "dt") { cfg.dt = std::stod(value); }
    else if (key == "diffusion") { cfg.diffusion = std::stod(value); }
    else if (key == "advection") { cfg.advection = std::stod(value); }
    else if (key == "forcing") { cfg.forcing = std::stod(value); }
    else if (key == "spinup") { cfg.spinup = std::stol(value); }
    else if (key == "window") { cfg.window = std::stol(value); }
    else if (key == "forecast") { cfg.forecast = std::stol(value); }
    else if (key == "obs_stride") { cfg.obs_stride = std::stol(value); }
    else if (key == "obs_offset") { cfg.obs_offset = std::stol(value); }
    else if (key == "obs_noise") { cfg.obs_noise = parse_bool(value, key); }
    else if (key == "background_cov") {
      if (value == "identity") cfg.background_expdecay = false;
      else if (value == "expdecay") cfg.background_expdecay = true;
      else throw std::invalid_argument("config: background_cov must be identity|expdecay");
    }
    else if (key == "background_sigma2") { cfg.background_sigma2 = std::stod(value); }
    else if (key == "background_length") { cfg.background_length = std::stod(value); }
    else if (key == "model_error_sigma2") { cfg.model_error_sigma2 = std::stod(value); }
    else if (key == "obs_sigma2") { cfg.obs_sigma2 = std::stod(value); }
    else if (key == "ranks") {
      cfg.ranks.clear();
      for (const auto& r : split_list(value)) cfg.ranks.push_back(std::stol(r));
      if (cfg.ranks.empty()) throw std::invalid_argument("config: ranks must be nonempty");
    }
    else if (key == "outer") { cfg.n_outer = std::stoi(value); }
    else if (key == "max_iter") { cfg.max_iter = std::stol(value); }
    else if (key == "tol") { cfg.tol = std::stod(value); }
    else if (key == "trunc_tol") { cfg.trunc_tol = std::stod(value); }
    else if (key == "restart") { cfg.restart = std::stol(value); }
    else if (key == "preconditioners") {
      cfg.preconditioners = split_list(value);
      if (cfg.preconditioners.empty())
        throw std::invalid_argument("config: preconditioners must be nonempty");
    }
    else if (key == "mode") {
      if (value == "lowrank") cfg.mode = RunMode::LowRank;
      else if (value == "fullrank") cfg.mode = RunMode::FullRank;
      else if (value == "both") cfg.mode = RunMode::Both;
      else throw std::invalid_argument("config: mode must be lowrank|fullrank|both");
    }
    else if (key == "seed") { cfg.seed = std::stoull(value); }
    else {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
  }
  for (const auto& p : cfg.preconditioners) preconditioner_by_name(p);
  return cfg;
}

AssimilationProblem build_problem(const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  DynamicsModel dynamics;
  Vector truth0;
  if (cfg.model == ModelKind::AdvectionDiffusion) {
    dynamics = make_dynamics(AdvectionDiffusionModel(cfg.n, cfg.dt, cfg.diffusion,
                                                     cfg.advection));
    truth0 = Vector(cfg.n);
    for (Index i = 0; i < cfg.n; ++i)
      truth0(i) = std::sin(M_PI * static_cast<double>(i) / static_cast<double>(cfg.n - 1));
  } else {
    dynamics = make_dynamics(Lorenz95Model(cfg.n, cfg.forcing, cfg.dt));
    Vector x = Vector::Constant(cfg.n, cfg.forcing);
    for (Index i = 0; i < cfg.n; ++i) x(i) += 0.01 * normal(rng);
    for (Index k = 0; k < cfg.spinup; ++k) x = dynamics.step(x);
    truth0 = x;
  }

  AssimilationProblem problem{
      dynamics,
      ObservationOperator::every_kth(cfg.n, cfg.obs_stride, cfg.obs_offset),
      cfg.background_expdecay
          ? CovarianceModel::exp_decay(cfg.n, cfg.background_sigma2, cfg.background_length)
          : CovarianceModel::scaled_identity(cfg.n, cfg.background_sigma2),
      CovarianceModel::scaled_identity(cfg.n, cfg.model_error_sigma2),
      CovarianceModel::scaled_identity(
          ObservationOperator::every_kth(cfg.n, cfg.obs_stride, cfg.obs_offset).obs_count(),
          cfg.obs_sigma2),
      cfg.window,
      Vector(),
      {},
      {}};

  problem.truth = propagate(dynamics, truth0, cfg.window + cfg.forecast);
  problem.background = problem.truth[0] + problem.cov_b.sample(rng);
  problem.observations.reserve(cfg.window + 1);
  for (Index k = 0; k <= cfg.window; ++k) {
    Vector y = problem.obs.observe(problem.truth[k]);
    if (cfg.obs_noise) y += problem.cov_r.sample(rng);
    problem.observations.push_back(std::move(y));
  }
  return problem;
}

namespace {

struct NamedRun {
  std::string preconditioner;
  ExperimentResult result;
};

void write_rmse_csv(const std::filesystem::path& path, Index horizon,
                    const std::vector<double>& no_assim, const ExperimentResult* full,
                    const ExperimentResult* low) {
  std::ofstream out(path, std::ios::binary);
  out << "step,no_assim,full_rank,low_rank\n";
  auto at = [](const ExperimentResult* r, Index t) {
    if (!r) return std::numeric_limits<double>::quiet_NaN();
    const Index nw = static_cast<Index>(r->rmse_analysis.size());
    if (t < nw) return r->rmse_analysis[t];
    const Index f = t - nw;
    if (f < static_cast<Index>(r->rmse_forecast.size())) return r->rmse_forecast[f];
    return std::numeric_limits<double>::quiet_NaN();
  };
  for (Index t = 0; t <= horizon; ++t) {
    out << t << ',' << fmt(no_assim[t]) << ',' << fmt(at(full, t)) << ','
        << fmt(at(low, t)) << '\n';
  }
}

void write_residual_csv(const std::filesystem::path& path,
                        const std::vector<NamedRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  out << "iteration,preconditioner,rotated_residual\n";
  for (const auto& run : runs) {
    Index iter = 0;
    for (const auto& report : run.result.reports)
      for (double r : report.residual_history)
        out << ++iter << ',' << run.preconditioner << ',' << fmt(r) << '\n';
  }
}

void write_storage_csv(const std::filesystem::path& path, const StorageReport& s) {
  std::ofstream out(path, std::ios::binary);
  out << "n,N,p,rank,full_elems,low_elems,reduction\n";
  out << s.n << ',' << s.steps << ',' << s.p << ',' << s.rank << ',' << s.full_elems
      << ',' << s.low_elems << ',' << fmt(s.reduction) << '\n';
}

void write_state_csv(const std::filesystem::path& path, const Vector& truth,
                     const Vector& no_assim, const ExperimentResult* full,
                     const ExperimentResult* low) {
  std::ofstream out(path, std::ios::binary);
  out << "index,truth,no_assim,full_rank,low_rank\n";
  for (Index i = 0; i < truth.size(); ++i) {
    const double f =
        full ? full->analysis.back()(i) : std::numeric_limits<double>::quiet_NaN();
    const double l =
        low ? low->analysis.back()(i) : std::numeric_limits<double>::quiet_NaN();
    out << i << ',' << fmt(truth(i)) << ',' << fmt(no_assim(i)) << ',' << fmt(f) << ','
        << fmt(l) << '\n';
  }
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  AssimilationProblem problem = build_problem(cfg);
  const Index horizon = cfg.window + cfg.forecast;

  std::vector<Vector> no_assim = propagate(problem.model, problem.background, horizon);
  std::vector<Vector> truth_all(problem.truth.begin(), problem.truth.begin() + horizon + 1);
  std::vector<double> rmse_no_assim = rmse_series(no_assim, truth_all);

  ExperimentResult full_result;
  bool have_full = cfg.mode != RunMode::LowRank;
  if (have_full) {
    OuterLoopConfig full_cfg;
    full_cfg.n_outer = cfg.n_outer;
    full_cfg.mode = SolverMode::FullRank;
    full_result = gauss_newton(problem, full_cfg, cfg.forecast);
  }

  for (Index rank : cfg.ranks) {
    std::filesystem::path dir = out_dir;
    if (cfg.ranks.size() > 1) dir /= "r" + std::to_string(rank);
    std::filesystem::create_directories(dir);

    std::vector<NamedRun> runs;
    if (cfg.mode != RunMode::FullRank) {
      for (const auto& pname : cfg.preconditioners) {
        OuterLoopConfig low_cfg;
        low_cfg.n_outer = cfg.n_outer;
        low_cfg.mode = SolverMode::LowRank;
        low_cfg.inner.max_iter = cfg.max_iter;
        low_cfg.inner.residual_tol = cfg.tol;
        low_cfg.inner.restart = cfg.restart;
        low_cfg.inner.trunc = TruncationPolicy{rank, cfg.trunc_tol};
        low_cfg.precond = preconditioner_by_name(pname);
        low_cfg.precond.recompress = low_cfg.inner.trunc;
        runs.push_back({pname, gauss_newton(problem, low_cfg, cfg.forecast)});
      }
    }

    const ExperimentResult* full = have_full ? &full_result : nullptr;
    const ExperimentResult* low = runs.empty() ? nullptr : &runs.front().result;

    write_rmse_csv(dir / "rmse.csv", horizon, rmse_no_assim, full, low);
    write_residual_csv(dir / "residual.csv", runs);
    write_storage_csv(dir / "storage.csv",
                      low ? low->storage
                          : storage_report(cfg.n, cfg.window,
                                           problem.obs.obs_count(), rank));
    write_state_csv(dir / "state_final.csv", problem.truth[cfg.window],
                    no_assim[cfg.window], full, low);
  }
}

}  // namespace lrda
