// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <lrda/assimilation.hpp>
#include <lrda/experiment.hpp>
#include <lrda/gmres.hpp>
#include <lrda/models.hpp>
#include <lrda/preconditioners.hpp>
#include <lrda/saddle.hpp>

#include <Eigen/LU>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "support/dense_gmres.hpp"
#include "support/random_inputs.hpp"

using namespace lrda;
using lrda::testing::dense_gmres;
using lrda::testing::make_rng;
using lrda::testing::random_matrix;
using lrda::testing::random_system;
using lrda::testing::random_triple;

namespace {

int failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)),
        start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& detail) {
    if (!ok) {
      ok_ = false;
      if (!detail.empty()) details_.push_back(detail);
    }
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("%s  criterion %2d  %-58s [%6.1f s]\n", ok_ ? "PASS" : "FAIL", number_,
                title_.c_str(), secs);
    for (const auto& d : details_) std::printf("      - %s\n", d.c_str());
    if (!ok_) ++failures;
    std::fflush(stdout);
  }

 private:
  int number_;
  std::string title_;
  bool ok_{true};
  std::vector<std::string> details_;
  std::chrono::steady_clock::time_point start_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t count) {
  double acc = 0.0;
  for (std::size_t i = from; i < from + count; ++i) acc += v[i];
  return acc / static_cast<double>(count);
}

void criterion_1_kron_identity() {
  Criterion c(1, "Kronecker/vec identity on random conformal triples");
  auto rng = make_rng(101);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index r1 = dim(rng), r2 = dim(rng), r3 = dim(rng), r4 = dim(rng);
    Matrix a = random_matrix(rng, r1, r2);
    Matrix cm = random_matrix(rng, r2, r3);
    Matrix b = random_matrix(rng, r3, r4);
    worst = std::max(worst, kron_vec_identity_gap(b, a, cm));
  }
  c.check(worst <= 1e-12, "max deviation " + num(worst));
}

void criterion_2_operator_oracle() {
  Criterion c(2, "factored operator application vs dense assembly");
  auto rng = make_rng(102);
  std::uniform_int_distribution<int> nd(2, 5), Nd(1, 4), pd(1, 3);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = nd(rng), N = Nd(rng), p = pd(rng);
    TimeInvariantSystem ti = random_system(rng, n, N, p);
    TripleBlock v = random_triple(rng, n, N, p, 2);
    Vector want = assemble_dense(ti) * stack_dense(v);
    double gap = (stack_dense(apply_saddle(ti, v)) - want).norm() / (1.0 + want.norm());
    worst = std::max(worst, gap);

    TimeVaryingSystem td = testing::random_td_system(rng, n, N, p);
    Vector want_td = assemble_dense(td) * stack_dense(v);
    gap = (stack_dense(apply_saddle(td, v)) - want_td).norm() / (1.0 + want_td.norm());
    worst = std::max(worst, gap);
  }
  c.check(worst <= 1e-11, "max relative deviation " + num(worst));
}

void criterion_3_trace_product() {
  Criterion c(3, "trace product vs vectorised dot product");
  auto rng = make_rng(103);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    TripleBlock a = random_triple(rng, 7, 4, 3, 3);
    TripleBlock b = random_triple(rng, 7, 4, 3, 2);
    const double got = trace_product(a, b);
    const double want = stack_dense(a).dot(stack_dense(b));
    worst = std::max(worst, std::abs(got - want) / (1.0 + std::abs(want)));
  }
  c.check(worst <= 1e-11, "max relative deviation " + num(worst));
}

// The preconditioner-comparison system: n=10, N=19, p=4 advection-diffusion.
struct SmallSystem {
  TimeInvariantSystem sys;
  TripleBlock rhs;
  Matrix b, d;
};

SmallSystem build_440_system() {
  ExperimentConfig cfg = preset_config("precond_compare_440");
  AssimilationProblem problem = build_problem(cfg);
  std::vector<Vector> guess = propagate(problem.model, problem.background, cfg.window);
  LinearizedSystem lin = linearize(problem, guess);
  TimeInvariantSystem sys = std::get<TimeInvariantSystem>(lin.sys);
  auto pol = TruncationPolicy::lossless();
  TripleBlock rhs(from_dense(lin.b, pol), from_dense(lin.d, pol),
                  LowRankFactor::zero(sys.n, sys.steps + 1));
  return SmallSystem{std::move(sys), std::move(rhs), lin.b, lin.d};
}

void criterion_4_gmres_equivalence() {
  Criterion c(4, "untruncated LR-GMRES vs dense GMRES and direct solve");
  SmallSystem s = build_440_system();
  const Matrix a = assemble_dense(s.sys);
  if (a.rows() != 440) {
    c.check(false, "expected a 440-dimensional saddle system");
    return;
  }

  GmresConfig cfg;
  cfg.max_iter = 440;
  cfg.residual_tol = 1e-10;
  cfg.trunc = TruncationPolicy::lossless();
  auto op = [&](const TripleBlock& v) { return apply_saddle(s.sys, v); };
  auto [x, report] = solve_lr_gmres(op, identity_operator(), s.rhs,
                                    TripleBlock::zero(s.sys.n, s.sys.steps, s.sys.p), cfg);

  auto ref = dense_gmres(a, Matrix::Identity(440, 440), stack_dense(s.rhs),
                         Vector::Zero(440), 440, 1e-10);
  double worst_hist = 0.0;
  for (std::size_t k = 0; k < 15; ++k) {
    const double got = report.residual_history[k];
    const double want = ref.residual_history[k];
    worst_hist = std::max(worst_hist, std::abs(got - want) / want);
  }
  c.check(worst_hist <= 1e-6, "history deviation " + num(worst_hist));

  Vector direct = a.partialPivLu().solve(stack_dense(s.rhs));
  const double sol_gap = (stack_dense(x) - direct).norm() / direct.norm();
  c.check(report.converged, "solver did not reach the 1e-10 tolerance");
  c.check(sol_gap <= 1e-6, "solution deviation " + num(sol_gap) + " after " +
                               std::to_string(report.iterations) + " iterations");
}

void criterion_5_preconditioner_inverses() {
  Criterion c(5, "forward times applied inverse is the identity, all variants");
  auto rng = make_rng(105);
  const std::vector<PreconditionerSpec> variants = {
      PreconditionerSpec::inexact_constraint_i(),
      PreconditionerSpec::inexact_constraint_lhat(false),
      PreconditionerSpec::inexact_constraint_lhat(true),
      PreconditionerSpec::inexact_constraint_ih(),
      PreconditionerSpec::schur_diag_lhat(false),
      PreconditionerSpec::schur_diag_lhat(true),
      PreconditionerSpec::schur_diag_sylvester(ModelApprox::Zero),
      PreconditionerSpec::schur_diag_sylvester(ModelApprox::Identity),
      PreconditionerSpec::schur_diag_sylvester(ModelApprox::Model),
      PreconditionerSpec::block_triangular(ModelApprox::Model, true),
      PreconditionerSpec::exact_constraint_l(),
      PreconditionerSpec::exact_schur_diag()};
  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    TimeInvariantSystem sys = random_system(rng, 4, 3, 2);
    for (const auto& spec : variants) {
      Preconditioner prec(spec, sys);
      Matrix forward = prec.dense_forward();
      TripleBlock v = random_triple(rng, 4, 3, 2, 2);
      Vector orig = stack_dense(v);
      Vector back = forward * stack_dense(prec.apply(v));
      worst = std::max(worst, (back - orig).norm() / (1.0 + orig.norm()));
    }
  }
  c.check(worst <= 1e-9, "max relative deviation " + num(worst));
}

void criterion_6_spectrum() {
  Criterion c(6, "preconditioned spectra: vertical line and 3-value clustering");
  auto rng = make_rng(106);
  TimeInvariantSystem sys = random_system(rng, 5, 4, 2);

  SpectrumReport line = spectrum_report(PreconditionerSpec::exact_constraint_l(), sys);
  c.check(line.max_re_dev <= 1e-8, "max |Re(tau)-1| = " + num(line.max_re_dev));
  c.check(line.max_im <= line.im_bound + 1e-8,
          "max |Im| " + num(line.max_im) + " vs bound " + num(line.im_bound));

  SpectrumReport cluster = spectrum_report(PreconditionerSpec::exact_schur_diag(), sys);
  std::vector<std::complex<double>> distinct;
  for (const auto& tau : cluster.eigenvalues) {
    bool found = false;
    for (const auto& d : distinct)
      if (std::abs(tau - d) <= 1e-6) found = true;
    if (!found) distinct.push_back(tau);
  }
  c.check(distinct.size() <= 3,
          std::to_string(distinct.size()) + " distinct eigenvalues");
}

void criterion_7_storage_tables() {
  Criterion c(7, "storage tables reproduced row by row");
  struct Row {
    Index n, N, p, r;
    long long full, low;
    double percent;
  };
  const std::vector<Row> rows = {
      {100, 199, 100, 20, 20000, 6000, 70.0}, {100, 199, 20, 20, 20000, 6000, 70.0},
      {100, 199, 20, 5, 20000, 1500, 92.5},   {100, 199, 20, 1, 20000, 300, 98.5},
      {40, 199, 40, 20, 8000, 4800, 40.0},    {40, 199, 8, 20, 8000, 4800, 40.0},
      {150, 149, 150, 20, 22500, 6000, 73.3}, {150, 149, 150, 5, 22500, 1500, 93.3}};
  for (const auto& row : rows) {
    StorageReport s = storage_report(row.n, row.N, row.p, row.r);
    c.check(s.full_elems == row.full && s.low_elems == row.low,
            "element counts differ for n=" + std::to_string(row.n) +
                ", r=" + std::to_string(row.r));
    c.check(std::abs(100.0 * s.reduction - row.percent) <= 0.051,
            "reduction " + num(100.0 * s.reduction) + "% vs table " + num(row.percent));
  }
}

void criterion_8_tlm_gradient() {
  Criterion c(8, "tangent linear model finite-difference check");
  auto rng = make_rng(108);
  Lorenz95Model model(40, 8.0, 5e-3);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Vector x = Vector::Constant(40, 8.0) + 3.0 * random_matrix(rng, 40, 1);
    Vector v = random_matrix(rng, 40, 1);
    v /= v.norm();
    Vector fd = (model.step(x + eps * v) - model.step(x)) / eps;
    Vector tl = model.tangent_linear(x) * v;
    worst = std::max(worst, (tl - fd).norm() / tl.norm());
  }
  c.check(worst <= 1e-5, "max relative error " + num(worst));
}

void criterion_9a_ad_perfect() {
  Criterion c(9, "(a) ad_perfect: assimilation beats the background, modes agree");
  ExperimentConfig cfg = preset_config("ad_perfect");
  AssimilationProblem problem = build_problem(cfg);

  OuterLoopConfig full;
  full.mode = SolverMode::FullRank;
  ExperimentResult fr = gauss_newton(problem, full, cfg.forecast);

  OuterLoopConfig low;
  low.mode = SolverMode::LowRank;
  low.inner.max_iter = cfg.max_iter;
  low.inner.residual_tol = cfg.tol;
  low.inner.trunc = TruncationPolicy{20, cfg.trunc_tol};
  ExperimentResult lr = gauss_newton(problem, low, cfg.forecast);

  const std::size_t window = fr.rmse_analysis.size();
  const double base = mean(fr.rmse_background, 0, window);
  const double full_mean = mean(fr.rmse_analysis, 0, window);
  const double low_mean = mean(lr.rmse_analysis, 0, window);
  c.check(full_mean <= 0.25 * base, "full-rank mean " + num(full_mean) +
                                        " vs 0.25 x background " + num(0.25 * base));
  c.check(low_mean <= 0.25 * base,
          "low-rank mean " + num(low_mean) + " vs 0.25 x background " + num(0.25 * base));
  const double ratio = std::max(full_mean / low_mean, low_mean / full_mean);
  c.check(ratio <= 2.0, "mode ratio " + num(ratio));
}

void criterion_9b_lorenz_perfect() {
  Criterion c(9, "(b) lorenz40_perfect: low-rank tracks full-rank");
  ExperimentConfig cfg = preset_config("lorenz40_perfect");
  cfg.forecast = 250;  // the criterion examines the first 200 forecast steps
  AssimilationProblem problem = build_problem(cfg);

  OuterLoopConfig full;
  full.mode = SolverMode::FullRank;
  full.n_outer = cfg.n_outer;
  ExperimentResult fr = gauss_newton(problem, full, cfg.forecast);

  OuterLoopConfig low;
  low.mode = SolverMode::LowRank;
  low.n_outer = cfg.n_outer;
  low.inner.max_iter = cfg.max_iter;
  low.inner.residual_tol = cfg.tol;
  low.inner.trunc = TruncationPolicy{20, cfg.trunc_tol};
  ExperimentResult lr = gauss_newton(problem, low, cfg.forecast);

  const std::size_t window = fr.rmse_analysis.size();
  const double window_ratio =
      mean(lr.rmse_analysis, 0, window) / mean(fr.rmse_analysis, 0, window);
  const double forecast_ratio =
      mean(lr.rmse_forecast, 0, 200) / mean(fr.rmse_forecast, 0, 200);
  c.check(window_ratio <= 2.0, "window mean ratio " + num(window_ratio));
  c.check(forecast_ratio <= 2.0, "forecast mean ratio " + num(forecast_ratio));
}

void criterion_9c_preconditioner_comparison() {
  Criterion c(9, "(c) precond_compare_440: stall and late IH improvement");
  ExperimentConfig cfg = preset_config("precond_compare_440");
  AssimilationProblem problem = build_problem(cfg);
  std::vector<Vector> guess = propagate(problem.model, problem.background, cfg.window);
  LinearizedSystem lin = linearize(problem, guess);
  const auto& sys = std::get<TimeInvariantSystem>(lin.sys);

  GmresConfig gc;
  gc.max_iter = 440;
  gc.residual_tol = 1e-6;
  gc.trunc = TruncationPolicy{5, 1e-8};
  gc.track_true_residual = true;
  TripleBlock rhs(from_dense(lin.b, gc.trunc), from_dense(lin.d, gc.trunc),
                  LowRankFactor::zero(sys.n, sys.steps + 1));
  auto op = [&](const TripleBlock& v) { return apply_saddle(sys, v); };

  std::vector<std::vector<double>> histories;
  for (const auto& name : cfg.preconditioners) {
    PreconditionerSpec spec = preconditioner_by_name(name);
    spec.recompress = gc.trunc;
    BlockOperator prec_op;
    if (spec.kind == PrecondKind::Identity) {
      prec_op = identity_operator();
    } else {
      auto prec = std::make_shared<Preconditioner>(spec, sys);
      prec_op = [prec](const TripleBlock& v) { return prec->apply(v); };
    }
    auto [x, report] = solve_lr_gmres(op, prec_op, rhs,
                                      TripleBlock::zero(sys.n, sys.steps, sys.p), gc);
    std::vector<double> rel;
    for (double r : report.true_residual_history)
      rel.push_back(r / report.initial_residual);
    c.check(!report.converged && rel.back() > 1e-2,
            name + " reached relative residual " + num(rel.back()));
    histories.push_back(std::move(rel));
  }

  const auto& identity_hist = histories[0];
  std::size_t ih_index = cfg.preconditioners.size();
  for (std::size_t i = 0; i < cfg.preconditioners.size(); ++i)
    if (cfg.preconditioners[i] == "ic_ih") ih_index = i;
  const auto& ih_hist = histories[ih_index];

  std::size_t crossing = ih_hist.size();
  for (std::size_t k = 0; k < std::min(identity_hist.size(), ih_hist.size()); ++k) {
    if (ih_hist[k] < identity_hist[k]) {
      crossing = k + 1;
      break;
    }
  }
  c.check(crossing <= 100, "first IH improvement at iteration " +
                               std::to_string(crossing));
  c.check(ih_hist.back() < identity_hist.back(),
          "IH final " + num(ih_hist.back()) + " vs unpreconditioned " +
              num(identity_hist.back()));
}

void criterion_10_determinism() {
  Criterion c(10, "seeded runs produce byte-identical CSV output");
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "lrda_acceptance_determinism";
  fs::remove_all(base);
  ExperimentConfig cfg = preset_config("ad_partial");
  run_experiment(cfg, base / "a");
  run_experiment(cfg, base / "b");
  for (const char* f : {"rmse.csv", "residual.csv", "storage.csv", "state_final.csv"}) {
    std::ifstream ia(base / "a" / f, std::ios::binary);
    std::ifstream ib(base / "b" / f, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(ia)), {});
    std::string sb((std::istreambuf_iterator<char>(ib)), {});
    c.check(!sa.empty() && sa == sb, std::string(f) + " differs between runs");
  }
  fs::remove_all(base);
}

}  // namespace

int main() {
  criterion_1_kron_identity();
  criterion_2_operator_oracle();
  criterion_3_trace_product();
  criterion_4_gmres_equivalence();
  criterion_5_preconditioner_inverses();
  criterion_6_spectrum();
  criterion_7_storage_tables();
  criterion_8_tlm_gradient();
  criterion_9a_ad_perfect();
  criterion_9b_lorenz_perfect();
  criterion_9c_preconditioner_comparison();
  criterion_10_determinism();

  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
