#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace cs_test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs_diff(const Vector& a, const Vector& b) { return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0; }

constexpr int kTwoBlockRuns = 50;

struct TwoBlockRun {
  TwoBlockCase c;
  SolverConfig cfg;
  KKTPoint reference;
  Trace trace;
};

/// The runs shared by criteria 1-3.
std::vector<TwoBlockRun>& two_block_runs() {
  static std::vector<TwoBlockRun> runs = [] {
    std::vector<TwoBlockRun> out;
    Gen gen(20240601);
    for (int t = 0; t < kTwoBlockRuns; ++t) {
      TwoBlockRun run;
      run.c = random_two_block(gen);
      run.cfg.variant = Variant::admm2;
      run.cfg.R = run.c.R;
      const Vector x0 = Vector::Zero(run.c.inst.d()), mu0 = Vector::Zero(run.c.inst.m());
      if (run.c.quadratic) {
        run.reference = solve_kkt_oracle(run.c.inst);
      } else {
        SolverConfig tight = run.cfg;
        tight.tol = 1e-13;
        tight.max_iter = 400000;
        const Trace t0 = run_solver(run.c.inst, tight, x0, mu0);
        run.reference = {t0.final_state.x, t0.final_state.mu};
      }
      run.cfg.record_iterates = true;
      run.trace = run_solver(run.c.inst, run.cfg, x0, mu0, run.reference);
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

Outcome criterion_1() {
  Outcome o;
  int quadratic = 0;
  long worst_k = 0;
  double worst_err = 0.0;
  for (const auto& run : two_block_runs()) {
    worst_k = std::max(worst_k, run.trace.final_state.k);
    if (run.trace.status != TraceStatus::converged) fail(o, "a run did not reach tol 1e-8");
    if (run.c.quadratic) {
      ++quadratic;
      const double err = (run.trace.final_state.x - run.reference.x).norm();
      worst_err = std::max(worst_err, err);
      if (err > 1e-6) fail(o, "final iterate off the KKT oracle by " + fmt(err));
    }
  }
  if (o.pass)
    o.detail = std::to_string(kTwoBlockRuns) + " runs converged (max " + std::to_string(worst_k) +
               " iterations); " + std::to_string(quadratic) + " quadratic cases within " + fmt(worst_err) +
               " of the oracle";
  return o;
}

Outcome criterion_2() {
  Outcome o;
  long steps = 0;
  double worst_excess = -INFINITY;
  for (const auto& run : two_block_runs()) {
    const auto res = kkt_residual(run.c.inst, run.reference);
    if (res.max_component() > 1e-10) {
      fail(o, "reference point not certified (residual " + fmt(res.max_component()) + ")");
      continue;
    }
    const auto& its = run.trace.iterates;
    const auto& recs = run.trace.records;
    if (recs.size() < 2) continue;
    const double slack = 1e-9 * std::max(1.0, recs[1].lyapunov);
    for (std::size_t k = 1; k + 1 < its.size(); ++k) {
      const double drop = recs[k].lyapunov - recs[k + 1].lyapunov;
      const double bound = contraction_decrease_bound(run.c.inst, run.cfg, its[k], its[k + 1]);
      worst_excess = std::max(worst_excess, bound - drop);
      ++steps;
      if (drop < -slack) fail(o, "Lyapunov value increased at k=" + std::to_string(k));
      if (drop < bound - slack) fail(o, "decrease below the guaranteed bound at k=" + std::to_string(k));
    }
  }
  if (o.pass)
    o.detail = std::to_string(steps) + " steps checked; largest (bound - decrease) " + fmt(worst_excess);
  return o;
}

Outcome criterion_3() {
  Outcome o;
  double worst_ratio = 0.0;
  int floored = 0, positive_at_100 = 0;
  for (const auto& run : two_block_runs()) {
    SolverConfig cfg = run.cfg;
    cfg.record_iterates = false;
    cfg.tol = 0.0;
    cfg.max_iter = 10000;
    const Trace t = run_solver(run.c.inst, cfg, Vector::Zero(run.c.inst.d()), Vector::Zero(run.c.inst.m()));
    const auto& inst = run.c.inst;
    const double scale = 1.0 + linalg::norm2(inst.H) + (inst.m() ? linalg::norm2(inst.A) : 0.0) + inst.g.norm() +
                         inst.b.norm() + run.reference.x.norm() + run.reference.mu.norm();
    const double floor = std::pow(64.0 * std::numeric_limits<double>::epsilon() * scale, 2);
    Trace clipped = t;
    for (auto& r : clipped.records)
      if (r.sum_sq_residual() <= floor) {
        r.r_feas = 0.0;
        std::fill(r.r_dual.begin(), r.r_dual.end(), 0.0);
      }
    const auto curve = min_kkt_sq_curve(clipped);
    double at100 = NAN, at10k = NAN;
    for (const auto& [k, v] : curve) {
      if (k == 100) at100 = v;
      if (k == 10000) at10k = v;
    }
    if (at100 > 0.0) ++positive_at_100;
    if (t.status == TraceStatus::converged && t.records.back().sum_sq_residual() == 0.0) {
      ++floored;
      continue;
    }
    if (std::isnan(at100) || std::isnan(at10k)) {
      fail(o, "run stopped before k = 10^4");
      continue;
    }
    if (at10k == 0.0) {
      ++floored;
      continue;
    }
    const double ratio = at100 / at10k;
    worst_ratio = worst_ratio == 0.0 ? ratio : std::min(worst_ratio, ratio);
    if (!(at10k * 10.0 <= at100)) fail(o, "k*min residual^2 shrank only by " + fmt(ratio) + " from k=100 to k=10^4");
  }
  if (o.pass)
    o.detail = std::to_string(positive_at_100) + " runs above the roundoff floor at k=100, " + std::to_string(floored) +
               " at the floor by k=10^4; smallest decrease factor among the rest " +
               (worst_ratio == 0.0 ? std::string("n/a") : fmt(worst_ratio));
  return o;
}

Outcome criterion_4() {
  Outcome o;
  Gen gen(7);
  double worst_opt = 0.0, min_gap = INFINITY;
  for (int t = 0; t < 20; ++t) {
    const DegenerateCase c = random_degenerate(gen);
    const auto cond = check_uniqueness_condition(c.inst, c.R, UniquenessMode::two_block_full);
    if (cond.satisfied) {
      fail(o, "constructed instance satisfies the uniqueness condition");
      continue;
    }
    const auto w = divergence_witness(c.inst, 1.0, c.R);
    if (!w || !w->certificate.valid) {
      fail(o, "no certified witness");
      continue;
    }
    SolverConfig cfg;
    cfg.R = c.R;
    const auto demo = oscillation_demo(c.inst, cfg, w->ybar, 200, gen.gaussian(c.inst.d()), gen.gaussian(c.inst.m()));
    worst_opt = std::max(worst_opt, demo.max_optimality_residual);
    min_gap = std::min(min_gap, demo.min_late_gap);
    if (!demo.legitimate) fail(o, "perturbed step fails the optimality recheck (" + fmt(demo.max_optimality_residual) + ")");
    if (!demo.non_convergent) fail(o, "perturbed trajectory settles");
  }
  if (o.pass)
    o.detail = "20 certified witnesses; max optimality residual " + fmt(worst_opt) + ", min late iterate gap " +
               fmt(min_gap);
  return o;
}

struct SpectralCase {
  ProblemInstance inst;
  double beta;
  SpectralReport report;
};

std::vector<SpectralCase>& spectral_cases() {
  static std::vector<SpectralCase> cases = [] {
    std::vector<SpectralCase> out;
    Gen gen(31337);
    const double betas[] = {0.1, 1.0, 10.0};
    for (int t = 0; t < 200; ++t) {
      const Index n = 2 + t % 3;
      const double beta = betas[(t / 3) % 3];
      ProblemInstance inst = random_quadratic(gen, n, 3, 4, beta);
      SpectralReport rep = analyze(inst, beta);
      out.push_back({std::move(inst), beta, std::move(rep)});
    }
    return out;
  }();
  return cases;
}

Outcome criterion_5() {
  Outcome o;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& c : spectral_cases()) {
    if (!c.report.verdicts.qs_spectrum.value_or(false)) fail(o, "Q not positive definite or eig(QS) outside [0, 4/3)");
    lo = std::min(lo, c.report.eig_QS.minCoeff());
    hi = std::max(hi, c.report.eig_QS.maxCoeff());
  }
  const auto inst = make_instance({1, 1}, mat({{2, 1}, {1, 2}}), Vector::Zero(2), Matrix::Identity(2, 2),
                                  Vector::Zero(2));
  SpectralReport rep = build_Q_M(inst, 1.0);
  check_eig_QS(rep);
  const double e0 = std::abs(rep.eig_QS(0) - 7.0 / 9.0), e1 = std::abs(rep.eig_QS(1) - 10.0 / 9.0);
  if (e0 > 1e-12 || e1 > 1e-12) fail(o, "hand instance eig(QS) off {7/9, 10/9}");
  if (o.pass)
    o.detail = "200 instances, eig(QS) within [" + fmt(lo) + ", " + fmt(hi) + "]; hand instance error " +
               fmt(std::max(e0, e1));
  return o;
}

Outcome criterion_6() {
  Outcome o;
  int with_one = 0;
  for (const auto& c : spectral_cases()) {
    const auto& v = c.report.verdicts;
    if (!v.rank_identity.value_or(false)) fail(o, "rank identity fails");
    if (!v.unit_circle.value_or(false)) fail(o, "eigenvalue of M neither inside the unit disk nor at 1");
    if (!v.semisimple_one.value_or(false))
      fail(o, "am_one " + std::to_string(c.report.am_one) + " != gm_one " + std::to_string(c.report.gm_one));
    with_one += c.report.am_one > 0;
  }
  if (o.pass) o.detail = "200 instances pass; " + std::to_string(with_one) + " have eigenvalue 1 in M";
  return o;
}

Outcome criterion_7() {
  Outcome o;
  Gen gen(99);
  long worst_k = 0;
  double worst_res = 0.0;
  auto check = [&](const ProblemInstance& inst, double beta, const std::string& label) {
    const Vector z0 = gen.gaussian(inst.d() + inst.m());
    const auto E = run_expected_iteration(inst, beta, z0, 5000000, 1e-10);
    worst_k = std::max(worst_k, static_cast<long>(E.Ex.size()) - 1);
    if (!E.converged) {
      fail(o, label + ": expected iteration did not settle");
      return;
    }
    const double res = expected_kkt_residual(inst, beta, E.Ex.back(), E.Emu.back());
    worst_res = std::max(worst_res, res);
    if (res > 1e-8) fail(o, label + ": limit violates the KKT system by " + fmt(res));
  };
  for (const auto& c : spectral_cases()) check(c.inst, c.beta, "random instance");
  check(free_pair(), 1.0, "H=0, A=[1 1]");
  if (o.pass)
    o.detail = "201 instances settle within " + std::to_string(worst_k) + " steps; max KKT residual " + fmt(worst_res);
  return o;
}

Outcome criterion_8() {
  Outcome o;
  const auto inst = cyclic_divergent();
  const auto cyc = cyclic_update_matrix(inst, 1.0, 1.0);
  if (!(cyc.rho > 1.0)) fail(o, "cyclic update matrix has rho " + fmt(cyc.rho));
  SolverConfig cfg;
  cfg.variant = Variant::admm_cyclic_n;
  const Trace t = run_solver(inst, cfg, Vector::Ones(3), Vector::Zero(3));
  if (t.status != TraceStatus::diverged) fail(o, "cyclic ADMM did not hit the divergence guard");
  const auto rep = analyze(inst, 1.0);
  const auto& v = rep.verdicts;
  if (!v.rank_identity.value_or(false) || !v.unit_circle.value_or(false) || !v.semisimple_one.value_or(false))
    fail(o, "expected matrix M fails the spectral checks");
  const auto E = run_expected_iteration(inst, 1.0, Vector::Ones(6), 1000000, 1e-10);
  const double res = E.converged ? expected_kkt_residual(inst, 1.0, E.Ex.back(), E.Emu.back()) : INFINITY;
  if (!E.converged || res > 1e-8) fail(o, "expected RP iteration does not converge to a KKT point");
  if (o.pass)
    o.detail = "cyclic rho " + fmt(cyc.rho) + ", diverged at k=" + std::to_string(t.final_state.k) +
               "; expected RP rho " + fmt(rep.rho_M) + ", settles in " + std::to_string(E.Ex.size() - 1) + " steps";
  return o;
}

Outcome criterion_9() {
  Outcome o;
  Gen gen(424242);
  double worst_gap = 0.0, worst_eq = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index d1 = gen.integer(1, 4), d2 = gen.integer(1, 4), d = d1 + d2;
    Matrix H;
    for (;;) {
      H = gen.psd(d, gen.integer(std::max(d1, d2), d));
      if (linalg::min_eigenvalue(H.topLeftCorner(d1, d1)) > 1e-3 &&
          linalg::min_eigenvalue(H.bottomRightCorner(d2, d2)) > 1e-3)
        break;
    }
    const auto r = bcd_rate_matrices(H, d1);
    worst_eq = std::max(worst_eq, std::abs(r.rho1 - r.rho2));
    worst_gap = std::max(worst_gap, r.rho1 - r.rho3);
    if (!bcd_rate_order_holds(r)) fail(o, "rho(M1) = rho(M2) <= rho(M3) violated");
  }
  double worst_cf = 0.0;
  auto normalized = [&](double c, std::optional<double> expect) {
    const auto r = bcd_rate_matrices(mat({{1, c}, {c, 1}}), 1);
    const double target = expect.value_or(r.rho3_closed_form);
    const double err = std::max(std::abs(r.rho3 - r.rho3_closed_form), std::abs(r.rho3 - target));
    worst_cf = std::max(worst_cf, err);
    if (err > 1e-12) fail(o, "closed form off by " + fmt(err) + " at H12=" + fmt(c));
  };
  normalized(0.5, 0.375);
  normalized(1.0, 1.0);
  for (int t = 0; t < 20; ++t) normalized(gen.uniform(-1.0, 1.0), std::nullopt);
  if (o.pass)
    o.detail = "100 random H: max |rho1-rho2| " + fmt(worst_eq) + ", max rho1-rho3 " + fmt(worst_gap) +
               "; 22 normalized 2x2 cases within " + fmt(worst_cf) + " of (s+sqrt s)/2";
  return o;
}

Outcome criterion_10() {
  Outcome o;
  Gen gen(1010);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const TwoBlockCase c = random_two_block(gen);
    const Vector x0 = gen.gaussian(c.inst.d()), mu0 = gen.gaussian(c.inst.m());
    auto compare = [&](Variant lin, Variant prox, bool bcd_mode, const std::string& label) {
      SolverConfig a;
      a.variant = lin;
      a.tol = 0.0;
      a.max_iter = 100;
      a.record_iterates = true;
      SolverConfig b = a;
      b.variant = prox;
      const ProblemInstance work = bcd_mode ? strip_constraints(c.inst) : c.inst;
      for (const auto& [r, R] : linearization_proximal(work, a.beta, bcd_mode)) b.R.push_back(R);
      const Trace ta = run_solver(c.inst, a, x0, mu0), tb = run_solver(c.inst, b, x0, mu0);
      for (const Trace* tr : {&ta, &tb})
        if (tr->iterates.size() != 101 && tr->status != TraceStatus::converged) {
          fail(o, label + ": run ended early");
          return;
        }
      // A run that stopped sits at an exact fixed point; hold it there.
      auto at = [](const Trace& tr, std::size_t k) -> const IterateState& {
        return tr.iterates[std::min(k, tr.iterates.size() - 1)];
      };
      for (std::size_t k = 0; k <= 100; ++k) {
        const double dx = max_abs_diff(at(ta, k).x, at(tb, k).x);
        const double dm = max_abs_diff(at(ta, k).mu, at(tb, k).mu);
        worst = std::max({worst, dx, dm});
        if (dx > 1e-12 || dm > 1e-12) {
          fail(o, label + ": iterates differ by " + fmt(std::max(dx, dm)) + " at k=" + std::to_string(k));
          return;
        }
      }
    };
    compare(Variant::admm2_linearized, Variant::admm2, false, "linearized ADMM");
    compare(Variant::bcpg, Variant::bcd, true, "BCPG");
  }
  if (o.pass) o.detail = "20 instances x 2 pairs x 100 iterations; max iterate difference " + fmt(worst);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},  {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d: %s  %s  [%.1fs]\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures == 0 ? 0 : 1;
}
