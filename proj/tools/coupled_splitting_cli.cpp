#include <coupled_splitting.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace cs = coupled_splitting;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitUsage = 64;

struct Options {
  std::string instance;
  std::optional<double> beta, gamma, tol;
  std::optional<long> max_iter;
  std::string variant;
  std::uint64_t seed = 0;
  long trials = 1;
  std::string out = ".";
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("COUPLED_SPLITTING_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed COUPLED_SPLITTING_SEED='" << s << "'\n";
    }
  }
  return 0;
}

cs::SolverConfig make_config(const Options& o, cs::Variant v) {
  cs::SolverConfig cfg;
  cfg.variant = v;
  if (o.beta) cfg.beta = *o.beta;
  if (o.gamma) cfg.gamma = *o.gamma;
  if (o.tol) cfg.tol = *o.tol;
  if (o.max_iter) cfg.max_iter = *o.max_iter;
  return cfg;
}

fs::path output_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

cs::io::Header header(const std::string& command, const Options& o) {
  return {{"command", command}, {"instance", fs::path(o.instance).filename().string()}, {"seed", std::to_string(o.seed)}};
}

std::optional<cs::KKTPoint> reference_point(const cs::ProblemInstance& inst) {
  if (inst.n() != 2 || !inst.all_theta_linear()) return std::nullopt;
  try {
    return cs::solve_kkt_oracle(inst);
  } catch (const cs::Error&) {
    return std::nullopt;
  }
}

/// Every run starts from x = (1, ..., 1), mu = 0.
cs::Vector start_point(const cs::ProblemInstance& inst) {
  cs::Vector z = cs::Vector::Zero(inst.d() + inst.m());
  z.head(inst.d()).setOnes();
  return z;
}

int cmd_solve(const Options& o) {
  const auto inst = cs::io::load_instance(o.instance);
  const std::string vname = o.variant.empty() ? (inst.n() == 2 ? "admm2" : "admm_cyclic_n") : o.variant;
  const bool random_order = vname == "rpadmm";
  const auto cfg = make_config(o, random_order ? cs::Variant::admm_cyclic_n : cs::variant_from_string(vname));
  cs::validate_config(inst, cfg);
  const cs::Vector x0 = start_point(inst).head(inst.d());
  const cs::Vector mu0 = cs::Vector::Zero(cfg.constrained() ? inst.m() : 0);
  const auto ref = reference_point(inst);
  auto hdr = header("solve", o);
  hdr.emplace_back("variant", vname);
  hdr.emplace_back("beta", cs::io::format_double(cfg.beta));
  hdr.emplace_back("gamma", cs::io::format_double(cfg.gamma));
  hdr.emplace_back("tol", cs::io::format_double(cfg.tol));
  hdr.emplace_back("max_iter", std::to_string(cfg.max_iter));

  bool diverged = false;
  const auto path = output_path(o, "trace.csv");
  std::ofstream out(path);
  if (random_order) {
    hdr.emplace_back("trials", std::to_string(o.trials));
    const auto res = cs::run_rp_solver(inst, cfg, x0, mu0, o.seed, o.trials, ref);
    cs::io::write_rp_trace_csv(out, res.traces, inst.n(), hdr);
    int converged = 0;
    for (const auto& t : res.traces) {
      diverged = diverged || t.status == cs::TraceStatus::diverged;
      converged += t.status == cs::TraceStatus::converged;
    }
    std::cout << "trials=" << o.trials << " converged=" << converged << " diverged=" << (diverged ? "yes" : "no")
              << " trace=" << path.string() << '\n';
  } else {
    const auto trace = cs::run_solver(inst, cfg, x0, mu0, ref);
    cs::io::write_trace_csv(out, trace, inst.n(), hdr);
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << '\n';
    diverged = trace.status == cs::TraceStatus::diverged;
    std::cout << "status=" << cs::to_string(trace.status) << " iterations=" << trace.final_state.k
              << " trace=" << path.string() << '\n';
  }
  return diverged ? kExitDiverged : kExitOk;
}

int cmd_analyze(const Options& o) {
  const auto inst = cs::io::load_instance(o.instance);
  const double beta = o.beta.value_or(1.0);
  const auto rep = cs::analyze(inst, beta);
  auto doc = cs::io::report_to_json(rep);
  doc["seed"] = o.seed;
  const auto path = output_path(o, "report.json");
  std::ofstream(path) << doc.dump(2) << '\n';
  std::cout << "rho_M=" << cs::io::format_double(rep.rho_M) << " am_one=" << rep.am_one << " gm_one=" << rep.gm_one;
  for (const auto& [name, v] : doc["verdicts"].items())
    std::cout << ' ' << name << '=' << (v.is_null() ? "n/a" : (v.get<bool>() ? "pass" : "fail"));
  std::cout << " report=" << path.string() << '\n';
  return kExitOk;
}

int cmd_compare_bcd(const Options& o) {
  const auto inst = cs::io::load_instance(o.instance);
  if (inst.n() != 2) throw cs::UsageError("compare-bcd needs a 2-block instance");
  const auto r = cs::bcd_rate_matrices(inst.H, inst.blocks.dim(0));
  const auto path = output_path(o, "bcd_rates.csv");
  std::ofstream out(path);
  cs::io::write_header(out, header("compare-bcd", o));
  out << "quantity,value\n";
  out << "rho_M1," << cs::io::format_double(r.rho1) << '\n';
  out << "rho_M2," << cs::io::format_double(r.rho2) << '\n';
  out << "rho_M3," << cs::io::format_double(r.rho3) << '\n';
  out << "sigma1," << cs::io::format_double(r.sigma1) << '\n';
  out << "rho_M3_closed_form," << cs::io::format_double(r.rho3_closed_form) << '\n';
  std::cout << "rho_M1=" << cs::io::format_double(r.rho1) << " rho_M2=" << cs::io::format_double(r.rho2)
            << " rho_M3=" << cs::io::format_double(r.rho3)
            << " order=" << (cs::bcd_rate_order_holds(r) ? "holds" : "violated") << " table=" << path.string() << '\n';
  return kExitOk;
}

int cmd_rp_expect(const Options& o) {
  const auto inst = cs::io::load_instance(o.instance);
  const double beta = o.beta.value_or(1.0);
  const long k_max = o.max_iter.value_or(100000);
  const double tol = o.tol.value_or(1e-10);
  const auto E = cs::run_expected_iteration(inst, beta, start_point(inst), k_max, tol);
  auto hdr = header("rp-expect", o);
  hdr.emplace_back("beta", cs::io::format_double(beta));
  const auto path = output_path(o, "expectation.csv");
  std::ofstream out(path);
  cs::io::write_expectation_csv(out, E, hdr);
  const double res = cs::expected_kkt_residual(inst, beta, E.Ex.back(), E.Emu.back());
  std::cout << "steps=" << E.Ex.size() - 1 << " converged=" << (E.converged ? "yes" : "no")
            << " kkt_residual=" << cs::io::format_double(res) << " trace=" << path.string() << '\n';
  return kExitOk;
}

int cmd_witness(const Options& o) {
  const auto inst = cs::io::load_instance(o.instance);
  const double beta = o.beta.value_or(1.0);
  const auto w = cs::divergence_witness(inst, beta, {});
  cs::io::json doc;
  doc["seed"] = o.seed;
  doc["beta"] = beta;
  if (!w) {
    doc["witness"] = nullptr;
    std::cout << "none\n";
  } else {
    const auto& c = w->certificate;
    doc["witness"] = cs::io::detail::to_json(w->ybar);
    doc["certificate"] = {{"H_ybar", c.H_ybar},       {"A_ybar", c.A_ybar},         {"R_ybar", c.R_ybar},
                          {"H12_ybar2", c.H12_ybar2}, {"H12t_ybar1", c.H12t_ybar1}, {"valid", c.valid}};
    std::cout << "ybar=";
    for (cs::Index i = 0; i < w->ybar.size(); ++i) std::cout << (i ? "," : "") << cs::io::format_double(w->ybar(i));
    std::cout << " certificate=" << (c.valid ? "valid" : "invalid") << '\n';
  }
  std::ofstream(output_path(o, "witness.json")) << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  static const std::set<std::string> commands{"solve", "analyze", "compare-bcd", "rp-expect", "witness"};
  if (argc >= 2 && argv[1][0] != '-' && !commands.count(argv[1])) {
    std::cerr << "unknown command '" << argv[1] << "'; expected one of solve, analyze, compare-bcd, rp-expect, witness\n";
    return kExitUsage;
  }

  CLI::App app{"Proximal ADMM / BCD solvers and spectral checks for coupled quadratic problems"};
  app.require_subcommand(1);
  Options o;
  o.seed = default_seed();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("instance", o.instance, "instance JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--beta", o.beta, "penalty parameter");
    sub->add_option("--gamma", o.gamma, "dual stepsize factor");
    sub->add_option("--tol", o.tol, "stopping tolerance");
    sub->add_option("--max-iter", o.max_iter, "iteration cap");
    sub->add_option("--variant", o.variant, "admm2|admm2_linearized|admm_cyclic_n|bcd|bcpg|rpadmm");
    sub->add_option("--seed", o.seed, "random seed (default: $COUPLED_SPLITTING_SEED or 0)");
    sub->add_option("--trials", o.trials, "number of randomized trials")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
  };
  auto* solve = app.add_subcommand("solve", "run a solver and write trace.csv");
  auto* analyze = app.add_subcommand("analyze", "spectral report of the randomly permuted iteration");
  auto* compare = app.add_subcommand("compare-bcd", "spectral radii of cyclic and randomized 2-block BCD");
  auto* expect = app.add_subcommand("rp-expect", "exact expected iterates of randomly permuted ADMM");
  auto* witness = app.add_subcommand("witness", "null direction of the subproblem matrix, or none");
  for (auto* s : {solve, analyze, compare, expect, witness}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*analyze) return cmd_analyze(o);
    if (*compare) return cmd_compare_bcd(o);
    if (*expect) return cmd_rp_expect(o);
    if (*witness) return cmd_witness(o);
  } catch (const cs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
