// coreg: solve, sweep, certify and oracle runs for l1 co-regularization.
//
// Exit codes: 0 success, 1 usage, 2 solver non-convergence, 3 certificate
// invalid.

#include "run_config.hpp"

#include "coreg/certificates.hpp"
#include "coreg/error.hpp"
#include "coreg/experiments.hpp"
#include "coreg/solvers.hpp"
#include "coreg/text.hpp"
#include "coreg/version.hpp"

#include <CLI11.hpp>

#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using coreg::cli::RunConfig;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;
constexpr int kInvalidCertificate = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

coreg::Instance build_instance(RunConfig& cfg) {
  if (cfg.n <= 0 || cfg.m <= 0 || cfg.sparsity < 0) throw UsageError("--n, --m must be positive and --sparsity nonnegative");
  if (cfg.instance == "integration") {
    coreg::InstanceSpec spec;
    spec.n = cfg.n;
    spec.m = cfg.m;
    spec.sparsity = cfg.sparsity;
    spec.seed = cfg.seed;
    spec.w_scale = cfg.w_scale;
    return coreg::make_instance(spec);
  }
  if (cfg.instance == "identity") {
    cfg.m = cfg.n;
    auto id = std::make_shared<coreg::IdentityMap>(cfg.n);
    auto basis = std::make_shared<coreg::WaveletBasis>(cfg.n);
    return coreg::make_instance(id, id, basis, cfg.sparsity, cfg.seed);
  }
  throw UsageError("--instance must be 'integration' or 'identity', got '" + cfg.instance + "'");
}

coreg::Model model_of(const RunConfig& cfg) {
  if (cfg.model.empty()) throw UsageError("--model is required (relaxed or strict)");
  try {
    return coreg::parse_model(cfg.model);
  } catch (const std::exception&) {
    throw UsageError("--model must be 'relaxed' or 'strict', got '" + cfg.model + "'");
  }
}

coreg::SolverConfig solver_config(const RunConfig& cfg) {
  coreg::SolverConfig sc;
  sc.max_iters = cfg.max_iters;
  sc.tol = cfg.tol;
  sc.rho = cfg.rho;
  sc.gamma = cfg.gamma;
  sc.polish = cfg.polish;
  if (cfg.reference) sc = coreg::reference_config(sc);
  sc.validate();
  return sc;
}

std::string header(const RunConfig& cfg) {
  std::string out = "# library=coreg " + std::string(coreg::version()) + "\n";
  std::istringstream is(cfg.canonical());
  std::string line;
  while (std::getline(is, line)) out += "# " + line + "\n";
  return out;
}

void write_vector(const std::string& path, const std::string& head, const coreg::Vector& v) {
  std::ofstream f(path);
  if (!f) throw coreg::Error("cannot open for writing: " + path);
  f << head;
  for (coreg::Index i = 0; i < v.size(); ++i) f << coreg::text::format_double(v[i]) << '\n';
  if (!f) throw coreg::Error("write failed: " + path);
}

double alpha_for(const RunConfig& cfg) {
  if (cfg.alpha) return *cfg.alpha;
  return cfg.big_c * std::max(cfg.delta, cfg.alpha_floor);
}

int cmd_solve(RunConfig& cfg) {
  const coreg::Model model = model_of(cfg);
  if (!(cfg.delta >= 0.0)) throw UsageError("--delta must be nonnegative");
  const coreg::Instance inst = build_instance(cfg);
  const coreg::SolverConfig sc = solver_config(cfg);
  const double alpha = alpha_for(cfg);
  const coreg::Vector y = coreg::add_noise(inst.y_star, cfg.delta, cfg.resolved_noise_seed());

  coreg::SolveResult res;
  coreg::Vector h;
  if (model == coreg::Model::relaxed) {
    res = coreg::solve_relaxed(inst.relaxed(y, alpha), sc);
    h = res.h;
  } else {
    res = coreg::solve_strict(inst.strict(y, alpha), sc);
    h = res.wx;
  }
  const coreg::KeyValues diag = {
      {"alpha", coreg::text::format_double(alpha)},
      {"objective", coreg::text::format_double(res.objective)},
      {"iterations", std::to_string(res.iterations)},
      {"fixed_point_residual", coreg::text::format_double(res.fixed_point_residual)},
      {"primal_residual", coreg::text::format_double(res.primal_residual)},
      {"dual_residual", coreg::text::format_double(res.dual_residual)},
      {"converged", res.converged ? "1" : "0"},
      {"polished", res.polished ? "1" : "0"},
      {"bregman_x", coreg::text::format_double(coreg::bregman_quadratic(res.x, inst.phantom.x_star))},
      {"err_h", coreg::text::format_double((h - inst.phantom.h_star).norm())},
  };
  const std::string head = header(cfg) + coreg::format_key_values(diag, "# ");
  write_vector(cfg.out_prefix + "_x.txt", head, res.x);
  write_vector(cfg.out_prefix + "_h.txt", head, h);
  std::cout << coreg::format_key_values(diag);
  std::cout << "wall_time=" << coreg::text::format_double(res.wall_time) << '\n';
  return res.converged ? kOk : kNotConverged;
}

struct CertifyOutcome {
  coreg::KeyValues report;
  bool valid = false;
  std::unique_ptr<coreg::SweepBounds> bounds;
};

CertifyOutcome certify_model(const coreg::Instance& inst, coreg::Model model, double big_c) {
  CertifyOutcome out;
  coreg::KeyValues cert_kv;
  bool valid = false;
  coreg::IndexSet omega;
  const coreg::SourceCertificateRelaxed* rel = nullptr;
  const coreg::SourceCertificateStrict* str = nullptr;
  coreg::SourceCertificateRelaxed cr;
  coreg::SourceCertificateStrict cs;
  if (model == coreg::Model::relaxed) {
    cr = coreg::find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
    valid = cr.valid;
    omega = valid ? cr.eta.omega : cr.support;
    cert_kv = cr.to_key_values();
    rel = &cr;
  } else {
    cs = coreg::find_certificate_strict(inst.w, inst.a, inst.l1, inst.phantom.x_star);
    valid = cs.valid;
    omega = valid ? cs.eta.omega : cs.support;
    cert_kv = cs.to_key_values();
    str = &cs;
  }
  const coreg::InjectivityReport inj = coreg::check_restricted_injectivity(inst.a, inst.l1, omega);
  const std::string p = std::string(coreg::to_string(model)) + ".";
  for (const auto& [k, v] : cert_kv) out.report.emplace_back(p + "cert." + k, v);
  for (const auto& [k, v] : inj.to_key_values()) out.report.emplace_back(p + "inj." + k, v);
  out.valid = valid && inj.injective;
  if (out.valid) {
    const coreg::RateConstants rc = rel ? coreg::rate_constants_relaxed(*rel, inj, big_c, inj.a_norm)
                                        : coreg::rate_constants_strict(*str, inj, big_c, inj.a_norm);
    for (const auto& [k, v] : rc.to_key_values()) out.report.emplace_back(p + "rate." + k, v);
    out.bounds = std::make_unique<coreg::SweepBounds>(coreg::SweepBounds{rc, cert_kv});
  }
  out.report.emplace_back(p + "valid", out.valid ? "1" : "0");
  return out;
}

int cmd_certify(RunConfig& cfg) {
  const coreg::Instance inst = build_instance(cfg);
  if (!(cfg.big_c > 0.0)) throw UsageError("--C must be positive");
  std::vector<coreg::Model> models;
  if (cfg.model.empty()) models = {coreg::Model::relaxed, coreg::Model::strict};
  else models = {model_of(cfg)};
  coreg::KeyValues report;
  bool all_valid = true;
  for (coreg::Model model : models) {
    CertifyOutcome o = certify_model(inst, model, cfg.big_c);
    report.insert(report.end(), o.report.begin(), o.report.end());
    all_valid = all_valid && o.valid;
  }
  const std::string body = coreg::format_key_values(report);
  std::cout << body;
  if (!cfg.report.empty()) {
    std::ofstream f(cfg.report);
    if (!f) throw coreg::Error("cannot open for writing: " + cfg.report);
    f << header(cfg) << body;
  }
  return all_valid ? kOk : kInvalidCertificate;
}

int cmd_sweep(RunConfig& cfg) {
  const coreg::Model model = model_of(cfg);
  const coreg::Instance inst = build_instance(cfg);
  coreg::SweepConfig sw;
  if (!cfg.deltas.empty()) sw.deltas = cfg.deltas;
  sw.big_c = cfg.big_c;
  sw.model = model;
  sw.trials = cfg.trials;
  sw.noise_seed = cfg.resolved_noise_seed();
  sw.solver = solver_config(cfg);
  sw.jobs = cfg.jobs;
  try {
    sw.validate();
  } catch (const coreg::Error& e) {
    throw UsageError(e.what());
  }

  std::unique_ptr<coreg::SweepBounds> bounds;
  if (cfg.bounds) {
    CertifyOutcome o = certify_model(inst, model, cfg.big_c);
    if (o.valid) bounds = std::move(o.bounds);
    else std::cerr << "warning: no valid certificate, bound columns left empty\n";
  }
  coreg::SweepResult result = coreg::run_sweep(sw, inst, bounds.get());
  const std::string csv = coreg::csv_text(result);
  {
    std::ofstream f(cfg.csv, std::ios::binary);
    if (!f) throw coreg::Error("cannot open for writing: " + cfg.csv);
    f << csv;
  }
  if (!cfg.svg.empty()) coreg::write_svg(result, cfg.svg);
  std::cout << "slope=" << coreg::text::format_double(result.fit.slope) << '\n'
            << "r_squared=" << coreg::text::format_double(result.fit.r_squared) << '\n'
            << "points_used=" << result.fit.points_used << '\n'
            << "records=" << result.records.size() << '\n'
            << "csv=" << cfg.csv << '\n'
            << "hash=" << coreg::determinism_hash(csv) << '\n';
  if (bounds) {
    int violations = 0;
    for (const auto& r : result.records) violations += (r.pass_c == 0) + (r.pass_d == 0);
    std::cout << "bound_violations=" << violations << '\n';
  }
  return result.all_converged() ? kOk : kNotConverged;
}

// Compares the configured solver against a tightly converged reference solve.
int cmd_oracle(RunConfig& cfg) {
  const coreg::Model model = model_of(cfg);
  if (cfg.n > 256) throw UsageError("oracle runs are limited to --n <= 256");
  const coreg::Instance inst = build_instance(cfg);
  const coreg::SolverConfig sc = solver_config(cfg);
  const double alpha = alpha_for(cfg);
  const coreg::Vector y = coreg::add_noise(inst.y_star, cfg.delta, cfg.resolved_noise_seed());
  coreg::SolveResult fast, ref;
  if (model == coreg::Model::relaxed) {
    const auto p = inst.relaxed(y, alpha);
    fast = coreg::solve_relaxed(p, sc);
    ref = coreg::reference_solve(p);
  } else {
    const auto p = inst.strict(y, alpha);
    fast = coreg::solve_strict(p, sc);
    ref = coreg::reference_solve(p);
  }
  const double gap = fast.objective - ref.objective;
  std::cout << "objective=" << coreg::text::format_double(fast.objective) << '\n'
            << "reference_objective=" << coreg::text::format_double(ref.objective) << '\n'
            << "gap=" << coreg::text::format_double(gap) << '\n'
            << "x_distance=" << coreg::text::format_double((fast.x - ref.x).norm()) << '\n'
            << "converged=" << (fast.converged ? 1 : 0) << '\n';
  return fast.converged && ref.converged && gap <= 1e-8 ? kOk : kNotConverged;
}

void add_common(CLI::App* sub, RunConfig& cfg, bool with_model) {
  sub->add_option("--config", "plain-text key=value file; flags win on conflict");
  if (with_model) sub->add_option("--model", cfg.model, "relaxed or strict");
  sub->add_option("--instance", cfg.instance, "integration (default) or identity");
  sub->add_option("--n", cfg.n, "signal length (power of two)");
  sub->add_option("--m", cfg.m, "number of measurements");
  sub->add_option("--sparsity", cfg.sparsity, "nonzero wavelet coefficients of W x*");
  sub->add_option("--seed", cfg.seed, "seed for A and the phantom");
  sub->add_option_function<std::uint64_t>(
      "--noise-seed", [&cfg](const std::uint64_t& s) { cfg.noise_seed = s; }, "noise seed (default: --seed)");
  sub->add_option("--C", cfg.big_c, "alpha = C * delta");
  sub->add_option("--w-scale", cfg.w_scale, "scale of the integration operator");
  sub->add_option("--max-iters", cfg.max_iters);
  sub->add_option("--tol", cfg.tol);
  sub->add_option("--rho", cfg.rho, "ADMM penalty");
  sub->add_option("--gamma", cfg.gamma, "Douglas-Rachford step");
  sub->add_flag_function("--no-polish", [&cfg](std::int64_t) { cfg.polish = false; }, "disable active-set polishing");
  sub->add_flag("--reference", cfg.reference, "reference accuracy settings");
}

// Loads every --config file named on the command line before CLI11 parses
// the flags, so explicit flags overwrite file values.
void preload_config(int argc, char** argv, RunConfig& cfg) {
  for (int i = 1; i < argc; ++i) {
    std::string path;
    if (std::strcmp(argv[i], "--config") == 0) {
      if (i + 1 >= argc) throw UsageError("--config needs a path");
      path = argv[i + 1];
    } else if (std::strncmp(argv[i], "--config=", 9) == 0) {
      path = argv[i] + 9;
    } else {
      continue;
    }
    const std::string saved = cfg.command;
    try {
      coreg::cli::apply_text(cfg, coreg::cli::read_file(path));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
    cfg.command = saved;
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"l1 co-regularization: solve, sweep, certify"};
  app.set_version_flag("--version", std::string("coreg ") + coreg::version());
  app.require_subcommand(1);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the canonical configuration and exit");

  CLI::App* solve = app.add_subcommand("solve", "one regularized solve at noise level --delta");
  add_common(solve, cfg, true);
  solve->add_option("--delta", cfg.delta, "noise level (0 allowed)");
  solve->add_option_function<double>("--alpha", [&cfg](const double& a) { cfg.alpha = a; }, "override C * delta");
  solve->add_option("--out", cfg.out_prefix, "prefix for <prefix>_x.txt and <prefix>_h.txt");

  CLI::App* sweep = app.add_subcommand("sweep", "noise-level sweep with alpha = C * delta");
  add_common(sweep, cfg, true);
  sweep->add_option_function<std::vector<double>>(
      "--deltas", [&cfg](const std::vector<double>& d) { cfg.deltas = d; }, "noise levels, descending")
      ->delimiter(',');
  sweep->add_option("--trials", cfg.trials);
  sweep->add_option("--jobs", cfg.jobs, "parallel records");
  sweep->add_option("--csv", cfg.csv);
  sweep->add_option("--svg", cfg.svg);
  sweep->add_flag("--bounds", cfg.bounds, "certify and fill the bound columns");

  CLI::App* certify = app.add_subcommand("certify", "source certificate and restricted injectivity");
  add_common(certify, cfg, true);
  certify->add_option("--report", cfg.report, "also write the report here");

  CLI::App* oracle = app.add_subcommand("oracle", "compare against a reference solve");
  add_common(oracle, cfg, true);
  oracle->add_option("--delta", cfg.delta);
  oracle->add_option_function<double>("--alpha", [&cfg](const double& a) { cfg.alpha = a; });

  try {
    preload_config(argc, argv, cfg);
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  cfg.command = chosen->get_name();
  try {
    if (print_config) {
      if (cfg.instance == "identity") cfg.m = cfg.n;
      std::cout << cfg.canonical();
      return kOk;
    }
    if (cfg.command == "solve") return cmd_solve(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "certify") return cmd_certify(cfg);
    return cmd_oracle(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << chosen->help();
    return kUsage;
  } catch (const coreg::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
