#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fwph/hedging.hpp"
#include "fwph/io.hpp"
#include "fwph/oracle.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitSubproblem = 5;
constexpr int kExitLimits = 6;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fwph::ParseError("cannot open file: " + path, 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct InstanceOpts {
  std::string path;
  std::string format = "native";
};

fwph::TwoStageProblem load_instance(const InstanceOpts& opts) {
  if (opts.format == "native") return fwph::parse_native(read_file(opts.path));
  if (opts.format == "smps") {
    std::string base = opts.path;
    for (const char* suffix : {".cor", ".core", ".mps"}) {
      std::string s(suffix);
      if (base.size() > s.size() &&
          base.compare(base.size() - s.size(), s.size(), s) == 0) {
        base.resize(base.size() - s.size());
        break;
      }
    }
    std::string core;
    try {
      core = read_file(base + ".cor");
    } catch (const fwph::ParseError&) {
      core = read_file(base + ".mps");
    }
    return fwph::parse_smps(core, read_file(base + ".tim"),
                            read_file(base + ".sto"));
  }
  throw fwph::ParseError("unknown format: " + opts.format, 0, 0);
}

struct RunOpts {
  InstanceOpts instance;
  fwph::HedgingConfig config;
  std::string trace_path;
  double ref_value = fwph::kNaN;
  bool have_ref = false;
};

void add_instance_flags(CLI::App* cmd, InstanceOpts& opts) {
  cmd->add_option("--instance", opts.path, "instance file")->required();
  cmd->add_option("--format", opts.format, "instance format")
      ->check(CLI::IsMember({"native", "smps"}));
}

void add_run_flags(CLI::App* cmd, RunOpts& opts) {
  add_instance_flags(cmd, opts.instance);
  cmd->add_option("--rho", opts.config.rho, "penalty parameter");
  cmd->add_option("--alpha", opts.config.alpha, "linearization-point blend");
  cmd->add_option("--tmax", opts.config.t_max, "inner iterations per scenario");
  cmd->add_option("--kmax", opts.config.k_max, "outer iteration limit");
  cmd->add_option("--eps", opts.config.eps, "residual termination tolerance");
  cmd->add_option("--time-limit", opts.config.time_limit, "wall seconds");
  cmd->add_option("--threads", opts.config.threads, "scenario worker threads");
  cmd->add_option("--bounds-every", opts.config.bounds_every,
                  "bound-solve stride (ph only; 0 disables)");
  cmd->add_option("--trace", opts.trace_path, "trace CSV output path");
  cmd->add_option("--ref-value", opts.ref_value, "reference value for the gap column")
      ->each([&](const std::string&) { opts.have_ref = true; });
}

void write_trace(const std::string& path, const fwph::RunResult& result) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fwph::Error("cannot write trace file: " + path);
  fwph::write_trace_csv(out, result.trace);
}

void print_summary(const std::string& algo, const fwph::RunResult& result,
                   const RunOpts& opts) {
  std::cout << algo << " phi=" << fwph::format_double(result.phi_final)
            << " best_phi=" << fwph::format_double(result.phi_best)
            << " residual=" << fwph::format_double(result.final_residual)
            << " iters=" << (result.trace.empty() ? 0 : result.trace.back().k)
            << " term=" << fwph::termination_letter(result.reason);
  if (opts.have_ref) {
    double gap =
        std::abs((opts.ref_value - result.phi_best) / opts.ref_value) * 100.0;
    std::cout << " gap%=" << fwph::format_double(gap);
  }
  std::cout << "\n";
}

int run_ph_cmd(const RunOpts& opts) {
  fwph::TwoStageProblem p = load_instance(opts.instance);
  fwph::RunResult r =
      fwph::run_ph(p, fwph::DualMultipliers::zeros(p), opts.config);
  write_trace(opts.trace_path, r);
  print_summary("ph", r, opts);
  return 0;
}

int run_fwph_cmd(const RunOpts& opts, double rho_override = -1.0,
                 const std::string& trace_override = "") {
  fwph::TwoStageProblem p = load_instance(opts.instance);
  fwph::HedgingConfig cfg = opts.config;
  if (rho_override > 0.0) cfg.rho = rho_override;
  fwph::DualMultipliers w0 = fwph::DualMultipliers::zeros(p);
  fwph::FwphInit init = fwph::fwph_initialize(p, w0, cfg.threads);
  fwph::RunResult r = fwph::run_fwph(p, std::move(init), w0, cfg);
  RunOpts local = opts;
  if (!trace_override.empty()) local.trace_path = trace_override;
  write_trace(local.trace_path, r);
  print_summary("fwph", r, local);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian dual bounds for two-stage stochastic MIPs"};
  app.require_subcommand(1);

  RunOpts ph_opts;
  CLI::App* ph_cmd = app.add_subcommand("ph", "progressive hedging with bound recovery");
  add_run_flags(ph_cmd, ph_opts);

  RunOpts fw_opts;
  CLI::App* fw_cmd = app.add_subcommand("fwph", "Frank-Wolfe progressive hedging");
  add_run_flags(fw_cmd, fw_opts);

  InstanceOpts ef_instance;
  double ef_time_limit = -1.0;
  double ef_ref = fwph::kNaN;
  bool ef_have_ref = false;
  CLI::App* ef_cmd = app.add_subcommand("solve-ef", "solve the extensive form");
  add_instance_flags(ef_cmd, ef_instance);
  ef_cmd->add_option("--time-limit", ef_time_limit, "wall seconds");
  ef_cmd->add_option("--ref-value", ef_ref, "reference value")
      ->each([&](const std::string&) { ef_have_ref = true; });

  InstanceOpts or_instance;
  std::string or_method = "enumerate";
  int or_threads = 1;
  CLI::App* or_cmd = app.add_subcommand("oracle", "independent dual-bound oracles");
  add_instance_flags(or_cmd, or_instance);
  or_cmd->add_option("--method", or_method, "oracle method")
      ->check(CLI::IsMember({"enumerate", "kelley", "ef"}));
  or_cmd->add_option("--threads", or_threads, "scenario worker threads");

  std::uint64_t gen_seed = 0;
  std::string gen_out;
  fwph::GenShape gen_shape;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic instance");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output path (default stdout)");
  gen_cmd->add_option("--scenarios", gen_shape.scenarios, "scenario count (<=4)");
  gen_cmd->add_option("--nx", gen_shape.nx, "first-stage binaries (<=6)");
  gen_cmd->add_option("--ny", gen_shape.ny, "second-stage core vars");

  RunOpts sweep_opts;
  std::string sweep_rhos = "1,10,100";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "fwph penalty sweep");
  add_run_flags(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--rhos", sweep_rhos, "comma-separated rho list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ph_cmd) return run_ph_cmd(ph_opts);
    if (*fw_cmd) return run_fwph_cmd(fw_opts);
    if (*ef_cmd) {
      fwph::TwoStageProblem p = load_instance(ef_instance);
      fwph::MilpLimits lim;
      lim.time_limit = ef_time_limit;
      fwph::OracleResult r = fwph::solve_extensive(p, lim);
      std::cout << "solve-ef objective=" << fwph::format_double(r.value)
                << " nodes=" << r.iterations;
      if (ef_have_ref) {
        double gap = std::abs((ef_ref - r.value) / ef_ref) * 100.0;
        std::cout << " gap%=" << fwph::format_double(gap);
      }
      std::cout << "\n";
      return 0;
    }
    if (*or_cmd) {
      fwph::TwoStageProblem p = load_instance(or_instance);
      fwph::OracleResult r;
      if (or_method == "enumerate") {
        r = fwph::enumerate_ld(p);
      } else if (or_method == "kelley") {
        fwph::KelleyOptions kopts;
        kopts.threads = or_threads;
        r = fwph::kelley_ld(p, kopts);
      } else {
        r = fwph::solve_extensive(p);
      }
      std::cout << "oracle method=" << or_method
                << " value=" << fwph::format_double(r.value)
                << " gap=" << fwph::format_double(r.gap) << " "
                << r.certificate << "\n";
      return 0;
    }
    if (*gen_cmd) {
      fwph::TwoStageProblem p = fwph::generate_instance(gen_seed, gen_shape);
      std::string doc = fwph::write_native(p);
      if (gen_out.empty()) {
        std::cout << doc;
      } else {
        std::ofstream out(gen_out, std::ios::binary);
        if (!out) throw fwph::Error("cannot write: " + gen_out);
        out << doc;
      }
      return 0;
    }
    if (*sweep_cmd) {
      std::vector<double> rhos;
      std::stringstream ss(sweep_rhos);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        double v;
        if (!fwph::parse_double(tok, v) || !(v > 0.0))
          throw fwph::ParseError("bad rho in --rhos: '" + tok + "'", 0, 0);
        rhos.push_back(v);
      }
      std::cout << "rho\tphi\tbest_phi\tterm\titers\n";
      for (double rho : rhos) {
        std::string trace;
        if (!sweep_opts.trace_path.empty())
          trace = sweep_opts.trace_path + ".rho" + fwph::format_double(rho) +
                  ".csv";
        fwph::TwoStageProblem p = load_instance(sweep_opts.instance);
        fwph::HedgingConfig cfg = sweep_opts.config;
        cfg.rho = rho;
        fwph::DualMultipliers w0 = fwph::DualMultipliers::zeros(p);
        fwph::FwphInit init = fwph::fwph_initialize(p, w0, cfg.threads);
        fwph::RunResult r = fwph::run_fwph(p, std::move(init), w0, cfg);
        if (!trace.empty()) write_trace(trace, r);
        std::cout << fwph::format_double(rho) << '\t'
                  << fwph::format_double(r.phi_final) << '\t'
                  << fwph::format_double(r.phi_best) << '\t'
                  << fwph::termination_letter(r.reason) << '\t'
                  << (r.trace.empty() ? 0 : r.trace.back().k) << "\n";
      }
      return 0;
    }
  } catch (const fwph::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const fwph::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const fwph::SubproblemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSubproblem;
  } catch (const fwph::LimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLimits;
  } catch (const fwph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
