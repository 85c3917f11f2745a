// Command-line front end: experiments, one-off estimates, fixtures and
// decomposition diagnostics.

#include "ucov/errors.hpp"
#include "ucov/estimator.hpp"
#include "ucov/experiments.hpp"
#include "ucov/hoeffding.hpp"
#include "ucov/io.hpp"
#include "ucov/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ucov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRefused = 2;

struct ExperimentArgs {
  std::string config;
  std::string out_dir;
  int workers = 0;
  std::optional<std::uint64_t> seed;
};

McPlan load_plan(const ExperimentArgs& a) {
  McPlan plan = plan_from_config(Config::load(a.config));
  if (a.seed) plan.master_seed = *a.seed;
  return plan;
}

void print_report(const ExperimentReport& r, const fs::path& out_dir) {
  std::printf("%s: %zu rows -> %s\n", r.experiment.c_str(), r.rows.size(),
              (out_dir / (r.experiment + ".csv")).string().c_str());
  for (const auto& c : r.checks) {
    std::printf("  [%s] %s  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
}

int run_experiment(const ExperimentArgs& a, const std::function<ExperimentReport(const McPlan&)>& body) {
  if (a.workers > 0) par::set_workers(a.workers);
  const McPlan plan = load_plan(a);
  const ExperimentReport r = body(plan);
  write_report(r, a.out_dir);
  print_report(r, a.out_dir);
  return kExitOk;
}

Element parse_theta(const std::string& spec, const Sample& sample, EstimatorConfig& cfg) {
  if (spec == "zero") return Element::zero(sample.space());
  if (spec == "mean") {
    cfg.plug_in_theta = true;
    return resolve_theta(sample, cfg);
  }
  return io::read_element_csv(spec, sample.space());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"U-statistic covariance operators: estimation, decomposition and validation experiments"};
  app.require_subcommand(1);

  std::map<std::string, std::function<ExperimentReport(const McPlan&)>> experiments{
      {"table1", table1},
      {"consistency", consistency_curve},
      {"clt", clt_check},
      {"degenerate", degenerate_check},
      {"dependent-clt", dependent_clt_check},
      {"norms", [](const McPlan& p) { return norm_report(p); }},
  };
  std::map<std::string, ExperimentArgs> exp_args;
  std::map<std::string, CLI::App*> exp_cmds;
  for (const auto& [name, fn] : experiments) {
    auto& a = exp_args[name];
    auto* cmd = app.add_subcommand(name, "run the " + name + " experiment");
    cmd->add_option("--config", a.config, "experiment config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", a.out_dir, "directory for <experiment>.csv/.md/.json")->required();
    cmd->add_option("--workers", a.workers, "worker threads (never changes results)")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "override the master seed");
    exp_cmds[name] = cmd;
  }

  std::string est_input, est_theta = "zero", est_kernel = "identity", est_algorithm = "auto", est_norm = "L2",
                         est_out, est_json;
  int est_m = 1;
  int est_workers = 0;
  auto* est_cmd = app.add_subcommand("estimate", "estimate the covariance operator of a CSV sample");
  est_cmd->add_option("--input", est_input, "sample CSV, one element per row")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--m", est_m, "kernel order")->required();
  est_cmd->add_option("--theta", est_theta, "zero | mean | path to a one-row CSV");
  est_cmd->add_option("--kernel", est_kernel, "identity | sign");
  est_cmd->add_option("--algorithm", est_algorithm, "auto | enumerate | closed-form");
  est_cmd->add_option("--norm", est_norm, "coordinate norm of the sample space: L1 | L2 | Linf");
  est_cmd->add_option("--out", est_out, "output tensor CSV (row-major grid)")->required();
  est_cmd->add_option("--json", est_json, "also write the tensor and its norms as JSON");
  est_cmd->add_option("--workers", est_workers, "worker threads for enumeration")->check(CLI::PositiveNumber);

  std::string gen_spec, gen_out;
  int gen_n = 0;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen", "draw a sample fixture from a generator spec");
  gen_cmd->add_option("--spec", gen_spec, "generator file ([generator] section or top-level keys)")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--n", gen_n, "sample size")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "seed")->required();
  gen_cmd->add_option("--out", gen_out, "output CSV")->required();

  std::string dec_config, dec_out;
  int dec_order = 1;
  int dec_workers = 0;
  auto* dec_cmd = app.add_subcommand("decompose", "component U-statistic of one order plus degeneracy diagnostics");
  dec_cmd->add_option("--config", dec_config, "experiment config file")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("--order", dec_order, "component order c")->required();
  dec_cmd->add_option("--out", dec_out, "output tensor CSV")->required();
  dec_cmd->add_option("--workers", dec_workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& [name, cmd] : exp_cmds) {
      if (cmd->parsed()) return run_experiment(exp_args[name], experiments[name]);
    }

    if (est_cmd->parsed()) {
      if (est_workers > 0) par::set_workers(est_workers);
      const Sample sample = io::read_sample_csv(est_input, parse_norm_kind(est_norm));
      EstimatorConfig cfg;
      cfg.m = est_m;
      cfg.kernel = parse_kernel_kind(est_kernel);
      cfg.algorithm = parse_algorithm(est_algorithm);
      cfg.theta = parse_theta(est_theta, sample, cfg);
      const TensorRep t = estimate(sample, cfg, par::Exec::Parallel);
      std::ostringstream csv;
      io::write_tensor_csv(csv, t);
      io::write_text(est_out, csv.str());
      if (!est_json.empty()) {
        nlohmann::json j = io::to_json(t);
        j["m"] = est_m;
        j["kernel"] = std::string(to_string(cfg.kernel));
        j["algorithm"] = std::string(to_string(resolve_algorithm(cfg)));
        j["injective"] = io::to_json(tensor_norm(t, TensorNormChoice::Injective));
        j["projective"] = io::to_json(projective_norm(t));
        if (t.space().is_hilbert()) j["hilbert"] = io::to_json(NormResult{hilbert_norm(t), NormMethod::Exact});
        io::write_text(est_json, j.dump(2) + "\n");
      }
      std::printf("estimate: n=%d m=%d -> %s\n", sample.size(), est_m, est_out.c_str());
      return kExitOk;
    }

    if (gen_cmd->parsed()) {
      const Config cfg = Config::load(gen_spec);
      const std::string section = cfg.has("generator.kind") ? "generator" : "";
      const AnyGenerator g = any_generator_from_config(cfg, section);
      const Sample s = std::holds_alternative<GeneratorDescriptor>(g)
                           ? draw_iid(std::get<GeneratorDescriptor>(g), gen_n, gen_seed)
                           : draw_dependent(std::get<DependentGeneratorDescriptor>(g), gen_n, gen_seed);
      std::ostringstream csv;
      io::write_sample_csv(csv, s);
      io::write_text(gen_out, csv.str());
      std::printf("gen: %d rows -> %s\n", gen_n, gen_out.c_str());
      return kExitOk;
    }

    if (dec_cmd->parsed()) {
      if (dec_workers > 0) par::set_workers(dec_workers);
      const McPlan plan = plan_from_config(Config::load(dec_config));
      if (!std::holds_alternative<GeneratorDescriptor>(plan.gen)) {
        throw InvalidConfig("decompose expects an i.i.d. generator");
      }
      const auto& gen = std::get<GeneratorDescriptor>(plan.gen);
      const int m = plan.m_grid.front();
      const int n = plan.n_grid.front();
      const KernelSpec spec(m, plan.estimator.theta ? *plan.estimator.theta : Element::zero(gen.space),
                            plan.estimator.kernel);
      std::unique_ptr<Projector> projector;
      if (spec.kernel == KernelKind::Identity || std::holds_alternative<FiniteSupport>(gen.kind)) {
        projector = exact_projector(spec, gen);
      } else {
        projector = std::make_unique<MonteCarloProjection>(gen, plan.oracle_reps, derive_seed(plan.master_seed, {2}));
      }
      const Sample sample = draw_iid(gen, n, derive_seed(plan.master_seed, {1}));
      const TensorRep comp = component_ustat(sample, spec, dec_order, *projector);
      std::ostringstream csv;
      io::write_tensor_csv(csv, comp);
      io::write_text(dec_out, csv.str());

      nlohmann::json diag_json;
      try {
        const auto diag = degeneracy_order(spec, gen, plan.degeneracy_reps, derive_seed(plan.master_seed, {3}),
                                           plan.degeneracy_tol, projector.get());
        diag_json = {{"order", diag.order}, {"variances", diag.variances}, {"ses", diag.ses},
                     {"tol", diag.tol}, {"reps", diag.reps}};
      } catch (const IndeterminateDiagnostic& e) {
        diag_json = {{"order", nullptr}, {"indeterminate", e.what()}, {"tol", plan.degeneracy_tol},
                     {"reps", plan.degeneracy_reps}};
      }
      diag_json["component_order"] = dec_order;
      diag_json["m"] = m;
      diag_json["n"] = n;
      diag_json["projection"] = std::string(projector->name());
      fs::path json_path = dec_out;
      json_path.replace_extension(".json");
      io::write_text(json_path, diag_json.dump(2) + "\n");
      std::printf("%s\n", diag_json.dump().c_str());
      return kExitOk;
    }
  } catch (const GuardRefusal& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return kExitRefused;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
