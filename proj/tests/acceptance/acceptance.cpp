// Acceptance run: one PASS/FAIL line per criterion, each with its time budget.
// Exit status is nonzero when any criterion fails.

#include "ucov/combinatorics.hpp"
#include "ucov/config.hpp"
#include "ucov/datagen.hpp"
#include "ucov/errors.hpp"
#include "ucov/estimator.hpp"
#include "ucov/experiments.hpp"
#include "ucov/hoeffding.hpp"
#include "ucov/parallel.hpp"
#include "ucov/rng.hpp"
#include "ucov/stats.hpp"
#include "ucov/tensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace ucov;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void run(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) out.require(false, "over time budget");
  if (!out.passed) ++failures;
  std::printf("[%s] %d %s (%.1fs / %.0fs)%s%s\n", out.passed ? "PASS" : "FAIL", id, title.c_str(), secs, budget_s,
              out.detail.empty() ? "" : " :: ", out.detail.c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

McPlan load(const std::string& name) { return plan_from_config(Config::load(std::string(UCOV_SOURCE_DIR) + "/configs/" + name)); }

std::size_t column(const ExperimentReport& r, const std::string& name) {
  const auto it = std::find(r.columns.begin(), r.columns.end(), name);
  if (it == r.columns.end()) throw InvalidConfig("report has no column " + name);
  return static_cast<std::size_t>(it - r.columns.begin());
}

double cell(const ExperimentReport& r, std::size_t row, const std::string& name) {
  return std::stod(r.rows.at(row).at(column(r, name)));
}

// Every failing check of a report, by name and detail.
void absorb(Outcome& out, const ExperimentReport& r) {
  for (const auto& c : r.checks) out.require(c.passed, c.name + " (" + c.detail + ")");
}

Eigen::MatrixXd gaussian_rows(Rng& rng, int n, int d) {
  Eigen::MatrixXd g(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g;
}

Outcome algorithm_equivalence() {
  Outcome out;
  Rng rng(101);
  double worst = 0.0;
  int cases = 0;
  for (int n = 1; n <= 12; ++n)
    for (int m = 1; m <= n; ++m)
      for (int d = 1; d <= 4; ++d)
        for (int s = 0; s < 100; ++s) {
          const Sample sample(SpaceDescriptor(d, NormKind::L2), gaussian_rows(rng, n, d));
          EstimatorConfig cfg;
          cfg.m = m;
          cfg.algorithm = Algorithm::Enumerate;
          const Eigen::MatrixXd a = estimate(sample, cfg).grid();
          cfg.algorithm = Algorithm::ClosedForm;
          const Eigen::MatrixXd b = estimate(sample, cfg).grid();
          const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
          worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / scale);
          ++cases;
        }
  out.require(worst <= 1e-10, "max relative difference " + num(worst));
  out.detail = std::to_string(cases) + " samples, max rel diff " + num(worst) + (out.detail.empty() ? "" : "; " + out.detail);
  return out;
}

Outcome unbiasedness() {
  Outcome out;
  const int n = 10;
  const std::int64_t L = 10000;
  const auto gen = gaussian_kl({1.0});
  std::string summary;
  for (int m = 1; m <= 5; ++m) {
    EstimatorConfig cfg;
    cfg.m = m;
    std::vector<double> values(L);
    par::for_each_index(L, [&](std::int64_t l) {
      values[l] = estimate(draw_iid(gen, n, derive_seed(202, {std::uint64_t(m), std::uint64_t(l)})), cfg).grid()(0, 0);
    });
    const auto s = stats::summarize(values);
    const double se = std::sqrt(s.variance / L);
    const double target = population_cm_analytic(1.0, m);
    const double z = (s.mean - target) / se;
    out.require(std::abs(z) <= 3.0, "m=" + std::to_string(m) + " mean " + num(s.mean) + " vs " + num(target) +
                                        " (" + num(z) + " se)");
    summary += " m=" + std::to_string(m) + ":z=" + num(z);
  }
  if (out.passed) out.detail = summary.substr(1);
  return out;
}

Outcome hoeffding_reconstruction() {
  Outcome out;
  const auto gen = finite_support({Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 0.5),
                                   Eigen::VectorXd::Constant(1, 2.0)},
                                  {0.25, 0.5, 0.25});
  const SpaceDescriptor space = gen.space;
  double worst = 0.0;
  int cases = 0;
  for (KernelKind kernel : {KernelKind::Identity, KernelKind::Sign}) {
    for (int m = 1; m <= 3; ++m) {
      const KernelSpec spec(m, Element::zero(space), kernel);
      const ExactProjection projector(gen);
      for (int n = m; n <= 8; ++n) {
        for (int s = 0; s < 5; ++s) {
          const Sample sample = draw_iid(gen, n, derive_seed(303, {std::uint64_t(m), std::uint64_t(n), std::uint64_t(s)}));
          EstimatorConfig cfg;
          cfg.m = m;
          cfg.kernel = kernel;
          cfg.algorithm = Algorithm::Enumerate;
          const Eigen::MatrixXd lhs =
              estimate(sample, cfg).grid() - component_ustat(sample, spec, 0, projector).grid();
          Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(1, 1);
          for (int c = 1; c <= m; ++c) {
            rhs += static_cast<double>(binomial(m, c)) * component_ustat(sample, spec, c, projector).grid();
          }
          worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
          ++cases;
        }
      }
    }
  }
  out.require(worst <= 1e-8, "max abs difference " + num(worst));
  if (out.passed) out.detail = std::to_string(cases) + " samples, max abs diff " + num(worst);
  return out;
}

Outcome tensor_norms() {
  Outcome out;
  Rng rng(404);
  const NormKind kinds[] = {NormKind::L1, NormKind::L2, NormKind::Linf};
  double worst_rank_one = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const SpaceDescriptor space(1 + static_cast<int>(rng.next_u64() % 6), kinds[rng.next_u64() % 3]);
    const Element x(space, gaussian_rows(rng, space.dim, 1).col(0));
    const Element y(space, gaussian_rows(rng, space.dim, 1).col(0));
    const auto tensor = outer(x, y);
    const double target = norm(x) * norm(y);
    const double pi = projective_norm(tensor).value;
    const double eps = injective_norm(tensor).value;
    worst_rank_one = std::max({worst_rank_one, std::abs(pi - target) / target, std::abs(eps - target) / target});
  }
  out.require(worst_rank_one <= 1e-9, "rank-one relative error " + num(worst_rank_one));

  double worst_order = 0.0;  // largest violation of eps <= F <= pi
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 8);
    const TensorRep tensor(SpaceDescriptor(d, NormKind::L2), gaussian_rows(rng, d, d));
    const double eps = injective_norm(tensor).value;
    const double f = hilbert_norm(tensor);
    const double pi = projective_norm(tensor).value;
    worst_order = std::max({worst_order, eps - f, f - pi});
  }
  out.require(worst_order <= 1e-10, "ordering violated by " + num(worst_order));

  const TensorRep checker(SpaceDescriptor(2, NormKind::L1), (Eigen::MatrixXd(2, 2) << 1, -1, -1, 1).finished());
  const auto l1 = injective_norm(checker);
  out.require(std::abs(l1.value - 4.0) <= 1e-12, "l1 injective norm " + num(l1.value) + ", expected 4");
  if (out.passed) {
    out.detail = "rank-one max rel err " + num(worst_rank_one) + ", ordering slack " + num(worst_order) +
                 ", l1 checkerboard " + num(l1.value);
  }
  return out;
}

Outcome nondegenerate_clt(ExperimentReport& report) {
  Outcome out;
  McPlan plan = load("clt.toml");
  plan.L = 2000;
  plan.n_grid = {400};
  plan.m_grid = {1, 2};
  report = clt_check(plan);
  absorb(out, report);
  if (out.passed) {
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      out.detail += (i ? ", " : "") + std::string("m=") + report.rows[i][column(report, "m")] + " p=" +
                    num(cell(report, i, "ks_p")) + " var_rel_err=" + num(cell(report, i, "var_rel_err"));
    }
  }
  return out;
}

Outcome degenerate(ExperimentReport& report) {
  Outcome out;
  McPlan plan = load("degenerate.toml");
  plan.L = 2000;
  plan.n_grid = {100, 400, 1600};
  plan.m_grid = {2};
  plan.thresholds.degenerate_slope_tol = 0.15;
  report = degenerate_check(plan);
  absorb(out, report);
  if (out.passed) out.detail = "slope " + num(cell(report, 0, "loglog_slope"));
  return out;
}

Outcome dependent_clt(ExperimentReport& report) {
  Outcome out;
  McPlan plan = load("dependent_clt.toml");
  plan.L = 2000;
  plan.n_grid = {1000};
  plan.m_grid = {1};
  plan.max_lag = 1;
  report = dependent_clt_check(plan);
  absorb(out, report);

  // Order-zero moving average against the i.i.d. clt run on the same law.
  McPlan q0 = plan;
  auto dep = std::get<DependentGeneratorDescriptor>(plan.gen);
  dep.ma_coeffs = {1.0};
  q0.gen = dep;
  const auto dep0 = dependent_clt_check(q0);
  McPlan iid = plan;
  iid.gen = dep.base;
  iid.master_seed = plan.master_seed + 1;
  const auto clt0 = clt_check(iid);
  const double v_dep = cell(dep0, 0, "rep_var");
  const double v_iid = cell(clt0, 0, "rep_var");
  const double rel = std::abs(v_dep / v_iid - 1.0);
  out.require(rel <= 0.10, "q=0 replicate variance " + num(v_dep) + " vs i.i.d. " + num(v_iid));
  const double s_dep = cell(dep0, 0, "long_run_var");
  const double s_iid = cell(clt0, 0, "hajek_S");
  const double rel_s = std::abs(s_dep / s_iid - 1.0);
  out.require(rel_s <= 0.10, "q=0 long-run variance " + num(s_dep) + " vs Hajek " + num(s_iid));
  if (out.passed) {
    out.detail = "var_rel_err " + num(cell(report, 0, "var_rel_err")) + ", p=" + num(cell(report, 0, "ks_p")) +
                 ", q=0 vs iid rel " + num(rel);
  }
  return out;
}

Outcome table1_criterion(ExperimentReport& report) {
  Outcome out;
  McPlan plan = load("table1.toml");
  plan.n_grid = {10};
  plan.L = 100;
  plan.interpretation = "both";
  report = table1(plan);
  out.require(report.csv() == table1(plan).csv(), "same seed gave different CSV");
  const auto grids = run_table1(plan);
  out.require(grids.mean_diff.rows() == 10 && grids.mean_diff.cols() == 8, "grid is not 10x8");
  out.require(grids.mean_sq_diff.rows() == 10 && grids.mean_sq_diff.cols() == 8, "grid is not 10x8");

  // Qualitative pattern, majority over 20 seeds.
  std::map<double, int> wins;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    McPlan p = plan;
    p.master_seed = plan.master_seed + static_cast<std::uint64_t>(s);
    for (const auto& [df, ok] : table1_pattern(run_table1(p))) wins[df] += ok ? 1 : 0;
  }
  std::string tally;
  for (const auto& [df, w] : wins) {
    out.require(2 * w > seeds, "pattern at df=" + num(df) + " held in " + std::to_string(w) + "/20 seeds");
    tally += (tally.empty() ? "" : " ") + std::string("df") + num(df) + ":" + std::to_string(w) + "/20";
  }
  if (out.passed) out.detail = "reproducible; pattern " + tally;
  return out;
}

Outcome determinism(const std::vector<std::pair<std::string, std::function<ExperimentReport()>>>& experiments) {
  Outcome out;
  std::string done;
  for (const auto& [name, make] : experiments) {
    par::set_workers(1);
    const std::string one = make().csv();
    par::set_workers(8);
    const std::string eight = make().csv();
    out.require(one == eight, name + " CSV differs between 1 and 8 workers");
    done += (done.empty() ? "" : ", ") + name;
  }
  par::set_workers(static_cast<int>(std::thread::hardware_concurrency()));
  if (out.passed) out.detail = "byte-identical: " + done;
  return out;
}

}  // namespace

int main() {
  run(1, "closed form matches enumeration", 30, algorithm_equivalence);
  run(2, "estimator is unbiased for C_m", 20, unbiasedness);
  run(3, "Hoeffding decomposition reconstructs the estimator", 10, hoeffding_reconstruction);
  run(4, "tensor norm identities", 10, tensor_norms);

  ExperimentReport clt, deg, dep, t1;
  run(5, "non-degenerate CLT", 120, [&] { return nondegenerate_clt(clt); });
  run(6, "degenerate scaling", 180, [&] { return degenerate(deg); });
  run(7, "dependent CLT", 180, [&] { return dependent_clt(dep); });
  run(8, "table1 dispersion grid", 60, [&] { return table1_criterion(t1); });

  run(9, "worker-count determinism", 300, [] {
    return determinism({
        {"table1", [] { return table1(load("table1.toml")); }},
        {"consistency", [] { return consistency_curve(load("consistency.toml")); }},
        {"clt", [] { return clt_check(load("clt.toml")); }},
        {"degenerate", [] { return degenerate_check(load("degenerate.toml")); }},
        {"dependent_clt", [] { return dependent_clt_check(load("dependent_clt.toml")); }},
        {"norms", [] { return norm_report(load("norms.toml")); }},
    });
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
