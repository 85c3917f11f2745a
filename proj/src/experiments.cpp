#include "ucov/experiments.hpp"

#include "ucov/errors.hpp"
#include "ucov/hoeffding.hpp"
#include "ucov/io.hpp"
#include "ucov/parallel.hpp"
#include "ucov/stats.hpp"
#include "ucov/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ucov {

namespace {

// Stream keys: the first path component below the master seed.
constexpr std::uint64_t kKeyTable1 = 1;
constexpr std::uint64_t kKeyConsistency = 2;
constexpr std::uint64_t kKeyClt = 3;
constexpr std::uint64_t kKeyDegenerate = 4;
constexpr std::uint64_t kKeyDependent = 5;
constexpr std::uint64_t kKeyOracle = 6;
constexpr std::uint64_t kKeyHajek = 7;
constexpr std::uint64_t kKeySigma = 8;
constexpr std::uint64_t kKeyDegeneracy = 9;
constexpr std::uint64_t kKeyInnerProjection = 10;

// Inner replications when the sign kernel forces Monte Carlo projections.
constexpr std::int64_t kSignInnerReps = 2000;

using Clock = std::chrono::steady_clock;

std::string fmt(double v) { return io::format_double(v); }

std::string hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const GeneratorDescriptor& base_of(const AnyGenerator& gen) {
  if (const auto* g = std::get_if<GeneratorDescriptor>(&gen)) return *g;
  return std::get<DependentGeneratorDescriptor>(gen).base;
}

std::uint64_t hash_of(const AnyGenerator& gen) {
  return std::visit([](const auto& g) { return g.hash(); }, gen);
}

std::string describe(const AnyGenerator& gen) {
  return std::visit([](const auto& g) { return g.describe(); }, gen);
}

std::vector<std::string> provenance(std::uint64_t seed, int n, int m, std::uint64_t hash) {
  return {std::to_string(seed), std::to_string(n), std::to_string(m), hex(hash)};
}

const std::vector<std::string> kProvenanceColumns{"seed", "n", "m", "gen_hash"};

std::vector<std::string> with_provenance(std::vector<std::string> tail) {
  std::vector<std::string> out = kProvenanceColumns;
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

void append(std::vector<std::string>& row, std::initializer_list<std::string> cells) {
  row.insert(row.end(), cells.begin(), cells.end());
}

EstimatorConfig with_m(const EstimatorConfig& est, int m) {
  EstimatorConfig out = est;
  out.m = m;
  return out;
}

Element theta_of(const EstimatorConfig& est, const SpaceDescriptor& space) {
  return est.theta ? *est.theta : Element::zero(space);
}

void reject_plug_in(const McPlan& plan) {
  if (plan.estimator.plug_in_theta) {
    throw InvalidConfig("plug-in theta is outside the known-location theory and is not supported by "
                        "the validation experiments");
  }
}

std::vector<DirectionPair> directions_of(const McPlan& plan) {
  if (!plan.directions.empty()) return plan.directions;
  const SpaceDescriptor dual = dual_space(plan.space());
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(dual.dim);
  e1[0] = 1.0;
  return {{Element(dual, e1), Element(dual, e1)}};
}

std::string direction_label(const DirectionPair& p) {
  std::string s = "u=(";
  for (int i = 0; i < p.u.dim(); ++i) s += (i ? " " : "") + fmt(p.u[i]);
  s += ");v=(";
  for (int i = 0; i < p.v.dim(); ++i) s += (i ? " " : "") + fmt(p.v[i]);
  return s + ")";
}

double bilinear(const Eigen::MatrixXd& g, const DirectionPair& p) {
  return p.u.coords().dot(g * p.v.coords());
}

// Projector for the guard and oracle computations of one kernel.
std::unique_ptr<Projector> projector_for(const KernelSpec& spec, const GeneratorDescriptor& gen,
                                         std::uint64_t seed) {
  if (spec.kernel == KernelKind::Identity || std::holds_alternative<FiniteSupport>(gen.kind)) {
    return exact_projector(spec, gen);
  }
  return std::make_unique<MonteCarloProjection>(gen, kSignInnerReps, seed, par::Exec::Serial);
}

DegeneracyDiagnostic guarded_degeneracy(const McPlan& plan, const KernelSpec& spec,
                                        const GeneratorDescriptor& gen, const char* experiment) {
  const auto projector =
      projector_for(spec, gen, derive_seed(plan.master_seed, {kKeyInnerProjection, std::uint64_t(spec.m)}));
  try {
    return degeneracy_order(spec, gen, plan.degeneracy_reps,
                            derive_seed(plan.master_seed, {kKeyDegeneracy, std::uint64_t(spec.m)}),
                            plan.degeneracy_tol, projector.get());
  } catch (const IndeterminateDiagnostic& e) {
    throw GuardRefusal(std::string(experiment) + " refused: " + e.what() +
                       "; increase degeneracy reps or adjust the tolerance");
  }
}

std::string variances_text(const DegeneracyDiagnostic& d) {
  std::string s;
  for (std::size_t i = 0; i < d.variances.size(); ++i) {
    s += (i ? ", " : "") + std::string("E||g_") + std::to_string(i + 1) + "||^2 = " + fmt(d.variances[i]);
  }
  return s;
}

std::vector<double> project(const std::vector<Eigen::MatrixXd>& grids, const Eigen::MatrixXd& cm,
                            const DirectionPair& dir, double scale) {
  std::vector<double> out;
  out.reserve(grids.size());
  for (const auto& g : grids) out.push_back(scale * bilinear(g - cm, dir));
  return out;
}

struct Timer {
  Clock::time_point start = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

void base_metadata(ExperimentReport& r, const McPlan& plan) {
  r.metadata["seed"] = std::to_string(plan.master_seed);
  r.metadata["software_version"] = kVersion;
  r.metadata["generator"] = describe(plan.gen);
  r.metadata["generator_hash"] = hex(hash_of(plan.gen));
  r.metadata["L"] = std::to_string(plan.L);
  r.metadata["kernel"] = std::string(to_string(plan.estimator.kernel));
  r.metadata["algorithm"] = std::string(to_string(resolve_algorithm(plan.estimator)));
}

}  // namespace

std::string_view to_string(TensorNormChoice choice) {
  switch (choice) {
    case TensorNormChoice::Hilbert: return "hilbert";
    case TensorNormChoice::Injective: return "injective";
    case TensorNormChoice::Projective: return "projective";
  }
  return "?";
}

TensorNormChoice parse_tensor_norm(std::string_view text) {
  if (text == "hilbert" || text == "frobenius") return TensorNormChoice::Hilbert;
  if (text == "injective") return TensorNormChoice::Injective;
  if (text == "projective") return TensorNormChoice::Projective;
  throw InvalidConfig("unknown tensor norm '" + std::string(text) +
                      "' (expected hilbert, injective or projective)");
}

NormResult tensor_norm(const TensorRep& t, TensorNormChoice choice) {
  switch (choice) {
    case TensorNormChoice::Hilbert: return {hilbert_norm(t), NormMethod::Exact};
    case TensorNormChoice::Injective:
      try {
        return injective_norm(t);
      } catch (const SizeLimitError&) {
        return injective_norm_heuristic(t);
      }
    case TensorNormChoice::Projective: return projective_norm(t);
  }
  return {};
}

const SpaceDescriptor& McPlan::space() const { return base_of(gen).space; }

void McPlan::validate() const {
  if (L < 1) throw InvalidConfig("L must be >= 1");
  if (n_grid.empty() || m_grid.empty()) throw InvalidConfig("n_grid and m_grid must be nonempty");
  const int n_min = *std::min_element(n_grid.begin(), n_grid.end());
  if (n_min < 1) throw InvalidConfig("sample sizes must be >= 1");
  for (int m : m_grid) {
    if (m < 1) throw InvalidConfig("kernel orders must be >= 1");
    if (m > n_min) {
      throw InvalidConfig("every m in m_grid must be <= min(n_grid) = " + std::to_string(n_min) +
                          ", got m = " + std::to_string(m));
    }
  }
  std::visit([](const auto& g) { g.validate(); }, gen);
  if (estimator.theta && !(estimator.theta->space() == space())) {
    throw InvalidConfig("estimator theta does not match the generator's space");
  }
  if (estimator.algorithm == Algorithm::ClosedForm && estimator.kernel != KernelKind::Identity) {
    throw InvalidConfig("closed-form algorithm is only valid for the identity kernel");
  }
  for (const auto& d : directions) {
    if (d.u.dim() != space().dim || d.v.dim() != space().dim) {
      throw InvalidConfig("direction dimension does not match the generator's space");
    }
  }
  for (double df : df_grid) {
    if (!(df >= 3.0)) throw InvalidConfig("table1 df values must be >= 3");
  }
  if (interpretation != "both" && interpretation != "mean_diff" && interpretation != "mean_sq_diff") {
    throw InvalidConfig("interpretation must be both, mean_diff or mean_sq_diff");
  }
  if (oracle_reps < 1 || degeneracy_reps < 1) throw InvalidConfig("oracle and degeneracy reps must be >= 1");
  if (max_lag < 0) throw InvalidConfig("max_lag must be >= 0");
}

GeneratorDescriptor generator_from_config(const Config& cfg, const std::string& section) {
  const std::string p = section.empty() ? "" : section + ".";
  const std::string kind = cfg.string(p + "kind");
  const NormKind norm = parse_norm_kind(cfg.string(p + "norm", "L2"));
  GeneratorDescriptor g;
  if (kind == "student_t") {
    g = student_t(cfg.number(p + "df"));
  } else if (kind == "rademacher") {
    g = rademacher();
  } else if (kind == "gaussian_kl") {
    std::vector<double> eig = cfg.has(p + "eigenvalues")
                                  ? cfg.numbers(p + "eigenvalues")
                                  : halving_spectrum(static_cast<int>(cfg.integer(p + "dim", 1)));
    g = gaussian_kl(std::move(eig), norm);
  } else if (kind == "finite_support") {
    std::vector<Eigen::VectorXd> atoms;
    for (const auto& row : cfg.matrix(p + "atoms")) {
      atoms.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
    }
    g = finite_support(std::move(atoms), cfg.numbers(p + "probs"), norm);
  } else if (kind == "constant") {
    const auto value = cfg.numbers(p + "value");
    g = constant(Element(SpaceDescriptor(static_cast<int>(value.size()), norm),
                         Eigen::Map<const Eigen::VectorXd>(value.data(), static_cast<Eigen::Index>(value.size()))));
  } else {
    throw InvalidConfig("unknown generator kind '" + kind +
                        "' (expected student_t, rademacher, gaussian_kl, finite_support or constant)");
  }
  if (kind == "student_t" || kind == "rademacher") g.space.norm_kind = norm;
  g.validate();
  return g;
}

AnyGenerator any_generator_from_config(const Config& cfg, const std::string& section) {
  GeneratorDescriptor base = generator_from_config(cfg, section);
  const std::string ma = section.empty() ? "ma" : section + ".ma";
  if (!cfg.has(ma)) return base;
  DependentGeneratorDescriptor dep{std::move(base), cfg.numbers(ma)};
  dep.validate();
  return dep;
}

McPlan plan_from_config(const Config& cfg) {
  McPlan plan;
  if (cfg.has("generator.kind")) plan.gen = any_generator_from_config(cfg);
  const SpaceDescriptor space = plan.space();

  plan.L = cfg.integer("plan.L", plan.L);
  if (cfg.has("plan.n_grid")) {
    plan.n_grid.clear();
    for (auto n : cfg.integers("plan.n_grid")) plan.n_grid.push_back(static_cast<int>(n));
  }
  if (cfg.has("plan.m_grid")) {
    plan.m_grid.clear();
    for (auto m : cfg.integers("plan.m_grid")) plan.m_grid.push_back(static_cast<int>(m));
  }
  plan.master_seed = cfg.unsigned_integer("plan.seed", plan.master_seed);
  plan.oracle_reps = cfg.integer("plan.oracle_reps", plan.oracle_reps);
  plan.max_lag = static_cast<int>(cfg.integer("plan.max_lag", plan.max_lag));
  plan.expected_slope = cfg.number("plan.expected_slope", plan.expected_slope);
  if (cfg.has("plan.norm")) plan.norm = parse_tensor_norm(cfg.string("plan.norm"));

  plan.degeneracy_reps = cfg.integer("degeneracy.reps", plan.degeneracy_reps);
  plan.degeneracy_tol = cfg.number("degeneracy.tol", plan.degeneracy_tol);

  plan.thresholds.ks_alpha = cfg.number("thresholds.ks_alpha", plan.thresholds.ks_alpha);
  plan.thresholds.var_tol = cfg.number("thresholds.var_tol", plan.thresholds.var_tol);
  plan.thresholds.slope_tol = cfg.number("thresholds.slope_tol", plan.thresholds.slope_tol);
  plan.thresholds.degenerate_slope_tol =
      cfg.number("thresholds.degenerate_slope_tol", plan.thresholds.degenerate_slope_tol);

  if (cfg.has("estimator.kernel")) plan.estimator.kernel = parse_kernel_kind(cfg.string("estimator.kernel"));
  if (cfg.has("estimator.algorithm")) {
    plan.estimator.algorithm = parse_algorithm(cfg.string("estimator.algorithm"));
  }
  if (cfg.has("estimator.theta")) {
    const auto t = cfg.numbers("estimator.theta");
    plan.estimator.theta = Element(space, Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())));
  }
  plan.estimator.plug_in_theta = cfg.boolean("estimator.plug_in_theta", false);

  if (cfg.has("table1.df_grid")) plan.df_grid = cfg.numbers("table1.df_grid");
  plan.interpretation = cfg.string("table1.interpretation", plan.interpretation);

  if (cfg.has("directions.u") || cfg.has("directions.v")) {
    const auto us = cfg.matrix("directions.u");
    const auto vs = cfg.matrix("directions.v");
    if (us.size() != vs.size()) throw InvalidConfig("directions.u and directions.v must pair up");
    const SpaceDescriptor dual = dual_space(space);
    for (std::size_t i = 0; i < us.size(); ++i) {
      auto to_el = [&](const std::vector<double>& c) {
        return Element(dual, Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
      };
      plan.directions.push_back({to_el(us[i]), to_el(vs[i])});
    }
  }

  if (cfg.has("tensor.grid")) {
    const auto rows = cfg.matrix("tensor.grid");
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != d) {
        throw InvalidConfig("tensor.grid must be square");
      }
      for (int j = 0; j < d; ++j) g(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    plan.tensors.emplace_back(SpaceDescriptor(d, parse_norm_kind(cfg.string("tensor.norm_kind", "L2"))), g);
  }

  plan.validate();
  return plan;
}

bool ExperimentReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ExperimentReport::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

std::string ExperimentReport::markdown() const {
  std::ostringstream out;
  out << "# " << experiment << "\n\n";
  for (const auto& [k, v] : metadata) out << "- " << k << ": `" << v << "`\n";
  char wall[64];
  std::snprintf(wall, sizeof wall, "%.3f", wall_time_s);
  out << "- wall_time_s: " << wall << "\n\n";
  if (!checks.empty()) {
    out << "## Checks\n\n| check | result | detail |\n|---|---|---|\n";
    for (const auto& c : checks) {
      out << "| " << c.name << " | " << (c.passed ? "PASS" : "FAIL") << " | " << c.detail << " |\n";
    }
    out << "\n";
  }
  if (!markdown_body.empty()) out << markdown_body << "\n";
  if (!rows.empty() && rows.size() <= 400) {
    out << "## Rows\n\n|";
    for (const auto& c : columns) out << " " << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& row : rows) {
      out << "|";
      for (const auto& cell : row) out << " " << cell << " |";
      out << "\n";
    }
  }
  return out.str();
}

std::string ExperimentReport::metadata_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["metadata"] = metadata;
  j["wall_time_s"] = wall_time_s;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["all_passed"] = all_passed();
  return j.dump(2) + "\n";
}

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  io::write_text(out_dir / (report.experiment + ".csv"), report.csv());
  io::write_text(out_dir / (report.experiment + ".md"), report.markdown());
  io::write_text(out_dir / (report.experiment + ".json"), report.metadata_json());
}

TensorRep population_cm(const AnyGenerator& gen, const EstimatorConfig& est, int m,
                        std::int64_t oracle_reps, std::uint64_t seed) {
  const GeneratorDescriptor& base = base_of(gen);
  const KernelSpec spec(m, theta_of(est, base.space), est.kernel);
  const ProjectionTerm phi0{1.0, {}};
  if (est.kernel == KernelKind::Identity) {
    const Moments mom = std::holds_alternative<DependentGeneratorDescriptor>(gen)
                            ? marginal_moments(std::get<DependentGeneratorDescriptor>(gen))
                            : exact_moments(base);
    return TensorRep(base.space, MomentProjection(mom).combine(spec, {&phi0, 1}).value);
  }
  if (std::holds_alternative<DependentGeneratorDescriptor>(gen)) {
    throw UnsupportedOperation("sign kernel with a dependent generator has no population oracle");
  }
  if (std::holds_alternative<FiniteSupport>(base.kind)) {
    return TensorRep(base.space, ExactProjection(base).combine(spec, {&phi0, 1}).value);
  }
  return population_cm_oracle(base, m, oracle_reps, seed, est.theta).value;
}

std::vector<std::vector<Eigen::MatrixXd>> replicate_estimates(const AnyGenerator& gen, int n,
                                                              const std::vector<int>& ms,
                                                              const EstimatorConfig& est,
                                                              std::int64_t L, std::uint64_t seed,
                                                              std::uint64_t key) {
  std::vector<std::vector<Eigen::MatrixXd>> out(ms.size(), std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(L)));
  par::for_each_index(L, [&](std::int64_t l) {
    const std::uint64_t s = derive_seed(seed, {key, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(l)});
    const Sample sample = std::holds_alternative<GeneratorDescriptor>(gen)
                              ? draw_iid(std::get<GeneratorDescriptor>(gen), n, s)
                              : draw_dependent(std::get<DependentGeneratorDescriptor>(gen), n, s);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      out[i][static_cast<std::size_t>(l)] = estimate(sample, with_m(est, ms[i]), par::Exec::Serial).grid();
    }
  });
  return out;
}

std::vector<int> argmin_m(const Eigen::MatrixXd& grid, const std::vector<int>& m_grid) {
  std::vector<int> out;
  for (Eigen::Index j = 0; j < grid.cols(); ++j) {
    Eigen::Index best = 0;
    grid.col(j).minCoeff(&best);
    out.push_back(m_grid[static_cast<std::size_t>(best)]);
  }
  return out;
}

Table1Grids run_table1(const McPlan& plan) {
  plan.validate();
  reject_plug_in(plan);
  Table1Grids out;
  out.m_grid = plan.m_grid;
  out.df_grid = plan.df_grid;
  out.n = plan.n_grid.front();
  out.L = plan.L;
  const auto rows = static_cast<Eigen::Index>(plan.m_grid.size());
  const auto cols = static_cast<Eigen::Index>(plan.df_grid.size());
  out.mean_diff = Eigen::MatrixXd::Zero(rows, cols);
  out.mean_sq_diff = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double df = plan.df_grid[static_cast<std::size_t>(j)];
    const AnyGenerator gen = student_t(df);
    const auto reps = replicate_estimates(gen, out.n, plan.m_grid, plan.estimator, plan.L, plan.master_seed,
                                          (kKeyTable1 << 32) | static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double cm = df / ((df - 2.0) * plan.m_grid[static_cast<std::size_t>(i)]);
      double sum = 0.0;
      double sum_sq = 0.0;
      for (const auto& g : reps[static_cast<std::size_t>(i)]) {
        const double dev = g(0, 0) - cm;
        sum += dev;
        sum_sq += dev * dev;
      }
      out.mean_diff(i, j) = sum / static_cast<double>(plan.L);
      out.mean_sq_diff(i, j) = sum_sq / static_cast<double>(plan.L);
    }
  }
  return out;
}

std::map<double, bool> table1_pattern(const Table1Grids& grids) {
  std::map<double, bool> out;
  const auto best = argmin_m(grids.mean_sq_diff, grids.m_grid);
  const double half = grids.n / 2.0;
  for (std::size_t j = 0; j < grids.df_grid.size(); ++j) {
    const double df = grids.df_grid[j];
    if (df >= 8.0) {
      out[df] = best[j] == 1;
    } else if (df <= 5.0) {
      out[df] = std::abs(best[j] - half) <= 1.0;
    }
  }
  return out;
}

ExperimentReport table1(const McPlan& plan) {
  const Timer timer;
  const Table1Grids grids = run_table1(plan);
  ExperimentReport r;
  r.experiment = "table1";
  base_metadata(r, plan);
  r.metadata["generator"] = "student_t(df in df_grid)";
  r.metadata["generator_hash"] = "per-row";
  r.metadata["interpretation"] = plan.interpretation;
  r.metadata["theta"] = "0";
  const bool want_diff = plan.interpretation != "mean_sq_diff";
  const bool want_sq = plan.interpretation != "mean_diff";

  std::vector<std::string> tail{"df", "C_m"};
  if (want_diff) tail.push_back("mean_diff");
  if (want_sq) tail.push_back("mean_sq_diff");
  r.columns = with_provenance(tail);
  for (std::size_t j = 0; j < grids.df_grid.size(); ++j) {
    const double df = grids.df_grid[j];
    const std::uint64_t h = student_t(df).hash();
    for (std::size_t i = 0; i < grids.m_grid.size(); ++i) {
      const int m = grids.m_grid[i];
      auto row = provenance(plan.master_seed, grids.n, m, h);
      append(row, {fmt(df), fmt(df / ((df - 2.0) * m))});
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (want_diff) row.push_back(fmt(grids.mean_diff(ii, jj)));
      if (want_sq) row.push_back(fmt(grids.mean_sq_diff(ii, jj)));
      r.rows.push_back(std::move(row));
    }
  }

  auto grid_md = [&](const std::string& title, const Eigen::MatrixXd& g) {
    std::ostringstream md;
    md << "## " << title << " (n = " << grids.n << ", L = " << grids.L << ")\n\n|   |";
    for (double df : grids.df_grid) md << " df = " << fmt(df) << " |";
    md << "\n|---|";
    for (std::size_t j = 0; j < grids.df_grid.size(); ++j) md << "---|";
    md << "\n";
    for (std::size_t i = 0; i < grids.m_grid.size(); ++i) {
      md << "| m = " << grids.m_grid[i] << " |";
      for (std::size_t j = 0; j < grids.df_grid.size(); ++j) {
        md << " " << fixed2(g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << " |";
      }
      md << "\n";
    }
    md << "| argmin m |";
    for (int m : argmin_m(g, grids.m_grid)) md << " " << m << " |";
    md << "\n\n";
    return md.str();
  };
  if (want_sq) r.markdown_body += grid_md("mean_sq_diff: (1/L) sum (C_{m,n,l} - C_m)^2", grids.mean_sq_diff);
  if (want_diff) r.markdown_body += grid_md("mean_diff: (1/L) sum (C_{m,n,l} - C_m)", grids.mean_diff);

  for (const auto& [df, ok] : table1_pattern(grids)) {
    const auto j = static_cast<std::size_t>(std::find(grids.df_grid.begin(), grids.df_grid.end(), df) -
                                            grids.df_grid.begin());
    const int best = argmin_m(grids.mean_sq_diff, grids.m_grid)[j];
    r.checks.push_back({"pattern df=" + fmt(df), ok,
                        "argmin m = " + std::to_string(best) +
                            (df >= 8.0 ? " (light tail: expected 1)" : " (heavy tail: expected near n/2)")});
  }
  r.wall_time_s = timer.seconds();
  return r;
}

ExperimentReport consistency_curve(const McPlan& plan) {
  const Timer timer;
  plan.validate();
  reject_plug_in(plan);
  ExperimentReport r;
  r.experiment = "consistency";
  base_metadata(r, plan);
  r.metadata["norm"] = std::string(to_string(plan.norm));
  r.columns = with_provenance({"norm", "method", "mean_error", "se_error", "loglog_slope"});

  const SpaceDescriptor& space = plan.space();
  std::vector<Eigen::MatrixXd> cms;
  for (int m : plan.m_grid) {
    cms.push_back(population_cm(plan.gen, plan.estimator, m, plan.oracle_reps,
                                derive_seed(plan.master_seed, {kKeyOracle, std::uint64_t(m)}))
                      .grid());
  }
  // [m][n]
  std::vector<std::vector<double>> means(plan.m_grid.size());
  std::vector<std::vector<double>> ses(plan.m_grid.size());
  std::vector<std::vector<std::string>> methods(plan.m_grid.size());
  for (int n : plan.n_grid) {
    const auto reps = replicate_estimates(plan.gen, n, plan.m_grid, plan.estimator, plan.L, plan.master_seed,
                                          kKeyConsistency);
    for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
      std::vector<NormResult> norms(static_cast<std::size_t>(plan.L));
      par::for_each_index(plan.L, [&](std::int64_t l) {
        norms[static_cast<std::size_t>(l)] =
            tensor_norm(TensorRep(space, reps[i][static_cast<std::size_t>(l)] - cms[i]), plan.norm);
      });
      std::vector<double> values;
      bool heuristic = false;
      for (const auto& nr : norms) {
        values.push_back(nr.value);
        heuristic = heuristic || nr.method == NormMethod::Heuristic;
      }
      const auto s = stats::summarize(values);
      means[i].push_back(s.mean);
      ses[i].push_back(std::sqrt(s.variance / static_cast<double>(plan.L)));
      methods[i].push_back(heuristic ? "heuristic" : "exact");
    }
  }

  std::vector<double> ns(plan.n_grid.begin(), plan.n_grid.end());
  for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
    const int m = plan.m_grid[i];
    const double max_err = *std::max_element(means[i].begin(), means[i].end());
    const bool vanishing = max_err < 1e-12;
    double slope = std::nan("");
    if (!vanishing && ns.size() >= 2 && std::all_of(means[i].begin(), means[i].end(), [](double v) { return v > 0; })) {
      slope = stats::log_log_slope(ns, means[i]);
    }
    for (std::size_t k = 0; k < ns.size(); ++k) {
      auto row = provenance(plan.master_seed, plan.n_grid[k], m, hash_of(plan.gen));
      append(row, {std::string(to_string(plan.norm)), methods[i][k], fmt(means[i][k]), fmt(ses[i][k]),
                   std::isnan(slope) ? "" : fmt(slope)});
      r.rows.push_back(std::move(row));
    }
    if (vanishing) {
      r.checks.push_back({"m=" + std::to_string(m) + " errors vanish", true,
                          "max mean error " + fmt(max_err) + " (degenerate law)"});
      continue;
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < ns.size(); ++k) decreasing = decreasing && means[i][k] < means[i][k - 1];
    r.checks.push_back({"m=" + std::to_string(m) + " mean error strictly decreasing", decreasing, ""});
    if (!std::isnan(slope)) {
      const bool ok = std::abs(slope - plan.expected_slope) <= plan.thresholds.slope_tol;
      r.checks.push_back({"m=" + std::to_string(m) + " log-log slope", ok,
                          "slope " + fmt(slope) + ", target " + fmt(plan.expected_slope) + " +- " +
                              fmt(plan.thresholds.slope_tol)});
    }
  }
  r.wall_time_s = timer.seconds();
  return r;
}

ExperimentReport clt_check(const McPlan& plan) {
  const Timer timer;
  plan.validate();
  reject_plug_in(plan);
  if (!std::holds_alternative<GeneratorDescriptor>(plan.gen)) {
    throw InvalidConfig("clt expects an i.i.d. generator; use dependent-clt for moving averages");
  }
  const auto& gen = std::get<GeneratorDescriptor>(plan.gen);
  const SpaceDescriptor& space = gen.space;
  ExperimentReport r;
  r.experiment = "clt";
  base_metadata(r, plan);

  std::vector<KernelSpec> specs;
  for (int m : plan.m_grid) {
    specs.emplace_back(m, theta_of(plan.estimator, space), plan.estimator.kernel);
    const auto diag = guarded_degeneracy(plan, specs.back(), gen, "clt");
    if (diag.order >= 1) {
      throw GuardRefusal("clt refused: kernel of order m = " + std::to_string(m) + " is degenerate (order " +
                         std::to_string(diag.order) + "; " + variances_text(diag) +
                         "); run the degenerate experiment instead");
    }
    r.metadata["degeneracy m=" + std::to_string(m)] = variances_text(diag);
  }

  const auto dirs = directions_of(plan);
  // oracle per (m, direction)
  std::vector<std::vector<McEstimate>> hajek(plan.m_grid.size());
  for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
    const auto projector = projector_for(specs[i], gen,
                                         derive_seed(plan.master_seed, {kKeyInnerProjection, std::uint64_t(plan.m_grid[i])}));
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      hajek[i].push_back(hajek_variance(specs[i], gen, dirs[k].u, dirs[k].v, plan.oracle_reps,
                                        derive_seed(plan.master_seed, {kKeyHajek, std::uint64_t(plan.m_grid[i]), k}),
                                        projector.get()));
    }
  }
  r.metadata["hajek_projection"] = plan.estimator.kernel == KernelKind::Identity ? "moments" : "monte_carlo";

  r.columns = with_provenance({"direction", "hajek_S", "hajek_se", "rep_mean", "rep_var", "var_rel_err",
                               "skewness", "excess_kurtosis", "ks_stat", "ks_p"});
  for (int n : plan.n_grid) {
    const auto reps = replicate_estimates(plan.gen, n, plan.m_grid, plan.estimator, plan.L, plan.master_seed, kKeyClt);
    for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
      const int m = plan.m_grid[i];
      const Eigen::MatrixXd cm = population_cm(plan.gen, plan.estimator, m, plan.oracle_reps,
                                               derive_seed(plan.master_seed, {kKeyOracle, std::uint64_t(m)}))
                                     .grid();
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const auto values = project(reps[i], cm, dirs[k], std::sqrt(static_cast<double>(n)) / m);
        const auto s = stats::summarize(values);
        const double S = hajek[i][k].value;
        const auto ks = stats::ks_test_normal(values, 0.0, S);
        const double rel = std::abs(s.variance / S - 1.0);
        auto row = provenance(plan.master_seed, n, m, gen.hash());
        append(row, {direction_label(dirs[k]), fmt(S), fmt(hajek[i][k].se), fmt(s.mean), fmt(s.variance),
                     fmt(rel), fmt(s.skewness), fmt(s.excess_kurtosis), fmt(ks.statistic), fmt(ks.p_value)});
        r.rows.push_back(std::move(row));
        const std::string tag = "n=" + std::to_string(n) + " m=" + std::to_string(m) + " dir=" + std::to_string(k);
        r.checks.push_back({tag + " KS normality", ks.p_value > plan.thresholds.ks_alpha,
                            "p = " + fmt(ks.p_value) + " vs alpha " + fmt(plan.thresholds.ks_alpha)});
        r.checks.push_back({tag + " variance vs Hajek oracle", rel <= plan.thresholds.var_tol,
                            "replicate var " + fmt(s.variance) + ", oracle " + fmt(S) + ", rel err " + fmt(rel)});
      }
    }
  }
  r.wall_time_s = timer.seconds();
  return r;
}

ExperimentReport degenerate_check(const McPlan& plan) {
  const Timer timer;
  plan.validate();
  reject_plug_in(plan);
  if (!std::holds_alternative<GeneratorDescriptor>(plan.gen)) {
    throw InvalidConfig("degenerate expects an i.i.d. generator");
  }
  if (plan.n_grid.size() < 2) throw InvalidConfig("degenerate needs at least two sample sizes");
  const auto& gen = std::get<GeneratorDescriptor>(plan.gen);
  const SpaceDescriptor& space = gen.space;
  ExperimentReport r;
  r.experiment = "degenerate";
  base_metadata(r, plan);
  r.metadata["norm"] = std::string(to_string(plan.norm));

  std::vector<int> orders;
  for (int m : plan.m_grid) {
    const KernelSpec spec(m, theta_of(plan.estimator, space), plan.estimator.kernel);
    const auto diag = guarded_degeneracy(plan, spec, gen, "degenerate");
    if (diag.order == 0) {
      throw GuardRefusal("degenerate refused: kernel of order m = " + std::to_string(m) +
                         " is not degenerate (" + variances_text(diag) + "); run the clt experiment instead");
    }
    orders.push_back(diag.order);
    r.metadata["degeneracy m=" + std::to_string(m)] = variances_text(diag);
  }

  const auto dir = directions_of(plan).front();
  r.columns = with_provenance({"degeneracy_order", "rescale_exponent", "norm", "method", "mean_norm", "sd_norm",
                               "sd_slope", "ks_stat", "ks_p"});
  std::vector<int> sorted_n = plan.n_grid;
  std::sort(sorted_n.begin(), sorted_n.end());
  const int n_hi = sorted_n.back();
  const int n_lo = sorted_n[sorted_n.size() - 2];

  // [m][n index]
  std::vector<std::vector<double>> sds(plan.m_grid.size());
  std::vector<std::vector<double>> mean_norms(plan.m_grid.size());
  std::vector<std::vector<std::string>> methods(plan.m_grid.size());
  std::vector<std::vector<double>> scaled_lo(plan.m_grid.size());
  std::vector<std::vector<double>> scaled_hi(plan.m_grid.size());
  std::vector<Eigen::MatrixXd> cms;
  for (int m : plan.m_grid) {
    cms.push_back(population_cm(plan.gen, plan.estimator, m, plan.oracle_reps,
                                derive_seed(plan.master_seed, {kKeyOracle, std::uint64_t(m)}))
                      .grid());
  }
  for (int n : plan.n_grid) {
    const auto reps = replicate_estimates(plan.gen, n, plan.m_grid, plan.estimator, plan.L, plan.master_seed,
                                          kKeyDegenerate);
    for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
      std::vector<NormResult> norms(static_cast<std::size_t>(plan.L));
      par::for_each_index(plan.L, [&](std::int64_t l) {
        norms[static_cast<std::size_t>(l)] =
            tensor_norm(TensorRep(space, reps[i][static_cast<std::size_t>(l)] - cms[i]), plan.norm);
      });
      std::vector<double> values;
      bool heuristic = false;
      for (const auto& nr : norms) {
        values.push_back(nr.value);
        heuristic = heuristic || nr.method == NormMethod::Heuristic;
      }
      const auto s = stats::summarize(values);
      sds[i].push_back(std::sqrt(s.variance));
      mean_norms[i].push_back(s.mean);
      methods[i].push_back(heuristic ? "heuristic" : "exact");
      const double exponent = (orders[i] + 1) / 2.0;
      if (n == n_lo) scaled_lo[i] = project(reps[i], cms[i], dir, std::pow(static_cast<double>(n), exponent));
      if (n == n_hi) scaled_hi[i] = project(reps[i], cms[i], dir, std::pow(static_cast<double>(n), exponent));
    }
  }

  const std::vector<double> ns(plan.n_grid.begin(), plan.n_grid.end());
  for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
    const int m = plan.m_grid[i];
    const double exponent = (orders[i] + 1) / 2.0;
    // A point mass gives C_{m,n} = C_m exactly; there is no rate to fit.
    const bool vanishing = *std::max_element(sds[i].begin(), sds[i].end()) < 1e-12;
    const double slope = vanishing ? std::nan("") : stats::log_log_slope(ns, sds[i]);
    const auto ks = stats::ks_two_sample(scaled_lo[i], scaled_hi[i]);
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const bool last = plan.n_grid[k] == n_hi;
      auto row = provenance(plan.master_seed, plan.n_grid[k], m, gen.hash());
      append(row, {std::to_string(orders[i]), fmt(exponent), std::string(to_string(plan.norm)), methods[i][k],
                   fmt(mean_norms[i][k]), fmt(sds[i][k]), vanishing ? "" : fmt(slope), last ? fmt(ks.statistic) : "",
                   last ? fmt(ks.p_value) : ""});
      r.rows.push_back(std::move(row));
    }
    const std::string tag = "m=" + std::to_string(m);
    if (vanishing) {
      r.checks.push_back({tag + " errors vanish", true, "sd is 0 at every n (point mass)"});
      continue;
    }
    r.checks.push_back({tag + " sd slope", std::abs(slope + exponent) <= plan.thresholds.degenerate_slope_tol,
                        "slope " + fmt(slope) + ", target " + fmt(-exponent) + " +- " +
                            fmt(plan.thresholds.degenerate_slope_tol)});
    r.checks.push_back({tag + " rescaled two-sample KS (n=" + std::to_string(n_lo) + " vs " + std::to_string(n_hi) + ")",
                        ks.p_value > plan.thresholds.ks_alpha,
                        "D = " + fmt(ks.statistic) + ", p = " + fmt(ks.p_value)});
  }
  r.wall_time_s = timer.seconds();
  return r;
}

ExperimentReport dependent_clt_check(const McPlan& plan) {
  const Timer timer;
  plan.validate();
  reject_plug_in(plan);
  const DependentGeneratorDescriptor dep =
      std::holds_alternative<DependentGeneratorDescriptor>(plan.gen)
          ? std::get<DependentGeneratorDescriptor>(plan.gen)
          : DependentGeneratorDescriptor{std::get<GeneratorDescriptor>(plan.gen), {1.0}};
  const SpaceDescriptor& space = dep.base.space;
  if (!space.is_hilbert()) {
    throw UnsupportedOperation("dependent-clt needs an L2 space (Hilbert tensor inner product)");
  }
  if (plan.estimator.kernel != KernelKind::Identity) {
    throw UnsupportedOperation("dependent-clt supports the identity kernel only");
  }
  const AnyGenerator gen = dep;
  ExperimentReport r;
  r.experiment = "dependent_clt";
  base_metadata(r, plan);
  r.metadata["generator"] = dep.describe();
  r.metadata["generator_hash"] = hex(dep.hash());
  r.metadata["max_lag"] = std::to_string(plan.max_lag);

  const auto dirs = directions_of(plan);
  r.columns = with_provenance({"direction", "max_lag", "sigma_inf_sq", "sigma_se", "long_run_var", "lrv_se",
                               "rep_mean", "rep_var", "var_rel_err", "hilbert_msq", "skewness",
                               "excess_kurtosis", "ks_stat", "ks_p"});

  std::vector<McEstimate> sigmas;
  std::vector<std::vector<McEstimate>> lrvs(plan.m_grid.size());
  for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
    const int m = plan.m_grid[i];
    const KernelSpec spec(m, theta_of(plan.estimator, space));
    const std::uint64_t s = derive_seed(plan.master_seed, {kKeySigma, std::uint64_t(m)});
    const auto sig = sigma_inf_sq(spec, dep, plan.max_lag, plan.oracle_reps, s);
    if (!(sig.value > 3.0 * sig.se) || !(sig.value > 1e-12)) {
      throw GuardRefusal("dependent-clt refused: long-run variance " + fmt(sig.value) + " (se " + fmt(sig.se) +
                         ") is indistinguishable from 0 for m = " + std::to_string(m));
    }
    sigmas.push_back(sig);
    for (const auto& d : dirs) {
      lrvs[i].push_back(long_run_variance(spec, dep, d.u, d.v, plan.max_lag, plan.oracle_reps, s));
    }
  }

  for (int n : plan.n_grid) {
    const auto reps = replicate_estimates(gen, n, plan.m_grid, plan.estimator, plan.L, plan.master_seed,
                                          kKeyDependent);
    for (std::size_t i = 0; i < plan.m_grid.size(); ++i) {
      const int m = plan.m_grid[i];
      const Eigen::MatrixXd cm = population_cm(gen, plan.estimator, m, plan.oracle_reps, 0).grid();
      const double scale = std::sqrt(static_cast<double>(n)) / m;
      double msq = 0.0;
      for (const auto& g : reps[i]) msq += scale * scale * (g - cm).squaredNorm();
      msq /= static_cast<double>(plan.L);
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const auto values = project(reps[i], cm, dirs[k], scale);
        const auto s = stats::summarize(values);
        const double target = lrvs[i][k].value;
        if (!(target > 0.0)) {
          throw GuardRefusal("dependent-clt refused: directional long-run variance is not positive for direction " +
                             std::to_string(k));
        }
        const auto ks = stats::ks_test_normal(values, 0.0, target);
        const double rel = std::abs(s.variance / target - 1.0);
        auto row = provenance(plan.master_seed, n, m, dep.hash());
        append(row, {direction_label(dirs[k]), std::to_string(plan.max_lag), fmt(sigmas[i].value),
                     fmt(sigmas[i].se), fmt(target), fmt(lrvs[i][k].se), fmt(s.mean), fmt(s.variance), fmt(rel),
                     fmt(msq), fmt(s.skewness), fmt(s.excess_kurtosis), fmt(ks.statistic), fmt(ks.p_value)});
        r.rows.push_back(std::move(row));
        const std::string tag = "n=" + std::to_string(n) + " m=" + std::to_string(m) + " dir=" + std::to_string(k);
        r.checks.push_back({tag + " KS normality", ks.p_value > plan.thresholds.ks_alpha,
                            "p = " + fmt(ks.p_value)});
        r.checks.push_back({tag + " variance vs long-run series", rel <= plan.thresholds.var_tol,
                            "replicate var " + fmt(s.variance) + ", series " + fmt(target) + ", rel err " + fmt(rel)});
      }
    }
  }
  r.wall_time_s = timer.seconds();
  return r;
}

namespace {

std::uint64_t tensor_hash(const TensorRep& t) {
  std::string text = std::string(to_string(t.space().norm_kind)) + ":";
  for (Eigen::Index i = 0; i < t.grid().size(); ++i) text += fmt(t.grid().data()[i]) + ",";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void add_norm_rows(ExperimentReport& r, const TensorRep& t, std::size_t index, std::uint64_t seed) {
  HeuristicOptions opts;
  opts.seed = seed;
  NormResult eps;
  try {
    eps = injective_norm(t);
  } catch (const SizeLimitError&) {
    eps = injective_norm_heuristic(t, opts);
  }
  const NormResult pi = projective_norm(t, opts);
  const std::uint64_t h = tensor_hash(t);
  auto emit = [&](const std::string& name, const NormResult& nr) {
    auto row = provenance(seed, 0, 0, h);
    append(row, {std::to_string(index), std::string(to_string(t.space().norm_kind)), name, fmt(nr.value),
                 std::string(to_string(nr.method))});
    r.rows.push_back(std::move(row));
    r.metadata["tensor " + std::to_string(index) + " " + name + " method"] = std::string(to_string(nr.method));
  };
  emit("injective", eps);
  const std::string tag = "tensor " + std::to_string(index);
  constexpr double tol = 1e-10;
  if (t.space().is_hilbert()) {
    const NormResult hs{hilbert_norm(t), NormMethod::Exact};
    emit("hilbert", hs);
    emit("projective", pi);
    const double scale = std::max(1.0, pi.value);
    const bool ok = eps.value <= hs.value + tol * scale && hs.value <= pi.value + tol * scale;
    r.checks.push_back({tag + " ordering injective <= hilbert <= projective", ok,
                        fmt(eps.value) + " <= " + fmt(hs.value) + " <= " + fmt(pi.value)});
  } else {
    emit("projective", pi);
    const bool ok = eps.value <= pi.value + tol * std::max(1.0, pi.value);
    r.checks.push_back({tag + " ordering injective <= projective", ok, fmt(eps.value) + " <= " + fmt(pi.value)});
  }
}

ExperimentReport norm_report_impl(const std::vector<TensorRep>& tensors, std::uint64_t seed) {
  const Timer timer;
  ExperimentReport r;
  r.experiment = "norms";
  r.metadata["seed"] = std::to_string(seed);
  r.metadata["software_version"] = kVersion;
  r.columns = with_provenance({"tensor", "norm_kind", "quantity", "value", "method"});
  for (std::size_t i = 0; i < tensors.size(); ++i) add_norm_rows(r, tensors[i], i, seed);
  r.wall_time_s = timer.seconds();
  return r;
}

}  // namespace

ExperimentReport norm_report(const TensorRep& t, std::uint64_t seed) { return norm_report_impl({t}, seed); }

ExperimentReport norm_report(const McPlan& plan) {
  std::vector<TensorRep> tensors = plan.tensors;
  if (tensors.empty()) {
    const SpaceDescriptor l2(2, NormKind::L2);
    tensors.emplace_back(l2, Eigen::MatrixXd::Identity(2, 2));
    tensors.push_back(outer(Element(l2, {3.0, 4.0}), Element(l2, {1.0, 0.0})));
    tensors.push_back(TensorRep::zero(l2));
    const SpaceDescriptor l1(2, NormKind::L1);
    tensors.emplace_back(l1, (Eigen::MatrixXd(2, 2) << 1, -1, -1, 1).finished());
  }
  return norm_report_impl(tensors, plan.master_seed);
}

}  // namespace ucov
