#include "cli.hpp"

#include "expectations.hpp"

#include "hoinf/bf.hpp"
#include "hoinf/classic.hpp"
#include "hoinf/hoa.hpp"
#include "hoinf/mcmc.hpp"
#include "hoinf/moments.hpp"
#include "hoinf/reproduce.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

namespace hoinf::cli {

using nlohmann::ordered_json;

const std::string& embedded_expectations() {
  static const std::string text = generated::kExpectationsJson;
  return text;
}

namespace {

/// Thrown for bad flags or configuration; maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seven significant digits, the precision of every printed report.
std::string fmt7(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", x);
  return buf;
}

ordered_json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(fmt7(x));
}

ordered_json vec_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

ordered_json mat_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

struct RunConfig {
  std::string command;
  std::string data_flag;
  std::string data_path;
  std::string data_source;
  double df = 7.0;
  std::string prior = "flat-log-sigma";
  std::string psi = "beta";
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  std::string out;

  // curve
  std::string kind = "third-frequentist";
  std::optional<double> lo, hi;
  int steps = 101;
  // moments
  std::optional<double> delta, halfwidth;
  std::string fgrid_dump;
  // bootstrap
  bool exact = false;
  std::int64_t mc = 0;
  // mcmc
  std::string target = "conditional";
  std::string proposal = "rw-normal:0.35";
  std::int64_t N = 400000;
  std::string dump;
  std::int64_t thin = 1;
  // bf-cover
  int n1 = 2, n2 = 2;
  std::int64_t reps = 100000;
  std::vector<double> levels{90, 95, 99};
  double mu1 = 0, mu2 = 0, sigma1 = 1, sigma2 = 1;
  bool bayes_sampling = false;
  // paper-tables
  bool stochastic = false;
  std::string expectations;

  bool uses_dataset() const { return command != "bf-cover"; }
  bool stochastic_run() const {
    return (command == "bootstrap" && mc > 0) || command == "mcmc" || command == "bf-cover" ||
           (command == "paper-tables" && stochastic);
  }

  ordered_json to_json() const {
    ordered_json j;
    j["command"] = command;
    if (uses_dataset()) {
      j["data"] = data_path;
      j["data_source"] = data_source;
      j["df"] = num(df);
      j["prior"] = prior;
    }
    j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    if (command == "fit" || command == "infer" || command == "curve" || command == "moments") {
      j["psi"] = psi;
    }
    if (command == "fit" || command == "infer" || command == "bootstrap" || command == "mcmc") {
      ordered_json v = ordered_json::array();
      for (double x : values) v.push_back(num(x));
      j["values"] = v;
    }
    if (command == "curve") {
      j["kind"] = kind;
      j["lo"] = lo ? num(*lo) : ordered_json(nullptr);
      j["hi"] = hi ? num(*hi) : ordered_json(nullptr);
      j["steps"] = steps;
    }
    if (command == "moments") {
      j["delta"] = delta ? num(*delta) : ordered_json(nullptr);
      j["halfwidth"] = halfwidth ? num(*halfwidth) : ordered_json(nullptr);
    }
    if (command == "bootstrap") {
      j["exact"] = exact;
      j["mc"] = mc;
    }
    if (command == "mcmc") {
      j["target"] = target;
      j["proposal"] = proposal;
      j["N"] = N;
      j["thin"] = thin;
    }
    if (command == "bf-cover") {
      j["n1"] = n1;
      j["n2"] = n2;
      j["N"] = reps;
      ordered_json l = ordered_json::array();
      for (double x : levels) l.push_back(num(x));
      j["levels"] = l;
      j["mu1"] = num(mu1);
      j["mu2"] = num(mu2);
      j["sigma1"] = num(sigma1);
      j["sigma2"] = num(sigma2);
      j["bayes"] = bayes_sampling ? "sampling" : "exact";
    }
    if (command == "paper-tables") {
      j["stochastic"] = stochastic;
      j["expectations"] = expectations.empty() ? "embedded" : expectations;
    }
    return j;
  }

  /// Same content as `# key=value` lines for CSV headers.
  std::string csv_header() const {
    std::ostringstream s;
    const ordered_json j = to_json();
    for (const auto& [k, v] : j.items()) {
      s << "# " << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    return s.str();
  }
};

std::string resolve_data_path(const RunConfig& cfg, std::string& source) {
  if (!cfg.data_flag.empty()) {
    source = "flag";
    return cfg.data_flag;
  }
  if (const char* env = std::getenv("PAPER_DATA"); env != nullptr && *env != '\0') {
    source = "PAPER_DATA";
    return env;
  }
  source = "bundled";
  return HOINF_DEFAULT_DATA;
}

void validate(RunConfig& cfg) {
  if (cfg.uses_dataset()) {
    cfg.data_path = resolve_data_path(cfg, cfg.data_source);
    if (!std::filesystem::is_regular_file(cfg.data_path))
      throw ValidationError("dataset not found: " + cfg.data_path);
    if (!(cfg.df > 0.0) && !std::isinf(cfg.df) && cfg.df != 0.0)
      throw ValidationError("--df must be positive (0 selects normal errors)");
    make_prior(cfg.prior);
  }
  if (cfg.psi != "beta" && cfg.psi != "alpha" && cfg.psi != "tau")
    throw ValidationError("--psi must be one of beta, alpha, tau");
  if (cfg.stochastic_run() && !cfg.seed)
    throw ValidationError("--seed is required for " + cfg.command);
  for (double v : cfg.values)
    if (!std::isfinite(v)) throw ValidationError("hypothesized values must be finite");
  if (cfg.command == "infer" && cfg.values.empty())
    throw ValidationError("infer needs at least one --value");
  if (cfg.command == "curve") {
    curve_kind_from_string(cfg.kind);
    if (cfg.steps < 2) throw ValidationError("--steps must be at least 2");
    if (cfg.lo && cfg.hi && !(*cfg.lo < *cfg.hi)) throw ValidationError("--lo must be below --hi");
  }
  if (cfg.command == "moments") {
    if (cfg.delta && !(*cfg.delta > 0.0)) throw ValidationError("--delta must be positive");
    if (cfg.halfwidth && !(*cfg.halfwidth > 0.0))
      throw ValidationError("--halfwidth must be positive");
  }
  if (cfg.command == "bootstrap") {
    if (cfg.exact == (cfg.mc > 0)) throw ValidationError("bootstrap needs exactly one of --exact or --mc N");
    if (cfg.mc > 0 && cfg.mc < 1000) throw ValidationError("--mc needs N >= 1000");
  }
  if (cfg.command == "mcmc") {
    if (cfg.target != "posterior" && cfg.target != "conditional")
      throw ValidationError("--target must be posterior or conditional");
    if (cfg.N < kBatchSize || cfg.N % kBatchSize != 0)
      throw ValidationError("--N must be a positive multiple of 1000");
    if (cfg.thin < 1) throw ValidationError("--thin must be at least 1");
    parse_proposal(cfg.proposal);
  }
  if (cfg.command == "bf-cover") {
    if (cfg.n1 < 2 || cfg.n2 < 2) throw ValidationError("--n1 and --n2 must be at least 2");
    if (cfg.reps < 1) throw ValidationError("--N must be positive");
    if (cfg.levels.empty()) throw ValidationError("--levels must not be empty");
    for (double l : cfg.levels)
      if (!(l > 0.0 && l < 100.0)) throw ValidationError("levels are percentages in (0, 100)");
    if (!(cfg.sigma1 > 0.0) || !(cfg.sigma2 > 0.0))
      throw ValidationError("--sigma1 and --sigma2 must be positive");
  }
  if (cfg.command == "paper-tables" && !cfg.expectations.empty() &&
      !std::filesystem::is_regular_file(cfg.expectations))
    throw ValidationError("expectations file not found: " + cfg.expectations);
}

std::shared_ptr<const InterestSpec> interest_for(const std::string& psi) {
  if (psi == "beta") return slope_interest();
  if (psi == "alpha") return coordinate_interest(3, 0, "alpha");
  return coordinate_interest(3, 2, "tau");
}

struct Session {
  Dataset data;
  std::unique_ptr<RegressionModel> model;
  std::unique_ptr<ThirdOrder> engine;

  explicit Session(const RunConfig& cfg) : data(read_dataset_csv(cfg.data_path)) {
    data.validate();
    model = std::make_unique<RegressionModel>(data, make_law(cfg.df));
  }
  const ThirdOrder& third(const RunConfig& cfg) {
    if (!engine)
      engine = std::make_unique<ThirdOrder>(*model, interest_for(cfg.psi), make_prior(cfg.prior));
    return *engine;
  }
};

ordered_json theta_json(const Vector& theta) {
  ordered_json j;
  j["alpha"] = num(theta(0));
  j["beta"] = num(theta(1));
  j["tau"] = num(theta(2));
  j["sigma"] = num(std::exp(theta(2)));
  return j;
}

ordered_json fit_json(const RegressionModel& model, const FitResult& f) {
  ordered_json j;
  j["theta_hat"] = theta_json(f.theta_hat);
  j["loglik"] = num(f.loglik);
  j["info"] = mat_json(f.info);
  j["info_det"] = num(f.info_det);
  j["info_det_sigma"] = num(scale_coordinate_determinant(model, f.theta_hat, f.info_det));
  j["info_positive_definite"] = f.info_positive_definite;
  j["gradient_norm"] = num(f.gradient_norm);
  j["iterations"] = f.iterations;
  if (f.constrained) {
    const ConstrainedRecord& c = *f.constrained;
    j["psi"] = num(c.psi);
    j["nuisance_info"] = mat_json(c.nuisance_info);
    j["nuisance_info_det"] = num(c.nuisance_info_det);
    j["nuisance_info_det_sigma"] =
        num(scale_coordinate_determinant(model, f.theta_hat, c.nuisance_info_det));
  }
  return j;
}

ordered_json summary_json(const InferenceSummary& s) {
  ordered_json j;
  j["psi"] = num(s.psi);
  j["r"] = num(s.r);
  j["q"] = num(s.q);
  j["r_star"] = num(s.r_star);
  j["tail"] = num(s.tail);
  j["bridged"] = s.bridged;
  return j;
}

struct Report {
  std::string text;
  int code = kSuccess;
};

Report json_report(const RunConfig& cfg, ordered_json result, int code = kSuccess) {
  ordered_json j;
  j["config"] = cfg.to_json();
  j["status"] = code == kSuccess ? "ok" : "failed";
  j["result"] = std::move(result);
  return {j.dump(2) + "\n", code};
}

Report cmd_fit(const RunConfig& cfg) {
  Session s(cfg);
  const LeastSquaresFit ls = least_squares(s.data);
  ordered_json r;
  r["least_squares"] = {{"a", num(ls.a)}, {"b", num(ls.b)}, {"s", num(ls.s)}};
  const FitResult full = fit_full(*s.model);
  r["full"] = fit_json(*s.model, full);
  ordered_json cons = ordered_json::array();
  const auto interest = interest_for(cfg.psi);
  for (double v : cfg.values) cons.push_back(fit_json(*s.model, fit_constrained(*s.model, *interest, v)));
  r["constrained"] = cons;
  return json_report(cfg, r);
}

Report cmd_infer(const RunConfig& cfg) {
  Session s(cfg);
  const ThirdOrder& eng = s.third(cfg);
  ordered_json r;
  r["psi_hat"] = num(eng.psi_hat());
  r["standard_error"] = num(eng.standard_error());
  ordered_json rows = ordered_json::array();
  for (double v : cfg.values) {
    const ThirdOrderPoint pt = eng.point(v);
    ordered_json row;
    row["psi"] = num(v);
    row["constrained"] = theta_json(pt.constrained.theta_hat);
    row["loglik_constrained"] = num(pt.constrained.loglik);
    row["r"] = num(pt.r);
    row["q_f"] = num(pt.q_f);
    row["q_b"] = num(pt.q_b);
    row["chi"] = num(pt.chi);
    row["det_phi"] = num(pt.dets.full);
    row["det_nuisance_phi"] = num(pt.dets.nuisance);
    row["slr_tail"] = num(eng.slr_tail(v));
    row["frequentist"] = summary_json(eng.summarize(pt, Flavor::Frequentist));
    row["bayesian"] = summary_json(eng.summarize(pt, Flavor::Bayesian));
    rows.push_back(row);
  }
  r["points"] = rows;
  return json_report(cfg, r);
}

Report cmd_curve(const RunConfig& cfg) {
  Session s(cfg);
  const ThirdOrder& eng = s.third(cfg);
  const double lo = cfg.lo.value_or(eng.psi_hat() - 4.0 * eng.standard_error());
  const double hi = cfg.hi.value_or(eng.psi_hat() + 4.0 * eng.standard_error());
  const CurveTable t = curve(eng, curve_kind_from_string(cfg.kind), lo, hi, cfg.steps);
  std::ostringstream o;
  o << cfg.csv_header() << "psi,tail\n";
  for (Eigen::Index i = 0; i < t.grid.size(); ++i) o << fmt7(t.grid(i)) << ',' << fmt7(t.values(i)) << '\n';
  const bool any_failed = std::find(t.failed.begin(), t.failed.end(), true) != t.failed.end();
  return {o.str(), any_failed ? kNumericalFailure : kSuccess};
}

ordered_json moments_json(const MomentSummary& m) {
  return {{"mean", num(m.mean)}, {"variance", num(m.variance)}, {"sd", num(m.sd)}};
}

Report cmd_moments(const RunConfig& cfg) {
  Session s(cfg);
  const ThirdOrder& eng = s.third(cfg);
  FGridDefaults g = default_fgrid_settings(eng);
  if (cfg.delta) g.delta = *cfg.delta;
  if (cfg.halfwidth) g.halfwidth = *cfg.halfwidth;
  const FGrid grid = build_fgrid(eng, g.psi0, g.delta, g.halfwidth);
  const DensityTable lap = laplace_marginal(eng, default_laplace_grid(eng));
  ordered_json r;
  r["grid"] = {{"psi0", num(g.psi0)}, {"delta", num(g.delta)}, {"halfwidth", num(g.halfwidth)},
               {"points", grid.F.size()}};
  r["I"] = moments_json(moments_from_F(grid));
  r["II"] = moments_json(moments_from_density(grid));
  r["III"] = moments_json(moments_from_laplace(lap));
  r["laplace_edge_mass"] = num(lap.edge_mass);
  if (!cfg.fgrid_dump.empty()) {
    std::ostringstream o;
    o << cfg.csv_header() << "psi,F\n";
    for (int k = -grid.half; k <= grid.half; ++k) o << fmt7(grid.psi_at(k)) << ',' << fmt7(grid.at(k)) << '\n';
    std::ofstream f(cfg.fgrid_dump);
    if (!f) throw ValidationError("cannot write " + cfg.fgrid_dump);
    f << o.str();
  }
  return json_report(cfg, r);
}

Report cmd_bootstrap(const RunConfig& cfg) {
  Session s(cfg);
  const LeastSquaresFit ls = least_squares(s.data);
  std::vector<double> values = cfg.values;
  if (values.empty()) values = {1.0, 1.5, 2.0};
  ordered_json rows = ordered_json::array();
  for (double v : values) {
    const TReport t = t_report(ls, s.data, v);
    ordered_json row;
    row["beta0"] = num(v);
    row["t"] = num(t.t);
    row["p_normal"] = num(t.p_normal);
    row["p_student"] = num(t.p_student);
    row["df_student"] = t.df_student;
    if (cfg.exact) {
      const BootstrapExact e = bootstrap_exact(ls, s.data, v);
      row["p_exact"] = num(e.mid_p);
      row["below"] = e.below;
      row["ties"] = e.ties;
      row["count"] = e.count;
      row["degenerate"] = e.degenerate;
    } else {
      const BootstrapMC m = bootstrap_mc(ls, s.data, v, cfg.mc, *cfg.seed);
      row["p_bootstrap"] = num(m.p);
      row["sim_sd"] = num(m.sim_sd);
      row["samples"] = m.samples;
    }
    rows.push_back(row);
  }
  return json_report(cfg, {{"rows", rows}});
}

ordered_json chain_json(const ChainSummary& c) {
  ordered_json j;
  j["estimate"] = num(c.estimate);
  j["sim_sd"] = num(c.sim_sd);
  j["acceptance_rate"] = num(c.acceptance_rate);
  j["N"] = c.N;
  j["batches"] = c.batches;
  j["seed"] = c.seed;
  return j;
}

/// Chain on the chosen target with one tail statistic per hypothesized value;
/// the posterior target also tracks the slope's first two moments.
struct ChainRun {
  ChainSummary summary;
  std::vector<double> tail_values;
  double mean = 0, variance = 0, mean_sd = 0, variance_sd = 0;
};

ChainRun run_regression_chain(const Session& s, const std::string& target_name,
                              const std::string& prior, const ProposalSpec& spec,
                              std::vector<double> values, std::int64_t N, std::uint64_t seed,
                              const ChainOptions& options = {}) {
  if (values.empty()) values = {1.0};
  const bool posterior = target_name == "posterior";
  const LeastSquaresFit ls = least_squares(s.data);
  const LogTarget target = posterior ? posterior_target(*s.model, make_prior(prior))
                                     : conditional_target(s.data, s.model->law_ptr(), ls);
  std::vector<Statistic> stats;
  for (double v : values) {
    if (posterior) {
      stats.emplace_back([v](const Vector& th) { return th(1) > v ? 1.0 : 0.0; });
    } else {
      const double cut = tail_cutoff(v, s.data);
      stats.emplace_back([cut](const Vector& x) { return x(1) / std::exp(x(2)) <= cut ? 1.0 : 0.0; });
    }
  }
  if (posterior) {
    stats.emplace_back([](const Vector& th) { return th(1); });
    stats.emplace_back([](const Vector& th) { return th(1) * th(1); });
  }
  ChainRun run;
  run.summary = run_chain(target, spec, N, seed, stats, options);
  for (std::size_t i = 0; i < values.size(); ++i) run.tail_values.push_back(run.summary.statistics[i].estimate);
  if (posterior) {
    const StatisticSummary& m1 = run.summary.statistics[values.size()];
    const StatisticSummary& m2 = run.summary.statistics[values.size() + 1];
    run.mean = m1.estimate;
    run.mean_sd = m1.sim_sd;
    run.variance = m2.estimate - m1.estimate * m1.estimate;
    std::vector<double> bv(m1.batch_means.size());
    for (std::size_t b = 0; b < bv.size(); ++b)
      bv[b] = m2.batch_means[b] - m1.batch_means[b] * m1.batch_means[b];
    run.variance_sd = batch_sd(bv);
  }
  return run;
}

Report cmd_mcmc(const RunConfig& cfg) {
  Session s(cfg);
  const ProposalSpec spec = parse_proposal(cfg.proposal);
  std::vector<double> values = cfg.values;
  if (values.empty()) values = {1.0};

  std::ostringstream dump;
  ChainOptions options;
  if (!cfg.dump.empty()) {
    dump << cfg.csv_header();
    dump << (cfg.target == "posterior" ? "iteration,alpha,beta,tau\n" : "iteration,a,b,u\n");
    options.thin = cfg.thin;
    options.sink = [&dump](std::int64_t it, const Vector& x) {
      dump << it;
      for (Eigen::Index i = 0; i < x.size(); ++i) dump << ',' << fmt7(x(i));
      dump << '\n';
    };
  }
  const ChainRun run =
      run_regression_chain(s, cfg.target, cfg.prior, spec, values, cfg.N, *cfg.seed, options);
  ordered_json r = chain_json(run.summary);
  r["proposal"] = spec.describe();
  ordered_json tails = ordered_json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double cut = cfg.target == "conditional" ? tail_cutoff(values[i], s.data) : values[i];
    tails.push_back({{"value", num(values[i])},
                     {cfg.target == "conditional" ? "cutoff" : "threshold", num(cut)},
                     {"estimate", num(run.summary.statistics[i].estimate)},
                     {"sim_sd", num(run.summary.statistics[i].sim_sd)}});
  }
  r["tails"] = tails;
  if (cfg.target == "posterior") {
    r["beta_mean"] = {{"estimate", num(run.mean)}, {"sim_sd", num(run.mean_sd)}};
    r["beta_variance"] = {{"estimate", num(run.variance)}, {"sim_sd", num(run.variance_sd)}};
  }
  if (!cfg.dump.empty()) {
    std::ofstream f(cfg.dump);
    if (!f) throw ValidationError("cannot write " + cfg.dump);
    f << dump.str();
  }
  return json_report(cfg, r);
}

Report cmd_bf_cover(const RunConfig& cfg) {
  CoverageOptions opts;
  opts.mu1 = cfg.mu1;
  opts.mu2 = cfg.mu2;
  opts.sigma1 = cfg.sigma1;
  opts.sigma2 = cfg.sigma2;
  opts.bayes_exact = !cfg.bayes_sampling;
  std::vector<double> levels;
  for (double l : cfg.levels) levels.push_back(l / 100.0);
  const CoverageTable t = coverage_study(cfg.n1, cfg.n2, levels, cfg.reps, *cfg.seed, opts);
  std::ostringstream o;
  o << cfg.csv_header();
  o << "# failures=" << t.failures << "\n# valid=" << (t.valid ? "true" : "false") << '\n';
  o << "method,level,left_pct,right_pct,left_count,right_count,left_2sd,right_2sd\n";
  for (const CoverageCell& c : t.cells) {
    o << to_string(c.method) << ',' << fmt7(100.0 * c.level) << ',' << fmt7(c.left_pct) << ','
      << fmt7(c.right_pct) << ',' << c.left << ',' << c.right << ',' << fmt7(c.left_limit) << ','
      << fmt7(c.right_limit) << '\n';
  }
  return {o.str(), t.valid ? kSuccess : kNumericalFailure};
}

bool within(double actual, double expected, double tol, const std::string& mode) {
  if (!std::isfinite(actual)) return false;
  const double diff = std::abs(actual - expected);
  return mode == "rel" ? diff <= tol * std::abs(expected) : diff <= tol;
}

Report cmd_paper_tables(const RunConfig& cfg) {
  ordered_json expect;
  if (cfg.expectations.empty()) {
    expect = ordered_json::parse(embedded_expectations());
  } else {
    std::ifstream f(cfg.expectations);
    try {
      expect = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed expectations file: ") + e.what());
    }
  }
  Session s(cfg);
  ReproductionOptions ropt;
  ropt.df = cfg.df;
  ropt.prior = cfg.prior;
  const auto values = reproduce_deterministic(s.data, ropt);

  ordered_json cells = ordered_json::array();
  int passed = 0, failed = 0;
  const auto add = [&](const std::string& id, const std::string& table, double expected,
                       double actual, double tol, const std::string& mode) {
    const bool ok = within(actual, expected, tol, mode);
    (ok ? passed : failed)++;
    cells.push_back({{"id", id}, {"table", table}, {"expected", num(expected)},
                     {"actual", num(actual)}, {"tolerance", tol}, {"mode", mode}, {"pass", ok}});
  };
  for (const auto& c : expect.at("deterministic")) {
    const std::string id = c.at("id");
    const auto it = values.find(id);
    add(id, c.at("table"), c.at("expected"), it == values.end() ? NAN : it->second,
        c.at("tolerance"), c.at("mode"));
  }
  if (cfg.stochastic) {
    const LeastSquaresFit ls = least_squares(s.data);
    for (const auto& c : expect.at("bootstrap")) {
      const double p0 = c.at("expected");
      const std::int64_t n = c.at("N");
      const BootstrapMC m = bootstrap_mc(ls, s.data, c.at("beta"), n, *cfg.seed);
      add(c.at("id"), c.at("table"), p0, m.p, 4.0 * std::sqrt(p0 * (1.0 - p0) / double(n)), "abs");
    }
    for (const auto& c : expect.at("mcmc")) {
      const std::string id = c.at("id");
      const ChainRun run =
          run_regression_chain(s, c.at("target"), cfg.prior, parse_proposal(c.at("proposal")), {1.0},
                               c.at("N"), *cfg.seed);
      add(id + ".tail@1", c.at("table"), c.at("expected"), run.summary.estimate, c.at("tolerance"), "abs");
      if (c.contains("acceptance")) {
        const double lo = c.at("acceptance")[0], hi = c.at("acceptance")[1];
        add(id + ".acceptance", c.at("table"), 0.5 * (lo + hi), run.summary.acceptance_rate,
            0.5 * (hi - lo), "abs");
      }
      if (c.contains("mean")) {
        add(id + ".mean", "4", c.at("mean"), run.mean, c.at("mean_tolerance"), "abs");
        add(id + ".variance", "4", c.at("variance"), run.variance, c.at("variance_tolerance"), "abs");
      }
    }
  }
  ordered_json r;
  r["passed"] = passed;
  r["failed"] = failed;
  r["cells"] = cells;
  return json_report(cfg, r, failed == 0 ? kSuccess : kNumericalFailure);
}

/// Module owning an exception type, for numerical-failure reports.
std::string failing_module() {
  try {
    throw;
  } catch (const ConvergenceFailure&) {
    return "estimate";
  } catch (const InconsistentFits&) {
    return "hoa";
  } catch (const DegenerateReparameterization&) {
    return "hoa";
  } catch (const NonIdentifiableInterest&) {
    return "hoa";
  } catch (const SingularQ&) {
    return "hoa";
  } catch (const GridCoverageError&) {
    return "moments";
  } catch (const MonotonicityViolation&) {
    return "moments";
  } catch (const DegenerateFit&) {
    return "classic";
  } catch (const RootBracketFailure&) {
    return "bf";
  } catch (...) {
    return "unknown";
  }
}

Report dispatch(const RunConfig& cfg) {
  if (cfg.command == "fit") return cmd_fit(cfg);
  if (cfg.command == "infer") return cmd_infer(cfg);
  if (cfg.command == "curve") return cmd_curve(cfg);
  if (cfg.command == "moments") return cmd_moments(cfg);
  if (cfg.command == "bootstrap") return cmd_bootstrap(cfg);
  if (cfg.command == "mcmc") return cmd_mcmc(cfg);
  if (cfg.command == "bf-cover") return cmd_bf_cover(cfg);
  return cmd_paper_tables(cfg);
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    out.flush();
    return;
  }
  std::ofstream f(cfg.out);
  if (!f) throw ValidationError("cannot write " + cfg.out);
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Higher-order likelihood inference for regression with heavy-tailed errors"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file");
  app.add_option("--data", cfg.data_flag, "dataset CSV with header x,y (default: $PAPER_DATA, then the bundled example)");
  app.add_option("--df", cfg.df, "Student error degrees of freedom (0 for normal errors)");
  app.add_option("--prior", cfg.prior, "flat-log-sigma, left-invariant or table:<csv>");
  app.add_option("--psi", cfg.psi, "interest parameter: beta, alpha or tau");
  app.add_option("--value", cfg.values, "hypothesized value(s) of the interest parameter")->delimiter(',');
  app.add_option("--seed", cfg.seed, "seed for stochastic commands");
  app.add_option("--out", cfg.out, "write the report here instead of stdout");

  app.add_subcommand("fit", "least squares and maximum likelihood fits (JSON)");
  app.add_subcommand("infer", "first- and third-order tails at --value (JSON)");
  auto* curve_cmd = app.add_subcommand("curve", "tail function over a grid (CSV psi,tail)");
  curve_cmd->add_option("--kind", cfg.kind, "slr, third-frequentist or third-bayesian");
  curve_cmd->add_option("--lo", cfg.lo, "grid start (default psi_hat - 4 SE)");
  curve_cmd->add_option("--hi", cfg.hi, "grid end (default psi_hat + 4 SE)");
  curve_cmd->add_option("--steps", cfg.steps, "number of grid points");
  auto* moments_cmd = app.add_subcommand("moments", "posterior mean and variance by methods I, II, III (JSON)");
  moments_cmd->add_option("--delta", cfg.delta, "F-grid step (default SE/100)");
  moments_cmd->add_option("--halfwidth", cfg.halfwidth, "F-grid halfwidth (default 40 SE)");
  moments_cmd->add_option("--fgrid-dump", cfg.fgrid_dump, "write the F grid as CSV psi,F");
  auto* boot_cmd = app.add_subcommand("bootstrap", "t-statistic p-values with exact or Monte Carlo bootstrap (JSON)");
  boot_cmd->add_flag("--exact", cfg.exact, "enumerate all n^n residual resamples");
  boot_cmd->add_option("--mc", cfg.mc, "Monte Carlo resamples");
  auto* mcmc_cmd = app.add_subcommand("mcmc", "Metropolis-Hastings tail estimate (JSON)");
  mcmc_cmd->add_option("--target", cfg.target, "posterior or conditional");
  mcmc_cmd->add_option("--proposal", cfg.proposal, "rw-normal:SD, rw-uniform:H, student:F or adaptive[:FMIN:FMAX]");
  mcmc_cmd->add_option("--N", cfg.N, "chain length (multiple of 1000)");
  mcmc_cmd->add_option("--dump", cfg.dump, "write retained points as CSV");
  mcmc_cmd->add_option("--thin", cfg.thin, "keep every thin-th retained point in the dump");
  auto* bf_cmd = app.add_subcommand("bf-cover", "Behrens-Fisher interval coverage simulation (CSV)");
  bf_cmd->add_option("--n1", cfg.n1, "first sample size");
  bf_cmd->add_option("--n2", cfg.n2, "second sample size");
  bf_cmd->add_option("--N", cfg.reps, "replications");
  bf_cmd->add_option("--levels", cfg.levels, "confidence levels in percent")->delimiter(',');
  bf_cmd->add_option("--mu1", cfg.mu1, "true mean of sample 1");
  bf_cmd->add_option("--mu2", cfg.mu2, "true mean of sample 2");
  bf_cmd->add_option("--sigma1", cfg.sigma1, "true SD of sample 1");
  bf_cmd->add_option("--sigma2", cfg.sigma2, "true SD of sample 2");
  bf_cmd->add_flag("--bayes-sampling", cfg.bayes_sampling,
                   "Bayesian intervals from posterior draws instead of the exact posterior");
  auto* paper_cmd = app.add_subcommand("paper-tables", "compare the worked example with the golden values (JSON)");
  paper_cmd->add_flag("--stochastic", cfg.stochastic, "also run the bootstrap and chain cells (needs --seed)");
  paper_cmd->add_option("--expectations", cfg.expectations, "golden-value JSON (default: embedded copy)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kValidationError;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    validate(cfg);
    const Report report = dispatch(cfg);
    emit(cfg, report.text, out);
    return report.code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const InvalidProposal& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const EnumerationLimit& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const InvalidPrior& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    const std::string module = failing_module();
    ordered_json r;
    r["module"] = module;
    r["error"] = e.what();
    err << "numerical failure in " << module << ": " << e.what() << '\n';
    try {
      emit(cfg, json_report(cfg, r, kNumericalFailure).text, out);
    } catch (const std::exception&) {
    }
    return kNumericalFailure;
  }
}

}  // namespace hoinf::cli
