#include "fracgs/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>

#include "fracgs/branch.hpp"
#include "fracgs/errors.hpp"
#include "fracgs/homotopy.hpp"
#include "fracgs/io.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/nehari.hpp"
#include "fracgs/normalized.hpp"
#include "fracgs/rescale.hpp"
#include "fracgs/spectral.hpp"
#include "fracgs/verify.hpp"

namespace fracgs::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  int resolution = 0;
  double box = 0.0;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "problem configuration (JSON)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "seed for every random stream")->capture_default_str();
  app->add_option("--resolution", c.resolution, "grid points per axis (overrides the config)");
  app->add_option("--box", c.box, "box half width L (overrides the config)");
  app->add_option("--threads", c.threads,
                  "FFT threads; above 1 results may differ from the single-threaded run in the last bits")
      ->capture_default_str();
}

class UsageError : public Error {
 public:
  using Error::Error;
};

ProblemSpec load_problem(const Common& c) {
  if (c.config.empty()) throw UsageError("--config is required");
  ProblemSpec p = load_config(c.config);
  if (c.resolution > 0) p.grid.points = c.resolution;
  if (c.box > 0.0) p.grid.half_width = c.box;
  if (c.resolution != 0 || c.box != 0.0) {
    auto v = p.violations();
    if (!v.empty()) throw ConfigError(v);
  }
  return p;
}

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':', 1);
  if (colon == std::string::npos) throw UsageError("lambda range must look like A:B (got '" + s + "')");
  try {
    std::size_t n1 = 0, n2 = 0;
    const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
    const double x = std::stod(a, &n1), y = std::stod(b, &n2);
    if (n1 != a.size() || n2 != b.size()) throw std::invalid_argument("trailing characters");
    return {x, y};
  } catch (const std::exception&) {
    throw UsageError("lambda range must look like A:B (got '" + s + "')");
  }
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out);
  fs::create_directories(out);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

SolveConfig solve_config(const Common& c) {
  SolveConfig cfg;
  cfg.seed = c.seed;
  return cfg;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Branch settings stored next to branch.csv.
struct BranchMeta {
  bool box_scaling = false;
  double box_ref_lambda = -1.0;
  std::optional<ProblemSpec> problem;
};

// --branch takes branch.csv or the directory holding it.
fs::path branch_csv_path(const fs::path& p) { return fs::is_directory(p) ? p / "branch.csv" : p; }

BranchMeta read_branch_meta(const fs::path& given) {
  const fs::path csv = branch_csv_path(given);
  BranchMeta m;
  const fs::path meta = csv.parent_path() / "branch.json";
  if (!fs::exists(meta)) return m;
  const json j = read_json(meta);
  m.box_scaling = j.value("box_scaling", false);
  m.box_ref_lambda = j.value("box_ref_lambda", -1.0);
  if (j.contains("problem")) m.problem = problem_from_json(j["problem"]);
  return m;
}

/// Rows of branch.csv; states are attached when every checkpoint loads.
BranchRecord load_branch(const fs::path& given, bool want_states, bool& have_states) {
  const fs::path csv = branch_csv_path(given);
  BranchRecord rec;
  rec.points = read_branch_csv(csv);
  have_states = want_states && !rec.points.empty();
  if (!want_states) return rec;
  for (auto& p : rec.points) {
    const fs::path cp = csv.parent_path() / p.checkpoint_id;
    if (p.checkpoint_id.empty() || !fs::exists(cp)) {
      have_states = false;
      continue;
    }
    p.state = load_checkpoint(cp);
    p.half_width = p.state->grid().half_width;
  }
  if (!have_states)
    for (auto& p : rec.points) p.state.reset();
  return rec;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  double lambda = 0.0;
};

int cmd_solve(const Common& c, const SolveArgs& a) {
  const ProblemSpec p = load_problem(c);
  const fs::path out = prepare_out(c);
  const SolveReport r = ground_state(p, a.lambda, solve_config(c));
  save_checkpoint(out / "solve.gsbf", r.state);
  json j;
  j["problem"] = problem_to_json(p);
  j["problem_hash"] = p.hash_hex();
  j["seed"] = c.seed;
  j["solve"] = to_json(r);
  j["pohozaev_residual"] = pohozaev_residual(p, a.lambda, r.state);
  j["boundary_mass_fraction"] = boundary_mass_fraction(r.state);
  j["hypotheses"] = to_json(validate_exponents(p));
  j["checkpoint"] = "solve.gsbf";
  write_json(out / "solve.json", j);
  std::cout << "lambda " << format_double(a.lambda) << "  Q " << format_double(r.functionals.Q) << "  Phi "
            << format_double(r.functionals.Phi) << "  residual " << r.residual << (r.converged ? "" : "  (not converged)")
            << '\n';
  return r.converged ? ok : solver_failure;
}

// ---------------------------------------------------------------- continue

struct ContinueArgs {
  std::string range;
  int points = 0;
  std::string spacing = "geometric";
  bool box_scaling = false;
  double box_ref = -1.0;
  int morse_every = 1;
  double step_initial = 0.05;
  double step_max = 0.5;
  double max_rel_step = 0.15;
};

StepControl step_control(const Common& c, const ContinueArgs& a, double lo, double hi) {
  StepControl sc;
  sc.box_scaling = a.box_scaling;
  sc.box_ref_lambda = a.box_ref;
  sc.morse_every = a.morse_every;
  sc.step_initial = a.step_initial;
  sc.step_max = a.step_max;
  sc.max_rel_step = a.max_rel_step;
  sc.corrector = solve_config(c);
  if (a.points > 0) {
    if (a.points < 2) throw UsageError("--points must be at least 2");
    const bool geometric = a.spacing == "geometric";
    if (geometric && !(lo * hi > 0.0)) throw UsageError("geometric spacing needs a range that does not contain 0");
    sc.targets = lambda_nodes(lo, hi, a.points, geometric);
  }
  return sc;
}

int cmd_continue(const Common& c, const ContinueArgs& a) {
  const ProblemSpec p = load_problem(c);
  const auto [lo, hi] = parse_range(a.range);
  StepControl sc = step_control(c, a, lo, hi);
  sc.keep_states = false;
  const fs::path out = prepare_out(c);
  fs::create_directories(out / "checkpoints");
  BranchCsvWriter writer(out / "branch.csv");
  int index = 0;
  sc.on_point = [&](BranchPoint& pt, const Field& u) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoints/pt_%04d.gsbf", index++);
    pt.checkpoint_id = name;
    save_checkpoint(out / name, u);
    writer.write(pt);
  };

  json meta;
  meta["problem"] = problem_to_json(p);
  meta["problem_hash"] = p.hash_hex();
  meta["seed"] = c.seed;
  meta["lambda_range"] = {lo, hi};
  meta["box_scaling"] = sc.box_scaling;
  meta["box_ref_lambda"] = sc.box_ref_lambda;
  meta["base_half_width"] = p.grid.half_width;
  meta["targets"] = sc.targets;

  const SolveReport start = ground_state(p.with_grid(grid_at(p, lo, sc)), lo, sc.corrector);
  if (!start.converged) {
    meta["termination"] = to_string(Termination::event_solver_failure);
    meta["message"] = "no converged ground state at the first lambda";
    meta["points"] = 0;
    write_json(out / "branch.json", meta);
    std::cerr << "continue: no converged ground state at lambda " << lo << '\n';
    return solver_failure;
  }
  const BranchRecord rec = continue_branch(p, start, {lo, hi}, sc);

  meta["termination"] = to_string(rec.termination);
  meta["message"] = rec.message;
  meta["warnings"] = rec.warnings;
  meta["points"] = rec.points.size();
  json widths = json::array();
  for (const auto& pt : rec.points) widths.push_back(pt.half_width);
  meta["half_widths"] = widths;
  double worst = 0.0;
  for (const auto& row : mass_curve(rec))
    if (row.identity_rel_error) worst = std::max(worst, *row.identity_rel_error);
  meta["identity_worst_rel_error"] = worst;
  write_json(out / "branch.json", meta);
  std::cout << rec.points.size() << " points, termination " << to_string(rec.termination)
            << (rec.message.empty() ? "" : " (" + rec.message + ")") << '\n';
  return rec.termination == Termination::event_solver_failure ? solver_failure : ok;
}

// ---------------------------------------------------------------- normalized

struct NormalizedArgs {
  double rho = 0.0;
  std::string branch;
  std::string range;
  int points = 40;
  bool box_scaling = false;
  bool no_refine = false;
};

int cmd_normalized(const Common& c, const NormalizedArgs& a) {
  if (!(a.rho > 0.0)) throw UsageError("--rho must be positive");
  ProblemSpec p = load_problem(c);
  const fs::path out = prepare_out(c);
  BranchRecord rec;
  StepControl sc;
  sc.corrector = solve_config(c);
  bool have_states = false;
  if (!a.branch.empty()) {
    const BranchMeta meta = read_branch_meta(a.branch);
    if (meta.problem) p = p.with_grid(meta.problem->grid);
    sc.box_scaling = meta.box_scaling;
    sc.box_ref_lambda = meta.box_ref_lambda;
    rec = load_branch(a.branch, !a.no_refine, have_states);
  } else {
    if (a.range.empty()) throw UsageError("normalized needs --branch or --lambda-range");
    ContinueArgs ca;
    ca.range = a.range;
    ca.points = a.points;
    ca.box_scaling = a.box_scaling;
    ca.morse_every = 0;
    const auto [lo, hi] = parse_range(a.range);
    sc = step_control(c, ca, lo, hi);
    const SolveReport start = ground_state(p.with_grid(grid_at(p, lo, sc)), lo, sc.corrector);
    if (!start.converged) return solver_failure;
    rec = continue_branch(p, start, {lo, hi}, sc);
    have_states = true;
  }
  const NormalizedResult r = solve_normalized(p, a.rho, rec, have_states && !a.no_refine, sc);
  json sol = json::array();
  for (const auto& s : r.solutions)
    sol.push_back({{"lambda", s.lambda},
                   {"Q", s.point.Q},
                   {"Phi", s.point.Phi},
                   {"dQdlambda", s.point.dQ_dlambda},
                   {"morse", s.point.morse_index},
                   {"stability", to_string(s.point.stability)},
                   {"refined", s.refined}});
  json j = {{"rho", a.rho},
            {"solutions", sol},
            {"q_range", {r.q_min, r.q_max}},
            {"message", r.message},
            {"problem_hash", p.hash_hex()},
            {"regimes", nullptr}};
  const RegimeReport reg = asymptotic_regimes(p);
  j["regimes"] = {{"limit_at_zero", to_string(reg.limit_at_zero)},
                  {"limit_at_minus_infinity", to_string(reg.limit_at_minus_infinity)},
                  {"existence_regime", reg.existence_regime},
                  {"notes", reg.notes}};
  write_json(out / "normalized.json", j);
  std::cout << r.solutions.size() << " solution(s) with Q = " << format_double(a.rho) << '\n';
  for (const auto& s : r.solutions)
    std::cout << "  lambda " << format_double(s.lambda) << "  " << to_string(s.point.stability) << '\n';
  return ok;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
  double lambda = 0.0;
  std::string state;
  int count = 3;
  std::string sector = "both";
  std::string variant = "plus";
  double kernel_tol = -1.0;
};

int cmd_spectrum(const Common& c, const SpectrumArgs& a) {
  ProblemSpec p = load_problem(c);
  const fs::path out = prepare_out(c);
  Field u;
  if (!a.state.empty()) {
    u = load_checkpoint(a.state);
    p = p.with_grid(u.grid());
  } else {
    const SolveReport r = ground_state(p, a.lambda, solve_config(c));
    if (!r.converged) return solver_failure;
    u = r.state;
  }
  const Variant var = a.variant == "minus" ? Variant::minus : Variant::plus;
  const LinearizedOperator lop(p, a.lambda, u, var);
  EigenOptions eo;
  eo.seed = c.seed;
  json j;
  j["lambda"] = a.lambda;
  j["variant"] = a.variant;
  j["state_residual"] = lop.state_residual();
  j["sectors"] = json::array();
  for (Sector s : {Sector::even, Sector::full}) {
    if (a.sector != "both" && a.sector != to_string(s)) continue;
    j["sectors"].push_back(to_json(smallest_eigenpairs(lop, a.count, s, a.kernel_tol, eo)));
  }
  if (var == Variant::plus) {
    const MorseVerdict mv = morse_and_kernel(lop, a.kernel_tol, a.count);
    j["morse"] = {{"morse_index", mv.morse_index},
                  {"nondegenerate", mv.nondegenerate},
                  {"marginal", mv.marginal},
                  {"min_abs_eig_even", mv.min_abs_eig_even},
                  {"tol", mv.tol},
                  {"eigenvalues", mv.eigenvalues}};
    if (a.sector != "even") {
      const TranslationModes tm = translation_modes(lop, a.kernel_tol);
      j["translation_modes"] = {{"eigenvalues", tm.eigenvalues},
                                {"near_zero", tm.near_zero},
                                {"cosine", tm.cosine},
                                {"cosine_nearest", tm.cosine_nearest},
                                {"tol", tm.tol},
                                {"ok", tm.ok}};
    }
  }
  write_json(out / "spectrum.json", j);
  if (j.contains("morse")) std::cout << "Morse index " << j["morse"]["morse_index"] << '\n';
  return ok;
}

// ---------------------------------------------------------------- homotopy

struct HomotopyArgs {
  double lambda = 0.0;
  std::string kind = "weight";
  int nodes = 11;
  int probe_starts = 0;
  int deflation_depth = 1;
  bool no_morse = false;
};

json probe_json(const ProbeResult& r) {
  json phis = json::array();
  for (const auto& d : r.distinct) phis.push_back(d.functionals.Phi);
  return {{"distinct", r.distinct.size()},
          {"ground_states", r.ground_states.size()},
          {"converged_starts", r.converged_starts},
          {"failed_starts", r.failed_starts},
          {"deflation_attempts", r.deflation_attempts},
          {"deflation_found", r.deflation_found},
          {"Phi", phis}};
}

int cmd_homotopy(const Common& c, const HomotopyArgs& a) {
  const ProblemSpec p = load_problem(c);
  const fs::path out = prepare_out(c);
  const HomotopyKind kind = a.kind == "potential" ? HomotopyKind::potential_eta : HomotopyKind::weight_zeta;
  const SolveReport start = ground_state(p, a.lambda, solve_config(c));
  if (!start.converged) return solver_failure;
  HomotopyOptions opt;
  opt.corrector = solve_config(c);
  opt.morse = !a.no_morse;
  fs::create_directories(out / "homotopy");
  int index = 0;
  opt.on_node = [&](HomotopyNode& n) {
    char name[64];
    std::snprintf(name, sizeof name, "homotopy/node_%02d.gsbf", index++);
    n.checkpoint_id = name;
    save_checkpoint(out / name, n.state);
  };
  const HomotopyPath path = homotopy_path(p, a.lambda, kind, a.nodes, start, opt);

  json nodes = json::array();
  for (const auto& n : path.nodes)
    nodes.push_back({{"parameter", n.parameter},
                     {"checkpoint", n.checkpoint_id},
                     {"morse", n.morse_index},
                     {"positive", n.positive},
                     {"phi", n.phi},
                     {"Q", n.functionals.Q},
                     {"Phi", n.functionals.Phi},
                     {"S", n.functionals.S},
                     {"residual", n.residual}});
  json j = {{"kind", to_string(kind)}, {"lambda", a.lambda}, {"nodes", nodes}, {"termination", path.termination},
            {"completed", path.completed}};
  if (kind == HomotopyKind::potential_eta) j["lambda1"] = path.lambda1;

  bool checks_ok = path.completed;
  json checks = json::object();
  if (path.completed && path.nodes.size() >= 2) {
    // phi along increasing parameter
    bool mono = true;
    if (kind == HomotopyKind::weight_zeta)
      for (std::size_t i = 1; i < path.nodes.size(); ++i)
        if (path.nodes[i].phi > path.nodes[i - 1].phi * (1.0 + 1e-3)) mono = false;
    bool morse = true;
    for (const auto& n : path.nodes)
      if (opt.morse && n.morse_index != 1) morse = false;
    const ProblemSpec end_problem = kind == HomotopyKind::weight_zeta ? weight_homotopy_problem(p, 0.0)
                                                                      : potential_homotopy_problem(p, 0.0, path.lambda1);
    const SolveReport fresh = ground_state(end_problem, a.lambda, solve_config(c));
    const double dist = relative_distance(path.nodes.back().state, fresh.state);
    const auto& first = path.nodes.front().functionals;
    bool bounded = true;
    for (const auto& n : path.nodes) {
      auto within = [](double v, double ref) { return v <= 10.0 * std::abs(ref) && v >= std::abs(ref) / 10.0; };
      if (!within(n.functionals.Q, first.Q) || !within(n.functionals.S, first.S)) bounded = false;
      if (kind == HomotopyKind::weight_zeta && !within(n.phi, path.nodes.front().phi)) bounded = false;
    }
    checks = {{"phi_monotone", mono}, {"morse_one", morse}, {"endpoint_distance", dist},
              {"endpoint_ok", dist <= 1e-3}, {"uniformly_bounded", bounded}};
    checks_ok = mono && morse && dist <= 1e-3 && bounded;
  }
  j["checks"] = checks;

  if (a.probe_starts > 0) {
    j["probe"] = probe_json(uniqueness_probe(p, a.lambda, a.probe_starts, a.deflation_depth, c.seed, solve_config(c)));
    if (kind == HomotopyKind::weight_zeta)
      j["probe_autonomous"] = probe_json(
          uniqueness_probe(weight_homotopy_problem(p, 0.0), a.lambda, a.probe_starts, a.deflation_depth, c.seed, solve_config(c)));
  }
  write_json(out / "homotopy.json", j);
  std::cout << path.nodes.size() << " nodes, termination " << path.termination << '\n';
  if (!path.completed) return solver_failure;
  return checks_ok ? ok : check_failure;
}

// ---------------------------------------------------------------- rescale

struct RescaleArgs {
  std::string branch;
  std::string frame = "both";
  double limit_box = 0.0;
  int limit_points = 0;
};

int cmd_rescale(const Common& c, const RescaleArgs& a) {
  ProblemSpec p = load_problem(c);
  if (a.branch.empty()) throw UsageError("rescale needs --branch");
  const fs::path out = prepare_out(c);
  const BranchMeta meta = read_branch_meta(a.branch);
  if (meta.problem) p = p.with_grid(meta.problem->grid);
  bool have_states = false;
  const BranchRecord rec = load_branch(a.branch, true, have_states);
  if (!have_states) throw UsageError("rescale needs the branch checkpoints next to the CSV");
  GridSpec lg = p.grid;
  if (a.limit_box > 0.0) lg.half_width = a.limit_box;
  if (a.limit_points > 0) lg.points = a.limit_points;

  std::ofstream csv(out / "rescale.csv");
  csv << "frame,lambda,l2_distance,energy_distance,status\n";
  json j = json::object();
  for (Frame f : {Frame::w, Frame::v}) {
    if (a.frame != "both" && a.frame != to_string(f)) continue;
    const double order = f == Frame::w ? p.op.min_order() : p.op.max_order();
    const double exponent = f == Frame::w ? p.nonlinearity.alpha() : p.nonlinearity.beta();
    const SolveReport lim = limit_ground_state({order, exponent, 1.0}, lg, solve_config(c));
    if (!lim.converged) return solver_failure;
    const ConvergenceReport r = convergence_report(p, rec, f, lim, order);
    json rows = json::array();
    std::optional<ConvergenceRow> end;
    for (const auto& row : r.rows) {
      csv << to_string(f) << ',' << format_double(row.lambda) << ',' << format_double(row.l2_distance) << ','
          << format_double(row.energy_distance) << ',' << (row.skipped ? "skipped" : "ok") << '\n';
      rows.push_back({{"lambda", row.lambda},
                      {"l2_distance", row.l2_distance},
                      {"energy_distance", row.energy_distance},
                      {"skipped", row.skipped},
                      {"reason", row.reason}});
      if (row.skipped) continue;
      // the usable row closest to the limit end (lambda -> 0 for w, -> -inf for v)
      if (!end || (f == Frame::w ? std::abs(row.lambda) < std::abs(end->lambda) : std::abs(row.lambda) > std::abs(end->lambda)))
        end = row;
    }
    j[to_string(f)] = {{"limit", {{"order", order}, {"exponent", exponent}, {"Q", lim.functionals.Q}}},
                       {"rows", rows},
                       {"monotone_toward_limit", r.monotone_toward_limit},
                       {"end_lambda", end ? json(end->lambda) : json(nullptr)},
                       {"end_l2_distance", end ? json(end->l2_distance) : json(nullptr)}};
  }
  write_json(out / "rescale.json", j);
  return ok;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string branch;
  std::string state;
  std::optional<double> lambda;
  std::string window;
  double pohozaev_tol = 5e-3;
  double nehari_tol = 1e-6;
  double identity_tol = 1e-2;
  double fit_tol = 0.05;
  double envelope_slack = 1e-2;
  int gn_samples = 50;
};

class Suite {
 public:
  void add(const std::string& cls, const std::string& name, bool pass, double value, double threshold,
           const std::string& message = "") {
    cases_.push_back({{"classname", cls},
                      {"name", name},
                      {"status", pass ? "pass" : "fail"},
                      {"value", value},
                      {"threshold", threshold},
                      {"message", message}});
    if (!pass) ++failures_;
  }
  void skip(const std::string& cls, const std::string& name, const std::string& message) {
    cases_.push_back({{"classname", cls}, {"name", name}, {"status", "skipped"}, {"message", message}});
    ++skipped_;
  }
  int failures() const { return failures_; }
  json to_json() const {
    return {{"name", "verify"},
            {"tests", cases_.size()},
            {"failures", failures_},
            {"skipped", skipped_},
            {"testcases", cases_}};
  }

 private:
  json cases_ = json::array();
  int failures_ = 0;
  int skipped_ = 0;
};

std::string at(double lambda) { return "lambda=" + format_double(lambda); }

void verify_branch(const ProblemSpec& base, const VerifyArgs& a, Suite& suite) {
  ProblemSpec p = base;
  const BranchMeta meta = read_branch_meta(a.branch);
  if (meta.problem) p = p.with_grid(meta.problem->grid);
  bool have_states = false;
  BranchRecord rec = load_branch(a.branch, true, have_states);
  if (rec.points.empty()) {
    suite.add("branch", "nonempty", false, 0.0, 1.0, "branch CSV has no rows");
    return;
  }
  bool mono = true;
  for (std::size_t i = 1; i < rec.points.size(); ++i) {
    const double d0 = rec.points[1].lambda - rec.points[0].lambda;
    const double d = rec.points[i].lambda - rec.points[i - 1].lambda;
    if (!(d * d0 > 0.0)) mono = false;
  }
  suite.add("branch", "lambda_strictly_monotone", mono, mono ? 1.0 : 0.0, 1.0);

  for (const auto& pt : rec.points) {
    double poh = pt.pohozaev_rel_residual;
    if (pt.state) poh = pohozaev_residual(p.with_grid(pt.state->grid()), pt.lambda, *pt.state);
    suite.add("pohozaev", at(pt.lambda), poh <= a.pohozaev_tol, poh, a.pohozaev_tol,
              pt.state ? "recomputed from checkpoint" : "from CSV");
    suite.add("nehari", at(pt.lambda), pt.nehari_rel_residual <= a.nehari_tol, pt.nehari_rel_residual, a.nehari_tol);
  }
  for (const auto& row : mass_curve(rec))
    if (row.identity_rel_error)
      suite.add("branch_identity", at(row.lambda), *row.identity_rel_error <= a.identity_tol, *row.identity_rel_error,
                a.identity_tol, "dPhi/dlambda = -Q");
  for (const auto& row : envelope_check(rec, p, a.envelope_slack))
    suite.add("envelope", at(row.lambda), row.ok, row.ratio, a.envelope_slack,
              "k=" + (row.k ? format_double(*row.k) : std::string("none")) +
                  " l=" + (row.l ? format_double(*row.l) : std::string("none")));

  const auto rep = validate_exponents(p);
  if (!rep.d_exponent) {
    suite.skip("scaling_fit", "exponent", "no predicted exponent for this family");
    return;
  }
  double lo = -std::numeric_limits<double>::infinity(), hi = 0.0;
  if (!a.window.empty()) std::tie(lo, hi) = parse_range(a.window);
  try {
    const ScalingFit f = scaling_fit(rec, p, lo, hi);
    const double dev = std::abs(f.fitted - *rep.d_exponent) / std::max(1.0, std::abs(*rep.d_exponent));
    suite.add("scaling_fit", "exponent", dev <= a.fit_tol, f.fitted, *rep.d_exponent,
              "fitted over " + std::to_string(f.points) + " points");
  } catch (const Error& e) {
    suite.skip("scaling_fit", "exponent", e.what());
  }
}

void verify_state(const ProblemSpec& base, const VerifyArgs& a, std::uint64_t seed, Suite& suite) {
  if (!a.lambda) throw UsageError("--state needs --lambda");
  const Field u = load_checkpoint(a.state);
  const ProblemSpec p = base.with_grid(u.grid());
  const double lam = *a.lambda;
  const double poh = pohozaev_residual(p, lam, u);
  suite.add("state", "pohozaev", poh <= a.pohozaev_tol, poh, a.pohozaev_tol);
  const double res = relative_residual(p, u, lam);
  suite.add("state", "gradient_residual", res <= 1e-6, res, 1e-6);
  suite.add("state", "positive", is_positive(u), u.min(), 0.0);
  if (p.op.terms.size() == 1 && p.nonlinearity.terms.size() == 1 &&
      p.nonlinearity.terms[0].weight.kind == WeightProfile::Kind::constant && p.potential.kind == PotentialSpec::Kind::none) {
    std::vector<Field> fields;
    for (int i = 0; i < a.gn_samples; ++i) fields.push_back(random_smooth_field(u.grid(), seed + static_cast<std::uint64_t>(i), false));
    for (auto& f : fields)
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::abs(f[k]);
    const GnReport gn = gn_check(fields, p.op.terms[0].order, u.grid().dim, p.nonlinearity.terms[0].exponent, u);
    const double ref = gn_quotient(u, p.op.terms[0].order, p.nonlinearity.terms[0].exponent);
    suite.add("gagliardo_nirenberg", "ground_state_is_max", gn.violations.empty(), gn.max_quotient / ref, 1.01,
              "max sampled quotient / ground-state quotient");
  } else {
    suite.skip("gagliardo_nirenberg", "ground_state_is_max", "needs a single operator term and an unweighted single power");
  }
}

int cmd_verify(const Common& c, const VerifyArgs& a) {
  const ProblemSpec p = load_problem(c);
  if (a.branch.empty() && a.state.empty()) throw UsageError("verify needs --branch and/or --state");
  const fs::path out = prepare_out(c);
  Suite suite;
  if (!a.branch.empty()) verify_branch(p, a, suite);
  if (!a.state.empty()) verify_state(p, a, c.seed, suite);
  json j = suite.to_json();
  j["problem_hash"] = p.hash_hex();
  write_json(out / "verify.json", j);
  std::cout << j["tests"] << " checks, " << suite.failures() << " failed\n";
  return suite.failures() == 0 ? ok : check_failure;
}

// ---------------------------------------------------------------- report

int cmd_report(const Common& c, const std::string& from) {
  const fs::path dir = from.empty() ? fs::path(c.out) : fs::path(from);
  if (!fs::is_directory(dir)) throw UsageError("report: '" + dir.string() + "' is not a directory");
  json j = json::object();
  if (fs::exists(dir / "solve.json")) {
    const json s = read_json(dir / "solve.json");
    j["solve"] = {{"lambda", s["solve"]["lambda"]},
                  {"Q", s["solve"]["functionals"]["Q"]},
                  {"Phi", s["solve"]["functionals"]["Phi"]},
                  {"residual", s["solve"]["residual"]},
                  {"converged", s["solve"]["converged"]},
                  {"pohozaev_residual", s["pohozaev_residual"]}};
  }
  if (fs::exists(dir / "branch.csv")) {
    bool dummy = false;
    BranchRecord rec = load_branch(dir / "branch.csv", false, dummy);
    json b = {{"points", rec.points.size()}};
    if (!rec.points.empty()) {
      std::map<std::string, int> counts;
      std::size_t imax = 0, imin = 0;
      for (std::size_t i = 0; i < rec.points.size(); ++i) {
        ++counts[to_string(rec.points[i].stability)];
        if (rec.points[i].Q > rec.points[imax].Q) imax = i;
        if (rec.points[i].Q < rec.points[imin].Q) imin = i;
      }
      double worst = 0.0;
      for (const auto& row : mass_curve(rec))
        if (row.identity_rel_error) worst = std::max(worst, *row.identity_rel_error);
      b["lambda_first"] = rec.points.front().lambda;
      b["lambda_last"] = rec.points.back().lambda;
      b["Q_max"] = rec.points[imax].Q;
      b["lambda_at_Q_max"] = rec.points[imax].lambda;
      b["Q_min"] = rec.points[imin].Q;
      b["stability_counts"] = counts;
      b["identity_worst_rel_error"] = worst;
      std::optional<ProblemSpec> p;
      if (!c.config.empty()) p = load_problem(c);
      else if (fs::exists(dir / "branch.json")) p = read_branch_meta(dir / "branch.csv").problem;
      if (p) {
        const auto rep = validate_exponents(*p);
        try {
          const ScalingFit f = scaling_fit(rec, *p, -std::numeric_limits<double>::infinity(), 0.0);
          b["scaling_fit"] = {{"fitted", f.fitted}, {"predicted", opt_json(f.predicted)}, {"points", f.points}};
        } catch (const Error&) {
        }
        b["existence_regime"] = rep.existence_regime;
      }
    }
    if (fs::exists(dir / "branch.json")) {
      const json m = read_json(dir / "branch.json");
      b["termination"] = m.value("termination", "");
      b["box_scaling"] = m.value("box_scaling", false);
    }
    j["branch"] = b;
  }
  for (const char* name : {"normalized", "spectrum", "homotopy", "rescale"}) {
    const fs::path f = dir / (std::string(name) + ".json");
    if (!fs::exists(f)) continue;
    json s = read_json(f);
    if (s.is_object()) {
      // per-row detail stays in the source artifact
      for (const char* big : {"nodes", "sectors"}) s.erase(big);
      for (auto& [k, v] : s.items())
        if (v.is_object()) v.erase("rows");
    }
    j[name] = s;
  }
  if (fs::exists(dir / "verify.json")) {
    const json v = read_json(dir / "verify.json");
    j["verify"] = {{"tests", v["tests"]}, {"failures", v["failures"]}, {"skipped", v["skipped"]}};
  }
  const fs::path out = prepare_out(c);
  write_json(out / "report.json", j);
  std::cout << "report: " << j.size() << " artifact group(s)\n";
  return ok;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Ground states of fractional nonlinear Schroedinger-type equations on periodic grids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fracgs 0.1.0");
  Common common;

  SolveArgs solve;
  auto* s_solve = app.add_subcommand("solve", "ground state at one lambda");
  add_common(s_solve, common);
  s_solve->add_option("--lambda", solve.lambda, "frequency lambda")->required();

  ContinueArgs cont;
  auto* s_cont = app.add_subcommand("continue", "trace the ground-state branch over a lambda range");
  add_common(s_cont, common);
  s_cont->add_option("--lambda-range", cont.range, "A:B, traced from A to B")->required();
  s_cont->add_option("--points", cont.points, "record only at this many target lambdas (0: every accepted step)");
  s_cont->add_option("--spacing", cont.spacing, "target spacing")
      ->check(CLI::IsMember({"geometric", "uniform"}))
      ->capture_default_str();
  s_cont->add_flag("--box-scaling", cont.box_scaling, "scale the box with the intrinsic length of lambda");
  s_cont->add_option("--box-ref", cont.box_ref, "lambda at which the box equals --box / the config box")->capture_default_str();
  s_cont->add_option("--morse-every", cont.morse_every, "Morse index every k recorded points (0: never)")->capture_default_str();
  s_cont->add_option("--step-initial", cont.step_initial)->capture_default_str();
  s_cont->add_option("--step-max", cont.step_max)->capture_default_str();
  s_cont->add_option("--max-rel-step", cont.max_rel_step, "cap on |dlambda|/|lambda|")->capture_default_str();

  NormalizedArgs norm;
  auto* s_norm = app.add_subcommand("normalized", "solutions with prescribed mass Q = rho");
  add_common(s_norm, common);
  s_norm->add_option("--rho", norm.rho)->required();
  s_norm->add_option("--branch", norm.branch, "branch.csv written by continue, or its directory");
  s_norm->add_option("--lambda-range", norm.range, "trace a branch first when no --branch is given");
  s_norm->add_option("--points", norm.points, "targets when tracing")->capture_default_str();
  s_norm->add_flag("--box-scaling", norm.box_scaling);
  s_norm->add_flag("--no-refine", norm.no_refine, "report bracket interpolants without corrector solves");

  SpectrumArgs spec;
  auto* s_spec = app.add_subcommand("spectrum", "smallest eigenvalues of the linearization");
  add_common(s_spec, common);
  s_spec->add_option("--lambda", spec.lambda)->required();
  s_spec->add_option("--state", spec.state, "checkpoint to linearize at (default: solve first)");
  s_spec->add_option("--count", spec.count)->capture_default_str();
  s_spec->add_option("--sector", spec.sector)->check(CLI::IsMember({"even", "full", "both"}))->capture_default_str();
  s_spec->add_option("--variant", spec.variant)->check(CLI::IsMember({"plus", "minus"}))->capture_default_str();
  s_spec->add_option("--kernel-tol", spec.kernel_tol, "kernel band (<= 0: default)");

  HomotopyArgs hom;
  auto* s_hom = app.add_subcommand("homotopy", "weight or potential homotopy and the uniqueness probe");
  add_common(s_hom, common);
  s_hom->add_option("--lambda", hom.lambda)->required();
  s_hom->add_option("--kind", hom.kind)->check(CLI::IsMember({"weight", "potential"}))->capture_default_str();
  s_hom->add_option("--nodes", hom.nodes)->capture_default_str();
  s_hom->add_option("--probe-starts", hom.probe_starts, "multi-start uniqueness probe (0: skip)")->capture_default_str();
  s_hom->add_option("--deflation-depth", hom.deflation_depth)->capture_default_str();
  s_hom->add_flag("--no-morse", hom.no_morse);

  RescaleArgs resc;
  auto* s_resc = app.add_subcommand("rescale", "distances to the limit problems in the rescaled frames");
  add_common(s_resc, common);
  s_resc->add_option("--branch", resc.branch)->required();
  s_resc->add_option("--frame", resc.frame)->check(CLI::IsMember({"w", "v", "both"}))->capture_default_str();
  s_resc->add_option("--limit-box", resc.limit_box, "half width of the limit-state grid");
  s_resc->add_option("--limit-points", resc.limit_points);

  VerifyArgs ver;
  auto* s_ver = app.add_subcommand("verify", "identity and law checks (junit-style JSON)");
  add_common(s_ver, common);
  s_ver->add_option("--branch", ver.branch);
  s_ver->add_option("--state", ver.state);
  s_ver->add_option("--lambda", ver.lambda, "lambda of --state");
  s_ver->add_option("--window", ver.window, "lambda window A:B for the scaling fit");
  s_ver->add_option("--pohozaev-tol", ver.pohozaev_tol)->capture_default_str();
  s_ver->add_option("--nehari-tol", ver.nehari_tol)->capture_default_str();
  s_ver->add_option("--identity-tol", ver.identity_tol)->capture_default_str();
  s_ver->add_option("--fit-tol", ver.fit_tol)->capture_default_str();
  s_ver->add_option("--envelope-slack", ver.envelope_slack)->capture_default_str();
  s_ver->add_option("--gn-samples", ver.gn_samples)->capture_default_str();

  std::string from;
  auto* s_rep = app.add_subcommand("report", "summarize stored artifacts into report.json");
  add_common(s_rep, common);
  s_rep->add_option("--from", from, "artifact directory (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (common.threads < 1) throw UsageError("--threads must be >= 1");
    if (common.threads > 1) set_fft_threads(common.threads);
    if (s_solve->parsed()) return cmd_solve(common, solve);
    if (s_cont->parsed()) return cmd_continue(common, cont);
    if (s_norm->parsed()) return cmd_normalized(common, norm);
    if (s_spec->parsed()) return cmd_spectrum(common, spec);
    if (s_hom->parsed()) return cmd_homotopy(common, hom);
    if (s_resc->parsed()) return cmd_rescale(common, resc);
    if (s_ver->parsed()) return cmd_verify(common, ver);
    if (s_rep->parsed()) return cmd_report(common, from);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return usage_error;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const InadmissibleLambda& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return solver_failure;
  }
  return usage_error;
}

}  // namespace fracgs::cli
