// Acceptance driver: one criterion per invocation, one PASS/FAIL line each.
//
//   acceptance --criterion N [--cache DIR]
//
// Branches are cached under DIR so the branch-identity criterion reuses the
// branches traced by the others.

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fracgs/branch.hpp"
#include "fracgs/homotopy.hpp"
#include "fracgs/io.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/nehari.hpp"
#include "fracgs/normalized.hpp"
#include "fracgs/rescale.hpp"
#include "fracgs/spectral.hpp"
#include "fracgs/verify.hpp"
#include "support.hpp"
#include "townes.hpp"

using namespace fracgs;
using namespace fracgs::testing;
namespace fs = std::filesystem;

namespace {

fs::path cache_root = "acceptance_cache";

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct Verdict {
  bool ok = true;
  std::vector<std::string> parts;

  void check(bool cond, const std::string& what) {
    ok = ok && cond;
    parts.push_back(what + (cond ? "" : " [x]"));
  }
  /// Informational, does not affect the verdict.
  void note(const std::string& what) { parts.push_back("(" + what + ")"); }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---------------------------------------------------------------- branches

struct BranchCase {
  std::string name;
  ProblemSpec problem;
  double a = 0.0, b = 0.0;
  StepControl control;
};

ProblemSpec with_terms(int dim, double L, int M, std::vector<OperatorTerm> op, std::vector<PowerTerm> nl) {
  ProblemSpec p;
  p.grid = {dim, L, M, false};
  p.op.terms = std::move(op);
  p.nonlinearity.terms = std::move(nl);
  return p;
}

StepControl targets(double a, double b, int n, int morse_every) {
  StepControl c;
  c.targets = lambda_nodes(a, b, n, true);
  c.morse_every = morse_every;
  return c;
}

BranchCase mass_critical() {
  return {"mass_critical", pure_power(2, 20.0, 256, 4.0), -4.0, -0.25, targets(-4.0, -0.25, 20, 5)};
}

BranchCase cubic_2d() { return {"cubic_2d", pure_power(2, 20.0, 256, 3.0), -8.0, -0.5, targets(-8.0, -0.5, 20, 5)}; }

BranchCase half_laplacian() {
  return {"half_laplacian", pure_power(2, 40.0, 1024, 2.5, 0.5), -4.0, -0.5, targets(-4.0, -0.5, 20, 5)};
}

BranchCase mixed_nonlinearity() {
  const auto one = WeightProfile::constant(1.0);
  BranchCase c{"mixed_nonlinearity", with_terms(2, 12.0, 256, {{1.0, 1.0}}, {{3.0, one}, {5.0, one}}), -30.0, -0.05,
               targets(-30.0, -0.05, 30, 10)};
  c.control.box_scaling = true;
  c.control.step_max = 50.0;
  return c;
}

// Phi ~ |lambda|^3 near 0 here, so the 3-point stencil needs a ratio below ~1.15 for 1%.
// The s = 0.5 tails decay algebraically; L0 = 16 truncates them at the 3% level.
BranchCase mixed_operator() {
  const auto one = WeightProfile::constant(1.0);
  BranchCase c{"mixed_operator", with_terms(2, 32.0, 256, {{0.5, 1.0}, {1.0, 1.0}}, {{2.5, one}, {3.0, one}}), -400.0,
               -0.01, targets(-400.0, -0.01, 80, 10)};
  c.control.box_scaling = true;
  c.control.step_max = 50.0;
  return c;
}

std::string cache_key(const BranchCase& c) {
  std::ostringstream k;
  k << c.problem.canonical() << "|" << format_double(c.a) << ":" << format_double(c.b) << "|" << c.control.box_scaling
    << "|" << c.control.morse_every << "|" << format_double(c.control.step_max);
  for (double t : c.control.targets) k << "," << format_double(t);
  return k.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Traced {
  BranchRecord record;
  double seconds = 0.0;  // tracing time, 0 when loaded from the cache
  bool cached = false;
};

/// Traces the branch, or loads it (states included) from the cache.
Traced branch(const BranchCase& c) {
  const fs::path dir = cache_root / c.name;
  const std::string key = cache_key(c);
  Traced t;
  if (fs::exists(dir / "key.txt") && slurp(dir / "key.txt") == key && fs::exists(dir / "branch.csv")) {
    t.record.points = read_branch_csv(dir / "branch.csv");
    for (auto& p : t.record.points) {
      p.state = load_checkpoint(dir / p.checkpoint_id);
      p.half_width = p.state->grid().half_width;
    }
    t.record.message = slurp(dir / "termination.txt");
    t.record.termination = t.record.message.rfind("range_end", 0) == 0 ? Termination::range_end
                                                                        : Termination::event_solver_failure;
    t.cached = true;
    return t;
  }
  fs::remove_all(dir);
  fs::create_directories(dir);
  Clock clock;
  const SolveReport start = ground_state(c.problem.with_grid(grid_at(c.problem, c.a, c.control)), c.a);
  StepControl ctl = c.control;
  int index = 0;
  ctl.on_point = [&](BranchPoint& p, const Field& u) {
    char name[32];
    std::snprintf(name, sizeof name, "pt_%04d.gsbf", index++);
    p.checkpoint_id = name;
    save_checkpoint(dir / name, u);
  };
  t.record = continue_branch(c.problem, start, {c.a, c.b}, ctl);
  t.seconds = clock.seconds();
  {
    BranchCsvWriter w(dir / "branch.csv");
    for (const auto& p : t.record.points) w.write(p);
  }
  std::ofstream(dir / "termination.txt") << to_string(t.record.termination) << " " << t.record.message;
  std::ofstream(dir / "key.txt") << key;
  return t;
}

std::string traced_note(const Traced& t) {
  return t.cached ? "branch from cache" : fmt("traced in %.0f s", t.seconds);
}

void branch_shape(Verdict& v, const BranchCase& c, const Traced& t) {
  v.check(t.record.termination == Termination::range_end, "termination " + to_string(t.record.termination));
  v.check(t.record.points.size() == c.control.targets.size(),
          std::to_string(t.record.points.size()) + "/" + std::to_string(c.control.targets.size()) + " points");
}

// ---------------------------------------------------------------- criteria

Verdict sech_oracle() {
  Verdict v;
  Clock clock;
  const ProblemSpec p = pure_power(1, 40.0, 4096, 4.0);
  const auto r = ground_state(p, -1.0);
  const double dt = clock.seconds();
  v.check(rel(r.functionals.Q, 2.0) <= 5e-3, fmt("Q %.6f", r.functionals.Q));
  v.check(rel(r.state.max(), std::sqrt(2.0)) <= 5e-3, fmt("peak %.6f", r.state.max()));
  v.check(r.residual <= 1e-6, fmt("residual %.1e", r.residual));
  const double poh = pohozaev_residual(p, -1.0, r.state);
  v.check(poh <= 1e-4, fmt("Pohozaev %.1e", poh));
  v.check(dt < 10.0, fmt("%.2f s", dt));
  return v;
}

Verdict townes() {
  Verdict v;
  Clock clock;
  const Townes ref = townes_oracle();
  const ProblemSpec p = pure_power(2, 20.0, 256, 4.0);
  const auto r = ground_state(p, -1.0);
  const double dt = clock.seconds();
  v.check(r.converged, "converged");
  v.check(rel(r.functionals.Q, ref.mass) <= 1e-2, fmt("Q %.5f vs shooting %.5f", r.functionals.Q, ref.mass));
  v.check(dt < 120.0, fmt("%.1f s", dt));
  return v;
}

Verdict mass_critical_flatness() {
  Verdict v;
  const BranchCase c = mass_critical();
  const Traced t = branch(c);
  branch_shape(v, c, t);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  int marginal = 0;
  for (const auto& p : t.record.points) {
    lo = std::min(lo, p.Q);
    hi = std::max(hi, p.Q);
    marginal += p.stability == Stability::marginal;
  }
  v.check((hi - lo) / lo <= 1e-2, fmt("Q spread %.2e", (hi - lo) / lo));
  v.check(marginal == static_cast<int>(t.record.points.size()),
          std::to_string(marginal) + " marginal of " + std::to_string(t.record.points.size()));
  v.check(t.seconds < 600.0, traced_note(t));
  return v;
}

void scaling_case(Verdict& v, const BranchCase& c, double expect, double tol) {
  const Traced t = branch(c);
  branch_shape(v, c, t);
  const auto fit = scaling_fit(t.record, c.problem, c.a, c.b);
  v.check(std::abs(fit.fitted - expect) <= tol, c.name + fmt(" exponent %.4f (expect %.1f)", fit.fitted, expect));
  v.check(t.seconds < 900.0, traced_note(t));
}

Verdict scaling_law() {
  Verdict v;
  scaling_case(v, cubic_2d(), 1.0, 0.05);
  scaling_case(v, half_laplacian(), 2.0, 0.1);
  return v;
}

Verdict branch_identity() {
  Verdict v;
  for (const BranchCase& c : {mass_critical(), cubic_2d(), half_laplacian(), mixed_nonlinearity(), mixed_operator()}) {
    const Traced t = branch(c);
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& row : mass_curve(t.record))
      if (row.identity_rel_error) {
        worst = std::max(worst, *row.identity_rel_error);
        ++n;
      }
    v.check(n > 0 && worst <= 1e-2, c.name + fmt(" worst %.1e", worst) + " over " + std::to_string(n));
  }
  return v;
}

Verdict morse_nondegeneracy() {
  Verdict v;
  ProblemSpec p = pure_power(2, 20.0, 128, 3.0);
  p.nonlinearity.terms[0].weight = WeightProfile::rational(1.0, 1.0);
  const auto fine = ground_state(p, -1.0);
  const ProblemSpec pc = p.with_grid({2, 20.0, 64, false});
  const auto coarse = ground_state(pc, -1.0);
  const LinearizedOperator lf(p, -1.0, fine.state, Variant::plus);
  const LinearizedOperator lc(pc, -1.0, coarse.state, Variant::plus);
  const double band = calibrated_kernel_tol(lf, lc);
  const auto mk = morse_and_kernel(lf, band);
  v.check(mk.morse_index == 1, "even Morse index " + std::to_string(mk.morse_index));
  v.check(mk.nondegenerate, fmt("min |even ev| %.3e, band %.1e", mk.min_abs_eig_even, band));
  const auto tm = translation_modes(lf, band);
  std::string cos;
  for (double c : tm.cosine) cos += fmt(" %.3f", c);
  v.check(tm.near_zero == p.grid.dim, "full-sector near-zero modes " + std::to_string(tm.near_zero));
  v.check(tm.ok, "translation cosines" + (cos.empty() ? std::string(" none") : cos));
  std::string nearest;
  for (double c : tm.cosine_nearest) nearest += fmt(" %.3f", c);
  v.note("cosines with the " + std::to_string(p.grid.dim) + " eigenvalues nearest zero:" + nearest);
  std::string ev;
  for (double e : tm.eigenvalues) ev += fmt(" %.4f", e);
  std::printf("  full-sector eigenvalues:%s\n", ev.c_str());
  return v;
}

Verdict mixed_multiplicity() {
  Verdict v;
  const BranchCase c = mixed_nonlinearity();
  Clock clock;
  const Traced t = branch(c);
  branch_shape(v, c, t);
  const auto& pts = t.record.points;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].Q > pts[arg].Q) arg = i;
  v.check(arg > 0 && arg + 1 < pts.size(), fmt("max Q %.4f at lambda %.3f", pts[arg].Q, pts[arg].lambda));
  const double rho = 0.5 * pts[arg].Q;
  const auto res = solve_normalized(c.problem, rho, t.record, true, c.control);
  v.check(res.solutions.size() == 2, std::to_string(res.solutions.size()) + fmt(" solutions at rho %.4f", rho));
  if (res.solutions.size() == 2) {
    const auto& lo = res.solutions[0];  // ascending lambda
    const auto& hi = res.solutions[1];
    v.check(hi.point.dQ_dlambda < 0.0 && hi.point.stability == Stability::stable,
            fmt("lambda %.4f dQ/dlambda %.3f stable", hi.lambda, hi.point.dQ_dlambda));
    v.check(lo.point.dQ_dlambda > 0.0 && lo.point.stability == Stability::unstable,
            fmt("lambda %.4f dQ/dlambda %.3f unstable", lo.lambda, lo.point.dQ_dlambda));
    v.check(lo.refined && hi.refined, "refined");
  }
  v.check(t.seconds + clock.seconds() < 1800.0, traced_note(t) + fmt(", total %.0f s", t.seconds + clock.seconds()));
  return v;
}

void convergence_case(Verdict& v, const BranchCase& c, double tol) {
  const Traced t = branch(c);
  branch_shape(v, c, t);
  const ProblemSpec& p = c.problem;
  const double smin = p.op.min_order(), smax = p.op.max_order();
  const auto lw = limit_ground_state({smin, p.nonlinearity.alpha(), 1.0}, p.grid);
  const auto lv = limit_ground_state({smax, p.nonlinearity.beta(), 1.0}, p.grid);
  const auto cw = convergence_report(p, t.record, Frame::w, lw, smin);
  const auto cv = convergence_report(p, t.record, Frame::v, lv, smax);
  // the record runs from the most negative lambda toward zero
  const auto& w_end = cw.rows.back();
  const auto& v_end = cv.rows.front();
  v.check(!w_end.skipped && w_end.l2_distance <= tol,
          c.name + fmt(" w-frame %.2e at lambda %g", w_end.l2_distance, w_end.lambda));
  v.check(cw.monotone_toward_limit, c.name + " w-frame monotone over the last 5");
  v.check(!v_end.skipped && v_end.l2_distance <= tol,
          c.name + fmt(" v-frame %.2e at lambda %g", v_end.l2_distance, v_end.lambda));
}

Verdict rescaled_convergence() {
  Verdict v;
  convergence_case(v, mixed_nonlinearity(), 0.05);
  convergence_case(v, mixed_operator(), 0.10);
  return v;
}

Verdict homotopy_and_probe() {
  Verdict v;
  Clock clock;
  ProblemSpec p = pure_power(2, 20.0, 128, 3.0);
  p.nonlinearity.terms[0].weight = WeightProfile::rational(1.0, 1.0);
  const auto start = ground_state(p, -1.0);
  const auto path = homotopy_path(p, -1.0, HomotopyKind::weight_zeta, 11, start);
  v.check(path.completed && path.nodes.size() == 11, "path " + path.termination);
  bool mono = true, morse = true;
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    // nodes run from zeta = 1 down to 0
    if (i > 0 && path.nodes[i].phi > path.nodes[i - 1].phi * (1.0 + 1e-3)) mono = false;
    if (path.nodes[i].morse_index != 1) morse = false;
  }
  v.check(mono, "phi nondecreasing in zeta");
  v.check(morse, "Morse index 1 at every node");
  const auto fresh = ground_state(weight_homotopy_problem(p, 0.0), -1.0);
  const double dist = path.nodes.empty() ? 1.0 : relative_distance(path.nodes.back().state, fresh.state);
  v.check(dist <= 1e-3, fmt("endpoint distance %.1e", dist));
  for (const bool weighted : {true, false}) {
    const ProblemSpec prob = weighted ? p : weight_homotopy_problem(p, 0.0);
    const auto pr = uniqueness_probe(prob, -1.0, 8, 1, 0);
    v.check(pr.distinct.size() == 1, std::string(weighted ? "weighted" : "autonomous") + " probe " +
                                         std::to_string(pr.distinct.size()) + " distinct from " +
                                         std::to_string(pr.converged_starts) + " converged starts");
  }
  v.check(clock.seconds() < 1200.0, fmt("%.0f s", clock.seconds()));
  return v;
}

Verdict hardy_law() {
  Verdict v;
  Clock clock;
  ProblemSpec p;
  p.grid = {3, 8.0, 128, true};
  p.potential = PotentialSpec::hardy(1.0);
  p.nonlinearity.terms = {{3.0, WeightProfile::constant(1.0)}};
  const double l1 = -1.0, l2 = -2.0;
  double Q[2];
  int i = 0;
  for (double lambda : {l1, l2}) {
    const auto r = ground_state(p, lambda);
    const auto& f = r.functionals;
    Q[i++] = f.Q;
    v.check(r.converged, fmt("lambda %g converged", lambda));
    v.check(rel(f.Phi, -2.0 / 3.0 * lambda * f.Q) <= 1e-2, fmt("lambda %g: Phi/(-lambda Q) %.5f", lambda, f.Phi / (-lambda * f.Q)));
  }
  const double expect = std::sqrt(l1 / l2);
  v.check(rel(Q[0] / Q[1], expect) <= 2e-2, fmt("Q ratio %.5f vs %.5f", Q[0] / Q[1], expect));
  v.check(clock.seconds() < 900.0, fmt("%.0f s", clock.seconds()));
  return v;
}

Verdict property_suites() {
  Verdict v;
  {
    const GridSpec g{2, 4.0, 32, false};
    OperatorSpec op;
    op.terms = {{0.5, 1.0}, {1.0, 0.7}};
    double sa = 0.0, res = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Field a = noise(g, 2 * s), b = noise(g, 2 * s + 1);
      const Field Aa = apply_operator(op, a);
      sa = std::max(sa, std::abs(dot(Aa, b) - dot(a, apply_operator(op, b))) / (norm(Aa) * norm(b)));
      const Field x = solve_shifted(op, 0.7, a);
      Field back = apply_operator(op, x);
      back.axpy(0.7, x);
      res = std::max(res, relative_distance(back, a));
    }
    v.check(sa <= 1e-12, fmt("self-adjoint %.1e", sa));
    v.check(res <= 1e-12, fmt("resolvent %.1e", res));
  }
  {
    ProblemSpec p;
    p.grid = {2, 8.0, 64, false};
    p.op.terms = {{0.6, 1.0}, {1.0, 0.5}};
    p.potential = PotentialSpec::bounded(1.0, 1.0);
    p.nonlinearity.terms = {{3.0, WeightProfile::rational(2.0, 0.5)}, {3.5, WeightProfile::constant(0.7)}};
    Field u = gaussian(p.grid, 1.5, 1.2);
    u += 0.3 * random_smooth_field(p.grid, 99, false);
    double worst = 0.0;
    const Field g = gradient(p, u, -0.7);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Field d = random_smooth_field(p.grid, s, false);
      const double eps = 1e-5;
      const double fd = (evaluate_functionals(p, u + eps * d, -0.7).Phi - evaluate_functionals(p, u - eps * d, -0.7).Phi) /
                        (2.0 * eps);
      worst = std::max(worst, std::abs(fd - dot(g, d)) / (norm(g) * norm(d)));
    }
    v.check(worst <= 1e-6, fmt("gradient vs differences %.1e", worst));
  }
  {
    const fs::path f = cache_root / "roundtrip.gsbf";
    fs::create_directories(cache_root);
    Field u = noise(GridSpec{3, 2.5, 8, true}, 5);
    u[0] = -0.0;
    u[1] = std::numeric_limits<double>::denorm_min();
    save_checkpoint(f, u);
    const Field w = load_checkpoint(f);
    bool same = w.grid() == u.grid();
    for (std::size_t i = 0; same && i < u.size(); ++i) same = std::bit_cast<std::uint64_t>(u[i]) == std::bit_cast<std::uint64_t>(w[i]);
    v.check(same, "checkpoint round trip");
  }
  {
    ProblemSpec p = pure_power(2, 10.0, 64, 3.0);
    p.nonlinearity.terms[0].weight = WeightProfile::rational(1.0, 1.0);
    auto run = [&] {
      StepControl c = targets(-2.0, -0.5, 5, 2);
      std::string out;
      c.on_point = [&](BranchPoint&, const Field& u) {
        out.append(reinterpret_cast<const char*>(u.data()), u.size() * sizeof(double));
      };
      const auto rec = continue_branch(p, ground_state(p, -2.0), {-2.0, -0.5}, c);
      for (const auto& pt : rec.points) out += branch_csv_row(pt) + "\n";
      return out;
    };
    v.check(run() == run(), "reruns byte-identical");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int criterion = 0;
  std::string cache = cache_root.string();
  app.add_option("--criterion", criterion)->required()->check(CLI::Range(1, 11));
  app.add_option("--cache", cache, "branch cache directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  cache_root = cache;

  const std::vector<std::pair<std::string, std::function<Verdict()>>> table{
      {"analytic soliton", sech_oracle},
      {"Townes profile", townes},
      {"mass-critical flatness", mass_critical_flatness},
      {"scaling law", scaling_law},
      {"branch identity dPhi/dlambda = -Q", branch_identity},
      {"Morse index and non-degeneracy", morse_nondegeneracy},
      {"mixed-power multiplicity and stability", mixed_multiplicity},
      {"rescaled convergence", rescaled_convergence},
      {"homotopy and uniqueness probe", homotopy_and_probe},
      {"Hardy exact law", hardy_law},
      {"property suites", property_suites},
  };
  const auto& [title, fn] = table[static_cast<std::size_t>(criterion - 1)];
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v.check(false, std::string("exception: ") + e.what());
  }
  std::string detail;
  for (const auto& s : v.parts) detail += (detail.empty() ? "" : "; ") + s;
  std::printf("%s criterion %d (%s): %s\n", v.ok ? "PASS" : "FAIL", criterion, title.c_str(), detail.c_str());
  return v.ok ? 0 : 1;
}
