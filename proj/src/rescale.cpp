#include "fracgs/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fracgs/spectral.hpp"

namespace fracgs {

std::string to_string(Frame f) { return f == Frame::w ? "w" : "v"; }

namespace {

// Periodic band-limited cardinal function of an M-point grid with spacing h on a box of length 2L.
double periodic_sinc(double t, int M, double h, double L) {
  const double a = std::numbers::pi * t / h;
  const double b = std::numbers::pi * t / (2.0 * L);
  const double tb = std::tan(b);
  if (std::abs(std::sin(b)) < 1e-14) {
    // t is a multiple of the period
    return 1.0;
  }
  return std::sin(a) / (M * tb);
}

std::vector<double> axis_matrix(const GridSpec& in, const GridSpec& out, double dilation) {
  const int Mi = in.points, Mo = out.points;
  std::vector<double> W(static_cast<std::size_t>(Mo) * Mi, 0.0);
  const double h = in.spacing(), L = in.half_width;
  for (int j = 0; j < Mo; ++j) {
    const double y = dilation * out.coord(j);
    if (y < -L - 1e-12 * L || y > L + 1e-12 * L) continue;
    for (int i = 0; i < Mi; ++i) {
      const double t = y - in.coord(i);
      W[static_cast<std::size_t>(j) * Mi + i] = std::abs(t) < 1e-13 * h ? 1.0 : periodic_sinc(t, Mi, h, L);
    }
  }
  return W;
}

// Applies W (Mo x Mi) along `axis` of a row-major tensor with the given shape.
std::vector<double> apply_axis(const std::vector<double>& x, std::vector<int>& shape, int axis,
                               const std::vector<double>& W, int Mo) {
  const int Mi = shape[static_cast<std::size_t>(axis)];
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a) inner *= static_cast<std::size_t>(shape[a]);
  std::vector<double> y(outer * static_cast<std::size_t>(Mo) * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (int j = 0; j < Mo; ++j) {
      double* dst = &y[(o * Mo + j) * inner];
      const double* wr = &W[static_cast<std::size_t>(j) * Mi];
      for (int i = 0; i < Mi; ++i) {
        const double w = wr[i];
        if (w == 0.0) continue;
        const double* src = &x[(o * Mi + i) * inner];
        for (std::size_t k = 0; k < inner; ++k) dst[k] += w * src[k];
      }
    }
  shape[static_cast<std::size_t>(axis)] = Mo;
  return y;
}

double max_norm_radius(const GridSpec& g, std::size_t idx) {
  double r = 0.0;
  for (int a = g.dim - 1; a >= 0; --a) {
    const int i = static_cast<int>(idx % static_cast<std::size_t>(g.points));
    idx /= static_cast<std::size_t>(g.points);
    r = std::max(r, std::abs(g.coord(i)));
  }
  return r;
}

double mass_beyond(const Field& u, double R) {
  double out = 0.0, all = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = u[i] * u[i];
    all += m;
    if (max_norm_radius(u.grid(), i) > R) out += m;
  }
  return all > 0.0 ? out / all : 0.0;
}

// Max-norm radius containing 99% of the mass.
double radius99(const Field& u) {
  std::vector<std::pair<double, double>> rm;
  double all = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    rm.emplace_back(max_norm_radius(u.grid(), i), u[i] * u[i]);
    all += u[i] * u[i];
  }
  std::sort(rm.begin(), rm.end());
  double acc = 0.0;
  for (const auto& [r, m] : rm) {
    acc += m;
    if (acc >= 0.99 * all) return r;
  }
  return u.grid().half_width;
}

double rms_width(const Field& u) {
  const auto x = node_coordinate(u.grid(), 0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    num += x[i] * x[i] * u[i] * u[i];
    den += u[i] * u[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

Field frame_transform(const Field& u, const FrameMap& fm, const GridSpec& out, const char* name) {
  // Coverage of the preimage of the output box.
  const double pre = fm.dilation * out.half_width;
  if (pre < u.grid().half_width && mass_beyond(u, pre) > 0.01)
    throw FrameError(std::string(name) + ": more than 1% of the mass lies outside the preimage of the output box",
                     2.2 * radius99(u) / fm.dilation);
  Field w = resample(u, out, fm.dilation, fm.amplitude);
  if (mass_beyond(w, 0.5 * out.half_width) > 0.01)
    throw FrameError(std::string(name) + ": more than 1% of the frame mass lies beyond half the box",
                     2.2 * radius99(w));
  if (rms_width(w) < 4.0 * out.spacing())
    throw FrameError(std::string(name) + ": frame state is resolved by fewer than 4 cells", out.half_width);
  return w;
}

}  // namespace

Field resample(const Field& u, const GridSpec& out_grid, double dilation, double amplitude) {
  const GridSpec& in = u.grid();
  if (in.dim != out_grid.dim) throw GridMismatch("resample: dimension mismatch");
  out_grid.validate();
  const auto W = axis_matrix(in, out_grid, dilation);
  std::vector<double> x(u.values().begin(), u.values().end());
  std::vector<int> shape(static_cast<std::size_t>(in.dim), in.points);
  for (int a = 0; a < in.dim; ++a) x = apply_axis(x, shape, a, W, out_grid.points);
  for (auto& v : x) v *= amplitude;
  return Field(out_grid, std::move(x));
}

FrameMap w_frame_map(const ProblemSpec& problem, double lambda, double p_small) {
  if (!(lambda < 0.0)) throw Error("w frame requires lambda < 0");
  const double s = problem.op.min_order();
  const double a = std::abs(lambda);
  FrameMap m;
  m.amplitude = std::pow(a, -1.0 / (p_small - 2.0));
  m.dilation = std::pow(a, -1.0 / (2.0 * s));
  m.mass_factor = std::pow(a, problem.grid.dim / (2.0 * s) - 2.0 / (p_small - 2.0));
  return m;
}

FrameMap v_frame_map(const ProblemSpec& problem, double lambda, double q_large) {
  if (!(lambda < 0.0)) throw Error("v frame requires lambda < 0");
  const double s = problem.op.max_order();
  const double a = std::abs(lambda);
  FrameMap m;
  m.amplitude = std::pow(a, -1.0 / (q_large - 2.0));
  m.dilation = std::pow(a, -1.0 / (2.0 * s));
  m.mass_factor = std::pow(a, problem.grid.dim / (2.0 * s) - 2.0 / (q_large - 2.0));
  return m;
}

Field to_w_frame(const ProblemSpec& problem, double lambda, const Field& u, double p_small,
                 const std::optional<GridSpec>& out_grid) {
  return frame_transform(u, w_frame_map(problem, lambda, p_small), out_grid.value_or(u.grid()), "w frame");
}

Field to_v_frame(const ProblemSpec& problem, double lambda, const Field& u, double q_large,
                 const std::optional<GridSpec>& out_grid) {
  return frame_transform(u, v_frame_map(problem, lambda, q_large), out_grid.value_or(u.grid()), "v frame");
}

ProblemSpec limit_problem(const LimitProblem& limit, const GridSpec& grid) {
  ProblemSpec p;
  p.op.terms = {{limit.order, 1.0}};
  p.nonlinearity.terms = {{limit.exponent, WeightProfile::constant(limit.coeff)}};
  p.grid = grid;
  return p;
}

SolveReport limit_ground_state(const LimitProblem& limit, const GridSpec& grid, const SolveConfig& config) {
  return ground_state(limit_problem(limit, grid), -1.0, config);
}

ConvergenceReport convergence_report(const ProblemSpec& problem, const BranchRecord& record, Frame frame,
                                     const SolveReport& limit_state, double limit_order) {
  ConvergenceReport rep;
  rep.frame = frame;
  const Field& ref = limit_state.state;
  const double p_small = problem.nonlinearity.alpha();
  const double q_large = problem.nonlinearity.beta();
  OperatorSpec lim_op;
  lim_op.terms = {{limit_order, 1.0}};
  const double ref_semi = seminorm_terms(lim_op, ref)[0];
  for (const auto& p : record.points) {
    ConvergenceRow row;
    row.lambda = p.lambda;
    try {
      if (!p.state) throw Error("branch point carries no state");
      Field w = frame == Frame::w ? to_w_frame(problem, p.lambda, *p.state, p_small, ref.grid())
                                  : to_v_frame(problem, p.lambda, *p.state, q_large, ref.grid());
      row.l2_distance = relative_distance(w, ref);
      row.energy_distance = std::sqrt(seminorm_terms(lim_op, w - ref)[0] / ref_semi);
    } catch (const Error& e) {
      row.skipped = true;
      row.reason = e.what();
    }
    rep.rows.push_back(row);
  }
  std::vector<ConvergenceRow> usable;
  for (const auto& r : rep.rows)
    if (!r.skipped) usable.push_back(r);
  // Order toward the limit: |lambda| decreasing for w, increasing for v.
  std::sort(usable.begin(), usable.end(), [frame](const ConvergenceRow& a, const ConvergenceRow& b) {
    return frame == Frame::w ? std::abs(a.lambda) > std::abs(b.lambda) : std::abs(a.lambda) < std::abs(b.lambda);
  });
  if (usable.size() >= 5) {
    rep.monotone_toward_limit = true;
    for (std::size_t i = usable.size() - 4; i < usable.size(); ++i)
      if (!(usable[i].l2_distance <= usable[i - 1].l2_distance)) rep.monotone_toward_limit = false;
  }
  return rep;
}

}  // namespace fracgs
