#include "fracgs/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace fracgs {

namespace {

class Collector {
 public:
  std::vector<std::string> errors;

  void unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) errors.push_back(where + ": unknown key '" + it.key() + "'");
  }

  double number(const json& j, const std::string& key, const std::string& where, double fallback, bool required) {
    if (!j.contains(key)) {
      if (required) errors.push_back(where + ": missing key '" + key + "'");
      return fallback;
    }
    if (!j[key].is_number()) {
      errors.push_back(where + ": '" + key + "' must be a number");
      return fallback;
    }
    return j[key].get<double>();
  }

  int integer(const json& j, const std::string& key, const std::string& where, int fallback, bool required) {
    if (!j.contains(key)) {
      if (required) errors.push_back(where + ": missing key '" + key + "'");
      return fallback;
    }
    if (!j[key].is_number_integer()) {
      errors.push_back(where + ": '" + key + "' must be an integer");
      return fallback;
    }
    return j[key].get<int>();
  }

  WeightProfile weight(const json& j, const std::string& where) {
    if (j.is_number()) return WeightProfile::constant(j.get<double>());
    if (!j.is_object()) {
      errors.push_back(where + ": weight must be a number or an object");
      return {};
    }
    unknown_keys(j, {"kind", "c", "k", "l"}, where);
    const std::string kind = j.value("kind", std::string("constant"));
    if (kind == "constant") return WeightProfile::constant(number(j, "c", where, 1.0, false));
    if (kind == "rational") return WeightProfile::rational(number(j, "k", where, 1.0, true), number(j, "l", where, 1.0, true));
    errors.push_back(where + ": unknown weight kind '" + kind + "'");
    return {};
  }
};

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw Error("checkpoint: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

ProblemSpec problem_from_json(const json& j) {
  Collector c;
  ProblemSpec p;
  if (!j.is_object()) throw ConfigError({"config must be an object"});
  c.unknown_keys(j, {"dim", "box", "points", "cell_centered", "operator", "potential", "nonlinearity"}, "config");
  p.grid.dim = c.integer(j, "dim", "config", 1, true);
  p.grid.half_width = c.number(j, "box", "config", 1.0, true);
  p.grid.points = c.integer(j, "points", "config", 2, true);
  if (j.contains("cell_centered")) {
    if (j["cell_centered"].is_boolean()) p.grid.cell_centered = j["cell_centered"].get<bool>();
    else c.errors.push_back("config: 'cell_centered' must be a boolean");
  }
  if (j.contains("operator")) {
    const auto& ops = j["operator"];
    if (!ops.is_array()) c.errors.push_back("config: 'operator' must be a list of {s, c}");
    else {
      p.op.terms.clear();
      for (std::size_t i = 0; i < ops.size(); ++i) {
        const std::string where = "operator[" + std::to_string(i) + "]";
        if (!ops[i].is_object()) {
          c.errors.push_back(where + ": must be an object");
          continue;
        }
        c.unknown_keys(ops[i], {"s", "c"}, where);
        p.op.terms.push_back({c.number(ops[i], "s", where, 1.0, true), c.number(ops[i], "c", where, 1.0, false)});
      }
    }
  }
  if (j.contains("potential")) {
    const auto& v = j["potential"];
    if (!v.is_object()) c.errors.push_back("config: 'potential' must be an object");
    else {
      c.unknown_keys(v, {"kind", "k", "l", "a"}, "potential");
      const std::string kind = v.value("kind", std::string("none"));
      if (kind == "none") p.potential = PotentialSpec::none();
      else if (kind == "bounded")
        p.potential = PotentialSpec::bounded(c.number(v, "k", "potential", 1.0, true), c.number(v, "l", "potential", 1.0, true));
      else if (kind == "hardy") p.potential = PotentialSpec::hardy(c.number(v, "a", "potential", 1.0, true));
      else c.errors.push_back("potential: unknown kind '" + kind + "' (none, bounded, hardy)");
    }
  }
  if (!j.contains("nonlinearity")) c.errors.push_back("config: missing key 'nonlinearity'");
  else if (!j["nonlinearity"].is_array()) c.errors.push_back("config: 'nonlinearity' must be a list of {p, weight}");
  else {
    p.nonlinearity.terms.clear();
    const auto& nl = j["nonlinearity"];
    for (std::size_t i = 0; i < nl.size(); ++i) {
      const std::string where = "nonlinearity[" + std::to_string(i) + "]";
      if (!nl[i].is_object()) {
        c.errors.push_back(where + ": must be an object");
        continue;
      }
      c.unknown_keys(nl[i], {"p", "weight"}, where);
      PowerTerm t;
      t.exponent = c.number(nl[i], "p", where, 4.0, true);
      if (nl[i].contains("weight")) t.weight = c.weight(nl[i]["weight"], where + ".weight");
      p.nonlinearity.terms.push_back(t);
    }
  }
  // Range checks run on whatever parsed, so every violation shows up at once.
  try {
    auto v = p.violations();
    c.errors.insert(c.errors.end(), v.begin(), v.end());
  } catch (const std::exception& e) {
    c.errors.push_back(e.what());
  }
  if (!c.errors.empty()) throw ConfigError(c.errors);
  return p;
}

json problem_to_json(const ProblemSpec& p) {
  json j;
  j["dim"] = p.grid.dim;
  j["box"] = p.grid.half_width;
  j["points"] = p.grid.points;
  j["cell_centered"] = p.grid.cell_centered;
  j["operator"] = json::array();
  for (const auto& t : p.op.terms) j["operator"].push_back({{"s", t.order}, {"c", t.coeff}});
  switch (p.potential.kind) {
    case PotentialSpec::Kind::none: j["potential"] = {{"kind", "none"}}; break;
    case PotentialSpec::Kind::bounded:
      j["potential"] = {{"kind", "bounded"}, {"k", p.potential.profile.k}, {"l", p.potential.profile.l}};
      break;
    case PotentialSpec::Kind::hardy: j["potential"] = {{"kind", "hardy"}, {"a", p.potential.hardy_coeff}}; break;
  }
  j["nonlinearity"] = json::array();
  for (const auto& t : p.nonlinearity.terms) {
    json w;
    if (t.weight.kind == WeightProfile::Kind::constant) w = {{"kind", "constant"}, {"c", t.weight.c}};
    else w = {{"kind", to_string(t.weight.kind)}, {"k", t.weight.k}, {"l", t.weight.l}};
    j["nonlinearity"].push_back({{"p", t.exponent}, {"weight", w}});
  }
  return j;
}

ProblemSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path.string() + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return problem_from_json(j);
}

void save_checkpoint(const std::filesystem::path& path, const Field& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot write '" + path.string() + "'");
  const GridSpec& g = u.grid();
  out.write("GSBF", 4);
  put_le(out, 1, 2);
  put_le(out, static_cast<std::uint64_t>(g.dim), 1);
  put_le(out, g.cell_centered ? 1 : 0, 1);
  for (int a = 0; a < g.dim; ++a) put_le(out, static_cast<std::uint64_t>(g.points), 4);
  put_le(out, std::bit_cast<std::uint64_t>(g.half_width), 8);
  for (std::size_t i = 0; i < u.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(u[i]), 8);
  if (!out) throw Error("checkpoint: write failed for '" + path.string() + "'");
}

Field load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GSBF", 4) != 0) throw Error("checkpoint: bad magic in '" + path.string() + "'");
  const auto version = get_le(in, 2);
  if (version != 1) throw Error("checkpoint: unsupported version " + std::to_string(version));
  GridSpec g;
  g.dim = static_cast<int>(get_le(in, 1));
  g.cell_centered = get_le(in, 1) != 0;
  if (g.dim < 1 || g.dim > 3) throw Error("checkpoint: bad dimension");
  for (int a = 0; a < g.dim; ++a) {
    const int m = static_cast<int>(get_le(in, 4));
    if (a == 0) g.points = m;
    else if (m != g.points) throw Error("checkpoint: unequal per-axis point counts are not supported");
  }
  g.half_width = std::bit_cast<double>(get_le(in, 8));
  g.validate();
  std::vector<double> v(g.size());
  for (auto& x : v) x = std::bit_cast<double>(get_le(in, 8));
  return Field(g, std::move(v));
}

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string branch_csv_header() { return "lambda,Q,Phi,morse,dQdlambda,pohozaev_res,nehari_res,stability,checkpoint"; }

std::string branch_csv_row(const BranchPoint& p) {
  std::string s;
  s += format_double(p.lambda) + ',' + format_double(p.Q) + ',' + format_double(p.Phi) + ',';
  s += std::to_string(p.morse_index) + ',' + format_double(p.dQ_dlambda) + ',';
  s += format_double(p.pohozaev_rel_residual) + ',' + format_double(p.nehari_rel_residual) + ',';
  s += to_string(p.stability) + ',' + p.checkpoint_id;
  return s;
}

BranchCsvWriter::BranchCsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error("cannot write '" + path.string() + "'");
  out_ << branch_csv_header() << '\n';
  out_.flush();
}

void BranchCsvWriter::write(const BranchPoint& p) {
  out_ << branch_csv_row(p) << '\n';
  out_.flush();
}

std::vector<BranchPoint> read_branch_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != branch_csv_header()) throw Error("branch CSV: unexpected header in '" + path.string() + "'");
  std::vector<BranchPoint> pts;
  auto num = [](const std::string& s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("branch CSV: bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 8) f.emplace_back();
    if (f.size() != 9) throw Error("branch CSV: expected 9 fields");
    BranchPoint p;
    p.lambda = num(f[0]);
    p.Q = num(f[1]);
    p.Phi = num(f[2]);
    p.morse_index = std::stoi(f[3]);
    p.dQ_dlambda = num(f[4]);
    p.pohozaev_rel_residual = num(f[5]);
    p.nehari_rel_residual = num(f[6]);
    p.stability = stability_from_string(f[7]);
    p.checkpoint_id = f[8];
    pts.push_back(std::move(p));
  }
  return pts;
}

json to_json(const FunctionalReport& r) {
  return {{"S", r.S}, {"G", r.G}, {"F", r.F}, {"Q", r.Q}, {"Phi", r.Phi}, {"lambda", r.lambda}};
}

json to_json(const SolveReport& r) {
  return {{"lambda", r.lambda},
          {"functionals", to_json(r.functionals)},
          {"residual", r.residual},
          {"nehari_residual", r.nehari_residual},
          {"iterations", r.iterations},
          {"newton_iterations", r.newton_iterations},
          {"converged", r.converged},
          {"collapsed", r.collapsed},
          {"peak", r.state.size() ? r.state.max() : 0.0}};
}

json to_json(const HypothesisReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json ex = json::array();
  for (const auto& e : r.exponents)
    ex.push_back({{"p", e.exponent}, {"mass_class", to_string(e.mass_class)}, {"shifted_class", to_string(e.shifted_class)}});
  return {{"family", r.family},
          {"dim", r.dim},
          {"s_min", r.s_min},
          {"s_max", r.s_max},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"theta", r.theta},
          {"tau", r.tau},
          {"gamma_small", r.gamma_small},
          {"gamma_large", r.gamma_large},
          {"mass_critical_exponent", r.mass_critical_exponent},
          {"shifted_threshold", r.shifted_threshold},
          {"k", opt(r.k)},
          {"l", opt(r.l)},
          {"lambda_star_bound", opt(r.lambda_star_bound)},
          {"d_exponent", opt(r.d_exponent)},
          {"exponents", ex},
          {"limit_at_zero", to_string(r.limit_at_zero)},
          {"limit_at_minus_infinity", to_string(r.limit_at_minus_infinity)},
          {"existence_regime", r.existence_regime},
          {"violations", r.violations},
          {"notes", r.notes}};
}

json to_json(const SpectrumReport& r) {
  return {{"sector", to_string(r.sector)},
          {"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"morse_index", r.morse_index},
          {"kernel_dim_estimate", r.kernel_dim_estimate},
          {"tol", r.tol},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"warnings", r.warnings}};
}

}  // namespace fracgs
