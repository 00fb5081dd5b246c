#include "hodo_cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hodo/periodicity.hpp"

namespace hodo::cli {

using nlohmann::json;

namespace {

// Object reader that rejects keys nobody asked for.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json& at(const std::string& k) {
    used_.insert(k);
    if (!j_.contains(k)) fail("missing key '" + k + "'");
    return j_.at(k);
  }

  double num(const std::string& k) { return as_num(at(k), k); }
  double num(const std::string& k, double dflt) { return has(k) ? num(k) : dflt; }

  int integer(const std::string& k, int dflt) {
    if (!has(k)) return dflt;
    const json& v = at(k);
    if (!v.is_number_integer()) fail("'" + k + "' must be an integer");
    return v.get<int>();
  }

  std::string str(const std::string& k, const std::string& dflt) {
    if (!has(k)) return dflt;
    const json& v = at(k);
    if (!v.is_string()) fail("'" + k + "' must be a string");
    return v.get<std::string>();
  }

  Vector vec(const std::string& k) { return as_vec(at(k), k); }

  Matrix mat(const std::string& k) {
    const json& v = at(k);
    if (!v.is_array() || v.empty()) fail("'" + k + "' must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Matrix m;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Vector row = as_vec(v[static_cast<std::size_t>(i)], k);
      if (i == 0) m.resize(rows, row.size());
      if (row.size() != m.cols()) fail("'" + k + "' rows have different lengths");
      m.row(i) = row.transpose();
    }
    return m;
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail("unknown key '" + k + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

 private:
  double as_num(const json& v, const std::string& k) const {
    if (!v.is_number()) fail("'" + k + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail("'" + k + "' must be finite");
    return d;
  }

  Vector as_vec(const json& v, const std::string& k) const {
    if (!v.is_array() || v.empty()) fail("'" + k + "' must be a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = as_num(v[i], k);
    return out;
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

int sign_of(Obj& o, const std::string& k) {
  const int s = o.integer(k, 1);
  if (s != 1 && s != -1) o.fail("'" + k + "' must be 1 or -1");
  return s;
}

Family parse_family(Obj& o) {
  const std::string name = o.str("family", "");
  if (name == "tanh1d") return Tanh1D{o.num("mu", 1.0), o.num("kappa", 1.0)};
  if (name == "gauss1d") return Gauss1D{o.num("eta", 1.0), o.num("kappa", 1.0), sign_of(o, "branch")};
  if (name == "tanh2d") return Tanh2D{o.num("eps", 0.5)};
  if (name == "gauss2d_coriolis") {
    return Gauss2DCoriolis{o.num("amplitude", 1.0), sign_of(o, "branch_x"), sign_of(o, "branch_y")};
  }
  if (name == "linear") return LinearR{o.mat("R")};
  if (name == "constant") return Constant{o.vec("c")};
  o.fail("unknown family '" + name + "'");
}

json family_json(const Family& f) {
  json j;
  j["family"] = family_name(f);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Tanh1D>) {
          j["mu"] = p.mu;
          j["kappa"] = p.kappa;
        } else if constexpr (std::is_same_v<T, Gauss1D>) {
          j["eta"] = p.eta;
          j["kappa"] = p.kappa;
          j["branch"] = p.branch;
        } else if constexpr (std::is_same_v<T, Tanh2D>) {
          j["eps"] = p.eps;
        } else if constexpr (std::is_same_v<T, Gauss2DCoriolis>) {
          j["amplitude"] = p.amplitude;
          j["branch_x"] = p.branch_x;
          j["branch_y"] = p.branch_y;
        } else if constexpr (std::is_same_v<T, LinearR>) {
          j["R"] = mat_json(p.R);
        } else {
          j["c"] = vec_json(p.c);
        }
      },
      f);
  return j;
}

ProblemConfig parse_problem(const json& j) {
  Obj o(j, "problem");
  ProblemConfig p;
  p.preset = o.str("preset", "matrix");
  std::optional<int> dim;
  if (o.has("dimension")) {
    dim = o.integer("dimension", 0);
    if (*dim < 1) o.fail("'dimension' must be positive");
  }
  if (p.preset == "matrix") {
    p.A = o.mat("A");
    if (p.A.rows() != p.A.cols()) o.fail("'A' must be square");
  } else if (p.preset == "scalar") {
    p.a = o.num("a", 0.0);
    p.A = Matrix::Constant(1, 1, p.a);
  } else if (p.preset == "diag") {
    p.diag = o.vec("a");
    p.A = p.diag.asDiagonal();
  } else if (p.preset == "coriolis2d") {
    p.omega = o.num("omega", 1.0);
    p.A = presets::coriolis2d_matrix(p.omega);
  } else if (p.preset == "coriolis3d") {
    if (o.has("omega") && o.at("omega").is_array()) {
      p.omega_vec = o.vec("omega");
      if (p.omega_vec->size() != 3) o.fail("'omega' must have 3 components");
      p.A = presets::coriolis3d_matrix(*p.omega_vec);
    } else {
      p.omega = o.num("omega", 1.0);
      p.A = presets::coriolis3d_matrix(Vector::Unit(3, 2) * p.omega);
    }
    if (o.has("gravity")) {
      if (o.has("g")) o.fail("give either 'gravity' or 'g'");
      p.g = Vector::Unit(3, 2) * -o.num("gravity");
    }
  } else if (p.preset == "periodic2d") {
    p.lambda = o.num("lambda", 1.0);
    p.a11 = o.num("A11", 0.0);
    p.a12 = o.num("A12", 1.0);
    try {
      p.A = make_periodic_2d(p.lambda, p.a11, p.a12);
    } catch (const std::invalid_argument& e) {
      o.fail(e.what());
    }
  } else if (p.preset == "periodic4d") {
    p.lambda = o.num("lambda", 1.0);
    p.variant = o.str("variant", "block");
    if (p.variant != "block" && p.variant != "paired") o.fail("'variant' must be block or paired");
    p.A = make_periodic_4d(p.variant == "block" ? Periodic4D::BlockRotation : Periodic4D::PairedRotation, p.lambda);
  } else {
    o.fail("unknown preset '" + p.preset + "'");
  }
  if (o.has("g")) p.g = o.vec("g");
  if (p.g.size() == 0) p.g = Vector::Zero(p.A.rows());
  if (p.g.size() != p.A.rows()) o.fail("'g' has dimension " + std::to_string(p.g.size()) + ", A has " + std::to_string(p.A.rows()));
  if (dim && *dim != p.A.rows()) o.fail("'dimension' does not match the force");
  o.done();
  return p;
}

json problem_json(const ProblemConfig& p) {
  json j;
  j["preset"] = p.preset;
  j["dimension"] = p.A.rows();
  j["g"] = vec_json(p.g);
  if (p.preset == "matrix") j["A"] = mat_json(p.A);
  if (p.preset == "scalar") j["a"] = p.a;
  if (p.preset == "diag") j["a"] = vec_json(p.diag);
  if (p.preset == "coriolis2d") j["omega"] = p.omega;
  if (p.preset == "coriolis3d") j["omega"] = p.omega_vec ? vec_json(*p.omega_vec) : json(p.omega);
  if (p.preset == "periodic2d") {
    j["lambda"] = p.lambda;
    j["A11"] = p.a11;
    j["A12"] = p.a12;
  }
  if (p.preset == "periodic4d") {
    j["lambda"] = p.lambda;
    j["variant"] = p.variant;
  }
  return j;
}

InitialData parse_data(const json& j) {
  Obj o(j, "data");
  if (!o.has("blocks")) {
    Family f = parse_family(o);
    o.done();
    try {
      return InitialData(std::move(f));
    } catch (const std::invalid_argument& e) {
      o.fail(e.what());
    }
  }
  const json& arr = o.at("blocks");
  o.done();
  if (!arr.is_array() || arr.empty()) o.fail("'blocks' must be a non-empty array");
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Obj b(arr[i], "data.blocks[" + std::to_string(i) + "]");
    const json& coords = b.at("coords");
    if (!coords.is_array()) b.fail("'coords' must be an array of integers");
    Block blk;
    for (const auto& c : coords) {
      if (!c.is_number_integer()) b.fail("'coords' must be an array of integers");
      blk.coords.push_back(c.get<int>());
    }
    blk.family = parse_family(b);
    b.done();
    blocks.push_back(std::move(blk));
  }
  try {
    return InitialData(std::move(blocks));
  } catch (const std::invalid_argument& e) {
    o.fail(e.what());
  }
}

json data_json(const InitialData& d) {
  const auto& bs = d.blocks();
  if (bs.size() == 1) return family_json(bs[0].family);
  json arr = json::array();
  for (const auto& b : bs) {
    json e = family_json(b.family);
    e["coords"] = b.coords;
    arr.push_back(e);
  }
  return json{{"blocks", arr}};
}

Interval parse_interval(const json& v, const Obj& o, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    o.fail("'" + what + "' entries must be [lo, hi]");
  }
  Interval iv{v[0].get<double>(), v[1].get<double>()};
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) o.fail("'" + what + "' needs lo <= hi");
  return iv;
}

Range parse_range(const json& v, const std::string& where) {
  Obj o(v, where);
  Range r{o.num("from"), o.num("to"), o.integer("count", 1)};
  if (r.count < 1) o.fail("'count' must be positive");
  o.done();
  return r;
}

TaskConfig parse_task(const json& j) {
  Obj o(j, "task");
  TaskConfig t;
  t.command = o.str("command", "solve");
  static const std::set<std::string> commands{"solve", "blowup", "period", "compare", "coriolis3d"};
  if (!commands.count(t.command)) o.fail("unknown command '" + t.command + "'");
  t.mode = o.str("mode", "solve");
  if (t.mode != "solve" && t.mode != "blowup") o.fail("'mode' must be solve or blowup");

  if (o.has("t")) {
    const json& tv = o.at("t");
    if (tv.is_array()) {
      for (const auto& x : tv) {
        if (!x.is_number()) o.fail("'t' must hold numbers");
        t.times.push_back(x.get<double>());
      }
    } else {
      t.times = parse_range(tv, "task.t").values();
    }
  }
  if (o.has("x")) {
    const json& xv = o.at("x");
    if (!xv.is_array()) o.fail("'x' must be an array of ranges, one per dimension");
    for (std::size_t i = 0; i < xv.size(); ++i) t.x_grid.push_back(parse_range(xv[i], "task.x[" + std::to_string(i) + "]"));
  }
  t.grid_points = o.integer("grid_points", t.grid_points);
  t.t_max = o.num("t_max", t.t_max);
  t.dt = o.num("dt", t.dt);
  t.unbounded_range = o.num("unbounded_range", t.unbounded_range);
  t.samples = o.integer("samples", t.samples);
  if (o.has("t_range")) t.t_range = parse_interval(o.at("t_range"), o, "t_range");
  if (o.has("box")) {
    const json& b = o.at("box");
    if (!b.is_array()) o.fail("'box' must be an array of [lo, hi]");
    for (const auto& iv : b) t.box.push_back(parse_interval(iv, o, "box"));
  }
  t.tolerance = o.num("tolerance", t.tolerance);
  if (o.has("seed")) {
    const json& s = o.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) o.fail("'seed' must be a non-negative integer");
    t.seed = s.get<std::uint64_t>();
  }
  t.blowup_grid = o.integer("blowup_grid", t.blowup_grid);
  o.done();

  if (t.grid_points < 3) o.fail("'grid_points' must be at least 3");
  if (!(t.t_max > 0.0) || !(t.dt > 0.0) || t.dt > t.t_max) o.fail("need 0 < dt <= t_max");
  if (!(t.unbounded_range > 0.0)) o.fail("'unbounded_range' must be positive");
  if (t.samples < 0) o.fail("'samples' must be non-negative");
  if (!(t.tolerance > 0.0)) o.fail("'tolerance' must be positive");
  if (t.blowup_grid < 0) o.fail("'blowup_grid' must be non-negative");
  return t;
}

json task_json(const TaskConfig& t) {
  json j;
  j["command"] = t.command;
  j["mode"] = t.mode;
  j["t"] = t.times;
  json xs = json::array();
  for (const auto& r : t.x_grid) xs.push_back({{"from", r.from}, {"to", r.to}, {"count", r.count}});
  j["x"] = xs;
  j["grid_points"] = t.grid_points;
  j["t_max"] = t.t_max;
  j["dt"] = t.dt;
  j["unbounded_range"] = t.unbounded_range;
  j["samples"] = t.samples;
  j["t_range"] = {t.t_range.lo, t.t_range.hi};
  json box = json::array();
  for (const auto& iv : t.box) box.push_back({iv.lo, iv.hi});
  j["box"] = box;
  j["tolerance"] = t.tolerance;
  j["seed"] = t.seed;
  j["blowup_grid"] = t.blowup_grid;
  return j;
}

void validate(const RunConfig& c) {
  const int n = c.dim();
  const TaskConfig& t = c.task;
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.data && c.data->dim() != n) {
    fail("data has dimension " + std::to_string(c.data->dim()) + " but the force has " + std::to_string(n));
  }
  // A bare period check needs only A; sample verification runs when data is given.
  if (t.command != "period" && !c.data) fail("task '" + t.command + "' needs a data block");
  if (!t.x_grid.empty() && static_cast<int>(t.x_grid.size()) != n) fail("task.x needs one range per dimension");
  if (!t.box.empty() && static_cast<int>(t.box.size()) != n) fail("task.box needs one interval per dimension");
  if (t.command == "solve" || (t.command == "coriolis3d" && t.mode == "solve")) {
    if (t.times.empty()) fail("task.t is required for solve");
    if (t.x_grid.empty()) fail("task.x is required for solve");
  }
  if (t.command == "coriolis3d" && c.problem.preset != "coriolis3d") fail("command coriolis3d needs the coriolis3d preset");
  if (t.command == "period" && c.data && t.samples > 0 && max_abs(c.problem.g) != 0.0) {
    fail("period verification needs g = 0 (the solutions are periodic only without g)");
  }
  if (c.degenerate()) {
    try {
      (void)c.basis();
    } catch (const std::exception& e) {
      fail(std::string("degenerate force: ") + e.what());
    }
  }
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> v;
  if (count == 1) return {from};
  for (int i = 0; i < count; ++i) v.push_back(from + (to - from) * i / (count - 1));
  return v;
}

int RunConfig::dim() const { return static_cast<int>(problem.A.rows()); }

ForceSpec RunConfig::spec() const { return ForceSpec(problem.A, problem.g); }

bool RunConfig::degenerate() const {
  const ForceSpec s = spec();
  return s.degenerate() && !s.a_is_zero();
}

DegenerateBasis RunConfig::basis() const {
  if (problem.preset == "coriolis3d") {
    if (!problem.omega_vec) return coriolis3d_z_basis(problem.omega);
    const Vector& w = *problem.omega_vec;
    if (std::hypot(w(1), w(2)) > 0.0) return coriolis3d_basis(w);
  }
  return build_basis(problem.A);
}

RunConfig parse_config(const json& j, const std::optional<std::string>& command) {
  Obj o(j, "config");
  RunConfig c;
  c.problem = parse_problem(o.at("problem"));
  if (o.has("data")) c.data = parse_data(o.at("data"));
  json task = o.has("task") ? o.at("task") : json::object();
  if (command) {
    if (!task.is_object()) throw ConfigError("task: must be an object");
    task["command"] = *command;
  }
  c.task = parse_task(task);
  o.done();
  validate(c);
  return c;
}

RunConfig parse_config_text(const std::string& text, const std::optional<std::string>& command) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, command);
}

RunConfig load_config(const std::string& path, const std::optional<std::string>& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), command);
}

json to_json(const RunConfig& c) {
  json j;
  j["problem"] = problem_json(c.problem);
  if (c.data) j["data"] = data_json(*c.data);
  j["task"] = task_json(c.task);
  return j;
}

std::string canonical_text(const RunConfig& c) { return to_json(c).dump(); }

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hodo::cli
