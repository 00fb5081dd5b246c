#include "hodo_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "hodo/blowup.hpp"
#include "hodo/degenerate.hpp"
#include "hodo/oracle.hpp"
#include "hodo/periodicity.hpp"

namespace hodo::cli {

namespace {

// A problem ready to solve. Rank-deficient forces carry their basis; the
// scan problem is then the rotated one (force f + B v), where the data lives.
struct Setup {
  ForceSpec spec;
  InitialData data;
  std::optional<DegenerateBasis> basis;
  HodographProblem problem;
  HodographProblem scan_problem;
};

Setup make_setup(const RunConfig& c, int grid_points) {
  const ForceSpec spec = c.spec();
  const InitialData& data = *c.data;
  SolverOptions opt;
  opt.grid_points = std::max(3, grid_points);
  std::optional<DegenerateBasis> basis;
  if (c.degenerate()) basis = c.basis();
  HodographProblem p(spec, data, opt);
  HodographProblem scan = basis ? HodographProblem(ForceSpec(basis->B, basis->L * spec.g()), data, opt) : p;
  return Setup{spec, data, basis, p, scan};
}

SolveResult solve_at(const Setup& s, double t, const Vector& x) {
  return s.basis ? degenerate_solve(s.problem, *s.basis, t, x) : solve_u(s.problem, t, x);
}

int auto_grid(int n) {
  if (n == 1) return 1001;
  if (n == 2) return 201;
  return 31;
}

// First catastrophe over the data's M-domain within (0, t_max]; x and u in
// original coordinates.
std::optional<Catastrophe> first_catastrophe(const Setup& s, double t_max, double dt, double unbounded_range) {
  if (!(t_max > 0.0)) return std::nullopt;
  ScanOptions opt;
  opt.t_max = t_max;
  opt.dt = std::min(dt, t_max);
  const auto grid = m_grid(s.scan_problem.data(), s.scan_problem.options().grid_points, unbounded_range);
  auto c = min_blowup_time(s.scan_problem, scan_blowup(s.scan_problem, grid, opt));
  if (c && s.basis) {
    c->x = s.basis->P * c->x;
    c->u = s.basis->P * c->u;
  }
  return c;
}

bool past(double t, const std::optional<Catastrophe>& c) {
  return c && t > c->t * (1.0 + 1e-9) + 1e-12;
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Uniform doubles from the raw 64-bit stream, identical on every platform.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 gen_;
};

std::vector<Interval> sampling_box(const RunConfig& c) {
  if (!c.task.box.empty()) return c.task.box;
  return std::vector<Interval>(static_cast<std::size_t>(c.dim()), Interval{-1.0, 1.0});
}

Vector draw_point(Sampler& s, const std::vector<Interval>& box, const InitialData& data) {
  Vector x(static_cast<Eigen::Index>(box.size()));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (std::size_t i = 0; i < box.size(); ++i) x(static_cast<Eigen::Index>(i)) = s.uniform(box[i].lo, box[i].hi);
    if (data.x_in_domain(x)) return x;
  }
  throw ConfigError("task.box does not intersect the spatial domain of the data");
}

std::string header(const RunConfig& c, const std::string& command) {
  std::string h = "# hodo " + command + "\n";
  h += "# config-hash: " + config_hash(c) + "\n";
  h += "# config: " + canonical_text(c) + "\n";
  return h;
}

std::string join_vec(const Vector& v, char sep = ',') {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_number(v(i));
  }
  return s;
}

std::string names(const char* prefix, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ',';
    s += prefix + std::to_string(i);
  }
  return s;
}

std::vector<Vector> tensor_points(const std::vector<Range>& ranges) {
  std::vector<Vector> pts{Vector(0)};
  for (const auto& r : ranges) {
    std::vector<Vector> next;
    for (const auto& p : pts) {
      for (double v : r.values()) {
        Vector q(p.size() + 1);
        q.head(p.size()) = p;
        q(p.size()) = v;
        next.push_back(q);
      }
    }
    pts = std::move(next);
  }
  return pts;
}

std::string catastrophe_summary(const std::optional<Catastrophe>& c) {
  if (!c) return "t_star=none\n";
  std::string s;
  s += "t_star=" + format_number(c->t) + "\n";
  s += "branch=" + c->branch + "\n";
  s += "M_star=" + join_vec(c->M, ' ') + "\n";
  s += "x_star=" + join_vec(c->x, ' ') + "\n";
  s += "u_star=" + join_vec(c->u, ' ') + "\n";
  return s;
}

std::string certificate_status(const Setup& s) {
  const HodographProblem& p = s.scan_problem;
  if (p.dim() == 1) {
    const Certificate cert = certify_no_blowup_1d(p);
    return cert.certified ? "CERTIFIED" : "NOT_CERTIFIED";
  }
  if (p.spec().scalar_a() && !p.data().has_constant()) {
    std::string out;
    for (int k = 0; k < p.dim(); ++k) {
      if (k) out += ';';
      out += "tau" + std::to_string(k) + ":" + (certify_branch_absent(p, k).certified ? "CERTIFIED" : "NOT_CERTIFIED");
    }
    return out;
  }
  return "NOT_APPLICABLE";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CommandOutput cmd_solve(const RunConfig& c, const RunOptions& o) {
  const TaskConfig& t = c.task;
  const int n = c.dim();
  const Setup s = make_setup(c, t.blowup_grid > 0 ? t.blowup_grid : auto_grid(n));
  const double t_hi = *std::max_element(t.times.begin(), t.times.end());
  const auto cat = first_catastrophe(s, t_hi * (1.0 + 1e-6) + 1e-9, t.dt, t.unbounded_range);

  const auto xs = tensor_points(t.x_grid);
  struct Cell {
    double t;
    Vector x;
    SolveResult r;
    std::string status;
  };
  std::vector<Cell> cells;
  for (double tt : t.times)
    for (const auto& x : xs) cells.push_back({tt, x, {}, {}});

  parallel_for(cells.size(), o.threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    cell.r = solve_at(s, cell.t, cell.x);
    if (cell.r.status == SolveStatus::JacobianSingular) {
      cell.status = "BLOWUP";
    } else if (past(cell.t, cat)) {
      cell.status = "POST_BLOWUP";
    } else {
      cell.status = to_string(cell.r.status);
    }
  });

  CommandOutput out;
  std::ostringstream csv;
  csv << header(c, "solve");
  csv << "t," << names("x", n) << ',' << names("u", n) << ",newton_iters,status\n";
  int failed = 0;
  for (const auto& cell : cells) {
    const bool has_u = cell.r.ok() || cell.status == "POST_BLOWUP";
    const Vector u = has_u ? cell.r.state.u : Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    csv << format_number(cell.t) << ',' << join_vec(cell.x) << ',' << join_vec(u) << ',' << cell.r.iterations << ','
        << cell.status << '\n';
    if (cell.status != "CONVERGED" && cell.status != "POST_BLOWUP" && cell.status != "BLOWUP") ++failed;
  }
  out.body = csv.str();
  out.summary = "cells=" + std::to_string(cells.size()) + "\nfailed=" + std::to_string(failed) + "\n" +
                catastrophe_summary(cat);
  out.exit_code = failed ? kSolverFailure : kOk;
  return out;
}

CommandOutput cmd_blowup(const RunConfig& c, const RunOptions&) {
  const TaskConfig& t = c.task;
  const Setup s = make_setup(c, t.grid_points);
  ScanOptions opt;
  opt.t_max = t.t_max;
  opt.dt = t.dt;
  const auto grid = m_grid(s.scan_problem.data(), t.grid_points, t.unbounded_range);
  const auto sheets = scan_blowup(s.scan_problem, grid, opt);
  auto cat = min_blowup_time(s.scan_problem, sheets);
  if (cat && s.basis) {
    cat->x = s.basis->P * cat->x;
    cat->u = s.basis->P * cat->u;
  }

  const int n = c.dim();
  std::ostringstream csv;
  csv << header(c, "blowup");
  csv << "branch," << names("M", n) << ",t\n";
  for (const auto& sh : sheets) {
    for (const auto& smp : sh.samples) {
      if (!smp.t) continue;
      csv << sh.branch << ',' << join_vec(smp.M) << ',' << format_number(*smp.t) << '\n';
    }
  }
  std::string summary = catastrophe_summary(cat);
  for (const auto& sh : sheets) {
    summary += "sheet." + sh.branch + ".present=" + std::to_string(sh.present_count()) + "\n";
    if (sh.extremum) {
      summary += "sheet." + sh.branch + ".extremum=" + format_number(sh.extremum->t) +
                 (sh.extremum->kind == ExtremumKind::Min ? " min" : " max") + "\n";
    }
  }
  summary += "certificate=" + certificate_status(s) + "\n";
  std::istringstream lines(summary);
  for (std::string line; std::getline(lines, line);) csv << "# summary " << line << '\n';

  CommandOutput out;
  out.body = csv.str();
  out.summary = summary;
  return out;
}

CommandOutput cmd_period(const RunConfig& c, const RunOptions& o) {
  const PeriodicityReport rep = check_periodic(c.problem.A);
  std::ostringstream r;
  r << "# hodo period\n# config-hash: " << config_hash(c) << "\n";
  r << "periodic: " << (rep.periodic ? "yes" : "no") << "\n";
  if (!rep.periodic) r << "reason: " << rep.reason << "\n";
  for (const auto& e : rep.ratios) {
    r << "eigenvalue: " << format_number(e.eigenvalue.real()) << " " << format_number(e.eigenvalue.imag())
      << " ratio " << e.p << "/" << e.q << "\n";
  }
  if (rep.periodic) {
    r << "lambda_ref: " << format_number(rep.lambda_ref) << "\n";
    r << "period: " << format_number(*rep.period) << "\n";
    const Matrix e = mat_exp(c.problem.A, *rep.period);
    r << "exp_residual: " << format_number(max_abs(e - Matrix::Identity(e.rows(), e.cols()))) << "\n";
  }
  if (rep.periodic && c.data && c.task.samples > 0) {
    const Setup s = make_setup(c, auto_grid(c.dim()));
    Sampler smp(o.seed.value_or(c.task.seed));
    const auto box = sampling_box(c);
    std::vector<std::pair<double, Vector>> pts;
    for (int i = 0; i < c.task.samples; ++i) {
      const double tt = smp.uniform(c.task.t_range.lo, c.task.t_range.hi);
      pts.emplace_back(tt, draw_point(smp, box, c.data.value()));
    }
    const PeriodVerification v = verify_solution_period(s.problem, *rep.period, pts, c.task.tolerance);
    r << "verification: " << (v.passed ? "passed" : "failed") << "\n";
    r << "verification_points: " << v.points.size() << "\n";
    r << "verification_max_difference: " << format_number(v.max_difference) << "\n";
    for (const auto& pt : v.points) {
      if (!pt.failure.empty()) r << "verification_note: t=" << format_number(pt.t) << " " << pt.failure << "\n";
    }
  }
  CommandOutput out;
  out.body = r.str();
  out.summary = std::string("periodic=") + (rep.periodic ? "yes" : "no") + "\n";
  if (rep.periodic) out.summary += "period=" + format_number(*rep.period) + "\n";
  return out;
}

CommandOutput cmd_compare(const RunConfig& c, const RunOptions& o) {
  const TaskConfig& t = c.task;
  const int n = c.dim();
  const Setup s = make_setup(c, t.blowup_grid > 0 ? t.blowup_grid : auto_grid(n));
  const auto cat = first_catastrophe(s, t.t_range.hi * (1.0 + 1e-6) + 1e-9, t.dt, t.unbounded_range);

  Sampler smp(o.seed.value_or(t.seed));
  const auto box = sampling_box(c);
  struct Sample {
    double t;
    Vector x0;
    FlowResult flow;
    double error = 0.0;
    std::string status;
  };
  std::vector<Sample> samples;
  for (int i = 0; i < t.samples; ++i) {
    Sample sm;
    sm.t = smp.uniform(t.t_range.lo, t.t_range.hi);
    sm.x0 = draw_point(smp, box, s.data);
    samples.push_back(std::move(sm));
  }

  parallel_for(samples.size(), o.threads, [&](std::size_t i) {
    Sample& sm = samples[i];
    const Vector v0 = s.data.u0(sm.x0);
    const Vector x0 = s.basis ? Vector(s.basis->P * sm.x0) : sm.x0;
    const Vector u0 = s.basis ? Vector(s.basis->P * v0) : v0;
    sm.flow = exact_flow(s.spec, x0, u0, sm.t);
    if (past(sm.t, cat)) {
      sm.status = "POST_BLOWUP";
      sm.error = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const SolveResult r = solve_at(s, sm.t, sm.flow.x);
    sm.status = to_string(r.status);
    sm.error = r.ok() ? max_abs(r.state.u - sm.flow.u) : std::numeric_limits<double>::infinity();
  });

  std::ostringstream csv;
  csv << header(c, "compare");
  csv << "sample,t," << names("start_x", n) << ',' << names("x", n) << ",error,status\n";
  double worst = 0.0;
  int gated = 0;
  int excluded = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& sm = samples[i];
    csv << i << ',' << format_number(sm.t) << ',' << join_vec(sm.x0) << ',' << join_vec(sm.flow.x) << ','
        << format_number(sm.error) << ',' << sm.status << '\n';
    if (sm.status == "POST_BLOWUP") {
      ++excluded;
      continue;
    }
    ++gated;
    worst = std::max(worst, sm.error);
  }
  CommandOutput out;
  out.body = csv.str();
  out.summary = "samples=" + std::to_string(samples.size()) + "\ngated=" + std::to_string(gated) +
                "\npost_blowup=" + std::to_string(excluded) + "\nmax_error=" + format_number(worst) +
                "\ntolerance=" + format_number(t.tolerance) + "\n" + catastrophe_summary(cat);
  out.exit_code = worst <= t.tolerance ? kOk : kGateFailure;
  out.summary += std::string("gate=") + (out.exit_code == kOk ? "PASS" : "FAIL") + "\n";
  return out;
}

CommandOutput run(const RunConfig& c, const RunOptions& o) {
  const std::string& cmd = c.task.command;
  try {
    if (cmd == "solve") return cmd_solve(c, o);
    if (cmd == "blowup") return cmd_blowup(c, o);
    if (cmd == "period") return cmd_period(c, o);
    if (cmd == "compare") return cmd_compare(c, o);
    if (cmd == "coriolis3d") return c.task.mode == "blowup" ? cmd_blowup(c, o) : cmd_solve(c, o);
  } catch (const ConfigError& e) {
    return {kConfigError, "", std::string("config error: ") + e.what() + "\n"};
  } catch (const std::exception& e) {
    return {kSolverFailure, "", std::string("solver failure: ") + e.what() + "\n"};
  }
  return {kConfigError, "", "config error: unknown command '" + cmd + "'\n"};
}

}  // namespace hodo::cli
