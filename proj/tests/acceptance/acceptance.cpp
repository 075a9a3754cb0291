// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "plaque/config.hpp"
#include "plaque/errors.hpp"
#include "plaque/growth.hpp"
#include "plaque/periodic.hpp"
#include "plaque/study.hpp"

using namespace plaque;

namespace {

// criterion bands and tolerances
constexpr double kMicroOrderLow = 0.8, kMicroOrderHigh = 1.2;
constexpr double kDtOrderLow = 0.75, kDtOrderHigh = 1.3;
constexpr double kMacroOrderLow = 0.75, kMacroOrderHigh = 1.3;
constexpr double kEpsOrderLow = 0.8, kEpsOrderHigh = 1.2;
constexpr double kPoiseuilleTolerance = 1e-8;
constexpr double kDivergenceTolerance = 1e-9;
constexpr double kPeriodicTolerance = 1e-6;
constexpr double kRatioLow = 1.5, kRatioHigh = 3.0;
constexpr double kZeroFlowTolerance = 1e-14;

// scaled regime: eps * T as in the full experiment
constexpr double kScaledEpsilon = 2e-3;
constexpr double kScaledHorizon = 4.8e3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// evidence shared by criteria 6 to 8
struct Ledger {
  double max_divergence = 0.0;
  long steps = 0;
  int periodic_solves = 0;
  int residual_violations = 0;
  int verification_violations = 0;
  std::vector<std::string> failed_runs;
  int histories = 0;
  std::vector<std::string> growth_violations;

  void record(const SolveStats& s) {
    max_divergence = std::max(max_divergence, s.max_divergence_residual);
    steps += s.steps;
  }

  void record(const std::string& label, const SimConfig& c, const MultiscaleResult& r) {
    record(r.stats);
    ++histories;
    double prev = c.u0;
    for (const auto& rec : r.state.history) {
      if (c.flow == FlowModel::pulsatile) {
        ++periodic_solves;
        if (!(rec.residual <= kPeriodicTolerance)) ++residual_violations;
        if (c.verify_periodicity && !(rec.verification_change >= 0.0 && rec.verification_change <= 2.0 * kPeriodicTolerance)) {
          ++verification_violations;
        }
      }
      if (!(rec.U > prev)) growth_violations.push_back(label + ": U not increasing at m=" + std::to_string(rec.m));
      if (!(rec.R_avg > 0.0 && rec.R_avg <= 1.0)) {
        growth_violations.push_back(label + ": R_avg outside (0,1] at m=" + std::to_string(rec.m));
      }
      prev = rec.U;
    }
    if (!(r.state.U <= c.u0 + c.epsilon * c.horizon)) growth_violations.push_back(label + ": U_M above u0 + eps T");
  }
};

Ledger ledger;

using Clock = std::chrono::steady_clock;

void progress(const char* fmt, const std::string& text) { std::fprintf(stderr, fmt, text.c_str()); }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string join(const std::vector<double>& v, int digits = 3) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fixed(v[i], digits);
  return s;
}

bool within(const std::vector<double>& orders, double lo, double hi) {
  return !orders.empty() &&
         std::all_of(orders.begin(), orders.end(), [&](double o) { return std::isfinite(o) && o >= lo && o <= hi; });
}

SimConfig scaled_config() {
  SimConfig c;
  c.epsilon = kScaledEpsilon;
  c.horizon = kScaledHorizon;
  c.macro_dt = 50.0;
  c.dt = 1.0 / 32.0;
  c.periodic_tolerance = kPeriodicTolerance;
  c.verify_periodicity = true;
  return c;
}

std::shared_ptr<const FunctionSpace> reference_space() {
  const SimConfig c;
  return std::make_shared<const FunctionSpace>(build_reference_mesh(c.half_length, c.half_height, c.nx, c.ny));
}

// runs a study and converts its report into an outcome; a failing cell fails the criterion
Outcome study_outcome(const SimConfig& base, StudyAxis axis, const std::vector<double>& values,
                      const SimConfig& reference, double lo, double hi) {
  auto on_cell = [&](const std::string& label, const MultiscaleResult& r) {
    // the cell's config is recovered from its label
    SimConfig c = label.rfind("reference", 0) == 0 ? reference : base;
    const auto eq = label.find('=');
    if (eq != std::string::npos) c = with_axis_value(c, axis, std::stod(label.substr(eq + 1)));
    ledger.record(label, c, r);
    progress("  cell %s done\n", label + ": U(T) = " + fixed(r.state.U, 6));
  };
  try {
    const auto report = convergence_study(base, axis, values, reference, 1, on_cell);
    std::vector<double> orders, errors;
    for (const auto& row : report.rows) {
      errors.push_back(row.error);
      if (row.order) orders.push_back(*row.order);
    }
    std::string errs;
    for (double e : errors) errs += (errs.empty() ? "" : ", ") + sci(e);
    return {within(orders, lo, hi), "errors " + errs + "; orders " + join(orders, 2) + " (band [" + fixed(lo, 2) +
                                        ", " + fixed(hi, 2) + "])"};
  } catch (const std::exception& e) {
    ledger.failed_runs.push_back(std::string(to_string(axis)) + " study: " + e.what());
    return {false, std::string("study did not complete: ") + e.what()};
  }
}

Outcome criterion1() {
  const auto space = reference_space();
  const SimConfig c;
  const FlowParams params = c.flow_params();
  auto end_field = [&](int steps) {
    const auto traj = run_one_period(FlowField::zero(space), steps, params, BoundaryMode::channel);
    ledger.record(traj.stats);
    return traj.end();
  };
  const auto reference = end_field(128);
  std::vector<double> errors;
  for (int steps : {8, 16, 32}) errors.push_back(field_difference_norm(end_field(steps), reference, NormKind::h1));
  std::vector<double> orders;
  for (std::size_t i = 1; i < errors.size(); ++i) orders.push_back(std::log2(errors[i - 1] / errors[i]));
  return {within(orders, kMicroOrderLow, kMicroOrderHigh),
          "H1 errors of v(1) " + sci(errors[0]) + ", " + sci(errors[1]) + ", " + sci(errors[2]) + " against dt=1/128; orders " +
              join(orders, 2) + " (band [0.80, 1.20])"};
}

Outcome criterion2() {
  const SimConfig base = scaled_config();
  SimConfig reference = base;
  reference.dt = 1.0 / 128.0;
  return study_outcome(base, StudyAxis::dt, {1.0 / 8, 1.0 / 16, 1.0 / 32}, reference, kDtOrderLow, kDtOrderHigh);
}

Outcome criterion3() {
  const SimConfig base = scaled_config();
  SimConfig reference = base;
  reference.macro_dt = 25.0;
  return study_outcome(base, StudyAxis::macro_dt, {800, 400, 200, 100}, reference, kMacroOrderLow, kMacroOrderHigh);
}

Outcome criterion4() {
  SimConfig base = scaled_config();
  base.macro_dt = 100.0;
  SimConfig reference = base;
  reference.macro_dt = 25.0;
  reference.dt = 1.0 / 64.0;
  return study_outcome(base, StudyAxis::epsilon, {4e-3, 2e-3, 1e-3}, reference, kEpsOrderLow, kEpsOrderHigh);
}

Outcome criterion5() {
  const auto space = reference_space();
  FlowParams params;
  params.inflow = steady_inflow(20.0, 2.0);
  const auto exact = interpolate(space, [](double, double y) { return Vec2{20.0 * (1.0 - y * y / 4.0), 0.0}; });
  NavierStokesStepper stepper(space, params, BoundaryMode::channel);
  FlowField v = FlowField::zero(space);
  SolveStats stats;
  // geometric ramp of the step, then long steps that damp the transient
  double t = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double dt = std::min(0.1 * std::pow(2.0, k), 1000.0);
    t += dt;
    StepStats s;
    v = stepper.step(v, t, dt, nullptr, &s);
    stats.record(s);
  }
  StepStats s;
  const auto again = stepper.step(exact, 1.0, 1.0 / 32.0, nullptr, &s);
  stats.record(s);
  ledger.record(stats);
  double err = 0.0, fixed_err = 0.0;
  for (std::size_t i = 0; i < exact.velocity.size(); ++i) {
    err = std::max(err, std::abs(v.velocity[i] - exact.velocity[i]));
    fixed_err = std::max(fixed_err, std::abs(again.velocity[i] - exact.velocity[i]));
  }
  return {err <= kPoiseuilleTolerance && fixed_err <= kPoiseuilleTolerance,
          "max coefficient error " + sci(err) + " after stepping to steady state, " + sci(fixed_err) +
              " after one step from the exact profile (tolerance 1e-8)"};
}

Outcome criterion6() {
  return {ledger.steps > 0 && ledger.max_divergence <= kDivergenceTolerance,
          "max ||B v_n|| = " + sci(ledger.max_divergence) + " over " + std::to_string(ledger.steps) +
              " recorded micro steps (tolerance 1e-9)"};
}

Outcome criterion7() {
  const bool ok = ledger.periodic_solves > 0 && ledger.residual_violations == 0 &&
                  ledger.verification_violations == 0 && ledger.failed_runs.empty();
  std::string detail = std::to_string(ledger.periodic_solves) + " periodic solves in completed runs, " +
                       std::to_string(ledger.residual_violations) + " above tau, " +
                       std::to_string(ledger.verification_violations) + " verification changes above 2 tau";
  if (!ledger.failed_runs.empty()) {
    detail += "; " + std::to_string(ledger.failed_runs.size()) + " runs stopped early (first: " +
              ledger.failed_runs.front() + ")";
  }
  return {ok, detail};
}

Outcome criterion8() {
  std::string detail = std::to_string(ledger.histories) + " completed histories checked";
  if (!ledger.growth_violations.empty()) detail += "; first violation: " + ledger.growth_violations.front();
  if (!ledger.failed_runs.empty()) {
    detail += "; " + std::to_string(ledger.failed_runs.size()) + " runs produced no history";
  }
  return {ledger.histories > 0 && ledger.growth_violations.empty(), detail};
}

Outcome criterion9() {
  std::vector<double> gaps;
  std::string detail;
  for (double eps : {4e-3, 2e-3}) {
    SimConfig c;
    c.epsilon = eps;
    c.horizon = std::round(0.96 / eps);
    c.dt = 1.0 / 20.0;
    c.macro_dt = 10.0;
    c.periodic_tolerance = kPeriodicTolerance;
    c.verify_periodicity = true;
    try {
      const auto multi = run_multiscale(c);
      ledger.record("multiscale eps=" + sci(eps), c, multi);
      const auto direct = run_direct(c, c.horizon);
      ledger.record(direct.stats);
      const double gap = std::abs(direct.samples.back().u - multi.state.U);
      gaps.push_back(gap);
      detail += "eps=" + sci(eps) + ": U=" + fixed(multi.state.U, 6) + " u=" + fixed(direct.samples.back().u, 6) +
                " gap " + sci(gap) + "; ";
      progress("  %s\n", detail);
    } catch (const std::exception& e) {
      ledger.failed_runs.push_back("consistency eps=" + sci(eps) + ": " + e.what());
      return {false, std::string("run did not complete: ") + e.what()};
    }
  }
  const double ratio = gaps[0] / gaps[1];
  return {ratio >= kRatioLow && ratio <= kRatioHigh, detail + "ratio " + fixed(ratio, 3) + " (band [1.5, 3.0])"};
}

Outcome criterion10() {
  SimConfig c;
  c.flow = FlowModel::zero;
  c.epsilon = 1e-3;
  c.dt = 1.0 / 20.0;
  c.u0 = 0.0;
  double worst = 0.0;
  double u = c.u0;
  for (int k = 1; k <= 40; ++k) {
    u += c.dt * c.epsilon / (1.0 + u);
    const auto r = run_direct(c, k * c.dt);
    worst = std::max(worst, std::abs(r.samples.back().u - u));
  }

  // eps*T = 2 keeps U near 1.2, clear of the pinch at the half-height
  c.macro_dt = 200.0;
  c.horizon = 2000.0;
  MultiscaleResult multi;
  try {
    multi = run_multiscale(c);
  } catch (const std::exception& e) {
    ledger.failed_runs.push_back(std::string("zero flow: ") + e.what());
    return {false, std::string("run did not complete: ") + e.what()};
  }
  ledger.record("zero flow", c, multi);
  double U = c.u0;
  bool exact = multi.state.history.size() == 10;
  for (const auto& rec : multi.state.history) {
    U = U + c.macro_dt * c.epsilon * (1.0 / (1.0 + U));
    exact = exact && rec.U == U;
  }
  return {worst <= kZeroFlowTolerance && exact,
          "direct run max per-step deviation " + sci(worst) + " (tolerance 1e-14); multiscale recurrence " +
              (exact ? "matches exactly" : "differs")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // 6 to 8 audit the evidence gathered by the others, so they run last
  const std::vector<Criterion> criteria{
      {1, "micro temporal order", criterion1},
      {5, "Poiseuille exactness", criterion5},
      {10, "zero-flow oracle", criterion10},
      {9, "multiscale vs direct", criterion9},
      {2, "dt order of U(T)", criterion2},
      {3, "dT order of U(T)", criterion3},
      {4, "eps order of U(T)", criterion4},
      {6, "incompressibility", criterion6},
      {7, "periodicity", criterion7},
      {8, "growth invariants", criterion8},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    progress("criterion %s ...\n", std::to_string(c.id) + " (" + c.name + ")");
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const std::string line = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) + " (" +
                             c.name + "): " + o.detail + " [" + fixed(secs, 1) + " s]";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    lines.emplace_back(c.id, line);
    if (!o.pass) ++failures;
  }
  std::sort(lines.begin(), lines.end());
  std::printf("\nsummary\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria pass\n", static_cast<int>(lines.size()) - failures, lines.size());
  return failures == 0 ? 0 : 1;
}
