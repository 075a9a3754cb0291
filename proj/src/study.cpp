#include "plaque/study.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "plaque/errors.hpp"

namespace plaque {

namespace {

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string short_format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Job {
  std::string label;
  SimConfig config;
  double final_U = 0.0;
  double seconds = 0.0;
};

void run_jobs(std::vector<Job>& jobs, int threads,
              const std::function<void(const std::string&, const MultiscaleResult&)>& on_cell) {
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        const auto result = run_multiscale(jobs[i].config);
        jobs[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        jobs[i].final_U = result.state.U;
        if (on_cell) on_cell(jobs[i].label, result);
      } catch (Error& e) {
        e.add_context("study cell " + jobs[i].label);
        failures[i] = std::current_exception();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace

const char* to_string(StudyAxis axis) {
  switch (axis) {
    case StudyAxis::dt: return "dt";
    case StudyAxis::macro_dt: return "dT";
    case StudyAxis::epsilon: return "eps";
  }
  return "?";
}

StudyAxis parse_study_axis(const std::string& text) {
  if (text == "dt") return StudyAxis::dt;
  if (text == "dT") return StudyAxis::macro_dt;
  if (text == "eps" || text == "epsilon") return StudyAxis::epsilon;
  throw InvariantViolation("unknown study axis '" + text + "' (expected dt, dT or eps)");
}

SimConfig with_axis_value(SimConfig config, StudyAxis axis, double value) {
  switch (axis) {
    case StudyAxis::dt: config.dt = value; break;
    case StudyAxis::macro_dt: config.macro_dt = value; break;
    case StudyAxis::epsilon: config.epsilon = value; break;
  }
  return config;
}

void compute_orders(ConvergenceReport& report) {
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    row.order.reset();
    if (i == 0) continue;
    const auto& prev = report.rows[i - 1];
    row.order = std::log2(prev.error / row.error) / std::log2(prev.value / row.value);
  }
}

ConvergenceReport convergence_study(
    const SimConfig& base, StudyAxis axis, std::vector<double> values, const SimConfig& reference, int threads,
    const std::function<void(const std::string& label, const MultiscaleResult&)>& on_cell) {
  if (values.empty()) throw InvariantViolation("study: no values");
  std::sort(values.begin(), values.end(), std::greater<>());
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
    throw InvariantViolation("study: repeated value");
  }
  const double smallest = values.back();
  switch (axis) {
    case StudyAxis::dt:
      if (!(reference.dt < smallest)) throw InvariantViolation("study: reference dt must be finer than every value");
      break;
    case StudyAxis::macro_dt:
      if (!(reference.macro_dt < smallest)) {
        throw InvariantViolation("study: reference dT must be finer than every value");
      }
      break;
    case StudyAxis::epsilon:
      if (!(reference.dt <= base.dt && reference.macro_dt <= base.macro_dt) ||
          (reference.dt == base.dt && reference.macro_dt == base.macro_dt)) {
        throw InvariantViolation("study: reference (dt, dT) must be finer than the base");
      }
      break;
  }

  std::vector<Job> jobs;
  for (double v : values) {
    jobs.push_back({std::string(to_string(axis)) + "=" + format(v), with_axis_value(base, axis, v)});
  }
  if (axis == StudyAxis::epsilon) {
    for (double v : values) {
      jobs.push_back({"reference eps=" + format(v), with_axis_value(reference, axis, v)});
    }
  } else {
    jobs.push_back({"reference", reference});
  }
  for (auto& job : jobs) job.config.validate();
  run_jobs(jobs, threads, on_cell);

  ConvergenceReport report;
  report.axis = axis;
  std::ostringstream ref;
  ref << "dt=" << format(reference.dt) << " dT=" << format(reference.macro_dt);
  if (axis == StudyAxis::epsilon) {
    ref << " at each eps";
  } else {
    ref << " eps=" << format(reference.epsilon);
  }
  ref << " T=" << format(reference.horizon);
  report.reference = ref.str();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Job& ref_job = (axis == StudyAxis::epsilon) ? jobs[values.size() + i] : jobs[values.size()];
    ConvergenceRow row;
    row.value = values[i];
    row.U = jobs[i].final_U;
    row.reference_U = ref_job.final_U;
    row.error = std::abs(row.U - row.reference_U);
    row.seconds = jobs[i].seconds;
    report.rows.push_back(row);
  }
  compute_orders(report);
  return report;
}

void write_report_csv(const ConvergenceReport& report, std::ostream& out) {
  out << "axis,value,U,U_ref,error,order,seconds\n";
  for (const auto& r : report.rows) {
    out << to_string(report.axis) << ',' << format(r.value) << ',' << format(r.U) << ',' << format(r.reference_U)
        << ',' << format(r.error) << ',' << (r.order ? format(*r.order) : "") << ',' << format(r.seconds) << '\n';
  }
}

void write_report_table(const ConvergenceReport& report, std::ostream& out) {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({to_string(report.axis), "U(T)", "error", "order", "seconds"});
  for (const auto& r : report.rows) {
    char order[16] = "";
    if (r.order) std::snprintf(order, sizeof order, "%.2f", *r.order);
    char err[32];
    std::snprintf(err, sizeof err, "%.3e", r.error);
    char sec[32];
    std::snprintf(sec, sizeof sec, "%.1f", r.seconds);
    cells.push_back({short_format(r.value), short_format(r.U), err, order, sec});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : cells) {
    for (int c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  out << "reference: " << report.reference << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (int c = 0; c < 5; ++c) {
      if (c) out << "  ";
      const auto& s = cells[i][c];
      out << std::string(width[c] - s.size(), ' ') << s;
    }
    out << '\n';
  }
}

}  // namespace plaque
