#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plaque/config.hpp"
#include "plaque/growth.hpp"

namespace plaque {

enum class StudyAxis { dt, macro_dt, epsilon };

const char* to_string(StudyAxis axis);
/// "dt", "dT" or "eps"
StudyAxis parse_study_axis(const std::string& text);

struct ConvergenceRow {
  double value = 0.0;
  double U = 0.0;
  double reference_U = 0.0;
  double error = 0.0;
  /// log2(e_{i-1} / e_i) / log2(v_{i-1} / v_i); empty on the first row
  std::optional<double> order;
  double seconds = 0.0;
};

struct ConvergenceReport {
  StudyAxis axis = StudyAxis::dt;
  std::vector<ConvergenceRow> rows;
  std::string reference;
};

/// One multiscale run per value of the axis, each compared at t = T with a
/// reference run. For the dt and dT axes a single `reference` run serves all
/// rows; on the eps axis the reference is rerun at every eps (its dt and dT
/// are kept), so each row measures the discretization error at that eps.
/// Cells run on up to `threads` threads; `on_cell` receives each finished
/// cell's label and history.
ConvergenceReport convergence_study(
    const SimConfig& base, StudyAxis axis, std::vector<double> values, const SimConfig& reference, int threads = 1,
    const std::function<void(const std::string& label, const MultiscaleResult&)>& on_cell = {});

/// Config of one study cell.
SimConfig with_axis_value(SimConfig config, StudyAxis axis, double value);

/// Fills the order column from the values and errors.
void compute_orders(ConvergenceReport& report);

void write_report_csv(const ConvergenceReport& report, std::ostream& out);
void write_report_table(const ConvergenceReport& report, std::ostream& out);

}  // namespace plaque
