#include "plaque/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plaque/errors.hpp"

namespace plaque {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_plain_double(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) throw Error("expected a number, got '" + text + "'");
  return v;
}

// plain number or a fraction p/q such as 1/32
double parse_double(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_plain_double(text);
  const double den = parse_plain_double(trim(text.substr(slash + 1)));
  if (den == 0.0) throw Error("zero denominator in '" + text + "'");
  return parse_plain_double(trim(text.substr(0, slash))) / den;
}

int parse_int(const std::string& text) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) throw Error("expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error("expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

}  // namespace

int SimConfig::steps_per_period() const { return static_cast<int>(std::lround(1.0 / dt)); }

int SimConfig::macro_steps() const {
  const double ratio = horizon / macro_dt;
  const double whole = std::round(ratio);
  if (std::abs(ratio - whole) <= 1e-9 * std::max(1.0, ratio)) return static_cast<int>(whole);
  return static_cast<int>(std::ceil(ratio));
}

double SimConfig::macro_step_length(int m) const {
  const int total = macro_steps();
  if (m < total) return macro_dt;
  return horizon - (total - 1) * macro_dt;
}

ShapeFunction SimConfig::shape_function() const {
  if (shape == "gaussian") return ShapeFunction::gaussian();
  throw InvariantViolation("unknown shape '" + shape + "'");
}

FlowParams SimConfig::flow_params() const {
  FlowParams p;
  p.density = density;
  p.viscosity = viscosity;
  if (flow == FlowModel::pulsatile) p.inflow = pulsatile_inflow(inflow_amplitude, half_height);
  return p;
}

SolverOptions SimConfig::solver_options() const {
  SolverOptions o;
  o.picard_tolerance = picard_tolerance;
  o.max_picard_iterations = max_picard_iterations;
  o.refresh_ratio = picard_refresh_ratio;
  return o;
}

void SimConfig::validate() const {
  require(half_length > 0.0 && half_height > 0.0, "a and b must be positive");
  require(nx >= 1 && ny >= 1, "nx and ny must be at least 1");
  require(shape == "gaussian", "unknown shape '" + shape + "'");
  require(density > 0.0 && viscosity > 0.0, "rho and nu must be positive");
  require(std::isfinite(inflow_amplitude), "amplitude must be finite");
  require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be nonnegative");
  require(sigma0 > 0.0, "sigma0 must be positive");
  require(u0 >= 0.0, "u0 must be nonnegative");
  require(dt > 0.0 && dt <= 1.0, "dt must lie in (0, 1]");
  const double n = 1.0 / dt;
  require(std::abs(n - std::round(n)) <= 1e-9 * n, "1/dt must be an integer (dt = " + format(dt) + ")");
  require(macro_dt >= 1.0, "dT must be at least one period");
  require(horizon > 0.0, "T must be positive");
  require(periodic_tolerance >= 0.0, "tau must be nonnegative");
  require(max_cycles >= 1, "max_cycles must be at least 1");
  require(picard_tolerance > 0.0, "picard_tol must be positive");
  require(max_picard_iterations >= 1, "max_picard must be at least 1");
  require(picard_refresh_ratio > 0.0, "picard_refresh must be positive");
  require(snapshot_phase >= 0.0 && snapshot_phase <= 1.0, "snapshot_phase must lie in [0, 1]");
  for (double t : snapshot_times) require(t >= 0.0 && t <= horizon, "snapshot time " + format(t) + " outside [0, T]");
  require(shape_function()(u0, 0.0) < half_height, "u0 already closes the channel");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "a",       "b",          "nx",         "ny",           "shape",      "rho",
      "nu",      "amplitude",  "flow",       "epsilon",      "sigma0",     "u0",
      "dT",      "dt",         "T",          "tau",          "max_cycles", "picard_tol",
      "max_picard", "picard_refresh", "verify_periodicity", "output_dir", "snapshots", "snapshot_phase"};
  return keys;
}

void set_config_value(SimConfig& c, const std::string& key, const std::string& value) {
  if (key == "a") c.half_length = parse_double(value);
  else if (key == "b") c.half_height = parse_double(value);
  else if (key == "nx") c.nx = parse_int(value);
  else if (key == "ny") c.ny = parse_int(value);
  else if (key == "shape") c.shape = value;
  else if (key == "rho") c.density = parse_double(value);
  else if (key == "nu") c.viscosity = parse_double(value);
  else if (key == "amplitude") c.inflow_amplitude = parse_double(value);
  else if (key == "flow") {
    if (value == "pulsatile") c.flow = FlowModel::pulsatile;
    else if (value == "zero") c.flow = FlowModel::zero;
    else throw Error("flow must be 'pulsatile' or 'zero', got '" + value + "'");
  }
  else if (key == "epsilon") c.epsilon = parse_double(value);
  else if (key == "sigma0") c.sigma0 = parse_double(value);
  else if (key == "u0") c.u0 = parse_double(value);
  else if (key == "dT") c.macro_dt = parse_double(value);
  else if (key == "dt") c.dt = parse_double(value);
  else if (key == "T") c.horizon = parse_double(value);
  else if (key == "tau") c.periodic_tolerance = parse_double(value);
  else if (key == "max_cycles") c.max_cycles = parse_int(value);
  else if (key == "picard_tol") c.picard_tolerance = parse_double(value);
  else if (key == "max_picard") c.max_picard_iterations = parse_int(value);
  else if (key == "picard_refresh") c.picard_refresh_ratio = parse_double(value);
  else if (key == "verify_periodicity") c.verify_periodicity = parse_bool(value);
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "snapshots") c.snapshot_times = parse_list(value);
  else if (key == "snapshot_phase") c.snapshot_phase = parse_double(value);
  else throw UnknownKey(key);
}

SimConfig parse_config(std::istream& in) {
  SimConfig c;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected 'key = value'");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ParseError(number, "missing key");
    try {
      set_config_value(c, key, value);
    } catch (const UnknownKey&) {
      throw;
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(number, key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in);
}

void write_config(const SimConfig& c, std::ostream& out) {
  std::string snapshots;
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) {
    if (i) snapshots += ", ";
    snapshots += format(c.snapshot_times[i]);
  }
  out << "a = " << format(c.half_length) << '\n'
      << "b = " << format(c.half_height) << '\n'
      << "nx = " << c.nx << '\n'
      << "ny = " << c.ny << '\n'
      << "shape = " << c.shape << '\n'
      << "rho = " << format(c.density) << '\n'
      << "nu = " << format(c.viscosity) << '\n'
      << "amplitude = " << format(c.inflow_amplitude) << '\n'
      << "flow = " << (c.flow == FlowModel::zero ? "zero" : "pulsatile") << '\n'
      << "epsilon = " << format(c.epsilon) << '\n'
      << "sigma0 = " << format(c.sigma0) << '\n'
      << "u0 = " << format(c.u0) << '\n'
      << "dT = " << format(c.macro_dt) << '\n'
      << "dt = " << format(c.dt) << '\n'
      << "T = " << format(c.horizon) << '\n'
      << "tau = " << format(c.periodic_tolerance) << '\n'
      << "max_cycles = " << c.max_cycles << '\n'
      << "picard_tol = " << format(c.picard_tolerance) << '\n'
      << "max_picard = " << c.max_picard_iterations << '\n'
      << "picard_refresh = " << format(c.picard_refresh_ratio) << '\n'
      << "verify_periodicity = " << (c.verify_periodicity ? "true" : "false") << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "snapshots = " << snapshots << '\n'
      << "snapshot_phase = " << format(c.snapshot_phase) << '\n';
}

}  // namespace plaque
