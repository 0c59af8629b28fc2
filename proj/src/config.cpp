#include "opdyn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "opdyn/csv.hpp"

namespace opdyn {

ExperimentKind parse_kind(const std::string& name) {
  if (name == "simulate-finite") return ExperimentKind::simulate_finite;
  if (name == "solve-limit") return ExperimentKind::solve_limit;
  if (name == "coupling-error") return ExperimentKind::coupling_error;
  if (name == "invariant") return ExperimentKind::invariant;
  if (name == "phase-diagram") return ExperimentKind::phase_diagram;
  if (name == "figure1") return ExperimentKind::figure1;
  if (name == "figure2") return ExperimentKind::figure2;
  if (name == "figure3") return ExperimentKind::figure3;
  if (name == "selftest") return ExperimentKind::selftest;
  throw config_error("unknown experiment kind '" + name + "'");
}

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate_finite: return "simulate-finite";
    case ExperimentKind::solve_limit: return "solve-limit";
    case ExperimentKind::coupling_error: return "coupling-error";
    case ExperimentKind::invariant: return "invariant";
    case ExperimentKind::phase_diagram: return "phase-diagram";
    case ExperimentKind::figure1: return "figure1";
    case ExperimentKind::figure2: return "figure2";
    case ExperimentKind::figure3: return "figure3";
    case ExperimentKind::selftest: return "selftest";
  }
  return "?";
}

RateFunction ExperimentConfig::make_rate() const {
  if (model.family == "tanh_plus_one") return RateFunction::tanh_plus_one();
  if (model.family == "exponential") return RateFunction::exponential();
  if (model.family == "tanh_affine") {
    return RateFunction::affine_odd(
        [](double x) { return std::tanh(x); },
        [](double x) {
          const double c = std::cosh(x);
          return 1.0 / (c * c);
        },
        model.affine_b);
  }
  throw config_error("unknown rate family '" + model.family +
                     "' in [model] family");
}

InitialCondition ExperimentConfig::make_initial() const {
  const auto colon = model.initial.find(':');
  const std::string kind = model.initial.substr(0, colon);
  double value = 0.0;
  if (colon != std::string::npos) {
    try {
      value = std::stod(model.initial.substr(colon + 1));
    } catch (const std::exception&) {
      throw config_error("bad numeric parameter in [model] initial '" +
                         model.initial + "'");
    }
  }
  if (kind == "constant") return InitialCondition::constant(value);
  if (kind == "uniform") return InitialCondition::iid_uniform(value);
  if (kind == "two_point") return InitialCondition::iid_two_point(value);
  throw config_error("unknown initial condition '" + model.initial +
                     "' in [model] initial");
}

void ExperimentConfig::validate() const {
  make_rate();
  make_initial();
  if (model.n < 2) throw config_error("[model] n must be >= 2");
  if (!(model.h > 0.0)) throw config_error("[model] h must be > 0");
  if (!(model.horizon > 0.0)) throw config_error("[model] horizon must be > 0");
  if (model.grid_points < 2)
    throw config_error("[model] grid_points must be >= 2");
  if (limit.sample_paths < 1000)
    throw config_error("[limit] sample_paths must be >= 1000");
  if (limit.cells_per_unit_time < 1)
    throw config_error("[limit] cells_per_unit_time must be >= 1");
  if (limit.max_iterations < 1)
    throw config_error("[limit] max_iterations must be >= 1");
  if (coupling.replicas < 1)
    throw config_error("[coupling] replicas must be >= 1");
  for (int n : coupling.ns) {
    if (n < 10) throw config_error("[coupling] ns entries must be >= 10");
  }
  if (invariant.samples < 1)
    throw config_error("[invariant] samples must be >= 1");
  if (!(invariant.spacing > 0.0))
    throw config_error("[invariant] spacing must be > 0");
  if (workers < 1) throw config_error("workers must be >= 1");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "kind=" << kind_name(kind) << ";seed=" << seed << ";workers=" << workers
     << ";family=" << model.family << ";affine_b=" << format_g17(model.affine_b)
     << ";n=" << model.n << ";h=" << format_g17(model.h)
     << ";horizon=" << format_g17(model.horizon)
     << ";initial=" << model.initial << ";grid_points=" << model.grid_points
     << ";record_events=" << model.record_events
     << ";record_actors=" << model.record_actors
     << ";sample_paths=" << limit.sample_paths
     << ";cells_per_unit_time=" << limit.cells_per_unit_time
     << ";tolerance=" << format_g17(limit.tolerance)
     << ";max_iterations=" << limit.max_iterations
     << ";window=" << format_g17(limit.window) << ";ns=";
  for (std::size_t i = 0; i < coupling.ns.size(); ++i)
    os << (i ? "," : "") << coupling.ns[i];
  os << ";replicas=" << coupling.replicas
     << ";gamma=" << format_g17(invariant.gamma)
     << ";residual_tol=" << format_g17(invariant.residual_tol) << ";h_grid=";
  for (std::size_t i = 0; i < invariant.h_grid.size(); ++i)
    os << (i ? "," : "") << format_g17(invariant.h_grid[i]);
  os << ";samples=" << invariant.samples
     << ";spacing=" << format_g17(invariant.spacing)
     << ";burn_in=" << format_g17(invariant.burn_in)
     << ";y0=" << format_g17(invariant.y0)
     << ";density_points=" << invariant.density_points;
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw config_error("trailing characters", line);
    return x;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("expected a number, got '" + v + "'", line);
  }
}

long long parse_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw config_error("trailing characters", line);
    return x;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("expected an integer, got '" + v + "'", line);
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("expected true/false, got '" + v + "'", line);
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ','))
    out.push_back(static_cast<int>(parse_int(trim(item), line)));
  if (out.empty()) throw config_error("empty list", line);
  return out;
}

std::vector<double> parse_double_list(const std::string& v, int line) {
  std::vector<double> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ','))
    out.push_back(parse_double(trim(item), line));
  if (out.empty()) throw config_error("empty list", line);
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw config_error("malformed section header", line_no);
      section = stripped.substr(1, stripped.size() - 2);
      if (section != "experiment" && section != "model" && section != "limit" &&
          section != "coupling" && section != "invariant")
        throw config_error("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw config_error("expected key = value", line_no);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (section.empty())
      throw config_error("key '" + key + "' outside any section", line_no);

    if (section == "experiment") {
      if (key == "kind") cfg.kind = parse_kind(value);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "workers") cfg.workers = static_cast<int>(parse_int(value, line_no));
      else throw config_error("unknown key '" + key + "' in [experiment]", line_no);
    } else if (section == "model") {
      if (key == "family") cfg.model.family = value;
      else if (key == "b") cfg.model.affine_b = parse_double(value, line_no);
      else if (key == "n") cfg.model.n = static_cast<int>(parse_int(value, line_no));
      else if (key == "h") cfg.model.h = parse_double(value, line_no);
      else if (key == "horizon") cfg.model.horizon = parse_double(value, line_no);
      else if (key == "initial") cfg.model.initial = value;
      else if (key == "grid_points") cfg.model.grid_points = static_cast<int>(parse_int(value, line_no));
      else if (key == "record_events") cfg.model.record_events = parse_bool(value, line_no);
      else if (key == "record_actors") cfg.model.record_actors = parse_bool(value, line_no);
      else throw config_error("unknown key '" + key + "' in [model]", line_no);
    } else if (section == "limit") {
      if (key == "sample_paths") cfg.limit.sample_paths = static_cast<int>(parse_int(value, line_no));
      else if (key == "cells_per_unit_time") cfg.limit.cells_per_unit_time = static_cast<int>(parse_int(value, line_no));
      else if (key == "tolerance") cfg.limit.tolerance = parse_double(value, line_no);
      else if (key == "max_iterations") cfg.limit.max_iterations = static_cast<int>(parse_int(value, line_no));
      else if (key == "window") cfg.limit.window = parse_double(value, line_no);
      else throw config_error("unknown key '" + key + "' in [limit]", line_no);
    } else if (section == "coupling") {
      if (key == "ns") cfg.coupling.ns = parse_int_list(value, line_no);
      else if (key == "replicas") cfg.coupling.replicas = static_cast<int>(parse_int(value, line_no));
      else throw config_error("unknown key '" + key + "' in [coupling]", line_no);
    } else if (section == "invariant") {
      if (key == "gamma") cfg.invariant.gamma = parse_double(value, line_no);
      else if (key == "residual_tol") cfg.invariant.residual_tol = parse_double(value, line_no);
      else if (key == "h_grid") cfg.invariant.h_grid = parse_double_list(value, line_no);
      else if (key == "samples") cfg.invariant.samples = static_cast<int>(parse_int(value, line_no));
      else if (key == "spacing") cfg.invariant.spacing = parse_double(value, line_no);
      else if (key == "burn_in") cfg.invariant.burn_in = parse_double(value, line_no);
      else if (key == "y0") cfg.invariant.y0 = parse_double(value, line_no);
      else if (key == "density_points") cfg.invariant.density_points = static_cast<int>(parse_int(value, line_no));
      else throw config_error("unknown key '" + key + "' in [invariant]", line_no);
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace opdyn
