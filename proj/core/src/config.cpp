#include "qpeuler/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qpeuler/errors.hpp"

namespace qpeuler {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double num(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) bad(field, "expected true or false");
  return j.get<bool>();
}

std::string str(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> num_array(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(num(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_omega(const json& j, RunConfig& rc) {
  if (!j.is_object()) bad("omega", "expected an object with 'canonical' or 'matrix'");
  check_keys(j, {"canonical", "matrix"}, "omega");
  const json* canonical = find(j, "canonical");
  const json* matrix = find(j, "matrix");
  if ((canonical != nullptr) == (matrix != nullptr)) {
    bad("omega", "give exactly one of 'canonical' or 'matrix'");
  }
  if (canonical != nullptr) {
    if (!canonical->is_object()) bad("omega.canonical", "expected an object");
    check_keys(*canonical, {"unit"}, "omega.canonical");
    const json* unit = find(*canonical, "unit");
    if (unit == nullptr) bad("omega.canonical.unit", "missing");
    const std::vector<double> u = num_array(*unit, "omega.canonical.unit");
    if (u.empty()) bad("omega.canonical.unit", "must be nonempty");
    rc.canonical = true;
    // a direction, not a unit vector: normalized here so e.g. [1, 1.6180...]
    // works without the user spelling out 1/sqrt(...)
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<long>(u.size()));
    const double wn = w.norm();
    if (!std::isfinite(wn) || wn <= 0.0) bad("omega.canonical.unit", "needs a nonzero finite norm");
    rc.omega_unit = w / wn;
    return;
  }
  if (!matrix->is_array() || matrix->empty()) bad("omega.matrix", "expected a nonempty array of rows");
  const std::size_t rows = matrix->size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<double> row =
        num_array((*matrix)[r], "omega.matrix[" + std::to_string(r) + "]");
    if (r == 0) {
      cols = row.size();
      if (cols == 0) bad("omega.matrix[0]", "rows must be nonempty");
      m.resize(static_cast<long>(rows), static_cast<long>(cols));
    } else if (row.size() != cols) {
      bad("omega.matrix[" + std::to_string(r) + "]", "row length differs from row 0");
    }
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<long>(r), static_cast<long>(c)) = row[c];
  }
  rc.canonical = false;
  rc.omega = std::move(m);
}

void parse_initial(const json& j, RunConfig& rc) {
  if (!j.is_object()) bad("initial", "expected an object");
  check_keys(j, {"preset", "amplitudes", "sub_box", "seed", "norm", "modes", "leray_project"},
             "initial");
  const json* preset = find(j, "preset");
  const json* modes = find(j, "modes");
  if ((preset != nullptr) == (modes != nullptr)) {
    bad("initial", "give exactly one of 'preset' or 'modes'");
  }
  if (const json* lp = find(j, "leray_project")) {
    rc.leray_project_initial = boolean(*lp, "initial.leray_project");
  }
  if (preset != nullptr) {
    rc.preset = str(*preset, "initial.preset");
    if (rc.preset == "shear") {
      const json* amps = find(j, "amplitudes");
      if (amps == nullptr) bad("initial.amplitudes", "missing (required by the shear preset)");
      rc.shear_amps = num_array(*amps, "initial.amplitudes");
      if (rc.shear_amps.empty()) bad("initial.amplitudes", "must be nonempty");
    } else if (rc.preset == "random_divfree") {
      if (const json* sb = find(j, "sub_box")) rc.random_sub_box = integer(*sb, "initial.sub_box");
      if (const json* sd = find(j, "seed")) {
        if (!sd->is_number_integer()) bad("initial.seed", "expected an integer");
        rc.seed = sd->get<std::uint64_t>();
      }
      if (const json* tn = find(j, "norm")) rc.random_norm = num(*tn, "initial.norm");
    } else if (rc.preset != "taylor_green") {
      bad("initial.preset", "unknown preset '" + rc.preset + "'");
    }
    return;
  }
  if (!modes->is_array() || modes->empty()) bad("initial.modes", "expected a nonempty array");
  for (std::size_t i = 0; i < modes->size(); ++i) {
    const std::string where = "initial.modes[" + std::to_string(i) + "]";
    const json& e = (*modes)[i];
    if (!e.is_object()) bad(where, "expected an object {m, coeff}");
    check_keys(e, {"m", "coeff"}, where);
    const json* m = find(e, "m");
    const json* coeff = find(e, "coeff");
    if (m == nullptr) bad(where + ".m", "missing");
    if (coeff == nullptr) bad(where + ".coeff", "missing");
    InitialModeEntry entry;
    for (const double v : num_array(*m, where + ".m")) {
      if (v != static_cast<std::int32_t>(v)) bad(where + ".m", "entries must be integers");
      entry.m.push_back(static_cast<std::int32_t>(v));
    }
    if (!coeff->is_array() || coeff->empty()) bad(where + ".coeff", "expected [[re, im], ...]");
    for (std::size_t k = 0; k < coeff->size(); ++k) {
      const std::vector<double> pair =
          num_array((*coeff)[k], where + ".coeff[" + std::to_string(k) + "]");
      if (pair.size() != 2) bad(where + ".coeff[" + std::to_string(k) + "]", "expected [re, im]");
      entry.coeff.push_back(Complex(pair[0], pair[1]));
    }
    rc.modes.push_back(std::move(entry));
  }
}

void parse_solver(const json& j, RunConfig& rc) {
  if (!j.is_object()) bad("solver", "expected an object");
  check_keys(j,
             {"mode", "dt", "t_end", "grid", "inversion", "snapshot_every", "diagnostics_every"},
             "solver");
  if (const json* v = find(j, "mode")) {
    rc.mode = str(*v, "solver.mode");
    if (rc.mode != "eulerian" && rc.mode != "lagrangian") {
      bad("solver.mode", "expected 'eulerian' or 'lagrangian'");
    }
  }
  if (const json* v = find(j, "dt")) rc.dt = num(*v, "solver.dt");
  if (const json* v = find(j, "t_end")) rc.t_end = num(*v, "solver.t_end");
  if (const json* v = find(j, "grid")) rc.grid_points = integer(*v, "solver.grid");
  if (const json* v = find(j, "inversion")) {
    rc.inversion = str(*v, "solver.inversion");
    if (rc.inversion != "strict" && rc.inversion != "per_step") {
      bad("solver.inversion", "expected 'strict' or 'per_step'");
    }
  }
  if (const json* v = find(j, "snapshot_every")) {
    rc.snapshot_every = integer(*v, "solver.snapshot_every");
    if (rc.snapshot_every < 0) bad("solver.snapshot_every", "must be >= 0");
  }
  if (const json* v = find(j, "diagnostics_every")) {
    rc.diagnostics_every = integer(*v, "solver.diagnostics_every");
    if (rc.diagnostics_every < 1) bad("solver.diagnostics_every", "must be >= 1");
  }
}

void parse_tolerances(const json& j, RunConfig& rc) {
  if (!j.is_object()) bad("tolerances", "expected an object");
  check_keys(j, {"div", "newton", "aliasing", "nonresonance"}, "tolerances");
  if (const json* v = find(j, "div")) rc.div_tol = num(*v, "tolerances.div");
  if (const json* v = find(j, "newton")) rc.newton_tol = num(*v, "tolerances.newton");
  if (const json* v = find(j, "aliasing")) rc.aliasing_threshold = num(*v, "tolerances.aliasing");
  if (const json* v = find(j, "nonresonance")) {
    rc.nonresonance_tol = num(*v, "tolerances.nonresonance");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"omega", "K", "norm", "initial", "solver", "seeds", "tolerances", "allow_resonant",
              "output_dir"},
             "");

  RunConfig rc;
  rc.raw = text;

  const json* omega = find(j, "omega");
  if (omega == nullptr) bad("omega", "missing");
  parse_omega(*omega, rc);

  const json* K = find(j, "K");
  if (K == nullptr) bad("K", "missing");
  rc.K = integer(*K, "K");
  if (rc.K < 0) bad("K", "must be >= 0");

  if (const json* norm = find(j, "norm")) {
    if (!norm->is_object()) bad("norm", "expected an object {l, s}");
    check_keys(*norm, {"l", "s"}, "norm");
    if (const json* l = find(*norm, "l")) rc.norm.l = integer(*l, "norm.l");
    if (const json* s = find(*norm, "s")) rc.norm.s = num(*s, "norm.s");
  }

  const json* initial = find(j, "initial");
  if (initial == nullptr) bad("initial", "missing");
  parse_initial(*initial, rc);

  if (const json* solver = find(j, "solver")) parse_solver(*solver, rc);

  if (const json* seeds = find(j, "seeds")) {
    if (!seeds->is_array()) bad("seeds", "expected an array of points");
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      const std::vector<double> p = num_array((*seeds)[i], "seeds[" + std::to_string(i) + "]");
      if (p.empty()) bad("seeds[" + std::to_string(i) + "]", "must be nonempty");
      rc.trajectory_seeds.push_back(
          Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<long>(p.size())));
    }
  }

  if (const json* tol = find(j, "tolerances")) parse_tolerances(*tol, rc);
  if (const json* ar = find(j, "allow_resonant")) {
    rc.allow_resonant = boolean(*ar, "allow_resonant");
  }
  if (const json* od = find(j, "output_dir")) rc.out_dir = str(*od, "output_dir");

  if (!(rc.dt > 0.0)) bad("solver.dt", "must be positive");
  if (rc.t_end < 0.0) bad("solver.t_end", "must be >= 0");
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

SolverConfig solver_config(const RunConfig& rc) {
  SolverConfig sc;
  sc.dt = rc.dt;
  sc.t_end = rc.t_end;
  sc.div_tol = rc.div_tol;
  sc.energy_report_every = rc.diagnostics_every;
  sc.norm = rc.norm;
  sc.grid_points_per_dim = rc.grid_points;
  sc.inversion = rc.inversion == "per_step" ? InversionPolicy::per_step : InversionPolicy::strict;
  sc.newton_tol = rc.newton_tol;
  sc.newton_max_iter = 50;
  sc.aliasing_threshold = rc.aliasing_threshold;
  return sc;
}

}  // namespace qpeuler
