#include "scatlab/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json_util.hpp"

namespace scatlab {

using detail::json;
using detail::reject_unknown;

ImagingGrid GridConfig::grid() const {
  if (nx <= 0 || ny <= 0) throw ConfigError("grid.nx and grid.ny must be positive");
  return ImagingGrid(nx, ny, extent, extent * double(ny) / double(nx), center);
}

std::vector<double> SensorConfig::tx_angles() const {
  std::vector<double> tx;
  for (int p = 0; p < P; ++p) tx.push_back(tx_start_deg + 360.0 * p / P);
  return tx;
}

std::vector<double> SensorConfig::rx_angles(int p) const {
  const double origin = rx_relative ? tx_angles()[std::size_t(p)] : 0.0;
  std::vector<double> rx;
  for (int q = 0; q < Q; ++q) rx.push_back(origin + rx_start_deg + rx_step_deg * q);
  return rx;
}

SensorArray SensorConfig::sensors() const {
  if (P < 1 || Q < 1) throw ConfigError("sensors.P and sensors.Q must be positive");
  if (!(radius > 0.0)) throw ConfigError("sensors.radius must be positive");
  if (!(rx_step_deg > 0.0)) throw ConfigError("sensors.rx_step_deg must be positive");
  if (!rx_relative) return circular_array(radius, tx_angles(), rx_angles(0));
  std::vector<std::vector<double>> rx;
  for (int p = 0; p < P; ++p) rx.push_back(rx_angles(p));
  return per_transmitter_array(radius, tx_angles(), rx);
}

FrequencySet RunConfig::frequencies() const {
  std::vector<double> hz;
  for (double g : freqs_ghz) hz.push_back(g * 1e9);
  return FrequencySet(hz);
}

void RunConfig::validate() const {
  const ImagingGrid g = grid.grid();
  sensors.sensors().validate(g);
  if (freqs_ghz.empty()) throw ConfigError("freqs must list at least one frequency");
  (void)frequencies();
  inversion.validate();
  if (!(solver.tolerance > 0.0) || solver.max_iterations < 1) throw ConfigError("invalid solver settings");
  if (forward.lambda.empty()) throw ConfigError("forward.lambda must not be empty");
  if (forward.lambda.size() != 1 && int(forward.lambda.size()) != sensors.P)
    throw ConfigError("forward.lambda needs one entry or one per transmitter");
  if (forward.random_lambda_magnitude) {
    const auto [lo, hi] = *forward.random_lambda_magnitude;
    if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("forward.random_lambda_magnitude must be 0 < lo <= hi");
  }
  if (forward.noise_snr_db < 0.0) throw ConfigError("forward.noise_snr_db must be nonnegative");
  const auto& t = surrogate.training;
  if (t.epochs < 1 || t.batch_size < 1 || !(t.learning_rate > 0.0) || t.patience < 1)
    throw ConfigError("invalid surrogate training settings");
  if (!(t.validation_fraction > 0.0 && t.validation_fraction < 1.0))
    throw ConfigError("surrogate.validation_fraction must lie in (0, 1)");
  for (int h : t.hidden)
    if (h < 1) throw ConfigError("surrogate.layers entries must be positive");
  if (surrogate.n_per_config < 1) throw ConfigError("surrogate.n_per_config must be at least 1");
  for (const auto& name : surrogate.templates) (void)named_scene(name);
}

std::string to_string(CalibrationMode m) {
  switch (m) {
    case CalibrationMode::none: return "none";
    case CalibrationMode::joint: return "joint";
    case CalibrationMode::per_tx: return "per_tx";
  }
  return "?";
}
std::string to_string(LambdaDomain d) { return d == LambdaDomain::real ? "real" : "complex"; }
std::string to_string(SurrogateMode m) { return m == SurrogateMode::neural ? "neural" : "exact_forward"; }
std::string to_string(ChiStep s) { return s == ChiStep::cgd ? "cgd" : "closed_form"; }

CalibrationMode calibration_mode_from_string(const std::string& s) {
  if (s == "none") return CalibrationMode::none;
  if (s == "joint") return CalibrationMode::joint;
  if (s == "per_tx") return CalibrationMode::per_tx;
  throw ConfigError("calibration_mode must be none, joint or per_tx (got '" + s + "')");
}
LambdaDomain lambda_domain_from_string(const std::string& s) {
  if (s == "real") return LambdaDomain::real;
  if (s == "complex") return LambdaDomain::complex;
  throw ConfigError("lambda_domain must be real or complex (got '" + s + "')");
}
SurrogateMode surrogate_mode_from_string(const std::string& s) {
  if (s == "exact_forward") return SurrogateMode::exact_forward;
  if (s == "neural") return SurrogateMode::neural;
  throw ConfigError("surrogate_mode must be exact_forward or neural (got '" + s + "')");
}
ChiStep chi_step_from_string(const std::string& s) {
  if (s == "closed_form") return ChiStep::closed_form;
  if (s == "cgd") return ChiStep::cgd;
  throw ConfigError("chi_step must be closed_form or cgd (got '" + s + "')");
}

namespace {

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + where + "." + key + "' has the wrong type");
  }
}

cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("'" + where + "' must be a number or [re, im]");
}

std::vector<cplx> lambda_from_json(const json& j) {
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    std::vector<cplx> out;
    for (const auto& e : j) out.push_back(complex_from_json(e, "forward.lambda[]"));
    return out;
  }
  return {complex_from_json(j, "forward.lambda")};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"schema", "seed", "execution", "grid", "sensors", "freqs", "scene", "forward", "solver",
                        "inversion", "surrogate"},
                 "");
  RunConfig c;
  if (root.contains("schema") && root["schema"] != kConfigSchema)
    throw ConfigError("unsupported config schema '" + root["schema"].dump() + "', expected " + kConfigSchema);
  read(root, "seed", c.seed, "");
  if (root.contains("execution")) {
    const std::string e = root["execution"].get<std::string>();
    if (e == "serial")
      c.execution = Execution::serial;
    else if (e != "parallel")
      throw ConfigError("execution must be serial or parallel");
  }
  if (root.contains("grid")) {
    const json& g = root["grid"];
    reject_unknown(g, {"nx", "ny", "extent", "center"}, "grid");
    read(g, "nx", c.grid.nx, "grid");
    read(g, "ny", c.grid.ny, "grid");
    read(g, "extent", c.grid.extent, "grid");
    if (g.contains("center")) {
      const auto v = g["center"].get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("grid.center must be [x, y]");
      c.grid.center = {v[0], v[1]};
    }
  }
  if (root.contains("sensors")) {
    const json& s = root["sensors"];
    reject_unknown(s, {"radius", "P", "Q", "tx_start_deg", "rx_start_deg", "rx_step_deg", "rx_relative"}, "sensors");
    read(s, "radius", c.sensors.radius, "sensors");
    read(s, "P", c.sensors.P, "sensors");
    read(s, "Q", c.sensors.Q, "sensors");
    read(s, "tx_start_deg", c.sensors.tx_start_deg, "sensors");
    read(s, "rx_start_deg", c.sensors.rx_start_deg, "sensors");
    read(s, "rx_step_deg", c.sensors.rx_step_deg, "sensors");
    read(s, "rx_relative", c.sensors.rx_relative, "sensors");
  }
  read(root, "freqs", c.freqs_ghz, "");
  if (root.contains("scene")) c.scene = detail::scene_from_json(root["scene"], "scene");
  if (root.contains("forward")) {
    const json& f = root["forward"];
    reject_unknown(f, {"lambda", "random_lambda_magnitude", "noise_snr_db"}, "forward");
    if (f.contains("lambda")) c.forward.lambda = lambda_from_json(f["lambda"]);
    if (f.contains("random_lambda_magnitude")) {
      const auto v = f["random_lambda_magnitude"].get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("forward.random_lambda_magnitude must be [lo, hi]");
      c.forward.random_lambda_magnitude = std::pair{v[0], v[1]};
    }
    read(f, "noise_snr_db", c.forward.noise_snr_db, "forward");
  }
  if (root.contains("solver")) {
    const json& s = root["solver"];
    reject_unknown(s, {"tolerance", "max_iterations"}, "solver");
    read(s, "tolerance", c.solver.tolerance, "solver");
    read(s, "max_iterations", c.solver.max_iterations, "solver");
  }
  if (root.contains("inversion")) {
    const json& i = root["inversion"];
    reject_unknown(i, {"beta", "T", "max_iters", "calibration_mode", "lambda_domain", "surrogate_mode",
                       "w_iterations", "chi_step", "chi_iterations", "calibration_passes", "lossless",
                       "divergence_factor", "cutoff_ratio", "cutoff_rank"},
                   "inversion");
    auto& v = c.inversion;
    read(i, "beta", v.beta, "inversion");
    read(i, "T", v.termination_tol, "inversion");
    read(i, "max_iters", v.max_outer_iters, "inversion");
    read(i, "w_iterations", v.w_iterations, "inversion");
    read(i, "chi_iterations", v.chi_iterations, "inversion");
    read(i, "calibration_passes", v.calibration_passes, "inversion");
    read(i, "lossless", v.lossless, "inversion");
    read(i, "divergence_factor", v.divergence_factor, "inversion");
    read(i, "cutoff_ratio", v.cutoff.ratio, "inversion");
    if (i.contains("cutoff_rank") && !i["cutoff_rank"].is_null()) v.cutoff.fixed_rank = i["cutoff_rank"].get<int>();
    if (i.contains("calibration_mode")) v.calibration_mode = calibration_mode_from_string(i["calibration_mode"]);
    if (i.contains("lambda_domain")) v.lambda_domain = lambda_domain_from_string(i["lambda_domain"]);
    if (i.contains("surrogate_mode")) v.surrogate_mode = surrogate_mode_from_string(i["surrogate_mode"]);
    if (i.contains("chi_step")) v.chi_step = chi_step_from_string(i["chi_step"]);
  }
  if (root.contains("surrogate")) {
    const json& s = root["surrogate"];
    reject_unknown(s, {"layers", "activation", "epochs", "batch_size", "learning_rate", "patience",
                       "validation_fraction", "n_per_config", "templates"},
                   "surrogate");
    auto& t = c.surrogate.training;
    read(s, "layers", t.hidden, "surrogate");
    if (s.contains("activation")) t.activation = activation_from_string(s["activation"]);
    read(s, "epochs", t.epochs, "surrogate");
    read(s, "batch_size", t.batch_size, "surrogate");
    read(s, "learning_rate", t.learning_rate, "surrogate");
    read(s, "patience", t.patience, "surrogate");
    read(s, "validation_fraction", t.validation_fraction, "surrogate");
    read(s, "n_per_config", c.surrogate.n_per_config, "surrogate");
    read(s, "templates", c.surrogate.templates, "surrogate");
  }
  c.surrogate.training.seed = c.seed;
  c.inversion.forward_solver = c.solver;
  c.inversion.execution = c.execution;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_json_text(const RunConfig& c) {
  json root;
  root["schema"] = kConfigSchema;
  root["seed"] = c.seed;
  root["execution"] = c.execution == Execution::serial ? "serial" : "parallel";
  root["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"extent", c.grid.extent},
                  {"center", {c.grid.center.x, c.grid.center.y}}};
  root["sensors"] = {{"radius", c.sensors.radius},           {"P", c.sensors.P},
                     {"Q", c.sensors.Q},                     {"tx_start_deg", c.sensors.tx_start_deg},
                     {"rx_start_deg", c.sensors.rx_start_deg}, {"rx_step_deg", c.sensors.rx_step_deg},
                     {"rx_relative", c.sensors.rx_relative}};
  root["freqs"] = c.freqs_ghz;
  if (c.scene) root["scene"] = detail::to_json(*c.scene);
  json lambda = json::array();
  for (cplx l : c.forward.lambda) lambda.push_back({l.real(), l.imag()});
  root["forward"] = {{"lambda", lambda}, {"noise_snr_db", c.forward.noise_snr_db}};
  if (c.forward.random_lambda_magnitude)
    root["forward"]["random_lambda_magnitude"] = {c.forward.random_lambda_magnitude->first,
                                                  c.forward.random_lambda_magnitude->second};
  root["solver"] = {{"tolerance", c.solver.tolerance}, {"max_iterations", c.solver.max_iterations}};
  const auto& v = c.inversion;
  root["inversion"] = {{"beta", v.beta},
                       {"T", v.termination_tol},
                       {"max_iters", v.max_outer_iters},
                       {"calibration_mode", to_string(v.calibration_mode)},
                       {"lambda_domain", to_string(v.lambda_domain)},
                       {"surrogate_mode", to_string(v.surrogate_mode)},
                       {"w_iterations", v.w_iterations},
                       {"chi_step", to_string(v.chi_step)},
                       {"chi_iterations", v.chi_iterations},
                       {"calibration_passes", v.calibration_passes},
                       {"lossless", v.lossless},
                       {"divergence_factor", v.divergence_factor},
                       {"cutoff_ratio", v.cutoff.ratio},
                       {"cutoff_rank", v.cutoff.fixed_rank ? json(*v.cutoff.fixed_rank) : json(nullptr)}};
  const auto& t = c.surrogate.training;
  root["surrogate"] = {{"layers", t.hidden},
                       {"activation", to_string(t.activation)},
                       {"epochs", t.epochs},
                       {"batch_size", t.batch_size},
                       {"learning_rate", t.learning_rate},
                       {"patience", t.patience},
                       {"validation_fraction", t.validation_fraction},
                       {"n_per_config", c.surrogate.n_per_config},
                       {"templates", c.surrogate.templates}};
  return root.dump(2);
}

}  // namespace scatlab
