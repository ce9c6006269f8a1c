#ifndef SCATLAB_CONFIG_HPP
#define SCATLAB_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scatlab/domain.hpp"
#include "scatlab/forward.hpp"
#include "scatlab/inversion.hpp"
#include "scatlab/surrogate.hpp"

namespace scatlab {

inline constexpr const char* kConfigSchema = "scatlab-config/1";

struct GridConfig {
  int nx = 32;
  int ny = 32;
  double extent = 0.16;  // m, square cells: extent_y = extent * ny / nx
  Point center{};

  ImagingGrid grid() const;
};

/// Transmitters evenly spaced from tx_start_deg; receivers from rx_start_deg in
/// rx_step_deg increments, measured from each transmitter's angle when
/// rx_relative is set and from +x otherwise. Defaults reproduce
/// fresnel_geometry().
struct SensorConfig {
  double radius = 1.67;
  int P = 8;
  int Q = 241;
  double tx_start_deg = 0.0;
  double rx_start_deg = 60.0;
  double rx_step_deg = 1.0;
  bool rx_relative = true;

  std::vector<double> tx_angles() const;
  /// Absolute receiver angles recorded by transmitter p, ascending.
  std::vector<double> rx_angles(int p) const;
  SensorArray sensors() const;
};

struct ForwardConfig {
  /// Per-transmitter calibration applied to synthetic data; one entry applies
  /// to every transmitter.
  std::vector<cplx> lambda{cplx(1.0)};
  /// When set, per-transmitter factors are drawn as magnitude in
  /// [min, max] with uniform phase from the seed, overriding `lambda`.
  std::optional<std::pair<double, double>> random_lambda_magnitude;
  double noise_snr_db = 0.0;  // 0 disables
};

struct SurrogateConfig {
  TrainingOptions training;
  int n_per_config = 100;
  std::vector<std::string> templates{"FoamDielExt", "FoamDielInt"};
};

struct RunConfig {
  GridConfig grid;
  SensorConfig sensors;
  std::vector<double> freqs_ghz{2.0, 4.0, 6.0, 8.0};
  InversionConfig inversion;
  SurrogateConfig surrogate;
  SolverOptions solver;
  ForwardConfig forward;
  std::optional<SceneSpec> scene;
  std::uint64_t seed = 1;
  Execution execution = Execution::parallel;

  FrequencySet frequencies() const;
  void validate() const;
};

/// Parses a JSON document (comments allowed). Every object rejects keys it
/// does not know; missing keys keep their defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Complete snapshot; parse_config(to_json_text(c)) reproduces c.
std::string to_json_text(const RunConfig& c);

std::string to_string(CalibrationMode m);
std::string to_string(LambdaDomain d);
std::string to_string(SurrogateMode m);
std::string to_string(ChiStep s);
CalibrationMode calibration_mode_from_string(const std::string& s);
LambdaDomain lambda_domain_from_string(const std::string& s);
SurrogateMode surrogate_mode_from_string(const std::string& s);
ChiStep chi_step_from_string(const std::string& s);

}  // namespace scatlab

#endif  // SCATLAB_CONFIG_HPP
