#ifndef SCATLAB_DATASET_HPP
#define SCATLAB_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"

namespace scatlab {

/// Measured or simulated receiver data for every (frequency, transmitter).
///
/// Receiver angles are absolute (degrees from +x) and strictly increasing per
/// (k, p). Fields are in V/m.
struct DatasetBundle {
  std::vector<double> frequencies_hz;  // K
  std::vector<double> tx_angles_deg;   // P
  double sensor_radius = 1.67;         // m
  KPArray<RVec> rx_angles_deg;
  KPArray<CVec> scattered;
  KPArray<CVec> incident;  // empty entries when absent
  std::string provenance;
  bool scattered_from_total = false;  // scattered = total - incident at import

  std::optional<SceneSpec> truth_scene;
  std::optional<ImagingGrid> truth_grid;
  std::optional<ContrastMap> truth;

  int frequencies() const { return int(frequencies_hz.size()); }
  int transmitters() const { return int(tx_angles_deg.size()); }
  bool has_incident() const;

  /// Checks counts, angle ordering and finiteness; throws DataError.
  void validate() const;

  /// One receiver array shared by every (k, p); throws DataError when the
  /// receiver angles differ between (k, p).
  SensorArray sensors() const;
  FrequencySet frequency_set() const { return FrequencySet(frequencies_hz); }
};

/// Writes `manifest.json`, `fields_k{k}_p{p}.csv` and, when present,
/// `incident_k{k}_p{p}.csv` and `truth_chi.csv` into `dir` (created if needed).
/// Indices are zero-based.
void export_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle import_bundle(const std::string& dir);

/// Column positions (zero-based) of the whitespace-separated Fresnel text layout.
struct FresnelColumns {
  int tx_deg = 0;
  int rx_deg = 1;
  int freq_ghz = 2;
  int re_total = 3;
  int im_total = 4;
  int re_inc = 5;
  int im_inc = 6;

  /// Parses "tx=0,rx=1,freq=2,re_total=3,im_total=4,re_inc=5,im_inc=6"; keys
  /// not mentioned keep their defaults.
  static FresnelColumns parse(const std::string& spec);
};

struct FresnelOptions {
  FresnelColumns columns;
  double sensor_radius = 1.67;
};

/// Reads the text layout above. Lines that are blank, start with '#', '%' or
/// '!', or whose first token is not numeric are skipped. Scattered field is
/// total minus incident.
DatasetBundle import_fresnel(const std::string& path, const FresnelOptions& options = {});

/// Writes the Fresnel text layout (used for fixtures and round-trip tests).
void export_fresnel(const DatasetBundle& bundle, const std::string& path);

}  // namespace scatlab

#endif  // SCATLAB_DATASET_HPP
