#ifndef SCATLAB_PIPELINE_HPP
#define SCATLAB_PIPELINE_HPP

// Glue shared by the CLI and the end-to-end tests: synthetic data, inversion
// of a bundle, and run records.

#include <optional>
#include <string>
#include <vector>

#include "scatlab/config.hpp"
#include "scatlab/dataset.hpp"
#include "scatlab/inversion.hpp"
#include "scatlab/surrogate.hpp"

namespace scatlab {

/// Per-transmitter calibration factors for synthetic data: either the listed
/// `forward.lambda` or seeded random draws.
std::vector<cplx> synthetic_lambda(const RunConfig& config);

/// Exact forward simulation of `scene` on the configured grid, sensors and
/// frequencies, scaled by `lambda[p]` (one entry applies to all) and with
/// optional seeded complex Gaussian noise. Attaches the ground truth.
DatasetBundle simulate(const RunConfig& config, const SceneSpec& scene, const std::vector<cplx>& lambda,
                       const GreensOperators& greens);
DatasetBundle simulate(const RunConfig& config, const SceneSpec& scene);

/// Ground truth on `grid`: the stored map when its grid matches, otherwise the
/// rasterized scene, otherwise nothing.
std::optional<ContrastMap> truth_on(const DatasetBundle& bundle, const ImagingGrid& grid);

struct InversionRun {
  InversionState state;
  std::optional<double> nse;
  double seconds = 0.0;
};

/// Builds the operators for the configured grid and the bundle's sensors and
/// frequencies, then runs the inversion.
InversionRun invert_bundle(const RunConfig& config, const DatasetBundle& bundle, const Surrogate* surrogate = nullptr);

/// Writes record.json (config snapshot, cost history, lambda trace, NSE,
/// timing), chi.csv, cost.csv, lambda.csv, nse.csv and permittivity.png.
void write_run_record(const std::string& dir, const RunConfig& config, const InversionRun& run);

}  // namespace scatlab

#endif  // SCATLAB_PIPELINE_HPP
