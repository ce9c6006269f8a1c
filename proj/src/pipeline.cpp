#include "scatlab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "json_util.hpp"
#include "scatlab/kernels.hpp"
#include "scatlab/render.hpp"
#include "scatlab/rng.hpp"

namespace scatlab {

using detail::json;

std::vector<cplx> synthetic_lambda(const RunConfig& config) {
  const int P = config.sensors.P;
  std::vector<cplx> out;
  if (config.forward.random_lambda_magnitude) {
    const auto [lo, hi] = *config.forward.random_lambda_magnitude;
    std::mt19937_64 rng = stage_engine(config.seed, Stage::synthetic_calibration);
    std::uniform_real_distribution<double> mag(lo, hi), phase(-std::numbers::pi, std::numbers::pi);
    for (int p = 0; p < P; ++p) {
      const double m = mag(rng);
      out.push_back(std::polar(m, phase(rng)));
    }
    return out;
  }
  if (config.forward.lambda.size() == 1) return std::vector<cplx>(std::size_t(P), config.forward.lambda[0]);
  return config.forward.lambda;
}

DatasetBundle simulate(const RunConfig& config, const SceneSpec& scene, const std::vector<cplx>& lambda,
                       const GreensOperators& greens) {
  const int K = greens.frequencies();
  const int P = greens.transmitters();
  const int Q = greens.receivers();
  if (lambda.size() != 1 && int(lambda.size()) != P) throw ConfigError("need one lambda or one per transmitter");
  const ContrastMap chi = rasterize(scene, greens.grid);
  const FieldSet inc = incident_field(greens.sensors, greens.grid, greens.freqs);
  KPArray<cplx> lam(K, P);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) lam(k, p) = lambda.size() == 1 ? lambda[0] : lambda[std::size_t(p)];
  const auto sols = kernels::solve_all(chi, lam, greens, inc.inc_domain, config.solver, config.execution);

  DatasetBundle b;
  b.frequencies_hz = greens.freqs.values();
  b.sensor_radius = config.sensors.radius;
  b.tx_angles_deg = config.sensors.tx_angles();
  b.rx_angles_deg = KPArray<RVec>(K, P);
  for (int p = 0; p < P; ++p) {
    const std::vector<double> a = config.sensors.rx_angles(p);
    if (int(a.size()) != Q) throw ConfigError("sensor configuration does not match the operators");
    for (int k = 0; k < K; ++k) b.rx_angles_deg(k, p) = Eigen::Map<const RVec>(a.data(), Q);
  }
  b.scattered = KPArray<CVec>(K, P);
  b.incident = inc.inc_rx;
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) {
      const ForwardSolution& s = sols(k, p);
      if (!s.report.converged)
        warn("forward solve (k=" + std::to_string(k) + ", p=" + std::to_string(p) + ") did not converge");
      CVec e = greens.sensors.recorded(p, s.scattered_rx);
      if (config.forward.noise_snr_db > 0.0) {
        std::mt19937_64 rng = stage_engine(config.seed, Stage::noise, std::uint64_t(k) * P + p);
        const double sigma = std::sqrt(e.squaredNorm() / double(Q) / std::pow(10.0, config.forward.noise_snr_db / 10.0) / 2.0);
        std::normal_distribution<double> n(0.0, sigma);
        for (Eigen::Index q = 0; q < e.size(); ++q) e[q] += cplx(n(rng), n(rng));
      }
      b.scattered(k, p) = std::move(e);
    }
  b.provenance = "simulate:" + scene.name;
  b.truth_scene = scene;
  b.truth_grid = greens.grid;
  b.truth = chi;
  return b;
}

DatasetBundle simulate(const RunConfig& config, const SceneSpec& scene) {
  const GreensOperators greens =
      build_greens(config.grid.grid(), config.sensors.sensors(), config.frequencies(), config.execution);
  return simulate(config, scene, synthetic_lambda(config), greens);
}

std::optional<ContrastMap> truth_on(const DatasetBundle& bundle, const ImagingGrid& grid) {
  if (bundle.truth && bundle.truth_grid && *bundle.truth_grid == grid) return bundle.truth;
  if (bundle.truth_scene) return rasterize(*bundle.truth_scene, grid);
  return std::nullopt;
}

InversionRun invert_bundle(const RunConfig& config, const DatasetBundle& bundle, const Surrogate* surrogate) {
  const auto t0 = std::chrono::steady_clock::now();
  const ImagingGrid grid = config.grid.grid();
  const GreensOperators greens = build_greens(grid, bundle.sensors(), bundle.frequency_set(), config.execution);
  const FieldSet inc = incident_field(greens.sensors, grid, greens.freqs);
  InversionConfig ic = config.inversion;
  ic.forward_solver = config.solver;
  ic.execution = config.execution;
  if (ic.surrogate_mode == SurrogateMode::neural && !surrogate)
    throw ConfigError("surrogate_mode = neural needs a trained model (--model)");
  const InversionProblem problem(greens, inc.inc_domain, bundle.scattered, ic.cutoff, config.execution);
  const std::optional<ContrastMap> truth = truth_on(bundle, grid);
  RunOptions ro;
  ro.surrogate = ic.surrogate_mode == SurrogateMode::neural ? surrogate : nullptr;
  ro.truth = truth ? &*truth : nullptr;
  InversionRun out;
  out.state = run(problem, ic, ro);
  if (truth) out.nse = nse(out.state.chi, *truth).nse;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_run_record(const std::string& dir, const RunConfig& config, const InversionRun& r) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const InversionState& s = r.state;

  json rec;
  rec["schema"] = "scatlab-run/1";
  rec["config"] = json::parse(to_json_text(config));
  rec["termination"] = to_string(s.termination);
  rec["diagnostic"] = s.diagnostic;
  rec["iterations"] = s.iteration;
  json hist = json::array();
  for (const auto& c : s.history)
    hist.push_back({{"data", c.data}, {"state", c.state}, {"calib", c.calib}, {"reg", c.reg}, {"total", c.total}});
  rec["cost_history"] = std::move(hist);
  json lam = json::array();
  for (const cplx l : s.calibration.lambda) lam.push_back({l.real(), l.imag()});
  rec["final_lambda"] = std::move(lam);
  rec["nse_trace"] = s.nse_trace;
  rec["nse"] = r.nse ? json(*r.nse) : json(nullptr);
  rec["seconds"] = r.seconds;
  rec["iteration_seconds"] = s.iteration_seconds;
  {
    std::ofstream os(fs::path(dir) / "record.json", std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write record in '" + dir + "'");
    os << rec.dump(2) << '\n';
  }
  write_chi_csv(s.chi, (fs::path(dir) / "chi.csv").string());
  write_cost_csv(s.history, (fs::path(dir) / "cost.csv").string());
  write_lambda_csv(s.lambda_trace, (fs::path(dir) / "lambda.csv").string());
  write_nse_csv(s.nse_trace, (fs::path(dir) / "nse.csv").string());
  write_permittivity_png(s.chi, (fs::path(dir) / "permittivity.png").string());
}

}  // namespace scatlab
