// scatlab: command-line front end.
//
//   scatlab forward          --config c.json --out bundle/
//   scatlab gen-train        --config c.json --out train.bin
//   scatlab train-surrogate  --config c.json --train train.bin --out model.bin
//   scatlab invert           --config c.json --data bundle/ --out run/ [--model model.bin]
//   scatlab eval             --estimate chi.csv (--truth chi.csv | --data bundle/)
//   scatlab import-fresnel   --input file.txt --out bundle/ [--column-map ...]
//   scatlab render           --chi chi.csv --out map.png
//
// Errors are printed to stderr as one JSON object {"error": {"code", "message"}}
// and the exit status is nonzero.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scatlab/config.hpp"
#include "scatlab/dataset.hpp"
#include "scatlab/inversion.hpp"
#include "scatlab/pipeline.hpp"
#include "scatlab/render.hpp"
#include "scatlab/surrogate.hpp"

using namespace scatlab;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<std::string> calibration_mode;
  std::optional<std::string> lambda_domain;
  std::optional<std::string> surrogate_mode;
  std::optional<int> epochs;
  std::optional<int> n_per_config;
  std::optional<std::string> scene;
  bool serial = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON run configuration (scatlab-config/1)");
  app->add_option("--seed", o.seed, "Root seed for every random stage");
  app->add_flag("--serial", o.serial, "Use the serial reference kernels");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? parse_config("{}") : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.beta) c.inversion.beta = *o.beta;
  if (o.tol) c.inversion.termination_tol = *o.tol;
  if (o.max_iters) c.inversion.max_outer_iters = *o.max_iters;
  if (o.calibration_mode) c.inversion.calibration_mode = calibration_mode_from_string(*o.calibration_mode);
  if (o.lambda_domain) c.inversion.lambda_domain = lambda_domain_from_string(*o.lambda_domain);
  if (o.surrogate_mode) c.inversion.surrogate_mode = surrogate_mode_from_string(*o.surrogate_mode);
  if (o.epochs) c.surrogate.training.epochs = *o.epochs;
  if (o.n_per_config) c.surrogate.n_per_config = *o.n_per_config;
  if (o.scene) c.scene = named_scene(*o.scene);
  if (o.serial) c.execution = Execution::serial;
  c.surrogate.training.seed = c.seed;
  c.inversion.execution = c.execution;
  c.inversion.forward_solver = c.solver;
  c.validate();
  return c;
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

int fail(const std::string& code, const std::string& message, int status) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated subspace inversion of microwave scattering data"};
  app.require_subcommand(1);
  Overrides o;
  std::string out, data, model, train_path, input, estimate, truth_path, chi_path, column_map;
  double radius = 1.67;

  auto* fwd = app.add_subcommand("forward", "Simulate a scene into a dataset bundle");
  add_common(fwd, o);
  fwd->add_option("--scene", o.scene, "FoamDielExt or FoamDielInt (overrides config scene)");
  fwd->add_option("--out", out, "Output bundle directory")->required();

  auto* gen = app.add_subcommand("gen-train", "Generate a surrogate training set");
  add_common(gen, o);
  gen->add_option("--n-per-config", o.n_per_config, "Samples per scene template");
  gen->add_option("--out", out, "Output training-set file")->required();

  auto* trn = app.add_subcommand("train-surrogate", "Train the surrogate network");
  add_common(trn, o);
  trn->add_option("--train", train_path, "Training-set file")->required();
  trn->add_option("--epochs", o.epochs, "Maximum epochs");
  trn->add_option("--out", out, "Output model file")->required();

  auto* inv = app.add_subcommand("invert", "Run the calibrated inversion on a bundle");
  add_common(inv, o);
  inv->add_option("--data", data, "Dataset bundle directory")->required();
  inv->add_option("--model", model, "Surrogate model (surrogate_mode = neural)");
  inv->add_option("--beta", o.beta, "Calibration regularization weight");
  inv->add_option("--T", o.tol, "Termination threshold on the cost change");
  inv->add_option("--max-iters", o.max_iters, "Maximum outer iterations");
  inv->add_option("--calibration-mode", o.calibration_mode, "none | joint | per_tx");
  inv->add_option("--lambda-domain", o.lambda_domain, "real | complex");
  inv->add_option("--surrogate-mode", o.surrogate_mode, "exact_forward | neural");
  inv->add_option("--out", out, "Run record directory")->required();

  auto* ev = app.add_subcommand("eval", "Normalized squared error of a permittivity estimate");
  ev->add_option("--estimate", estimate, "Estimated chi CSV")->required();
  ev->add_option("--truth", truth_path, "Ground-truth chi CSV");
  ev->add_option("--data", data, "Bundle with attached ground truth");

  auto* imp = app.add_subcommand("import-fresnel", "Import Fresnel-style text data into a bundle");
  imp->add_option("--input", input, "Whitespace-delimited text file")->required();
  imp->add_option("--column-map", column_map, "e.g. tx=0,rx=1,freq=2,re_total=3,im_total=4,re_inc=5,im_inc=6");
  imp->add_option("--radius", radius, "Sensor radius in metres");
  imp->add_option("--out", out, "Output bundle directory")->required();

  auto* ren = app.add_subcommand("render", "Render a chi CSV as a permittivity PNG");
  ren->add_option("--chi", chi_path, "chi CSV (ix,iy,re_chi,im_chi)")->required();
  ren->add_option("--out", out, "Output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (fwd->parsed()) {
      const RunConfig c = resolve(o);
      if (!c.scene) throw ConfigError("forward needs a scene (config 'scene' or --scene)");
      const DatasetBundle b = simulate(c, *c.scene);
      export_bundle(b, out);
      {
        std::ofstream os(std::filesystem::path(out) / "config.json");
        os << to_json_text(c) << '\n';
      }
      emit({{"bundle", out}, {"K", b.frequencies()}, {"P", b.transmitters()}, {"Q", b.scattered(0, 0).size()}});
    } else if (gen->parsed()) {
      const RunConfig c = resolve(o);
      std::vector<SceneSpec> templates;
      for (const auto& name : c.surrogate.templates) templates.push_back(named_scene(name));
      const GreensOperators greens = build_greens(c.grid.grid(), c.sensors.sensors(), c.frequencies(), c.execution);
      const TrainingSet set =
          generate_training_set(templates, c.surrogate.n_per_config, c.seed, greens, c.solver, c.execution);
      set.save(out);
      emit({{"training_set", out}, {"samples", set.samples.size()}});
    } else if (trn->parsed()) {
      const RunConfig c = resolve(o);
      const TrainingSet set = TrainingSet::load(train_path);
      TrainingReport rep;
      const Surrogate s = train(set, c.surrogate.training, &rep);
      s.save(out);
      emit({{"model", out},
            {"epochs_run", rep.train_loss.size()},
            {"best_epoch", rep.best_epoch},
            {"validation_mse_normalized", rep.best_validation},
            {"validation_mse_physical", rep.validation_physical_mse},
            {"seconds", rep.seconds}});
    } else if (inv->parsed()) {
      const RunConfig c = resolve(o);
      const DatasetBundle b = import_bundle(data);
      std::optional<Surrogate> s;
      if (!model.empty()) s = Surrogate::load(model);
      const InversionRun r = invert_bundle(c, b, s ? &*s : nullptr);
      write_run_record(out, c, r);
      json lam = json::array();
      for (cplx l : r.state.calibration.lambda) lam.push_back({l.real(), l.imag()});
      emit({{"record", out},
            {"termination", to_string(r.state.termination)},
            {"iterations", r.state.iteration},
            {"final_cost", r.state.history.empty() ? 0.0 : r.state.history.back().total},
            {"nse", r.nse ? json(*r.nse) : json(nullptr)},
            {"lambda", lam},
            {"seconds", r.seconds}});
    } else if (ev->parsed()) {
      const ContrastMap est = read_chi_csv(estimate);
      std::optional<ContrastMap> truth;
      if (!truth_path.empty()) {
        truth = read_chi_csv(truth_path);
      } else if (!data.empty()) {
        const DatasetBundle b = import_bundle(data);
        if (b.truth) truth = b.truth;
        else if (b.truth_scene && b.truth_grid) truth = rasterize(*b.truth_scene, *b.truth_grid);
      }
      if (!truth) throw ConfigError("eval needs --truth or a bundle with ground truth");
      emit({{"nse", nse(est, *truth).nse}});
    } else if (imp->parsed()) {
      FresnelOptions fo;
      if (!column_map.empty()) fo.columns = FresnelColumns::parse(column_map);
      fo.sensor_radius = radius;
      const DatasetBundle b = import_fresnel(input, fo);
      export_bundle(b, out);
      emit({{"bundle", out}, {"K", b.frequencies()}, {"P", b.transmitters()}, {"Q", b.scattered(0, 0).size()}});
    } else if (ren->parsed()) {
      write_permittivity_png(read_chi_csv(chi_path), out);
      emit({{"image", out}});
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
