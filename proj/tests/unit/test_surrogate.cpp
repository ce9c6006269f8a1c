#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "scatlab/surrogate.hpp"
#include "unit/helpers.hpp"

using namespace scatlab;

namespace {

GreensOperators tiny_greens() {
  return build_greens(ImagingGrid::square(8, 0.16), testing::ring(2, 6, 1.67), FrequencySet({2e9}));
}

std::vector<SceneSpec> templates() { return {foam_diel_ext(), foam_diel_int()}; }

TrainingOptions small_options() {
  TrainingOptions o;
  o.hidden = {24};
  o.epochs = 60;
  o.batch_size = 8;
  o.learning_rate = 3e-3;
  o.patience = 1000;
  o.seed = 5;
  return o;
}

const TrainingSet& shared_set() {
  static const TrainingSet set = [] {
    const GreensOperators g = tiny_greens();
    return generate_training_set(templates(), 40, 17, g);
  }();
  return set;
}

bool same_weights(const Mlp& a, const Mlp& b) {
  if (a.sizes() != b.sizes()) return false;
  for (std::size_t i = 0; i < a.layers().size(); ++i)
    if (a.layers()[i].weight != b.layers()[i].weight || a.layers()[i].bias != b.layers()[i].bias) return false;
  return true;
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("training set size, eps range and provenance") {
    const TrainingSet& set = shared_set();
    CHECK(set.samples.size() == 80);
    std::set<std::uint64_t> seeds;
    for (const TrainingSample& s : set.samples) {
      CHECK(seeds.insert(s.seed).second);
      CHECK(s.eps_draws.size() == 2);
      for (double e : s.eps_draws) {
        CHECK(e >= 1.1);
        CHECK(e <= 5.0);
      }
      CHECK(s.permittivity.minCoeff() >= 1.0);
      CHECK(s.fields.size() == set.layout.size());
      CHECK(s.fields.allFinite());
    }
    CHECK(set.samples.front().template_name == "FoamDielExt");
    CHECK(set.samples.back().template_name == "FoamDielInt");
    CHECK(set.geometry_hash == geometry_hash(tiny_greens()));
  }

  TEST_CASE("training set generation is deterministic and independent of execution mode") {
    const GreensOperators g = tiny_greens();
    const TrainingSet a = generate_training_set(templates(), 3, 99, g, {}, Execution::serial);
    const TrainingSet b = generate_training_set(templates(), 3, 99, g, {}, Execution::parallel);
    const TrainingSet c = generate_training_set(templates(), 3, 100, g);
    REQUIRE(a.samples.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(a.samples[i].seed == b.samples[i].seed);
      CHECK(a.samples[i].permittivity == b.samples[i].permittivity);
      CHECK(a.samples[i].fields == b.samples[i].fields);
    }
    CHECK(a.samples[0].eps_draws != c.samples[0].eps_draws);
    CHECK_THROWS_AS(generate_training_set(templates(), 0, 1, g), ConfigError);
    CHECK_THROWS_AS(generate_training_set({}, 3, 1, g), ConfigError);
  }

  TEST_CASE("samples match the exact forward solver") {
    const GreensOperators g = tiny_greens();
    const TrainingSet set = generate_training_set({foam_diel_ext()}, 1, 3, g);
    const TrainingSample& s = set.samples[0];
    CVec chi(s.permittivity.size());
    for (Eigen::Index i = 0; i < chi.size(); ++i) chi[i] = s.permittivity[i] - 1.0;
    const ContrastMap map(8, 8, chi);
    const FieldSet inc = incident_field(g.sensors, g.grid, g.freqs);
    const KPArray<CVec> fields = set.layout.unpack(s.fields);
    for (int p = 0; p < 2; ++p) {
      const CVec direct = forward_solve(map, 1.0, g, 0, inc.inc_domain(0, p)).scattered_rx;
      CHECK(testing::rel(fields(0, p), direct) < 1e-12);
    }
  }

  TEST_CASE("training set file round-trip is lossless") {
    testing::TempDir dir;
    const TrainingSet& set = shared_set();
    set.save(dir / "train.bin");
    const TrainingSet back = TrainingSet::load(dir / "train.bin");
    CHECK(back.geometry_hash == set.geometry_hash);
    CHECK(back.frequencies == set.frequencies);
    REQUIRE(back.samples.size() == set.samples.size());
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
      CHECK(back.samples[i].seed == set.samples[i].seed);
      CHECK(back.samples[i].template_name == set.samples[i].template_name);
      CHECK(back.samples[i].eps_draws == set.samples[i].eps_draws);
      CHECK(back.samples[i].permittivity == set.samples[i].permittivity);
      CHECK(back.samples[i].fields == set.samples[i].fields);
    }
  }

  TEST_CASE("field layout pack and unpack are inverse") {
    const FieldLayout layout{2, 3, 4};
    std::mt19937_64 rng(2);
    KPArray<CVec> f(2, 3);
    for (auto& v : f) v = testing::random_cvec(4, rng);
    const KPArray<CVec> back = layout.unpack(layout.pack(f));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back.flat(i) == f.flat(i));
    CHECK(layout.size() == 48);
  }

  TEST_CASE("standardizer scales constant features by the spread of the others") {
    RMat x(3, 3);
    x << 1.0, 2.0, 3.0, 5.0, 5.0, 5.0, 0.0, 0.0, 3.0;
    const Standardizer s = Standardizer::fit(x);
    CHECK(s.scale[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(s.scale[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(s.scale[1] == doctest::Approx(std::sqrt((2.0 / 3.0 + 2.0) / 2.0)).epsilon(1e-15));
    CHECK(s.mean[1] == 5.0);
    CHECK((s.invert(s.apply(x)) - x).cwiseAbs().maxCoeff() < 1e-15);

    RMat flat(2, 2);
    flat << 5.0, 5.0, -3.0, -3.0;
    const Standardizer f = Standardizer::fit(flat);
    CHECK(f.scale[0] == doctest::Approx(std::sqrt(17.0)).epsilon(1e-15));
    CHECK(f.scale[1] == f.scale[0]);
  }

  TEST_CASE("training needs at least 50 samples") {
    TrainingSet small = shared_set();
    small.samples.resize(49);
    CHECK_THROWS_AS(train(small, small_options()), ConfigError);
  }

  TEST_CASE("network learns a constant target") {
    TrainingSet set = shared_set();
    for (auto& s : set.samples) s.fields = set.samples[0].fields;
    TrainingReport report;
    TrainingOptions o = small_options();
    o.epochs = 400;
    const Surrogate model = train(set, o, &report);
    // Adam keeps a small noise floor at a fixed step; the loss still falls by
    // four orders of magnitude.
    CHECK(report.best_validation < 1e-5);
    CHECK(report.best_validation < 1e-4 * report.train_loss.front());
    const RVec pred = model.predict_flat(set.samples[7].permittivity);
    CHECK((pred - set.samples[0].fields).norm() <= 1e-3 * set.samples[0].fields.norm());
  }

  TEST_CASE("training is deterministic, learns, and the model file round-trips bit-identically") {
    const TrainingSet& set = shared_set();
    TrainingReport ra, rb;
    const Surrogate a = train(set, small_options(), &ra);
    const Surrogate b = train(set, small_options(), &rb);
    CHECK(same_weights(a.network(), b.network()));
    CHECK(ra.train_loss == rb.train_loss);
    CHECK(ra.train_indices.size() == 64);
    CHECK(ra.validation_indices.size() == 16);
    CHECK(ra.train_loss.back() < 0.2 * ra.train_loss.front());
    CHECK(ra.best_validation < 0.5);

    // Five-epoch moving average of the training loss does not increase.
    const auto& loss = ra.train_loss;
    auto smooth = [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = i; j < i + 5; ++j) s += loss[j];
      return s / 5.0;
    };
    int rises = 0;
    for (std::size_t i = 1; i + 5 <= loss.size(); ++i) rises += smooth(i) > smooth(i - 1);
    CHECK(rises == 0);

    testing::TempDir dir;
    a.save(dir / "model.bin");
    const Surrogate c = Surrogate::load(dir / "model.bin");
    CHECK(same_weights(a.network(), c.network()));
    const ContrastMap chi = rasterize(foam_diel_ext(), ImagingGrid::square(8, 0.16));
    const KPArray<CVec> pa = a.predict(chi), pc = c.predict(chi);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.flat(i) == pc.flat(i));
    CHECK(c.geometry_hash() == a.geometry_hash());
    CHECK(c.manifest() == a.manifest());
  }

  TEST_CASE("training samples are reproduced within the training error band") {
    const TrainingSet& set = shared_set();
    TrainingReport report;
    const Surrogate model = train(set, small_options(), &report);
    const Standardizer& out = model.output_stats();
    double worst = 0.0, mean = 0.0;
    for (std::size_t i : report.train_indices) {
      const TrainingSample& s = set.samples[i];
      const RVec z = (model.predict_flat(s.permittivity) - s.fields).cwiseQuotient(out.scale);
      const double mse = z.squaredNorm() / double(z.size());
      worst = std::max(worst, mse);
      mean += mse / double(report.train_indices.size());
    }
    CHECK(mean == doctest::Approx(report.train_loss[std::size_t(report.best_epoch)]).epsilon(1e-6));
    const TrainingSample& s = set.samples[report.train_indices.front()];
    const RVec z = (model.predict_flat(s.permittivity) - s.fields).cwiseQuotient(out.scale);
    CHECK(z.squaredNorm() / double(z.size()) <= worst);
  }

  TEST_CASE("geometry mismatch and extrapolation") {
    TrainingSet set = shared_set();
    const Surrogate model = train(set, [] {
      auto o = small_options();
      o.epochs = 2;
      return o;
    }());
    CHECK_NOTHROW(model.check_geometry(tiny_greens()));
    const GreensOperators other =
        build_greens(ImagingGrid::square(8, 0.16), testing::ring(2, 6, 1.67), FrequencySet({3e9}));
    CHECK_THROWS_AS(model.check_geometry(other), ModelError);

    testing::WarningCapture w;
    ContrastMap hot(8, 8);
    hot[3] = 9.0;
    CHECK_NOTHROW(model.predict(hot));
    CHECK(w.messages.size() == 1);
    CHECK_THROWS_AS(model.predict(ContrastMap(4, 4)), ModelError);
  }

  TEST_CASE("corrupt model files are rejected") {
    testing::TempDir dir;
    {
      std::ofstream f(dir / "bad.bin", std::ios::binary);
      f << "NOT-A-MODEL";
    }
    CHECK_THROWS_AS(Surrogate::load(dir / "bad.bin"), ParseError);
    CHECK_THROWS_AS(TrainingSet::load(dir / "bad.bin"), ParseError);
  }
}
