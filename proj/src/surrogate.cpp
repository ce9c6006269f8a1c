#include "scatlab/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scatlab/container.hpp"
#include "scatlab/kernels.hpp"
#include "scatlab/rng.hpp"

namespace scatlab {

using nlohmann::json;

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Network

Mlp::Mlp(const std::vector<int>& sizes, Activation activation, std::uint64_t seed) : activation_(activation) {
  if (sizes.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  std::mt19937_64 rng = stage_engine(seed, Stage::weight_init);
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const int in = sizes[l - 1];
    const int out = sizes[l];
    if (in <= 0 || out <= 0) throw ConfigError("layer widths must be positive");
    // Glorot-uniform initialization.
    const double bound = std::sqrt(6.0 / double(in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer{RMat(out, in), RVec::Zero(out)};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = u(rng);
    layers_.push_back(std::move(layer));
  }
}

std::vector<int> Mlp::sizes() const {
  std::vector<int> s{inputs()};
  for (const auto& l : layers_) s.push_back(int(l.weight.rows()));
  return s;
}

namespace {

void activate(RMat& z, Activation a) {
  if (a == Activation::tanh)
    z = z.array().tanh();
  else
    z = z.array().max(0.0);
}

// Derivative expressed through the activation output h.
RMat activation_slope(const RMat& h, Activation a) {
  if (a == Activation::tanh) return 1.0 - h.array().square();
  return (h.array() > 0.0).cast<double>();
}

}  // namespace

RMat Mlp::forward(const RMat& input) const {
  RMat h = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    RMat z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) activate(z, activation_);
    h = std::move(z);
  }
  return h;
}

Standardizer Standardizer::fit(const RMat& x) {
  Standardizer s;
  s.mean = x.rowwise().mean();
  s.scale.resize(x.rows());
  std::vector<char> degenerate(std::size_t(x.rows()), 0);
  double sum_var = 0.0;
  int varying = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double var = (x.row(i).array() - s.mean[i]).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::abs(s.mean[i]) && sd > 0.0) {
      s.scale[i] = sd;
      sum_var += var;
      ++varying;
    } else {
      degenerate[std::size_t(i)] = 1;
    }
  }
  // Constant features borrow the typical spread of the others so their
  // standardized errors stay on the same footing; with no spread at all the
  // data magnitude is used.
  double fallback = varying > 0 ? std::sqrt(sum_var / varying) : std::sqrt(x.squaredNorm() / double(x.size()));
  if (!(fallback > 0.0) || !std::isfinite(fallback)) fallback = 1.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (degenerate[std::size_t(i)]) s.scale[i] = fallback;
  return s;
}

RMat Standardizer::apply(const RMat& x) const {
  return (x.colwise() - mean).array().colwise() / scale.array();
}

RMat Standardizer::invert(const RMat& z) const {
  RMat x = z.array().colwise() * scale.array();
  x.colwise() += mean;
  return x;
}

RVec FieldLayout::pack(const KPArray<CVec>& fields) const {
  RVec flat(size());
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) {
      const CVec& f = fields(k, p);
      if (f.size() != Q) throw DataError("field vector length does not match the surrogate layout");
      const Eigen::Index base = Eigen::Index(k * P + p) * 2 * Q;
      flat.segment(base, Q) = f.real();
      flat.segment(base + Q, Q) = f.imag();
    }
  return flat;
}

KPArray<CVec> FieldLayout::unpack(const Eigen::Ref<const RVec>& flat) const {
  if (flat.size() != size()) throw DataError("flat field vector has the wrong length");
  KPArray<CVec> out(K, P);
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) {
      const Eigen::Index base = Eigen::Index(k * P + p) * 2 * Q;
      CVec f(Q);
      f.real() = flat.segment(base, Q);
      f.imag() = flat.segment(base + Q, Q);
      out(k, p) = std::move(f);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Training data

TrainingSet generate_training_set(const std::vector<SceneSpec>& templates, int n_per_config, std::uint64_t seed,
                                  const GreensOperators& greens, const SolverOptions& solver, Execution exec) {
  if (templates.empty()) throw ConfigError("no scene templates registered for training");
  if (n_per_config < 1) throw ConfigError("n_per_config must be at least 1");
  const int K = greens.frequencies();
  const int P = greens.transmitters();
  TrainingSet set;
  set.geometry_hash = geometry_hash(greens);
  set.nx = greens.grid.nx();
  set.ny = greens.grid.ny();
  set.frequencies = greens.freqs.values();
  set.layout = {K, P, greens.receivers()};
  const FieldSet inc = incident_field(greens.sensors, greens.grid, greens.freqs);
  const int total = int(templates.size()) * n_per_config;
  set.samples.resize(std::size_t(total));
  const std::uint64_t stream = split_seed(seed, std::uint64_t(Stage::training_samples));
  constexpr int kMaxAttempts = 8;

  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int j = 0; j < total; ++j) {
    try {
      const SceneSpec& tmpl = templates[std::size_t(j / n_per_config)];
      TrainingSample& sample = set.samples[std::size_t(j)];
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        sample.seed = split_seed(stream, std::uint64_t(j) + (std::uint64_t(attempt) << 32));
        std::mt19937_64 rng(sample.seed);
        std::uniform_real_distribution<double> draw(1.1, 5.0);
        SceneSpec scene = tmpl;
        sample.eps_draws.clear();
        for (auto& prim : scene.primitives) {
          prim.eps_r = draw(rng);
          sample.eps_draws.push_back(prim.eps_r);
        }
        const ContrastMap chi = rasterize(scene, greens.grid);
        const auto sols = kernels::solve_all(chi, KPArray<cplx>(K, P, cplx(1.0)), greens, inc.inc_domain, solver,
                                             Execution::serial);
        const bool ok = std::all_of(sols.begin(), sols.end(), [](const ForwardSolution& s) { return s.report.converged; });
        if (!ok) {
          std::ostringstream os;
          os << "training sample " << j << " (" << tmpl.name << ") did not converge; resampling";
          warn(os.str());
          continue;
        }
        KPArray<CVec> fields(K, P);
        for (std::size_t i = 0; i < sols.size(); ++i)
          fields.flat(i) = greens.sensors.recorded(int(i) % P, sols.flat(i).scattered_rx);
        sample.template_name = tmpl.name;
        sample.permittivity = chi.permittivity();
        sample.fields = set.layout.pack(fields);
        break;
      }
      if (sample.fields.size() == 0) throw NumericalError("training sample " + std::to_string(j) + " failed to converge");
    } catch (...) {
#pragma omp critical(scatlab_training_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::set<std::uint64_t> seen;
  for (const auto& s : set.samples)
    if (!seen.insert(s.seed).second) throw NumericalError("duplicate training sample seed");
  return set;
}

void TrainingSet::save(const std::string& path) const {
  json h;
  h["geometry_hash"] = std::to_string(geometry_hash);
  h["nx"] = nx;
  h["ny"] = ny;
  h["frequencies_hz"] = frequencies;
  h["layout"] = {{"K", layout.K}, {"P", layout.P}, {"Q", layout.Q}};
  h["convention"] = kConventionTag;
  json samples_json = json::array();
  Container c{kTrainingSetMagic, {}, {}};
  for (const auto& s : samples) {
    samples_json.push_back({{"template", s.template_name}, {"seed", std::to_string(s.seed)}, {"eps_draws", s.eps_draws}});
    c.payload.insert(c.payload.end(), s.permittivity.data(), s.permittivity.data() + s.permittivity.size());
    c.payload.insert(c.payload.end(), s.fields.data(), s.fields.data() + s.fields.size());
  }
  h["samples"] = std::move(samples_json);
  c.header = h.dump();
  write_container(path, c);
}

TrainingSet TrainingSet::load(const std::string& path) {
  const Container c = read_container(path, kTrainingSetMagic);
  TrainingSet set;
  try {
    const json h = json::parse(c.header);
    set.geometry_hash = std::stoull(h.at("geometry_hash").get<std::string>());
    set.nx = h.at("nx");
    set.ny = h.at("ny");
    set.frequencies = h.at("frequencies_hz").get<std::vector<double>>();
    set.layout = {h.at("layout").at("K"), h.at("layout").at("P"), h.at("layout").at("Q")};
    const std::size_t n = std::size_t(set.nx) * set.ny;
    const std::size_t m = std::size_t(set.layout.size());
    const auto& samples = h.at("samples");
    if (c.payload.size() != samples.size() * (n + m)) throw ParseError("training set payload size mismatch in " + path);
    std::size_t offset = 0;
    for (const auto& sj : samples) {
      TrainingSample s;
      s.template_name = sj.at("template");
      s.seed = std::stoull(sj.at("seed").get<std::string>());
      s.eps_draws = sj.at("eps_draws").get<std::vector<double>>();
      s.permittivity = Eigen::Map<const RVec>(c.payload.data() + offset, Eigen::Index(n));
      offset += n;
      s.fields = Eigen::Map<const RVec>(c.payload.data() + offset, Eigen::Index(m));
      offset += m;
      set.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError("malformed training set header in " + path + ": " + e.what());
  }
  return set;
}

// ---------------------------------------------------------------------------
// Surrogate

Surrogate::Surrogate(Mlp net, Standardizer input, Standardizer output, FieldLayout layout, int nx, int ny,
                     std::uint64_t hash, std::string manifest_json)
    : net_(std::move(net)), in_(std::move(input)), out_(std::move(output)), layout_(layout), nx_(nx), ny_(ny),
      hash_(hash), manifest_(std::move(manifest_json)) {
  if (net_.inputs() != nx * ny) throw ModelError("network input width does not match the grid");
  if (net_.outputs() != layout_.size()) throw ModelError("network output width does not match the field layout");
}

RVec Surrogate::predict_flat(const RVec& permittivity) const {
  if (permittivity.size() != net_.inputs()) throw ModelError("surrogate input has the wrong length");
  if (permittivity.minCoeff() < 1.0 || permittivity.maxCoeff() > 8.0)
    warn("surrogate input eps_r outside [1, 8]; prediction is an extrapolation");
  const RMat z = in_.apply(permittivity);
  return out_.invert(net_.forward(z)).col(0);
}

KPArray<CVec> Surrogate::predict(const ContrastMap& chi) const {
  if (chi.nx() != nx_ || chi.ny() != ny_) throw ModelError("contrast map grid does not match the surrogate");
  RVec flat = predict_flat(chi.permittivity());
  if (!flat.allFinite()) throw NumericalError("surrogate produced non-finite fields");
  return layout_.unpack(flat);
}

void Surrogate::check_geometry(const GreensOperators& greens) const {
  if (scatlab::geometry_hash(greens) != hash_)
    throw ModelError("surrogate was trained for a different geometry (hash mismatch)");
}

void Surrogate::save(const std::string& path) const {
  json h;
  h["format"] = kModelMagic;
  h["layer_sizes"] = net_.sizes();
  h["activation"] = to_string(net_.activation());
  h["nx"] = nx_;
  h["ny"] = ny_;
  h["geometry_hash"] = std::to_string(hash_);
  h["layout"] = {{"K", layout_.K}, {"P", layout_.P}, {"Q", layout_.Q}};
  h["convention"] = kConventionTag;
  h["byte_order"] = "little-endian f64";
  h["payload_order"] = "per layer: weight (column-major, out x in), bias; then input mean, input scale, "
                       "output mean, output scale";
  h["manifest"] = manifest_.empty() ? json::object() : json::parse(manifest_);
  Container c{kModelMagic, h.dump(2), {}};
  auto append = [&c](const double* p, Eigen::Index n) { c.payload.insert(c.payload.end(), p, p + n); };
  for (const auto& l : net_.layers()) {
    append(l.weight.data(), l.weight.size());
    append(l.bias.data(), l.bias.size());
  }
  append(in_.mean.data(), in_.mean.size());
  append(in_.scale.data(), in_.scale.size());
  append(out_.mean.data(), out_.mean.size());
  append(out_.scale.data(), out_.scale.size());
  write_container(path, c);
}

Surrogate Surrogate::load(const std::string& path) {
  const Container c = read_container(path, kModelMagic);
  try {
    const json h = json::parse(c.header);
    const auto sizes = h.at("layer_sizes").get<std::vector<int>>();
    Mlp net(sizes, activation_from_string(h.at("activation")), 0);
    std::size_t offset = 0;
    auto take = [&](double* dst, Eigen::Index n) {
      if (offset + std::size_t(n) > c.payload.size()) throw ParseError("model payload too short in " + path);
      std::copy_n(c.payload.data() + offset, n, dst);
      offset += std::size_t(n);
    };
    for (auto& l : net.layers()) {
      take(l.weight.data(), l.weight.size());
      take(l.bias.data(), l.bias.size());
    }
    Standardizer in, out;
    in.mean.resize(sizes.front());
    in.scale.resize(sizes.front());
    out.mean.resize(sizes.back());
    out.scale.resize(sizes.back());
    take(in.mean.data(), in.mean.size());
    take(in.scale.data(), in.scale.size());
    take(out.mean.data(), out.mean.size());
    take(out.scale.data(), out.scale.size());
    if (offset != c.payload.size()) throw ParseError("model payload has trailing data in " + path);
    const FieldLayout layout{h.at("layout").at("K"), h.at("layout").at("P"), h.at("layout").at("Q")};
    return Surrogate(std::move(net), std::move(in), std::move(out), layout, h.at("nx"), h.at("ny"),
                     std::stoull(h.at("geometry_hash").get<std::string>()), h.at("manifest").dump());
  } catch (const json::exception& e) {
    throw ParseError("malformed model header in " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct AdamMoments {
  std::vector<RMat> mw, vw;
  std::vector<RVec> mb, vb;
};

double mse(const RMat& a, const RMat& b) { return (a - b).squaredNorm() / double(a.size()); }

}  // namespace

Surrogate train(const TrainingSet& set, const TrainingOptions& opt, TrainingReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t total = set.samples.size();
  if (total < 50) throw ConfigError("training needs at least 50 samples (got " + std::to_string(total) + ")");
  if (opt.batch_size < 1 || opt.epochs < 1 || !(opt.learning_rate > 0.0))
    throw ConfigError("invalid training hyperparameters");
  const int n_in = set.nx * set.ny;
  const int n_out = set.layout.size();

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng = stage_engine(opt.seed, Stage::train_split);
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t n_val =
      std::clamp<std::size_t>(std::size_t(std::lround(opt.validation_fraction * double(total))), 1, total - 1);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  std::vector<std::size_t> train_idx(order.begin() + std::ptrdiff_t(n_val), order.end());

  auto gather = [&](const std::vector<std::size_t>& idx, RMat& x, RMat& y) {
    x.resize(n_in, Eigen::Index(idx.size()));
    y.resize(n_out, Eigen::Index(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const auto& s = set.samples[idx[c]];
      if (s.permittivity.size() != n_in || s.fields.size() != n_out) throw DataError("training sample has wrong shape");
      x.col(Eigen::Index(c)) = s.permittivity;
      y.col(Eigen::Index(c)) = s.fields;
    }
  };
  RMat x_train, y_train, x_val, y_val;
  gather(train_idx, x_train, y_train);
  gather(val_idx, x_val, y_val);
  const Standardizer in = Standardizer::fit(x_train);
  const Standardizer out = Standardizer::fit(y_train);
  const RMat zx_train = in.apply(x_train), zy_train = out.apply(y_train);
  const RMat zx_val = in.apply(x_val), zy_val = out.apply(y_val);

  std::vector<int> sizes{n_in};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(n_out);
  Mlp net(sizes, opt.activation, opt.seed);
  auto& layers = net.layers();
  const std::size_t L = layers.size();

  AdamMoments adam;
  for (const auto& l : layers) {
    adam.mw.push_back(RMat::Zero(l.weight.rows(), l.weight.cols()));
    adam.vw.push_back(RMat::Zero(l.weight.rows(), l.weight.cols()));
    adam.mb.push_back(RVec::Zero(l.bias.size()));
    adam.vb.push_back(RVec::Zero(l.bias.size()));
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  TrainingReport rep;
  std::vector<Mlp::Layer> best = layers;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::mt19937_64 shuffle_rng = stage_engine(opt.seed, Stage::epoch_shuffle);
  std::vector<Eigen::Index> perm(train_idx.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<RMat> acts(L + 1);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    for (std::size_t start = 0; start < perm.size(); start += std::size_t(opt.batch_size)) {
      const std::size_t bs = std::min<std::size_t>(std::size_t(opt.batch_size), perm.size() - start);
      RMat xb(n_in, Eigen::Index(bs)), yb(n_out, Eigen::Index(bs));
      for (std::size_t c = 0; c < bs; ++c) {
        xb.col(Eigen::Index(c)) = zx_train.col(perm[start + c]);
        yb.col(Eigen::Index(c)) = zy_train.col(perm[start + c]);
      }
      acts[0] = std::move(xb);
      for (std::size_t l = 0; l < L; ++l) {
        RMat z = layers[l].weight * acts[l];
        z.colwise() += layers[l].bias;
        if (l + 1 < L) activate(z, opt.activation);
        acts[l + 1] = std::move(z);
      }
      // d(mean squared error)/d(output)
      RMat delta = (2.0 / double(yb.size())) * (acts[L] - yb);
      ++step;
      const double c1 = 1.0 - std::pow(b1, double(step));
      const double c2 = 1.0 - std::pow(b2, double(step));
      for (std::size_t l = L; l-- > 0;) {
        const RMat gw = delta * acts[l].transpose();
        const RVec gb = delta.rowwise().sum();
        if (l > 0) delta = (layers[l].weight.transpose() * delta).cwiseProduct(activation_slope(acts[l], opt.activation));
        adam.mw[l] = b1 * adam.mw[l] + (1.0 - b1) * gw;
        adam.vw[l] = b2 * adam.vw[l] + (1.0 - b2) * gw.cwiseAbs2();
        adam.mb[l] = b1 * adam.mb[l] + (1.0 - b1) * gb;
        adam.vb[l] = b2 * adam.vb[l] + (1.0 - b2) * gb.cwiseAbs2();
        layers[l].weight.array() -=
            opt.learning_rate * (adam.mw[l].array() / c1) / ((adam.vw[l].array() / c2).sqrt() + eps);
        layers[l].bias.array() -=
            opt.learning_rate * (adam.mb[l].array() / c1) / ((adam.vb[l].array() / c2).sqrt() + eps);
      }
    }
    const double train_loss = mse(net.forward(zx_train), zy_train);
    const double val_loss = mse(net.forward(zx_val), zy_val);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      std::ostringstream os;
      os << "training diverged at epoch " << epoch << " (train loss " << train_loss << ", validation loss "
         << val_loss << ")";
      throw ModelError(os.str());
    }
    rep.train_loss.push_back(train_loss);
    rep.validation_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best = layers;
    } else if (epoch - best_epoch >= opt.patience) {
      break;
    }
  }
  layers = best;

  rep.best_epoch = best_epoch;
  rep.best_validation = best_val;
  rep.validation_physical_mse = mse(out.invert(net.forward(zx_val)), y_val);
  rep.train_indices = train_idx;
  rep.validation_indices = val_idx;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json manifest;
  manifest["hidden"] = opt.hidden;
  manifest["activation"] = to_string(opt.activation);
  manifest["epochs_max"] = opt.epochs;
  manifest["epochs_run"] = rep.train_loss.size();
  manifest["batch_size"] = opt.batch_size;
  manifest["learning_rate"] = opt.learning_rate;
  manifest["optimizer"] = "adam(0.9, 0.999, 1e-8)";
  manifest["patience"] = opt.patience;
  manifest["validation_fraction"] = opt.validation_fraction;
  manifest["seed"] = std::to_string(opt.seed);
  manifest["samples"] = total;
  manifest["frequencies_hz"] = set.frequencies;
  manifest["best_epoch"] = best_epoch;
  manifest["best_validation_mse_normalized"] = best_val;
  manifest["validation_mse_physical"] = rep.validation_physical_mse;
  manifest["train_loss"] = rep.train_loss;
  manifest["validation_loss"] = rep.validation_loss;
  if (report) *report = std::move(rep);
  return Surrogate(std::move(net), in, out, set.layout, set.nx, set.ny, set.geometry_hash, manifest.dump());
}

}  // namespace scatlab
