#ifndef SCATLAB_SURROGATE_HPP
#define SCATLAB_SURROGATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"
#include "scatlab/forward.hpp"

namespace scatlab {

enum class Activation { tanh, relu };
std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network, hidden layers use `activation`, output is linear.
/// Batches are column-major: one sample per column.
class Mlp {
 public:
  struct Layer {
    RMat weight;  // out x in
    RVec bias;
  };

  Mlp() = default;
  Mlp(const std::vector<int>& sizes, Activation activation, std::uint64_t seed);

  RMat forward(const RMat& input) const;
  int inputs() const { return int(layers_.front().weight.cols()); }
  int outputs() const { return int(layers_.back().weight.rows()); }
  std::vector<int> sizes() const;
  Activation activation() const { return activation_; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::vector<Layer> layers_;
  Activation activation_ = Activation::tanh;
};

/// Per-feature affine map x -> (x - mean) / scale. Constant features get the
/// RMS spread of the varying ones (or the data RMS if nothing varies).
struct Standardizer {
  RVec mean;
  RVec scale;

  static Standardizer fit(const RMat& columns);
  RMat apply(const RMat& x) const;
  RMat invert(const RMat& z) const;
};

/// Receiver-field layout of the network output: for each (k, p) a block of Q
/// real parts followed by Q imaginary parts.
struct FieldLayout {
  int K = 0;
  int P = 0;
  int Q = 0;

  int size() const { return 2 * K * P * Q; }
  RVec pack(const KPArray<CVec>& fields) const;
  KPArray<CVec> unpack(const Eigen::Ref<const RVec>& flat) const;
};

struct TrainingSample {
  std::string template_name;
  std::uint64_t seed = 0;
  std::vector<double> eps_draws;
  RVec permittivity;  // N
  RVec fields;        // FieldLayout packing
};

struct TrainingSet {
  std::uint64_t geometry_hash = 0;
  int nx = 0;
  int ny = 0;
  std::vector<double> frequencies;
  FieldLayout layout;
  std::vector<TrainingSample> samples;

  void save(const std::string& path) const;
  static TrainingSet load(const std::string& path);
};

/// Draws every homogeneous scatterer's eps_r from Uniform(1.1, 5) per sample,
/// rasterizes and runs the exact forward solver with lambda = 1. Samples are
/// generated in parallel; each depends only on (seed, sample index).
TrainingSet generate_training_set(const std::vector<SceneSpec>& templates, int n_per_config, std::uint64_t seed,
                                  const GreensOperators& greens, const SolverOptions& solver = {},
                                  Execution exec = Execution::parallel);

struct TrainingOptions {
  std::vector<int> hidden{512, 512};
  Activation activation = Activation::tanh;
  int epochs = 2000;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int patience = 100;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainingReport {
  std::vector<double> train_loss;       // normalized MSE per epoch (full pass)
  std::vector<double> validation_loss;  // normalized MSE per epoch
  int best_epoch = -1;
  double best_validation = 0.0;
  double validation_physical_mse = 0.0;  // at the best snapshot, field units
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
  double seconds = 0.0;
};

class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(Mlp net, Standardizer input, Standardizer output, FieldLayout layout, int nx, int ny,
            std::uint64_t geometry_hash, std::string manifest_json);

  /// One forward pass; warns when eps_r leaves [1, 8].
  KPArray<CVec> predict(const ContrastMap& chi) const;
  RVec predict_flat(const RVec& permittivity) const;

  /// Throws ModelError when the geometry hash differs from the model's.
  void check_geometry(const GreensOperators& greens) const;

  void save(const std::string& path) const;
  static Surrogate load(const std::string& path);

  const Mlp& network() const { return net_; }
  const FieldLayout& layout() const { return layout_; }
  std::uint64_t geometry_hash() const { return hash_; }
  const std::string& manifest() const { return manifest_; }
  const Standardizer& input_stats() const { return in_; }
  const Standardizer& output_stats() const { return out_; }

 private:
  Mlp net_;
  Standardizer in_;
  Standardizer out_;
  FieldLayout layout_;
  int nx_ = 0;
  int ny_ = 0;
  std::uint64_t hash_ = 0;
  std::string manifest_;
};

/// Mini-batch Adam on the standardized MSE; returns the best-validation snapshot.
Surrogate train(const TrainingSet& set, const TrainingOptions& options, TrainingReport* report = nullptr);

inline constexpr const char* kModelMagic = "SCATLAB-MLP-1";
inline constexpr const char* kTrainingSetMagic = "SCATLAB-TRAIN-1";

}  // namespace scatlab

#endif  // SCATLAB_SURROGATE_HPP
