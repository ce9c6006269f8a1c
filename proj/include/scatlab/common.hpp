#ifndef SCATLAB_COMMON_HPP
#define SCATLAB_COMMON_HPP

#include <complex>
#include <functional>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scatlab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cplx kJ{0.0, 1.0};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Error hierarchy. Every failure surfaced by the library derives from Error so
// the CLI can map it to a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error("geometry", what) {}
};
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data", what) {}
};
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = -1)
      : Error("parse", line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error("model", what) {}
};
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

// Dense table indexed by (frequency k, transmitter p).
template <class T>
class KPArray {
 public:
  KPArray() = default;
  KPArray(int K, int P, const T& init = T{}) : K_(K), P_(P), data_(std::size_t(K) * P, init) {}

  int frequencies() const { return K_; }
  int transmitters() const { return P_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int k, int p) { return data_[std::size_t(k) * P_ + p]; }
  const T& operator()(int k, int p) const { return data_[std::size_t(k) * P_ + p]; }
  T& flat(std::size_t i) { return data_[i]; }
  const T& flat(std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  int K_ = 0;
  int P_ = 0;
  std::vector<T> data_;
};

// Selects between the OpenMP kernels and their serial reference versions.
enum class Execution { serial, parallel };

// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace scatlab

#endif  // SCATLAB_COMMON_HPP
