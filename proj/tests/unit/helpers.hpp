#ifndef SCATLAB_TESTS_HELPERS_HPP
#define SCATLAB_TESTS_HELPERS_HPP

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"
#include "scatlab/forward.hpp"

namespace testing {

using namespace scatlab;

inline double rel(const CVec& a, const CVec& b) { return (a - b).norm() / b.norm(); }

inline CVec random_cvec(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

inline cplx random_cplx(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return {g(rng), g(rng)};
}

/// Small ring of sensors around a grid centred at the origin.
inline SensorArray ring(int P, int Q, double radius) {
  std::vector<double> tx, rx;
  for (int p = 0; p < P; ++p) tx.push_back(360.0 * p / P);
  for (int q = 0; q < Q; ++q) rx.push_back(360.0 * q / Q + 0.5);
  return circular_array(radius, tx, rx);
}

/// Captures warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_sink(nullptr); }
  std::vector<std::string> messages;
};

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("scatlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing


#endif  // SCATLAB_TESTS_HELPERS_HPP
