#ifndef SCATLAB_DOMAIN_HPP
#define SCATLAB_DOMAIN_HPP

#include <string>
#include <vector>

#include "scatlab/common.hpp"

namespace scatlab {

/// Vacuum constants (SI). Immutable.
struct PhysicalConstants {
  double eps0 = 8.8541878128e-12;  // F/m
  double mu0 = 1.25663706212e-6;   // H/m
};
inline constexpr PhysicalConstants kVacuum{};

/// Uniform square-cell grid covering the imaging domain D.
///
/// Cells are indexed row-major, `index = iy * nx + ix`, with ix running along
/// +x. Construction rejects grids whose cells would not be square.
class ImagingGrid {
 public:
  ImagingGrid(int nx, int ny, double extent_x, double extent_y, Point center = {});
  static ImagingGrid square(int n, double extent, Point center = {}) {
    return ImagingGrid(n, n, extent, extent, center);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double extent_x() const { return extent_x_; }
  double extent_y() const { return extent_y_; }
  double cell_size() const { return cell_size_; }
  double cell_area() const { return cell_size_ * cell_size_; }
  Point center() const { return center_; }

  int index(int ix, int iy) const { return iy * nx_ + ix; }
  Point cell_center(int i) const { return centers_[std::size_t(i)]; }
  const std::vector<Point>& cell_centers() const { return centers_; }

  /// True when p lies in the closed rectangle covered by the grid.
  bool contains(Point p) const;

  friend bool operator==(const ImagingGrid& a, const ImagingGrid& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.extent_x_ == b.extent_x_ &&
           a.extent_y_ == b.extent_y_ && a.center_.x == b.center_.x && a.center_.y == b.center_.y;
  }

 private:
  int nx_;
  int ny_;
  double extent_x_;
  double extent_y_;
  double cell_size_;
  Point center_;
  std::vector<Point> centers_;
};

struct SensorArray {
  std::vector<Point> tx;
  std::vector<Point> rx;  // every receiver position
  /// Receivers recorded for each transmitter, as indices into `rx`. Empty means
  /// every transmitter records every receiver.
  std::vector<std::vector<int>> listens;

  int transmitters() const { return int(tx.size()); }
  /// Receivers recorded per transmitter (Q).
  int receivers() const { return listens.empty() ? int(rx.size()) : int(listens.front().size()); }
  int positions() const { return int(rx.size()); }
  bool shared() const { return listens.empty(); }

  std::vector<int> receivers_of(int p) const;
  /// Rows of a field over every receiver position that transmitter p records.
  CVec recorded(int p, const CVec& all) const;

  /// Throws GeometryError when a sensor lies inside the grid, the array is
  /// empty, the per-transmitter lists are malformed or a transmitter records a
  /// receiver at its own position.
  void validate(const ImagingGrid& grid) const;
};

/// Transmitters and receivers on one circle, angles in degrees measured from +x.
SensorArray circular_array(double radius, const std::vector<double>& tx_angles_deg,
                           const std::vector<double>& rx_angles_deg);

/// One receiver list per transmitter. Receivers at the same angle (mod 360,
/// to 1e-6 degrees) share a position.
SensorArray per_transmitter_array(double radius, const std::vector<double>& tx_angles_deg,
                                  const std::vector<std::vector<double>>& rx_angles_deg);

/// Default Fresnel-style layout: 8 Tx every 45 degrees, each recording 241 Rx
/// at 1 degree spacing from 60 to 300 degrees relative to its own angle, all
/// 1.67 m from the origin. The relative arc is an assumption; imported datasets
/// carry their own angles.
SensorArray fresnel_geometry();

class FrequencySet {
 public:
  FrequencySet() = default;
  explicit FrequencySet(std::vector<double> hz);

  int size() const { return int(hz_.size()); }
  double hz(int k) const { return hz_[std::size_t(k)]; }
  double omega(int k) const;
  double wavenumber(int k) const;
  const std::vector<double>& values() const { return hz_; }

 private:
  std::vector<double> hz_;
};

/// Complex contrast chi = eps_r - 1 + sigma / (j omega eps0) per cell.
///
/// Under the exp(+j omega t) convention a passive medium has Re(chi) >= 0 and
/// Im(chi) <= 0.
class ContrastMap {
 public:
  ContrastMap() = default;
  ContrastMap(int nx, int ny);
  ContrastMap(int nx, int ny, CVec values);
  explicit ContrastMap(const ImagingGrid& grid) : ContrastMap(grid.nx(), grid.ny()) {}

  static ContrastMap from_permittivity(int nx, int ny, const RVec& eps_r);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return int(values_.size()); }

  const CVec& values() const { return values_; }
  CVec& values() { return values_; }
  cplx operator[](int i) const { return values_[i]; }
  cplx& operator[](int i) { return values_[i]; }

  double permittivity(int i) const { return 1.0 + values_[i].real(); }
  RVec permittivity() const;

  bool matches(const ImagingGrid& grid) const { return nx_ == grid.nx() && ny_ == grid.ny(); }

 private:
  int nx_ = 0;
  int ny_ = 0;
  CVec values_;
};

struct Primitive {
  enum class Kind { circle, annulus };
  Kind kind = Kind::circle;
  Point center;
  double inner_radius = 0.0;  // annulus only
  double outer_radius = 0.0;
  double eps_r = 1.0;
  std::string label;

  bool contains(Point p) const;
};

struct SceneSpec {
  std::string name;
  std::vector<Primitive> primitives;
};

/// Foam cylinder (d = 80 mm, eps_r = 1.45) at the origin with a plastic
/// cylinder (d = 31 mm, eps_r = 3) touching it on the -x side.
SceneSpec foam_diel_ext();
/// Same foam cylinder with the plastic cylinder embedded at (-5 mm, 0).
SceneSpec foam_diel_int();
/// Looks up "FoamDielExt" / "FoamDielInt"; throws ConfigError otherwise.
SceneSpec named_scene(const std::string& name);

/// Cell value is chi of the last primitive containing the cell center, else 0.
ContrastMap rasterize(const SceneSpec& scene, const ImagingGrid& grid);

}  // namespace scatlab

#endif  // SCATLAB_DOMAIN_HPP
