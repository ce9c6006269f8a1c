#include "scatlab/domain.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace scatlab {

namespace {
WarningSink& warning_sink() {
  static WarningSink sink;
  return sink;
}
std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(warning_mutex());
  warning_sink() = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(warning_mutex());
  if (auto& sink = warning_sink()) {
    sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

ImagingGrid::ImagingGrid(int nx, int ny, double extent_x, double extent_y, Point center)
    : nx_(nx), ny_(ny), extent_x_(extent_x), extent_y_(extent_y), center_(center) {
  if (nx <= 0 || ny <= 0) throw ConfigError("grid cell counts must be positive");
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) throw ConfigError("grid extent must be positive");
  const double hx = extent_x / nx;
  const double hy = extent_y / ny;
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
    std::ostringstream os;
    os << "grid cells must be square (extent_x/nx = " << hx << ", extent_y/ny = " << hy << ")";
    throw ConfigError(os.str());
  }
  cell_size_ = hx;
  centers_.reserve(std::size_t(nx) * ny);
  const double x0 = center.x - 0.5 * extent_x;
  const double y0 = center.y - 0.5 * extent_y;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      centers_.push_back({x0 + (ix + 0.5) * hx, y0 + (iy + 0.5) * hx});
}

bool ImagingGrid::contains(Point p) const {
  return std::abs(p.x - center_.x) <= 0.5 * extent_x_ && std::abs(p.y - center_.y) <= 0.5 * extent_y_;
}

std::vector<int> SensorArray::receivers_of(int p) const {
  if (p < 0 || p >= transmitters()) throw DomainError("transmitter index out of range");
  if (!listens.empty()) return listens[std::size_t(p)];
  std::vector<int> all(rx.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = int(i);
  return all;
}

CVec SensorArray::recorded(int p, const CVec& all) const {
  if (all.size() != positions()) throw DomainError("field does not cover every receiver position");
  if (listens.empty()) return all;
  const std::vector<int>& idx = listens[std::size_t(p)];
  CVec out(Eigen::Index(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[Eigen::Index(i)] = all[idx[i]];
  return out;
}

void SensorArray::validate(const ImagingGrid& grid) const {
  if (tx.empty()) throw GeometryError("sensor array has no transmitters");
  if (rx.empty()) throw GeometryError("sensor array has no receivers");
  auto check = [&](const std::vector<Point>& pts, const char* kind) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (grid.contains(pts[i])) {
        std::ostringstream os;
        os << kind << ' ' << i << " at (" << pts[i].x << ", " << pts[i].y
           << ") lies inside the imaging domain";
        throw GeometryError(os.str());
      }
    }
  };
  check(tx, "transmitter");
  check(rx, "receiver");
  if (listens.empty()) return;
  if (listens.size() != tx.size()) throw GeometryError("one receiver list per transmitter is required");
  for (std::size_t p = 0; p < listens.size(); ++p) {
    const std::vector<int>& idx = listens[p];
    if (idx.empty() || idx.size() != listens.front().size())
      throw GeometryError("every transmitter must record the same number of receivers");
    std::vector<char> seen(rx.size(), 0);
    for (int q : idx) {
      if (q < 0 || q >= positions() || seen[std::size_t(q)]++)
        throw GeometryError("receiver list of transmitter " + std::to_string(p) + " is invalid");
      if (distance(tx[p], rx[std::size_t(q)]) == 0.0)
        throw GeometryError("transmitter " + std::to_string(p) + " records a receiver at its own position");
    }
  }
}

namespace {

Point polar(double radius, double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  return Point{radius * std::cos(a), radius * std::sin(a)};
}

}  // namespace

SensorArray circular_array(double radius, const std::vector<double>& tx_angles_deg,
                           const std::vector<double>& rx_angles_deg) {
  SensorArray s;
  for (double a : tx_angles_deg) s.tx.push_back(polar(radius, a));
  for (double a : rx_angles_deg) s.rx.push_back(polar(radius, a));
  return s;
}

SensorArray per_transmitter_array(double radius, const std::vector<double>& tx_angles_deg,
                                  const std::vector<std::vector<double>>& rx_angles_deg) {
  if (rx_angles_deg.size() != tx_angles_deg.size())
    throw GeometryError("one receiver list per transmitter is required");
  SensorArray s;
  for (double a : tx_angles_deg) s.tx.push_back(polar(radius, a));
  std::map<long long, int> slot;
  for (const auto& list : rx_angles_deg) {
    std::vector<int> idx;
    for (double a : list) {
      const long long key = std::llround(std::fmod(std::fmod(a, 360.0) + 360.0, 360.0) * 1e6) % 360000000ll;
      auto [it, fresh] = slot.emplace(key, int(s.rx.size()));
      if (fresh) s.rx.push_back(polar(radius, double(key) * 1e-6));
      idx.push_back(it->second);
    }
    s.listens.push_back(std::move(idx));
  }
  return s;
}

SensorArray fresnel_geometry() {
  std::vector<double> tx;
  std::vector<std::vector<double>> rx(8);
  for (int p = 0; p < 8; ++p) {
    tx.push_back(45.0 * p);
    for (int q = 0; q < 241; ++q) rx[std::size_t(p)].push_back(45.0 * p + 60.0 + q);
  }
  return per_transmitter_array(1.67, tx, rx);
}

FrequencySet::FrequencySet(std::vector<double> hz) : hz_(std::move(hz)) {
  if (hz_.empty()) throw ConfigError("frequency list is empty");
  for (std::size_t i = 0; i < hz_.size(); ++i) {
    if (!(hz_[i] > 0.0)) throw ConfigError("frequencies must be positive");
    if (i > 0 && !(hz_[i] > hz_[i - 1])) throw ConfigError("frequencies must be strictly increasing");
  }
}

double FrequencySet::omega(int k) const { return 2.0 * std::numbers::pi * hz(k); }

double FrequencySet::wavenumber(int k) const {
  return omega(k) * std::sqrt(kVacuum.mu0 * kVacuum.eps0);
}

ContrastMap::ContrastMap(int nx, int ny) : nx_(nx), ny_(ny), values_(CVec::Zero(nx * ny)) {}

ContrastMap::ContrastMap(int nx, int ny, CVec values) : nx_(nx), ny_(ny), values_(std::move(values)) {
  if (values_.size() != Eigen::Index(nx) * ny)
    throw DomainError("contrast map size does not match grid dimensions");
}

ContrastMap ContrastMap::from_permittivity(int nx, int ny, const RVec& eps_r) {
  if (eps_r.size() != Eigen::Index(nx) * ny)
    throw DomainError("permittivity map size does not match grid dimensions");
  CVec v = (eps_r.array() - 1.0).cast<cplx>();
  return ContrastMap(nx, ny, std::move(v));
}

RVec ContrastMap::permittivity() const { return values_.real().array() + 1.0; }

bool Primitive::contains(Point p) const {
  const double r = std::hypot(p.x - center.x, p.y - center.y);
  if (kind == Kind::annulus) return r >= inner_radius && r <= outer_radius;
  return r <= outer_radius;
}

SceneSpec foam_diel_ext() {
  SceneSpec s;
  s.name = "FoamDielExt";
  s.primitives.push_back({Primitive::Kind::circle, {0.0, 0.0}, 0.0, 0.040, 1.45, "foam"});
  s.primitives.push_back({Primitive::Kind::circle, {-0.0555, 0.0}, 0.0, 0.0155, 3.0, "plastic"});
  return s;
}

SceneSpec foam_diel_int() {
  SceneSpec s;
  s.name = "FoamDielInt";
  s.primitives.push_back({Primitive::Kind::circle, {0.0, 0.0}, 0.0, 0.040, 1.45, "foam"});
  s.primitives.push_back({Primitive::Kind::circle, {-0.005, 0.0}, 0.0, 0.0155, 3.0, "plastic"});
  return s;
}

SceneSpec named_scene(const std::string& name) {
  if (name == "FoamDielExt") return foam_diel_ext();
  if (name == "FoamDielInt") return foam_diel_int();
  throw ConfigError("unknown scene template '" + name + "'");
}

ContrastMap rasterize(const SceneSpec& scene, const ImagingGrid& grid) {
  for (const auto& prim : scene.primitives) {
    const double r = prim.outer_radius;
    if (!(r > 0.0) || (prim.kind == Primitive::Kind::annulus && !(prim.inner_radius < r)))
      throw ConfigError("primitive '" + prim.label + "' has invalid radii");
    if (!(prim.eps_r > 1.0))
      throw ConfigError("primitive '" + prim.label + "' must have eps_r > 1");
    const Point c = prim.center;
    if (!grid.contains({c.x - r, c.y - r}) || !grid.contains({c.x + r, c.y + r}))
      throw ConfigError("primitive '" + prim.label + "' extends outside the imaging grid");
  }
  ContrastMap chi(grid);
  for (int i = 0; i < grid.size(); ++i) {
    const Point p = grid.cell_center(i);
    for (const auto& prim : scene.primitives)
      if (prim.contains(p)) chi[i] = cplx(prim.eps_r - 1.0, 0.0);
  }
  return chi;
}

}  // namespace scatlab
