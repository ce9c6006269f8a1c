#ifndef SCATLAB_RENDER_HPP
#define SCATLAB_RENDER_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"
#include "scatlab/inversion.hpp"

namespace scatlab {

struct RenderOptions {
  int cell_pixels = 0;  // 0 picks about 320 px across the map
  std::optional<std::pair<double, double>> range;  // default: data min/max
  bool colorbar = true;
};

/// Heat map of a per-cell value (row iy = ny - 1 at the top) with a linear
/// color scale and a color bar on the right. The scale limits are stored as
/// PNG text chunks "min" and "max". Warns when the map is constant.
void write_heatmap_png(const RVec& values, int nx, int ny, const std::string& path,
                       const RenderOptions& options = {});
inline void write_permittivity_png(const ContrastMap& chi, const std::string& path,
                                   const RenderOptions& options = {}) {
  write_heatmap_png(chi.permittivity(), chi.nx(), chi.ny(), path, options);
}

/// Maps t in [0, 1] to 8-bit RGB.
std::array<unsigned char, 3> colormap(double t);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel
  std::vector<std::pair<std::string, std::string>> text;

  std::array<unsigned char, 3> at(int x, int y) const;
};
RgbImage read_png(const std::string& path);

/// Pixel position of the centre of cell (ix, iy) in a heat map written with
/// the same options.
std::pair<int, int> heatmap_pixel(int ix, int iy, int nx, int ny, const RenderOptions& options = {});

/// CSV writers. Every file has a header row; floats use 17 significant digits.
void write_chi_csv(const ContrastMap& chi, const std::string& path);  // ix,iy,re_chi,im_chi
ContrastMap read_chi_csv(const std::string& path);
void write_cost_csv(const std::vector<CostBreakdown>& history, const std::string& path);
void write_lambda_csv(const std::vector<KPArray<cplx>>& trace, const std::string& path);
void write_nse_csv(const std::vector<double>& trace, const std::string& path);

}  // namespace scatlab

#endif  // SCATLAB_RENDER_HPP
