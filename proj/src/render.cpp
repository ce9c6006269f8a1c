#include "scatlab/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "json_util.hpp"

namespace scatlab {

namespace {

constexpr int kBarGap = 8;
constexpr int kBarWidth = 24;

int pick_cell_pixels(int nx, int ny, const RenderOptions& o) {
  if (o.cell_pixels > 0) return o.cell_pixels;
  return std::max(1, 320 / std::max(nx, ny));
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

std::array<unsigned char, 3> colormap(double t) {
  // Piecewise-linear approximation of a perceptually ordered dark-to-bright map.
  static constexpr double anchors[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double x = t * 4.0;
  const int i = std::min(3, int(x));
  const double f = x - i;
  std::array<unsigned char, 3> c{};
  for (int ch = 0; ch < 3; ++ch)
    c[std::size_t(ch)] = static_cast<unsigned char>(std::lround(anchors[i][ch] * (1.0 - f) + anchors[i + 1][ch] * f));
  return c;
}

std::pair<int, int> heatmap_pixel(int ix, int iy, int nx, int ny, const RenderOptions& options) {
  const int c = pick_cell_pixels(nx, ny, options);
  return {ix * c + c / 2, (ny - 1 - iy) * c + c / 2};
}

void write_heatmap_png(const RVec& values, int nx, int ny, const std::string& path, const RenderOptions& options) {
  if (nx <= 0 || ny <= 0 || values.size() != Eigen::Index(nx) * ny)
    throw DataError("heat map values do not match the grid");
  double lo = values.minCoeff(), hi = values.maxCoeff();
  if (options.range) std::tie(lo, hi) = *options.range;
  const bool constant = !(hi > lo);
  if (constant) warn("rendering a constant map (value " + detail::format_double(lo) + ")");

  const int c = pick_cell_pixels(nx, ny, options);
  const int map_w = nx * c, map_h = ny * c;
  const int width = options.colorbar ? map_w + kBarGap + kBarWidth : map_w;
  const int height = map_h;
  std::vector<unsigned char> rgb(std::size_t(width) * height * 3, 255);
  auto put = [&](int x, int y, std::array<unsigned char, 3> col) {
    std::copy(col.begin(), col.end(), rgb.begin() + (std::ptrdiff_t(y) * width + x) * 3);
  };
  auto norm = [&](double v) { return constant ? 0.5 : (v - lo) / (hi - lo); };
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const auto col = colormap(norm(values[iy * nx + ix]));
      const int y0 = (ny - 1 - iy) * c;
      for (int dy = 0; dy < c; ++dy)
        for (int dx = 0; dx < c; ++dx) put(ix * c + dx, y0 + dy, col);
    }
  if (options.colorbar)
    for (int y = 0; y < height; ++y) {
      const auto col = colormap(constant ? 0.5 : 1.0 - double(y) / std::max(1, height - 1));
      for (int x = 0; x < kBarWidth; ++x) put(map_w + kBarGap + x, y, col);
    }

  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::string smin = detail::format_double(lo), smax = detail::format_double(hi);
  std::string key_min = "min", key_max = "max", key_scale = "scale", scale = "linear";
  png_text text[3] = {};
  text[0].compression = text[1].compression = text[2].compression = PNG_TEXT_COMPRESSION_NONE;
  text[0].key = key_min.data();
  text[0].text = smin.data();
  text[1].key = key_max.data();
  text[1].text = smax.data();
  text[2].key = key_scale.data();
  text[2].text = scale.data();
  png_set_text(png, info, text, 3);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, rgb.data() + std::size_t(y) * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::array<unsigned char, 3> RgbImage::at(int x, int y) const {
  const std::size_t i = (std::size_t(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

RgbImage read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  RgbImage img;
  img.width = int(png_get_image_width(png, info));
  img.height = int(png_get_image_height(png, info));
  img.rgb.resize(std::size_t(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.rgb.data() + std::size_t(y) * img.width * 3, nullptr);
  png_read_end(png, info);
  png_textp text = nullptr;
  int n = 0;
  png_get_text(png, info, &text, &n);
  for (int i = 0; i < n; ++i) img.text.emplace_back(text[i].key, text[i].text);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path + "'");
  return os;
}

}  // namespace

void write_chi_csv(const ContrastMap& chi, const std::string& path) {
  auto os = open_csv(path);
  os << "ix,iy,re_chi,im_chi\n";
  for (int iy = 0; iy < chi.ny(); ++iy)
    for (int ix = 0; ix < chi.nx(); ++ix) {
      const cplx v = chi[iy * chi.nx() + ix];
      os << ix << ',' << iy << ',' << detail::format_double(v.real()) << ',' << detail::format_double(v.imag())
         << '\n';
    }
  if (!os) throw IoError("write failed for '" + path + "'");
}

ContrastMap read_chi_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  if (line.rfind("ix,iy,re_chi,im_chi", 0) != 0) throw ParseError("unexpected header in " + path, 1);
  struct Cell {
    long ix, iy;
    cplx v;
  };
  std::vector<Cell> cells;
  long n = 1, nx = 0, ny = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string t; std::getline(ss, t, ',');) cols.push_back(t);
    if (cols.size() != 4) throw ParseError("expected 4 columns in " + path, n);
    Cell c{std::lround(detail::parse_double(cols[0], n)), std::lround(detail::parse_double(cols[1], n)),
           {detail::parse_double(cols[2], n), detail::parse_double(cols[3], n)}};
    if (c.ix < 0 || c.iy < 0) throw ParseError("negative cell index in " + path, n);
    nx = std::max(nx, c.ix + 1);
    ny = std::max(ny, c.iy + 1);
    cells.push_back(c);
  }
  if (cells.empty() || std::size_t(nx * ny) != cells.size())
    throw DataError("'" + path + "' does not describe a complete grid");
  ContrastMap chi{int(nx), int(ny)};
  for (const auto& c : cells) chi[int(c.iy * nx + c.ix)] = c.v;
  return chi;
}

void write_cost_csv(const std::vector<CostBreakdown>& history, const std::string& path) {
  auto os = open_csv(path);
  os << "iteration,data,state,calib,reg,total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& c = history[i];
    os << i + 1 << ',' << detail::format_double(c.data) << ',' << detail::format_double(c.state) << ','
       << detail::format_double(c.calib) << ',' << detail::format_double(c.reg) << ','
       << detail::format_double(c.total) << '\n';
  }
}

void write_lambda_csv(const std::vector<KPArray<cplx>>& trace, const std::string& path) {
  auto os = open_csv(path);
  os << "iteration,k,p,re_lambda,im_lambda\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    for (int k = 0; k < trace[i].frequencies(); ++k)
      for (int p = 0; p < trace[i].transmitters(); ++p)
        os << i + 1 << ',' << k << ',' << p << ',' << detail::format_double(trace[i](k, p).real()) << ','
           << detail::format_double(trace[i](k, p).imag()) << '\n';
}

void write_nse_csv(const std::vector<double>& trace, const std::string& path) {
  auto os = open_csv(path);
  os << "iteration,nse\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << i + 1 << ',' << detail::format_double(trace[i]) << '\n';
}

}  // namespace scatlab
