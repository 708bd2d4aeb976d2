#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace spot {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit interleaved RGB image, row-major from the top-left pixel.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Raster() = default;
  Raster(int w, int h, Rgb fill = {0, 0, 0});

  bool empty() const { return width == 0 || height == 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);

  friend bool operator==(const Raster&, const Raster&) = default;
};

void write_ppm(const std::filesystem::path& path, const Raster& img);
Raster read_ppm(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster& img);

// Axis-aligned outline of `thickness` pixels, inside the box, clipped to the image.
void draw_box_outline(Raster& img, double x_min, double y_min, double x_max, double y_max, Rgb color,
                      int thickness);

}  // namespace spot
