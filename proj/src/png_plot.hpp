#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gaitrec::plot {

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
};

class Canvas {
 public:
  Canvas(std::size_t width, std::size_t height, Color background = {255, 255, 255});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  void set(std::ptrdiff_t x, std::ptrdiff_t y, Color c);
  void line(double x0, double y0, double x1, double y1, Color c);
  void fill_rect(std::ptrdiff_t x, std::ptrdiff_t y, std::size_t w, std::size_t h, Color c);
  // 5x7 bitmap font (digits, upper-case letters, basic punctuation);
  // lower-case input is upcased, unknown glyphs render as blanks.
  void text(std::ptrdiff_t x, std::ptrdiff_t y, const std::string& s, Color c, int scale = 1);

  const std::vector<std::uint8_t>& rgb() const { return rgb_; }

 private:
  std::size_t width_, height_;
  std::vector<std::uint8_t> rgb_;
};

// Minimal deterministic PNG writer (8-bit RGB, zlib-compressed).
void write_png(const std::filesystem::path& path, const Canvas& canvas);

// Line chart with labelled axes; series share the x grid.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  double y_max = 1.0;
  std::size_t width = 640;
  std::size_t height = 420;
};

void write_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                      const std::vector<Series>& series);

}  // namespace gaitrec::plot
