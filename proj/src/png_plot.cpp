#include "png_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "gaitrec/util.hpp"

namespace gaitrec::plot {

Canvas::Canvas(std::size_t width, std::size_t height, Color background)
    : width_(width), height_(height), rgb_(width * height * 3) {
  for (std::size_t i = 0; i < width * height; ++i) {
    rgb_[3 * i] = background.r;
    rgb_[3 * i + 1] = background.g;
    rgb_[3 * i + 2] = background.b;
  }
}

void Canvas::set(std::ptrdiff_t x, std::ptrdiff_t y, Color c) {
  if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(width_) ||
      y >= static_cast<std::ptrdiff_t>(height_))
    return;
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)) * 3;
  rgb_[i] = c.r;
  rgb_[i + 1] = c.g;
  rgb_[i + 2] = c.b;
}

void Canvas::line(double x0, double y0, double x1, double y1, Color c) {
  const double dx = x1 - x0, dy = y1 - y0;
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
    set(static_cast<std::ptrdiff_t>(std::lround(x0 + t * dx)),
        static_cast<std::ptrdiff_t>(std::lround(y0 + t * dy)), c);
  }
}

void Canvas::fill_rect(std::ptrdiff_t x, std::ptrdiff_t y, std::size_t w, std::size_t h, Color c) {
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t col = 0; col < w; ++col)
      set(x + static_cast<std::ptrdiff_t>(col), y + static_cast<std::ptrdiff_t>(r), c);
}

namespace {

struct Glyph {
  char ch;
  std::array<std::uint8_t, 7> rows;  // low 5 bits, bit 4 = leftmost
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
};

const Glyph* find_glyph(char ch) {
  if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
  for (const auto& g : kFont)
    if (g.ch == ch) return &g;
  return nullptr;
}

}  // namespace

void Canvas::text(std::ptrdiff_t x, std::ptrdiff_t y, const std::string& s, Color c, int scale) {
  std::ptrdiff_t cx = x;
  for (char ch : s) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int r = 0; r < 7; ++r)
        for (int col = 0; col < 5; ++col)
          if (g->rows[static_cast<std::size_t>(r)] & (1u << (4 - col)))
            fill_rect(cx + col * scale, y + r * scale, static_cast<std::size_t>(scale),
                      static_cast<std::size_t>(scale), c);
    }
    cx += 6 * scale;
  }
}

namespace {

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
  const std::size_t w = canvas.width(), h = canvas.height();
  std::string raw;
  raw.reserve(h * (1 + 3 * w));
  for (std::size_t y = 0; y < h; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(canvas.rgb().data() + y * w * 3), 3 * w);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  const int rc = compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                           reinterpret_cast<const Bytef*>(raw.data()),
                           static_cast<uLong>(raw.size()), 6);
  require(rc == Z_OK, "png: zlib compression failed");
  compressed.resize(bound);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(w));
  put_u32_be(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", "");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), "png: cannot open for writing: " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(os), "png: write failed: " + path.string());
}

void write_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                      const std::vector<Series>& series) {
  require(!series.empty(), "chart: no series");
  const Color axis{40, 40, 40};
  const Color grid{220, 220, 220};
  constexpr Color kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},
                                {214, 39, 40},  {148, 103, 189}, {140, 86, 75}};

  Canvas canvas(spec.width, spec.height);
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double px0 = ml, px1 = static_cast<double>(spec.width) - mr;
  const double py0 = static_cast<double>(spec.height) - mb, py1 = mt;

  double x_min = 1e300, x_max = -1e300;
  for (const auto& s : series)
    for (double x : s.x) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  if (x_max <= x_min) x_max = x_min + 1.0;
  const double y_min = spec.y_min, y_max = spec.y_max;

  const auto sx = [&](double x) { return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0); };
  const auto sy = [&](double y) { return py0 + (y - y_min) / (y_max - y_min) * (py1 - py0); };

  // Horizontal gridlines + y tick labels at fifths.
  char buf[32];
  for (int i = 0; i <= 5; ++i) {
    const double y = y_min + (y_max - y_min) * i / 5.0;
    canvas.line(px0, sy(y), px1, sy(y), grid);
    std::snprintf(buf, sizeof(buf), "%.2f", y);
    canvas.text(static_cast<std::ptrdiff_t>(px0) - 52, static_cast<std::ptrdiff_t>(sy(y)) - 3,
                buf, axis);
  }
  // Axes.
  canvas.line(px0, py0, px1, py0, axis);
  canvas.line(px0, py0, px0, py1, axis);

  // X ticks from the first series' grid.
  for (double x : series.front().x) {
    canvas.line(sx(x), py0, sx(x), py0 + 4, axis);
    std::snprintf(buf, sizeof(buf), "%g", x);
    canvas.text(static_cast<std::ptrdiff_t>(sx(x)) - 3 * static_cast<std::ptrdiff_t>(std::strlen(buf)),
                static_cast<std::ptrdiff_t>(py0) + 8, buf, axis);
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Color c = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const auto& s = series[si];
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
      canvas.line(sx(s.x[i]), sy(s.y[i]), sx(s.x[i + 1]), sy(s.y[i + 1]), c);
    for (std::size_t i = 0; i < s.x.size(); ++i)
      canvas.fill_rect(static_cast<std::ptrdiff_t>(sx(s.x[i])) - 2,
                       static_cast<std::ptrdiff_t>(sy(s.y[i])) - 2, 4, 4, c);
    // Legend swatch.
    const std::ptrdiff_t ly = static_cast<std::ptrdiff_t>(mt) + static_cast<std::ptrdiff_t>(si) * 12;
    canvas.fill_rect(static_cast<std::ptrdiff_t>(px1) - 130, ly, 8, 8, c);
    canvas.text(static_cast<std::ptrdiff_t>(px1) - 118, ly, s.label, axis);
  }

  canvas.text(static_cast<std::ptrdiff_t>(px0), 12, spec.title, axis);
  canvas.text(static_cast<std::ptrdiff_t>((px0 + px1) / 2.0) -
                  3 * static_cast<std::ptrdiff_t>(spec.x_label.size()),
              static_cast<std::ptrdiff_t>(py0) + 30, spec.x_label, axis);
  canvas.text(6, static_cast<std::ptrdiff_t>(py1) - 20, spec.y_label, axis);

  write_png(path, canvas);
}

}  // namespace gaitrec::plot
