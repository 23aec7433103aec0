#include "gaitrec/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace gaitrec {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::filesystem::path& path) {
  require(!tok.empty(), "pgm: truncated header in " + path.string());
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(tok, &pos);
  } catch (const std::exception&) {
    throw Error("pgm: bad header field '" + tok + "' in " + path.string());
  }
  require(pos == tok.size() && v > 0, "pgm: bad header field '" + tok + "' in " + path.string());
  return v;
}

}  // namespace

BinaryGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "missing frame file: " + path.string());
  require(next_token(is) == "P5", "pgm: not a binary PGM (P5): " + path.string());
  const std::size_t width = parse_dim(next_token(is), path);
  const std::size_t height = parse_dim(next_token(is), path);
  const std::size_t maxval = parse_dim(next_token(is), path);
  require(maxval <= 255, "pgm: maxval > 255 unsupported for silhouettes: " + path.string());

  BinaryGrid grid;
  grid.height = height;
  grid.width = width;
  grid.pixels.resize(height * width);
  std::vector<unsigned char> buf(height * width);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(is.gcount() == static_cast<std::streamsize>(buf.size()),
          "pgm: truncated pixel data in " + path.string());
  for (std::size_t i = 0; i < buf.size(); ++i) grid.pixels[i] = buf[i] > 127 ? 1 : 0;
  return grid;
}

void write_pgm(const std::filesystem::path& path, const BinaryGrid& grid) {
  require(grid.pixels.size() == grid.height * grid.width, "pgm: malformed grid");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), "pgm: cannot open for writing: " + path.string());
  os << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  std::vector<unsigned char> buf(grid.pixels.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = grid.pixels[i] ? 255 : 0;
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(os), "pgm: write failed: " + path.string());
}

void write_pgm_frame(const std::filesystem::path& path, const SilhouetteFrame& frame) {
  BinaryGrid g;
  g.height = kFrameHeight;
  g.width = kFrameWidth;
  g.pixels = frame.pixels;
  write_pgm(path, g);
}

SilhouetteFrame read_pgm_frame(const std::filesystem::path& path) {
  BinaryGrid g = read_pgm(path);
  require(g.height == kFrameHeight && g.width == kFrameWidth,
          "pgm: frame is " + std::to_string(g.width) + "x" + std::to_string(g.height) +
              ", expected 200x150 (normalize first): " + path.string());
  SilhouetteFrame f;
  f.pixels = std::move(g.pixels);
  return f;
}

void write_pgm16(const std::filesystem::path& path, const std::vector<double>& values,
                 std::size_t height, std::size_t width) {
  require(values.size() == height * width, "pgm16: malformed grid");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), "pgm16: cannot open for writing: " + path.string());
  os << "P5\n" << width << " " << height << "\n65535\n";
  for (double v : values) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
    const unsigned char hi = static_cast<unsigned char>(q >> 8);
    const unsigned char lo = static_cast<unsigned char>(q & 0xff);
    os.put(static_cast<char>(hi));
    os.put(static_cast<char>(lo));
  }
  require(static_cast<bool>(os), "pgm16: write failed: " + path.string());
}

}  // namespace gaitrec
