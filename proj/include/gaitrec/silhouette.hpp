#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaitrec/util.hpp"

namespace gaitrec {

inline constexpr std::size_t kFrameHeight = 150;
inline constexpr std::size_t kFrameWidth = 200;
inline constexpr std::size_t kFramePixels = kFrameHeight * kFrameWidth;

enum class FrameStatus : std::uint8_t { observed, occluded, reconstructed };

// Binary grid of arbitrary size; the raw material before normalization.
struct BinaryGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major, values in {0, 1}

  std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  std::size_t foreground_count() const;
};

// One normalized 150x200 binary silhouette with its occlusion status.
// status == occluded means the pixels carry no gait evidence.
struct SilhouetteFrame {
  std::vector<std::uint8_t> pixels;  // row-major 150x200, values in {0, 1}
  FrameStatus status = FrameStatus::observed;

  static SilhouetteFrame blank(FrameStatus status = FrameStatus::observed);

  std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * kFrameWidth + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return pixels[r * kFrameWidth + c]; }
  std::size_t foreground_count() const;
  bool same_pixels(const SilhouetteFrame& other) const { return pixels == other.pixels; }
};

struct CycleBounds {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
};

struct GaitSequence {
  std::string subject_id;
  std::string sequence_id;
  std::vector<SilhouetteFrame> frames;
  std::vector<CycleBounds> cycle_boundaries;  // optional, possibly empty
  std::optional<double> fps;

  std::size_t size() const { return frames.size(); }
  std::vector<std::size_t> occluded_indices() const;
  std::vector<std::size_t> reconstructed_indices() const;
  void validate() const;  // cycle bounds in range, non-overlapping, start < end
};

// Bounding-box crop, aspect-preserving nearest-neighbour scale to fit
// 150x200, horizontal placement by foreground centroid. All-zero input maps
// to an all-zero frame. Total on binary grids.
SilhouetteFrame normalize_frame(const BinaryGrid& raw);

}  // namespace gaitrec
