#include "gaitrec/silhouette.hpp"

#include <algorithm>
#include <cmath>

namespace gaitrec {

std::size_t BinaryGrid::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t p : pixels) n += p;
  return n;
}

SilhouetteFrame SilhouetteFrame::blank(FrameStatus status) {
  SilhouetteFrame f;
  f.pixels.assign(kFramePixels, 0);
  f.status = status;
  return f;
}

std::size_t SilhouetteFrame::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t p : pixels) n += p;
  return n;
}

std::vector<std::size_t> GaitSequence::occluded_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].status == FrameStatus::occluded) out.push_back(i);
  return out;
}

std::vector<std::size_t> GaitSequence::reconstructed_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].status == FrameStatus::reconstructed) out.push_back(i);
  return out;
}

void GaitSequence::validate() const {
  std::size_t prev_end = 0;
  bool first = true;
  for (const auto& cb : cycle_boundaries) {
    require(cb.start < cb.end, "cycle boundaries must satisfy start < end");
    require(cb.end <= frames.size(), "cycle boundary exceeds sequence length");
    require(first || cb.start >= prev_end, "cycle boundaries must not overlap");
    prev_end = cb.end;
    first = false;
  }
}

SilhouetteFrame normalize_frame(const BinaryGrid& raw) {
  SilhouetteFrame out = SilhouetteFrame::blank();
  require(raw.pixels.size() == raw.height * raw.width && raw.height > 0 && raw.width > 0,
          "normalize_frame: malformed grid");

  // Foreground bounding box.
  std::size_t r0 = raw.height, r1 = 0, c0 = raw.width, c1 = 0, count = 0;
  for (std::size_t r = 0; r < raw.height; ++r)
    for (std::size_t c = 0; c < raw.width; ++c)
      if (raw.at(r, c)) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
        ++count;
      }
  if (count == 0) return out;  // occluded placeholder stays all-zero

  const std::size_t bh = r1 - r0 + 1;
  const std::size_t bw = c1 - c0 + 1;
  const double scale = std::min(static_cast<double>(kFrameHeight) / static_cast<double>(bh),
                                static_cast<double>(kFrameWidth) / static_cast<double>(bw));
  const std::size_t sh = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(bh * scale)), 1, kFrameHeight);
  const std::size_t sw = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(bw * scale)), 1, kFrameWidth);

  // Nearest-neighbour resample of the crop; alphabet stays {0,1}.
  std::vector<std::uint8_t> crop(sh * sw, 0);
  for (std::size_t r = 0; r < sh; ++r) {
    const std::size_t sr = std::min(bh - 1, static_cast<std::size_t>((r + 0.5) * bh / sh));
    for (std::size_t c = 0; c < sw; ++c) {
      const std::size_t sc = std::min(bw - 1, static_cast<std::size_t>((c + 0.5) * bw / sw));
      crop[r * sw + c] = raw.at(r0 + sr, c0 + sc);
    }
  }

  // Horizontal placement centers the foreground centroid on the canvas;
  // vertical placement centers the crop (full height in the common case).
  double cx = 0.0;
  std::size_t crop_count = 0;
  for (std::size_t r = 0; r < sh; ++r)
    for (std::size_t c = 0; c < sw; ++c)
      if (crop[r * sw + c]) {
        cx += static_cast<double>(c);
        ++crop_count;
      }
  if (crop_count == 0) return out;  // degenerate resample of a sparse grid
  cx /= static_cast<double>(crop_count);

  const double target_cx = (static_cast<double>(kFrameWidth) - 1.0) / 2.0;
  const std::ptrdiff_t max_left = static_cast<std::ptrdiff_t>(kFrameWidth - sw);
  const std::ptrdiff_t left =
      std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::lround(target_cx - cx)),
                                 0, max_left);
  const std::size_t top = (kFrameHeight - sh) / 2;

  for (std::size_t r = 0; r < sh; ++r)
    for (std::size_t c = 0; c < sw; ++c)
      out.at(top + r, static_cast<std::size_t>(left) + c) = crop[r * sw + c];
  return out;
}

}  // namespace gaitrec
