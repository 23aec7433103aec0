#pragma once

#include <filesystem>

#include "gaitrec/silhouette.hpp"

namespace gaitrec {

// Binary PGM (P5, maxval 255): 0 = background, 255 = foreground on write;
// pixel > 127 maps to foreground on read. Comments and arbitrary whitespace
// in the header are accepted. 16-bit maxvals are supported for GEI dumps.
BinaryGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const BinaryGrid& grid);

void write_pgm_frame(const std::filesystem::path& path, const SilhouetteFrame& frame);
SilhouetteFrame read_pgm_frame(const std::filesystem::path& path);

// Real-valued grid in [0,1] stored as 16-bit PGM (values scaled by 65535).
void write_pgm16(const std::filesystem::path& path, const std::vector<double>& values,
                 std::size_t height, std::size_t width);

}  // namespace gaitrec
