#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/tensor.hpp"

namespace gaitrec::nn {

// Versioned binary model container: magic, format version, model kind, a JSON
// metadata block (layer specs and model hyperparameters), then tensors as
// 64-bit little-endian reals in declaration order. Round-trips bit-exactly.
inline constexpr char kCheckpointMagic[4] = {'G', 'R', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string model_kind;
  nlohmann::json meta;
  std::vector<Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                     const nlohmann::json& meta, const std::vector<const Tensor*>& tensors);

Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind);

// Little-endian primitives shared by the model container and the forest format.
namespace io {
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
}  // namespace io

}  // namespace gaitrec::nn
