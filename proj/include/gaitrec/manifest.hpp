#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gaitrec/silhouette.hpp"

namespace gaitrec {

inline constexpr int kManifestVersion = 1;

// On-disk index of a silhouette corpus. Frame paths are relative to the
// manifest's directory. reconstructed_indices is emitted only by the
// reconstruction stage so that frame statuses survive a round trip.
struct ManifestEntry {
  std::string subject_id;
  std::string sequence_id;
  std::vector<std::string> frame_paths;  // ordered
  std::vector<std::size_t> occluded_indices;
  std::vector<std::size_t> reconstructed_indices;
  std::vector<CycleBounds> cycle_boundaries;
};

struct SequenceManifest {
  int version = kManifestVersion;
  std::vector<ManifestEntry> entries;

  // Directory the manifest was loaded from / written to; used to resolve
  // frame paths. Not serialized.
  std::filesystem::path base_dir;
};

SequenceManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const SequenceManifest& manifest, const std::filesystem::path& manifest_path);

// Decodes the entry's frames (binarizing at pixel > 127) and applies the
// occlusion/reconstruction status markers.
GaitSequence load_sequence(const SequenceManifest& manifest, const ManifestEntry& entry);
GaitSequence load_sequence(const SequenceManifest& manifest, std::size_t entry_index);
std::vector<GaitSequence> load_all_sequences(const SequenceManifest& manifest);

// Writes frames as PGM files under `directory` and returns the matching
// manifest (not yet written to disk). Layout: <subject>/<sequence>/fNNNN.pgm.
ManifestEntry save_sequence_frames(const GaitSequence& seq, const std::filesystem::path& directory);

// save + write manifest.json for a whole corpus; round-trips bit-exactly.
SequenceManifest save_sequences(const std::vector<GaitSequence>& seqs,
                                const std::filesystem::path& directory,
                                const std::string& manifest_name = "manifest.json");

std::uint64_t manifest_content_hash(const SequenceManifest& manifest);

}  // namespace gaitrec
