#include "gaitrec/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "gaitrec/pgm.hpp"

namespace gaitrec {

using json = nlohmann::ordered_json;

SequenceManifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream is(manifest_path);
  require(static_cast<bool>(is), "manifest: cannot open " + manifest_path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error("manifest: invalid JSON in " + manifest_path.string() + ": " + e.what());
  }

  SequenceManifest m;
  m.base_dir = manifest_path.parent_path();
  require(j.contains("version") && j["version"].is_number_integer(),
          "manifest: missing integer 'version'");
  m.version = j["version"].get<int>();
  require(m.version == kManifestVersion,
          "manifest: unsupported version " + std::to_string(m.version));
  require(j.contains("entries") && j["entries"].is_array(), "manifest: missing 'entries' array");
  for (const auto& je : j["entries"]) {
    ManifestEntry e;
    e.subject_id = je.at("subject_id").get<std::string>();
    e.sequence_id = je.at("sequence_id").get<std::string>();
    e.frame_paths = je.at("frame_paths").get<std::vector<std::string>>();
    e.occluded_indices = je.at("occluded_indices").get<std::vector<std::size_t>>();
    if (je.contains("reconstructed_indices"))
      e.reconstructed_indices = je["reconstructed_indices"].get<std::vector<std::size_t>>();
    if (je.contains("cycle_boundaries") && !je["cycle_boundaries"].is_null()) {
      for (const auto& jc : je["cycle_boundaries"]) {
        require(jc.is_array() && jc.size() == 2, "manifest: cycle boundary must be [start, end]");
        e.cycle_boundaries.push_back({jc[0].get<std::size_t>(), jc[1].get<std::size_t>()});
      }
    }
    for (std::size_t idx : e.occluded_indices)
      require(idx < e.frame_paths.size(), "manifest: occluded index out of range in sequence " +
                                              e.sequence_id);
    for (std::size_t idx : e.reconstructed_indices)
      require(idx < e.frame_paths.size(),
              "manifest: reconstructed index out of range in sequence " + e.sequence_id);
    m.entries.push_back(std::move(e));
  }
  return m;
}

namespace {
json entry_to_json(const ManifestEntry& e) {
  json je;
  je["subject_id"] = e.subject_id;
  je["sequence_id"] = e.sequence_id;
  je["frame_paths"] = e.frame_paths;
  je["occluded_indices"] = e.occluded_indices;
  if (!e.reconstructed_indices.empty()) je["reconstructed_indices"] = e.reconstructed_indices;
  json jb = json::array();
  for (const auto& cb : e.cycle_boundaries) jb.push_back({cb.start, cb.end});
  je["cycle_boundaries"] = jb;
  return je;
}
}  // namespace

void write_manifest(const SequenceManifest& manifest, const std::filesystem::path& manifest_path) {
  json j;
  j["version"] = manifest.version;
  j["entries"] = json::array();
  for (const auto& e : manifest.entries) j["entries"].push_back(entry_to_json(e));
  std::ofstream os(manifest_path, std::ios::trunc);
  require(static_cast<bool>(os), "manifest: cannot write " + manifest_path.string());
  os << j.dump(2) << "\n";
  require(static_cast<bool>(os), "manifest: write failed for " + manifest_path.string());
}

GaitSequence load_sequence(const SequenceManifest& manifest, const ManifestEntry& entry) {
  GaitSequence seq;
  seq.subject_id = entry.subject_id;
  seq.sequence_id = entry.sequence_id;
  seq.frames.reserve(entry.frame_paths.size());
  for (const auto& rel : entry.frame_paths) {
    const auto path = manifest.base_dir / rel;
    BinaryGrid g = read_pgm(path);
    require(g.height == kFrameHeight && g.width == kFrameWidth,
            "manifest: frame " + rel + " is not 200x150; normalize before indexing");
    SilhouetteFrame f;
    f.pixels = std::move(g.pixels);
    seq.frames.push_back(std::move(f));
  }
  for (std::size_t idx : entry.occluded_indices) {
    require(idx < seq.frames.size(), "manifest: occluded index out of range");
    require(seq.frames[idx].status == FrameStatus::observed,
            "manifest: duplicate frame index " + std::to_string(idx) + " in occluded_indices");
    seq.frames[idx].status = FrameStatus::occluded;
  }
  for (std::size_t idx : entry.reconstructed_indices) {
    require(idx < seq.frames.size(), "manifest: reconstructed index out of range");
    require(seq.frames[idx].status == FrameStatus::observed,
            "manifest: frame " + std::to_string(idx) + " marked both occluded and reconstructed");
    seq.frames[idx].status = FrameStatus::reconstructed;
  }
  for (const auto& cb : entry.cycle_boundaries) seq.cycle_boundaries.push_back(cb);
  seq.validate();
  return seq;
}

GaitSequence load_sequence(const SequenceManifest& manifest, std::size_t entry_index) {
  require(entry_index < manifest.entries.size(), "manifest: entry index out of range");
  return load_sequence(manifest, manifest.entries[entry_index]);
}

std::vector<GaitSequence> load_all_sequences(const SequenceManifest& manifest) {
  std::vector<GaitSequence> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) out.push_back(load_sequence(manifest, e));
  return out;
}

ManifestEntry save_sequence_frames(const GaitSequence& seq,
                                   const std::filesystem::path& directory) {
  seq.validate();
  ManifestEntry e;
  e.subject_id = seq.subject_id;
  e.sequence_id = seq.sequence_id;
  const std::filesystem::path sub =
      std::filesystem::path(seq.subject_id.empty() ? "unknown" : seq.subject_id) /
      (seq.sequence_id.empty() ? "seq" : seq.sequence_id);
  std::filesystem::create_directories(directory / sub);
  char name[32];
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "f%04zu.pgm", i);
    const std::filesystem::path rel = sub / name;
    write_pgm_frame(directory / rel, seq.frames[i]);
    e.frame_paths.push_back(rel.generic_string());
    if (seq.frames[i].status == FrameStatus::occluded) e.occluded_indices.push_back(i);
    if (seq.frames[i].status == FrameStatus::reconstructed) e.reconstructed_indices.push_back(i);
  }
  for (const auto& cb : seq.cycle_boundaries) e.cycle_boundaries.push_back(cb);
  return e;
}

SequenceManifest save_sequences(const std::vector<GaitSequence>& seqs,
                                const std::filesystem::path& directory,
                                const std::string& manifest_name) {
  std::filesystem::create_directories(directory);
  SequenceManifest m;
  m.base_dir = directory;
  std::set<std::pair<std::string, std::string>> ids;
  for (const auto& s : seqs) {
    require(ids.emplace(s.subject_id, s.sequence_id).second,
            "manifest: duplicate sequence id " + s.subject_id + "/" + s.sequence_id);
    m.entries.push_back(save_sequence_frames(s, directory));
  }
  write_manifest(m, directory / manifest_name);
  return m;
}

std::uint64_t manifest_content_hash(const SequenceManifest& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : manifest.entries) {
    h = fnv1a64(e.subject_id, h);
    h = fnv1a64(e.sequence_id, h);
    for (const auto& p : e.frame_paths) {
      h = fnv1a64(p, h);
      std::ifstream is(manifest.base_dir / p, std::ios::binary);
      require(static_cast<bool>(is), "manifest hash: missing frame file " + p);
      char buf[4096];
      while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    }
    for (std::size_t i : e.occluded_indices) h = fnv1a64(&i, sizeof(i), h);
    for (std::size_t i : e.reconstructed_indices) h = fnv1a64(&i, sizeof(i), h);
    for (const auto& cb : e.cycle_boundaries) {
      h = fnv1a64(&cb.start, sizeof(cb.start), h);
      h = fnv1a64(&cb.end, sizeof(cb.end), h);
    }
  }
  return h;
}

}  // namespace gaitrec
