#include <doctest.h>

#include <fstream>

#include "gaitrec/manifest.hpp"
#include "gaitrec/pgm.hpp"
#include "gaitrec/synth.hpp"

using namespace gaitrec;

namespace {

BinaryGrid ellipse_grid(std::size_t h, std::size_t w, double cy, double cx, double ry, double rx) {
  BinaryGrid g;
  g.height = h;
  g.width = w;
  g.pixels.assign(h * w, 0);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double ny = (r - cy) / ry, nx = (c - cx) / rx;
      if (ny * ny + nx * nx <= 1.0) g.at(r, c) = 1;
    }
  return g;
}

double centroid_col(const SilhouetteFrame& f) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < kFrameHeight; ++r)
    for (std::size_t c = 0; c < kFrameWidth; ++c)
      if (f.at(r, c)) {
        sum += static_cast<double>(c);
        ++n;
      }
  return n ? sum / static_cast<double>(n) : -1.0;
}

std::filesystem::path temp_dir(const char* tag) {
  const auto dir = std::filesystem::temp_directory_path() / (std::string("gaitrec_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("normalize: centered person lands centroid-centered at working size") {
  const BinaryGrid raw = ellipse_grid(400, 300, 200, 150, 150, 40);
  const SilhouetteFrame f = normalize_frame(raw);
  CHECK(f.pixels.size() == kFramePixels);
  CHECK(f.foreground_count() > 0);
  CHECK(std::abs(centroid_col(f) - 100.0) <= 1.0);
  // Foreground must span the full height after the scale-to-height policy.
  std::size_t top_mass = 0, bottom_mass = 0;
  for (std::size_t c = 0; c < kFrameWidth; ++c) {
    top_mass += f.at(0, c) + f.at(1, c) + f.at(2, c);
    bottom_mass += f.at(kFrameHeight - 1, c) + f.at(kFrameHeight - 2, c);
  }
  CHECK(top_mass > 0);
  CHECK(bottom_mass > 0);
}

TEST_CASE("normalize: all-zero input maps to the all-zero occluded placeholder") {
  BinaryGrid raw;
  raw.height = 64;
  raw.width = 64;
  raw.pixels.assign(64 * 64, 0);
  const SilhouetteFrame f = normalize_frame(raw);
  CHECK(f.foreground_count() == 0);
  CHECK(f.status == FrameStatus::observed);
}

TEST_CASE("normalize: applying twice is a fixed point up to a 1px centroid shift") {
  const SynthConfig cfg{.subjects = 3, .cycles_per_subject = 1, .period = 10, .seed = 5};
  for (const auto& seq : synth_corpus(cfg)) {
    for (const auto& frame : seq.frames) {
      BinaryGrid as_grid;
      as_grid.height = kFrameHeight;
      as_grid.width = kFrameWidth;
      as_grid.pixels = frame.pixels;
      const SilhouetteFrame again = normalize_frame(as_grid);
      CHECK(again.foreground_count() == frame.foreground_count());
      CHECK(std::abs(centroid_col(again) - centroid_col(frame)) <= 1.0);
    }
  }
}

TEST_CASE("pgm round-trip is bit-exact on binary frames") {
  const auto dir = temp_dir("pgm");
  const BinaryGrid raw = ellipse_grid(150, 200, 75, 100, 60, 30);
  write_pgm(dir / "a.pgm", raw);
  const BinaryGrid back = read_pgm(dir / "a.pgm");
  CHECK(back.height == raw.height);
  CHECK(back.width == raw.width);
  CHECK(back.pixels == raw.pixels);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pgm reader handles comments and rejects damage") {
  const auto dir = temp_dir("pgm_err");
  {
    std::ofstream os(dir / "c.pgm", std::ios::binary);
    os << "P5\n# a comment\n2 2\n255\n";
    const unsigned char px[4] = {0, 255, 200, 10};
    os.write(reinterpret_cast<const char*>(px), 4);
  }
  const BinaryGrid g = read_pgm(dir / "c.pgm");
  CHECK(g.pixels == std::vector<std::uint8_t>({0, 1, 1, 0}));

  CHECK_THROWS_WITH_AS(read_pgm(dir / "missing.pgm"),
                       doctest::Contains("missing frame file"), Error);
  {
    std::ofstream os(dir / "trunc.pgm", std::ios::binary);
    os << "P5\n4 4\n255\n";
    os.put(0);
  }
  CHECK_THROWS_AS(read_pgm(dir / "trunc.pgm"), Error);
  {
    std::ofstream os(dir / "bad.pgm", std::ios::binary);
    os << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round-trip reproduces pixels, order and statuses bit-exactly") {
  const auto dir = temp_dir("manifest");
  SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 9};
  auto corpus = synth_corpus(cfg);
  corpus[0].frames[3] = SilhouetteFrame::blank(FrameStatus::occluded);
  corpus[0].frames[7] = SilhouetteFrame::blank(FrameStatus::occluded);
  corpus[1].frames[2].status = FrameStatus::reconstructed;

  const SequenceManifest manifest = save_sequences(corpus, dir);
  CHECK(manifest.entries[0].occluded_indices == std::vector<std::size_t>({3, 7}));
  CHECK(manifest.entries[1].reconstructed_indices == std::vector<std::size_t>({2}));

  const SequenceManifest loaded_manifest = read_manifest(dir / "manifest.json");
  const auto loaded = load_all_sequences(loaded_manifest);
  REQUIRE(loaded.size() == corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    REQUIRE(loaded[s].size() == corpus[s].size());
    CHECK(loaded[s].subject_id == corpus[s].subject_id);
    CHECK(loaded[s].cycle_boundaries.size() == corpus[s].cycle_boundaries.size());
    for (std::size_t i = 0; i < corpus[s].size(); ++i) {
      CHECK(loaded[s].frames[i].pixels == corpus[s].frames[i].pixels);
      CHECK(loaded[s].frames[i].status == corpus[s].frames[i].status);
      for (std::uint8_t p : loaded[s].frames[i].pixels) CHECK(p <= 1);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest: empty corpus round-trips to zero entries") {
  const auto dir = temp_dir("manifest_empty");
  save_sequences({}, dir);
  const auto loaded = read_manifest(dir / "manifest.json");
  CHECK(loaded.entries.empty());
  CHECK(load_all_sequences(loaded).empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest error paths: missing file, bad indices") {
  const auto dir = temp_dir("manifest_err");
  SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 2};
  save_sequences(synth_corpus(cfg), dir);
  auto manifest = read_manifest(dir / "manifest.json");

  SUBCASE("missing frame file") {
    manifest.entries[0].frame_paths[0] = "nope/missing.pgm";
    CHECK_THROWS_WITH_AS(load_sequence(manifest, manifest.entries[0]),
                         doctest::Contains("missing frame file"), Error);
  }
  SUBCASE("occluded index out of range") {
    manifest.entries[0].occluded_indices = {99};
    CHECK_THROWS_AS(load_sequence(manifest, manifest.entries[0]), Error);
  }
  SUBCASE("duplicate frame index") {
    manifest.entries[0].occluded_indices = {1, 1};
    CHECK_THROWS_WITH_AS(load_sequence(manifest, manifest.entries[0]),
                         doctest::Contains("duplicate frame index"), Error);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("sequence validation rejects bad cycle boundaries") {
  GaitSequence seq;
  seq.frames.assign(10, SilhouetteFrame::blank());
  seq.cycle_boundaries = {{0, 5}, {4, 8}};
  CHECK_THROWS_AS(seq.validate(), Error);
  seq.cycle_boundaries = {{0, 12}};
  CHECK_THROWS_AS(seq.validate(), Error);
  seq.cycle_boundaries = {{5, 5}};
  CHECK_THROWS_AS(seq.validate(), Error);
  seq.cycle_boundaries = {{0, 5}, {5, 10}};
  CHECK_NOTHROW(seq.validate());
}
