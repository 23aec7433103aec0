#include <doctest.h>

#include <fstream>

#include "gaitrec/autoencoder.hpp"
#include "gaitrec/synth.hpp"

#include "support/oracles.hpp"

using namespace gaitrec;

TEST_CASE("autoencoder shape pipeline holds at construction and in use") {
  const Autoencoder ae(1);
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 20};
  const auto corpus = synth_corpus(cfg);

  const Embedding e = ae.encode(corpus[0].frames[0]);
  CHECK(e.values.size() == kEmbeddingDim);

  const SoftFrame soft = ae.decode(e);
  CHECK(soft.values.size() == kFramePixels);
  for (double v : soft.values) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("encode is deterministic and linear at the zero frame") {
  const Autoencoder ae(2);
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 21};
  const auto frame = synth_corpus(cfg)[0].frames[3];
  const Embedding a = ae.encode(frame);
  const Embedding b = ae.encode(frame);
  CHECK(a.values == b.values);

  // Zero input through zero-initialized biases stays zero.
  const Embedding z = ae.encode(SilhouetteFrame::blank());
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("decode validates dimensions and is deterministic") {
  const Autoencoder ae(3);
  CHECK_THROWS_AS(Embedding(std::vector<double>(100, 0.0)), Error);
  Embedding e;
  for (std::size_t i = 0; i < e.values.size(); ++i) e.values[i] = (i % 7) * 0.1;
  const SoftFrame a = ae.decode(e);
  const SoftFrame b = ae.decode(e);
  CHECK(a.values == b.values);
}

TEST_CASE("training reduces reconstruction loss") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 22};
  const auto corpus = synth_corpus(cfg);
  std::vector<SilhouetteFrame> frames(corpus[0].frames.begin(), corpus[0].frames.begin() + 8);

  Autoencoder ae(4);
  Autoencoder::TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 4;
  tc.seed = 1;
  const TrainReport report = ae.train(frames, tc);
  REQUIRE(report.epoch_loss.size() == report.epochs_run);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  CHECK_THROWS_AS(ae.train({}, tc), Error);
}

TEST_CASE("single-frame corpus is memorized") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 23};
  const SilhouetteFrame frame = synth_corpus(cfg)[0].frames[5];

  Autoencoder ae(5);
  Autoencoder::TrainConfig tc;
  tc.epochs = 250;
  tc.batch_size = 1;
  tc.seed = 2;
  const TrainReport report = ae.train({frame}, tc);
  const double per_pixel = report.epoch_loss.back() / static_cast<double>(kFramePixels);
  CHECK(per_pixel < 0.05);
  const SilhouetteFrame recon = ae.decode(ae.encode(frame)).binarize();
  CHECK(testing::hard_dice_frames(recon, frame) >= 0.97);
}

TEST_CASE("autoencoder checkpoints round-trip bit-exactly") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 24};
  const auto frame = synth_corpus(cfg)[0].frames[0];
  Autoencoder ae(6);
  const auto path = std::filesystem::temp_directory_path() / "gaitrec_ae_test.ckpt";
  ae.save(path);
  const Autoencoder loaded = Autoencoder::load(path);
  CHECK(loaded.encode(frame).values == ae.encode(frame).values);

  // Re-saving the loaded model reproduces the file byte-for-byte.
  const auto path2 = std::filesystem::temp_directory_path() / "gaitrec_ae_test2.ckpt";
  loaded.save(path2);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}
