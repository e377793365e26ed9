#include <gtest/gtest.h>

#include <cstring>
#include <vector>

#include "fgen/checkpoint.hpp"
#include "fgen/verify.hpp"
#include "test_util.hpp"

namespace fgen {
namespace {

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = test::temp_dir("checkpoint"); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  static Checkpoint trained_checkpoint(Variant v) {
    Model<float> m(verify::tiny_config(v));
    TrainingConfig tc;
    tc.timesteps = 2;
    tc.batch_size = 2;
    tc.epochs = 2;
    tc.seed = 4;
    tc.learning_rate = 1e-3;
    tc.l2_lambda = 3e-4;
    tc.checkpoint_epochs = {1, 7};
    Rng data(5);
    Dataset<float> ds{FrameSpec{8, 16000}, 2, {}};
    for (int s = 0; s < 3; ++s) {
      Sequence<float> seq;
      for (int t = 0; t < 3; ++t) {
        Tensor<float> f({16});
        for (auto& x : f.data()) x = static_cast<float>(data.uniform(-0.3, 0.3));
        seq.frames.push_back(f);
      }
      ds.sequences.push_back(seq);
    }
    auto st = fresh_trainer_state(m, tc);
    train(m, ds, tc, st);
    return make_checkpoint(m, tc, st);
  }

  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitExactForEveryVariant) {
  for (auto v : kAllVariants) {
    const auto ck = trained_checkpoint(v);
    save_checkpoint(path("a.fgn"), ck);
    const auto back = load_checkpoint(path("a.fgn"));
    EXPECT_EQ(back.params, ck.params) << variant_name(v);
    EXPECT_EQ(back.accumulators, ck.accumulators);
    EXPECT_EQ(back.epoch, 2u);
    EXPECT_EQ(back.rng, ck.rng);
    EXPECT_EQ(back.arch.variant, v);
    EXPECT_EQ(back.arch.frames_per_step, ck.arch.frames_per_step);
    EXPECT_EQ(back.training.learning_rate, 1e-3);
    EXPECT_EQ(back.training.l2_lambda, 3e-4);
    EXPECT_EQ(back.training.rmsprop_decay, 0.9);
    EXPECT_EQ(back.training.rmsprop_epsilon, 1e-8);
    EXPECT_EQ(back.training.checkpoint_epochs, (std::vector<std::uint64_t>{1, 7}));
    EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(ck));
  }
}

TEST_F(CheckpointTest, RestoredModelAndStateMatch) {
  const auto ck = trained_checkpoint(Variant::Stacked);
  auto m = model_from_checkpoint<float>(ck);
  for (std::size_t i = 0; i < ck.params.size(); ++i)
    EXPECT_EQ(m.params().at(i).value.values(), ck.params[i].data);
  const auto st = trainer_state_from_checkpoint<float>(ck);
  EXPECT_EQ(st.epoch, ck.epoch);
  EXPECT_EQ(st.rng.state(), ck.rng);
  for (std::size_t i = 0; i < ck.accumulators.size(); ++i)
    EXPECT_EQ(st.optimizer.accumulators()[i].values(), ck.accumulators[i].data);
}

TEST_F(CheckpointTest, HeaderLayout) {
  save_checkpoint(path("h.fgn"), trained_checkpoint(Variant::Base));
  const auto bytes = test::read_bytes(path("h.fgn"));
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.data(), 4), "FGN1");
  std::uint32_t version, hlen;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&hlen, bytes.data() + 8, 4);
  EXPECT_EQ(version, 1u);
  const std::string header(bytes.data() + 12, hlen);
  EXPECT_NE(header.find("arch.variant=base\n"), std::string::npos) << header;
  EXPECT_NE(header.find("train.learning_rate="), std::string::npos) << header;
}

TEST_F(CheckpointTest, RejectsBadMagicVersionAndTruncation) {
  save_checkpoint(path("ok.fgn"), trained_checkpoint(Variant::Base));
  auto bytes = test::read_bytes(path("ok.fgn"));

  auto magic = bytes;
  std::memcpy(magic.data(), "XXXX", 4);
  test::write_bytes(path("magic.fgn"), magic);
  EXPECT_THROW(load_checkpoint(path("magic.fgn")), CheckpointError);

  auto version = bytes;
  version[4] = 2;
  test::write_bytes(path("version.fgn"), version);
  try {
    load_checkpoint(path("version.fgn"));
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  for (std::size_t cut : {std::size_t{1}, std::size_t{40}, bytes.size() / 2, bytes.size() - 10}) {
    std::vector<char> truncated(bytes.begin(), bytes.end() - static_cast<std::ptrdiff_t>(cut));
    test::write_bytes(path("trunc.fgn"), truncated);
    EXPECT_THROW(load_checkpoint(path("trunc.fgn")), CheckpointError) << cut;
  }
  EXPECT_THROW(load_checkpoint(path("missing.fgn")), CheckpointError);
}

TEST_F(CheckpointTest, RejectsTensorsThatDoNotMatchTheArchitecture) {
  auto ck = trained_checkpoint(Variant::Base);
  auto missing = ck;
  missing.params.pop_back();
  save_checkpoint(path("count.fgn"), missing);
  EXPECT_THROW(load_checkpoint(path("count.fgn")), CheckpointError);

  auto wrong_arch = ck;
  wrong_arch.arch.hidden += 1;
  save_checkpoint(path("shape.fgn"), wrong_arch);
  EXPECT_THROW(load_checkpoint(path("shape.fgn")), CheckpointError);

  auto renamed = ck;
  renamed.accumulators[0].name = "bogus";
  save_checkpoint(path("name.fgn"), renamed);
  EXPECT_THROW(load_checkpoint(path("name.fgn")), CheckpointError);
}

TEST_F(CheckpointTest, FeatureFileRoundTrip) {
  FeatureSequence f{FrameSpec{4, 8000}, {}};
  Rng rng(6);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));  // representable in f32
    f.vectors.push_back(v);
  }
  save_features(path("f.fgf"), f, "clip.wav");
  const auto back = load_features(path("f.fgf"));
  EXPECT_EQ(back.spec.frame_size, 4u);
  EXPECT_EQ(back.spec.sample_rate, 8000);
  EXPECT_EQ(back.vectors, f.vectors);
  EXPECT_THROW(load_checkpoint(path("f.fgf")), CheckpointError);
  EXPECT_THROW(save_features(path("e.fgf"), FeatureSequence{FrameSpec{4, 8000}, {}}), CheckpointError);
}

}  // namespace
}  // namespace fgen
