// Copyright 2026 The mcwc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcwc/codec.hpp"

#include <cstring>

#include "mcwc/codec_format.hpp"
#include "mcwc/synthetic.hpp"
#include "test_util.hpp"

namespace mcwc {
namespace {

using testing::SmallConfig;

SyntheticModel Drift(int layers, int blocks, int width, uint64_t seed) {
  return GenerateSynthetic(SmoothDriftConfig(layers, blocks, width, 0.05, seed));
}

CodecConfig FixedStepConfig(const Checkpoint& ckpt) {
  double ss = 0.0;
  uint64_t n = 0;
  for (const Layer& l : ckpt.layers) {
    for (const Tensor& t : l.tensors) {
      for (float v : t.data) ss += static_cast<double>(v) * v;
      n += t.data.size();
    }
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  CodecConfig c = SmallConfig();
  c.step_mode = StepMode::kFixed;
  c.fixed_step = 0.04 * rms;
  c.keyframe_fixed_step = 0.02 * rms;
  return c;
}

TEST(Keyframe, Schedule) {
  EXPECT_TRUE(IsKeyframe(1, 4));
  EXPECT_TRUE(IsKeyframe(5, 4));
  EXPECT_FALSE(IsKeyframe(3, 4));
  for (int l = 1; l <= 10; ++l) EXPECT_TRUE(IsKeyframe(l, 1));
  EXPECT_EQ(SegmentCount(24, 4), 6);
  EXPECT_EQ(SegmentCount(32, 16), 2);
}

TEST(Codec, RoundTripMatchesEncoderReference) {
  const SyntheticModel m = Drift(9, 12, 10, 1);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  DecodeStats ds;
  const Checkpoint d = DecodeCheckpoint(r.bitstream, &ds);
  EXPECT_TRUE(BitIdentical(d, r.reconstruction));
  EXPECT_EQ(r.stats.predictor_calls_keyframe, 0u);
  EXPECT_EQ(ds.predictor_calls_keyframe, 0u);
  EXPECT_EQ(ds.predictor_calls_residual, r.stats.predictor_calls_residual);
  EXPECT_GT(ds.predictor_calls_residual, 0u);
}

TEST(Codec, RandomLayoutsRoundTrip) {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const SyntheticModel m = GenerateSynthetic(RandomSyntheticConfig(seed, 20000));
    CodecConfig c = SmallConfig();
    c.keyframe_interval = 1 + static_cast<int>(seed % 5);
    c.learned_means = seed % 2 == 1;
    const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
    EXPECT_TRUE(BitIdentical(DecodeCheckpoint(r.bitstream), r.reconstruction)) << "seed " << seed;
    EXPECT_EQ(r.rate.total(), 8 * r.bitstream.size());
  }
}

TEST(Codec, SingleLayerIsOneKeyframe) {
  const SyntheticModel m = Drift(1, 8, 6, 2);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  EXPECT_EQ(r.stats.records, 1u);
  EXPECT_EQ(r.stats.predictor_calls_residual, 0u);
  EXPECT_EQ(r.rate.codes_residual, 0u);
  EXPECT_TRUE(BitIdentical(DecodeCheckpoint(r.bitstream), r.reconstruction));
}

TEST(Codec, NoPredictorUsesPreviousDecodedBlock) {
  // Layer 2 repeats layer 1; with identity prediction every residual code is
  // zero and the reconstructions coincide.
  SyntheticModel m = Drift(2, 6, 5, 3);
  m.ckpt.layers[1].tensors[0].data = m.ckpt.layers[0].tensors[0].data;
  CodecConfig c = FixedStepConfig(m.ckpt);
  c.no_predictor = true;
  c.no_alignment = true;
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
  EXPECT_EQ(r.reconstruction.layers[1].tensors[0].data, r.reconstruction.layers[0].tensors[0].data);
  EXPECT_EQ(r.stats.predictor_calls_residual, 0u);
}

TEST(Codec, ReencodeIsIdempotentOnQuantizedManifold) {
  const SyntheticModel m = Drift(8, 10, 6, 4);
  CodecConfig c = FixedStepConfig(m.ckpt);
  c.no_predictor = true;
  c.no_alignment = true;
  const EncodeResult first = EncodeCheckpoint(m.ckpt, m.specs, c);
  const Checkpoint dec = DecodeCheckpoint(first.bitstream);
  const EncodeResult second = EncodeCheckpoint(dec, m.specs, c);
  EXPECT_TRUE(BitIdentical(DecodeCheckpoint(second.bitstream), dec));
}

TEST(Codec, TruncatedStreamNamesRecord) {
  const SyntheticModel m = Drift(6, 8, 6, 5);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  ByteReader rd(r.bitstream);
  HeaderLayout layout;
  ParseHeader(&rd, &layout);
  const size_t cut = layout.total + (r.bitstream.size() - layout.total) / 2;
  try {
    DecodeCheckpoint(r.bitstream.data(), cut);
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kCorruptStream);
    EXPECT_NE(std::string(e.what()).find("layer "), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("'ffn'"), std::string::npos) << e.what();
  }
}

TEST(Codec, SwappedRecordsRejected) {
  const SyntheticModel m = Drift(4, 8, 6, 6);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  const Trailer t = ReadTrailer(r.bitstream.data(), r.bitstream.size());
  ByteReader rd(r.bitstream);
  HeaderLayout layout;
  ParseHeader(&rd, &layout);
  const size_t a = layout.total;
  const size_t la = t.lengths[0], lb = t.lengths[1];
  Bytes swapped = r.bitstream;
  std::memcpy(swapped.data() + a, r.bitstream.data() + a + la, lb);
  std::memcpy(swapped.data() + a + lb, r.bitstream.data() + a, la);
  try {
    DecodeCheckpoint(swapped);
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::kCorruptStream || e.code() == Errc::kRecordCountMismatch);
  }
}

TEST(Codec, HeaderErrors) {
  const SyntheticModel m = Drift(3, 4, 4, 7);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  Bytes bad = r.bitstream;
  bad[0] = 'X';
  EXPECT_ERRC(DecodeCheckpoint(bad), Errc::kBadMagic);
  bad = r.bitstream;
  bad[4] = static_cast<uint8_t>(kFormatVersion + 1);
  EXPECT_ERRC(DecodeCheckpoint(bad), Errc::kUnsupportedVersion);
}

TEST(Codec, HeaderRoundTripIsByteIdentical) {
  const SyntheticModel m = Drift(5, 6, 4, 8);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  ByteReader rd(r.bitstream);
  HeaderLayout layout;
  const BitstreamHeader h = ParseHeader(&rd, &layout);
  Bytes again;
  ByteWriter w(&again);
  WriteHeader(h, &w);
  ASSERT_EQ(again.size(), layout.total);
  EXPECT_TRUE(std::equal(again.begin(), again.end(), r.bitstream.begin()));
}

TEST(Codec, ParallelDecodeMatchesSerial) {
  const SyntheticModel m = Drift(11, 8, 6, 9);
  CodecConfig c = SmallConfig();
  c.keyframe_interval = 3;
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
  DecodeStats s1, s8;
  const Checkpoint one = DecodeSegmentsParallel(r.bitstream, 1, &s1);
  const Checkpoint eight = DecodeSegmentsParallel(r.bitstream, 8, &s8);
  EXPECT_TRUE(BitIdentical(one, eight));
  EXPECT_TRUE(BitIdentical(one, r.reconstruction));
  EXPECT_EQ(s8.segments, SegmentCount(11, 3));
}

TEST(Codec, ParallelDecodePropagatesErrors) {
  const SyntheticModel m = Drift(8, 8, 6, 10);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  Bytes bad = r.bitstream;
  ByteReader rd(bad);
  HeaderLayout layout;
  ParseHeader(&rd, &layout);
  bad[layout.total] ^= 0xFF;  // layer field of the first record
  EXPECT_ERRC(DecodeSegmentsParallel(bad, 4), Errc::kCorruptStream);
}

TEST(Codec, AblationStreamsDecode) {
  const SyntheticModel m = Drift(6, 10, 6, 11);
  for (int variant = 0; variant < 6; ++variant) {
    CodecConfig c = SmallConfig();
    c.no_alignment = variant == 0;
    c.random_alignment = variant == 1;
    c.no_predictor = variant == 2;
    c.fixed_length_codes = variant == 3;
    c.fixed_length_perms = variant == 3;
    c.residual_energy_alignment = variant == 4;
    if (variant == 5) {
      c.lambda = 0.01;
      c.train.joint_steps = 20;
    }
    const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
    EXPECT_TRUE(BitIdentical(DecodeCheckpoint(r.bitstream), r.reconstruction)) << variant;
  }
}

TEST(Rate, ComponentsCoverFile) {
  const SyntheticModel m = Drift(6, 10, 6, 12);
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, SmallConfig());
  const RateBreakdown b = RateReport(r.bitstream);
  EXPECT_EQ(b.total(), 8 * r.bitstream.size());
  EXPECT_EQ(b.param_count, ParamCount(m.ckpt));
  EXPECT_DOUBLE_EQ(b.bits_per_param(), 8.0 * r.bitstream.size() / ParamCount(m.ckpt));
}

TEST(Rate, TableFractions) {
  RateBreakdown b;
  b.codes_keyframe = 620000000;
  b.codes_residual = 1550000000;
  b.perm = 130000000;
  b.qparam = 60000000;
  b.meta_header = 40000000;
  EXPECT_EQ(b.total(), 2400000000u);
  const std::vector<double> f = RateFractions(b);
  const double expect[5] = {25.8, 64.6, 5.4, 2.5, 1.7};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(f[i], expect[i], 0.05) << i;
}

TEST(Rate, MetaOnlyStream) {
  RateBreakdown b;
  b.meta_header = 100;
  b.meta_trailer = 28;
  EXPECT_DOUBLE_EQ(RateFractions(b)[4], 100.0);
}

TEST(Config, Validation) {
  CodecConfig c;
  c.keyframe_interval = 0;
  EXPECT_ERRC(ValidateConfig(c), Errc::kConfig);
  c = CodecConfig{};
  c.align.alpha = 1.5;
  EXPECT_ERRC(ValidateConfig(c), Errc::kConfig);
}

TEST(Specs, Validation) {
  BlockTypeSpec a;
  a.name = "a";
  a.members = {{"x", 0}};
  BlockTypeSpec b = a;
  b.type_id = 1;
  EXPECT_ERRC(ValidateSpecs({a, b}), Errc::kConfig);
  b.name = "b";
  EXPECT_ERRC(ValidateSpecs({a, b}), Errc::kConfig);  // shared tensor
  b.members = {{"y", 0}};
  ValidateSpecs({a, b});
}

TEST(OperatingPoint, PicksLowestDistortionUnderTarget) {
  const SyntheticModel m = Drift(4, 8, 6, 13);
  CodecConfig c = SmallConfig();
  c.train.joint_steps = 10;
  const OperatingPoint op = SelectOperatingPoint(m.ckpt, m.specs, c, {0.0, 0.1}, 1e9);
  ASSERT_EQ(op.mse.size(), 2u);
  EXPECT_EQ(op.mse[op.chosen], std::min(op.mse[0], op.mse[1]));
  const OperatingPoint low = SelectOperatingPoint(m.ckpt, m.specs, c, {0.0, 0.1}, 0.0);
  EXPECT_EQ(low.bits_per_param[low.chosen], std::min(low.bits_per_param[0], low.bits_per_param[1]));
}

}  // namespace
}  // namespace mcwc
