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

#include <openssl/sha.h>

#include <array>
#include <cstring>

#include "mcwc/container.hpp"
#include "test_util.hpp"

namespace mcwc {
namespace {

using testing::RandomTensor;
using testing::TempDir;

Checkpoint RandomCheckpoint(uint64_t seed, int layers) {
  Rng rng(seed);
  Checkpoint c;
  c.arch_id = 7;
  for (int l = 1; l <= layers; ++l) {
    Layer layer;
    layer.index = l;
    layer.tensors.push_back(RandomTensor(rng, "w", {4, 3}));
    layer.tensors.push_back(RandomTensor(rng, "b", {5}));
    c.layers.push_back(std::move(layer));
  }
  return c;
}

std::array<unsigned char, SHA256_DIGEST_LENGTH> Sha256(const Bytes& b) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> d{};
  SHA256(b.data(), b.size(), d.data());
  return d;
}

TEST(Container, LoadsSingleTensor) {
  Checkpoint c;
  c.layers.push_back({1, {{"t", {2, 3}, {1, 2, 3, 4, 5, 6}}}});
  const Bytes b = SerializeCheckpoint(c);
  const Checkpoint back = ParseCheckpoint(b.data(), b.size());
  ASSERT_EQ(back.num_layers(), 1);
  ASSERT_EQ(back.layers[0].tensors.size(), 1u);
  EXPECT_EQ(back.layers[0].tensors[0].data.size(), 6u);
  EXPECT_EQ(back.layers[0].tensors[0].data[5], 6.0f);
}

TEST(Container, ShortDataRegionIsShapeMismatch) {
  Checkpoint c;
  c.layers.push_back({1, {{"t", {2, 3}, {1, 2, 3, 4, 5, 6}}}});
  Bytes b = SerializeCheckpoint(c);
  b.resize(b.size() - 4);
  EXPECT_ERRC(ParseCheckpoint(b.data(), b.size()), Errc::kShapeMismatch);
}

TEST(Container, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  const Checkpoint c = RandomCheckpoint(1, 3);
  SaveCheckpoint(c, dir.file("a.mctc"));
  const Checkpoint back = LoadCheckpoint(dir.file("a.mctc"));
  SaveCheckpoint(back, dir.file("b.mctc"));
  EXPECT_EQ(ReadFile(dir.file("a.mctc")), ReadFile(dir.file("b.mctc")));
  for (size_t l = 0; l < c.layers.size(); ++l) {
    for (size_t t = 0; t < c.layers[l].tensors.size(); ++t) {
      EXPECT_EQ(c.layers[l].tensors[t].data, back.layers[l].tensors[t].data);
      EXPECT_EQ(c.layers[l].tensors[t].shape, back.layers[l].tensors[t].shape);
    }
  }
}

TEST(Container, EmptyLayerIsInvalid) {
  Checkpoint c = RandomCheckpoint(2, 2);
  c.layers[1].tensors.clear();
  EXPECT_ERRC(ValidateCheckpoint(c), Errc::kInvalidCheckpoint);
  EXPECT_ERRC(SerializeCheckpoint(c), Errc::kInvalidCheckpoint);
}

TEST(Container, RepeatedSavesHaveEqualHash) {
  TempDir dir;
  const Checkpoint c = RandomCheckpoint(3, 4);
  SaveCheckpoint(c, dir.file("a.mctc"));
  SaveCheckpoint(c, dir.file("b.mctc"));
  EXPECT_EQ(Sha256(ReadFile(dir.file("a.mctc"))), Sha256(ReadFile(dir.file("b.mctc"))));
}

TEST(Container, ParamCount) {
  Checkpoint a;
  a.layers.push_back({1, {{"t", {2, 3}, std::vector<float>(6)}}});
  EXPECT_EQ(ParamCount(a), 6u);
  Checkpoint b;
  b.layers.push_back({1, {{"x", {4}, std::vector<float>(4)}, {"y", {4, 4}, std::vector<float>(16)}}});
  EXPECT_EQ(ParamCount(b), 20u);
}

TEST(Container, RejectsNonFinite) {
  Checkpoint c = RandomCheckpoint(4, 1);
  c.layers[0].tensors[0].data[2] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_ERRC(ValidateCheckpoint(c), Errc::kNonFiniteValue);
}

TEST(Container, RejectsBadMagicAndMissingFile) {
  Bytes b = SerializeCheckpoint(RandomCheckpoint(5, 1));
  b[0] = 'X';
  EXPECT_ERRC(ParseCheckpoint(b.data(), b.size()), Errc::kManifestParse);
  EXPECT_ERRC(LoadCheckpoint("/nonexistent/mcwc/file.mctc"), Errc::kMissingFile);
}

TEST(Container, RejectsDuplicateNames) {
  Checkpoint c = RandomCheckpoint(6, 1);
  c.layers[0].tensors[1].name = "w";
  c.layers[0].tensors[1].shape = {4, 3};
  c.layers[0].tensors[1].data.resize(12);
  EXPECT_ERRC(ValidateCheckpoint(c), Errc::kInvalidCheckpoint);
}

TEST(Container, AtomicWriteLeavesNoTemporary) {
  TempDir dir;
  WriteFileAtomic(dir.file("x.bin"), Bytes{1, 2, 3});
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(dir.file("")))) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  EXPECT_EQ(ReadFile(dir.file("x.bin")), (Bytes{1, 2, 3}));
}

}  // namespace
}  // namespace mcwc
