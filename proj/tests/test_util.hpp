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

#ifndef MCWC_TESTS_TEST_UTIL_HPP_
#define MCWC_TESTS_TEST_UTIL_HPP_

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcwc/codec.hpp"
#include "mcwc/container.hpp"
#include "mcwc/error.hpp"
#include "mcwc/random.hpp"

namespace mcwc::testing {

#define EXPECT_ERRC(stmt, errc)                                             \
  do {                                                                      \
    try {                                                                   \
      stmt;                                                                 \
      ADD_FAILURE() << "expected " << ::mcwc::ErrcName(errc) << ", no throw"; \
    } catch (const ::mcwc::Error& e) {                                      \
      EXPECT_EQ(e.code(), errc) << e.what();                                \
    }                                                                       \
  } while (0)

inline Tensor RandomTensor(Rng& rng, const std::string& name, Shape shape, double scale = 1.0) {
  Tensor t{name, std::move(shape), {}};
  t.data.resize(static_cast<size_t>(t.numel()));
  for (float& v : t.data) v = static_cast<float>(scale * rng.Normal());
  return t;
}

// Small codec settings for tests.
inline CodecConfig SmallConfig() {
  CodecConfig c;
  c.d_lat = 32;
  c.d_emb = 8;
  c.entropy.d_emb = 4;
  c.entropy.hidden = 32;
  c.entropy_fit.steps = 40;
  c.train.steps = 60;
  c.train.warmup = 10;
  c.train.batch = 32;
  return c;
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            (std::string("mcwc_") + info->test_suite_name() + "_" + info->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace mcwc::testing

#endif  // MCWC_TESTS_TEST_UTIL_HPP_
