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

#ifndef MCWC_ERROR_HPP_
#define MCWC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mcwc {

enum class Errc {
  kMissingFile,
  kManifestParse,
  kShapeMismatch,
  kNonFiniteValue,
  kIoFailure,
  kInvalidCheckpoint,
  kUnsupportedDtype,
  kMissingTensor,
  kAxisOutOfRange,
  kBlockCountMismatch,
  kIncompleteBlockSet,
  kLengthMismatch,
  kNotBijection,
  kDimensionMismatch,
  kNonSquare,
  kNonFinite,
  kDigitOutOfRange,
  kCorruptStream,
  kCdfInvalid,
  kOutOfSupport,
  kMissingPrediction,
  kNonFiniteLoss,
  kEmptyGroup,
  kCodeOutOfRange,
  kUnknownType,
  kLayerIndexOutOfRange,
  kBadMagic,
  kUnsupportedVersion,
  kRecordCountMismatch,
  kZeroVariance,
  kZeroEnergy,
  kNoBreakEven,
  kInvalidArgument,
  kConfig,
};

const char* ErrcName(Errc code);

// Every recoverable failure in the library is reported as an Error.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const { return code_; }
  // The message without the error-name prefix.
  const std::string& detail() const { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] void Fail(Errc code, const std::string& what);

}  // namespace mcwc

#endif  // MCWC_ERROR_HPP_
