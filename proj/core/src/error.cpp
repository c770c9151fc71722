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

#include "mcwc/error.hpp"

namespace mcwc {

const char* ErrcName(Errc code) {
  switch (code) {
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kManifestParse: return "ManifestParse";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kNonFiniteValue: return "NonFiniteValue";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kInvalidCheckpoint: return "InvalidCheckpoint";
    case Errc::kUnsupportedDtype: return "UnsupportedDtype";
    case Errc::kMissingTensor: return "MissingTensor";
    case Errc::kAxisOutOfRange: return "AxisOutOfRange";
    case Errc::kBlockCountMismatch: return "BlockCountMismatch";
    case Errc::kIncompleteBlockSet: return "IncompleteBlockSet";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kNotBijection: return "NotBijection";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNonSquare: return "NonSquare";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kDigitOutOfRange: return "DigitOutOfRange";
    case Errc::kCorruptStream: return "CorruptStream";
    case Errc::kCdfInvalid: return "CdfInvalid";
    case Errc::kOutOfSupport: return "OutOfSupport";
    case Errc::kMissingPrediction: return "MissingPrediction";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
    case Errc::kEmptyGroup: return "EmptyGroup";
    case Errc::kCodeOutOfRange: return "CodeOutOfRange";
    case Errc::kUnknownType: return "UnknownType";
    case Errc::kLayerIndexOutOfRange: return "LayerIndexOutOfRange";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kUnsupportedVersion: return "UnsupportedVersion";
    case Errc::kRecordCountMismatch: return "RecordCountMismatch";
    case Errc::kZeroVariance: return "ZeroVariance";
    case Errc::kZeroEnergy: return "ZeroEnergy";
    case Errc::kNoBreakEven: return "NoBreakEven";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kConfig: return "Config";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
      code_(code),
      detail_(what) {}

void Fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace mcwc
