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

#ifndef MCWC_CONFIG_IO_HPP_
#define MCWC_CONFIG_IO_HPP_

#include <string>
#include <vector>

#include "mcwc/blocks.hpp"
#include "mcwc/codec.hpp"
#include "mcwc/diagnostics.hpp"

namespace mcwc {

// The single encoder document: codec knobs, alignment, training, block
// specs, break-even scenario and the lambda sweep. Every key is optional;
// unknown keys are rejected so typos surface as Config errors.
struct ConfigDocument {
  CodecConfig codec;
  std::vector<BlockTypeSpec> specs;
  DeploymentScenario scenario = PythiaBreakEvenPreset();
  std::vector<double> lambdas;
  double target_bits_per_param = 0.0;
};

ConfigDocument ParseConfig(const std::string& json_text);
ConfigDocument LoadConfig(const std::string& path);
std::string ConfigToJson(const ConfigDocument& doc);

// Block-spec document: {"block_types": [{"id", "name", "group_mode",
// "members": [{"tensor", "axis"}]}]}. A bare array is also accepted.
std::vector<BlockTypeSpec> ParseBlockSpecs(const std::string& json_text);
std::string BlockSpecsToJson(const std::vector<BlockTypeSpec>& specs);

const char* GroupModeName(GroupMode m);
const char* SolverPolicyName(SolverPolicy p);

// Activation sidecar: a checkpoint container whose layer l holds one tensor
// per block type, named after the type, of shape [B, m] (row i is the mean
// activation of block i). Types without a tensor get no summary.
ActivationSet LoadActivations(const std::string& path, const std::vector<BlockTypeSpec>& specs);
ActivationSet ActivationsFromCheckpoint(const Checkpoint& ckpt,
                                        const std::vector<BlockTypeSpec>& specs);

}  // namespace mcwc

#endif  // MCWC_CONFIG_IO_HPP_
