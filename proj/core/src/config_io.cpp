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

#include "mcwc/config_io.hpp"

#include <set>
#include <string_view>

#include "json.hpp"
#include "mcwc/error.hpp"

namespace mcwc {

using nlohmann::json;

namespace {

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  Fail(Errc::kConfig, where.empty() ? what : where + ": " + what);
}

// Reads keys from one JSON object and rejects leftovers on Finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Bad(path_, "expected an object");
  }

  template <typename T>
  void Get(const char* key, T* out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      *out = it->template get<T>();
    } catch (const json::exception& e) {
      Bad(path_ + "." + key, e.what());
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) Bad(path_, "unknown key '" + it.key() + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

GroupMode ParseGroupMode(const std::string& s, const std::string& where) {
  if (s == "block") return GroupMode::kBlock;
  if (s == "member") return GroupMode::kMember;
  if (s == "tensor") return GroupMode::kTensor;
  Bad(where, "group_mode must be block, member or tensor");
}

SolverPolicy ParsePolicy(const std::string& s) {
  if (s == "adaptive") return SolverPolicy::kAdaptive;
  if (s == "exact") return SolverPolicy::kExact;
  if (s == "screened") return SolverPolicy::kScreened;
  if (s == "identity") return SolverPolicy::kIdentity;
  if (s == "random") return SolverPolicy::kRandom;
  Bad("align.policy", "unknown solver policy '" + s + "'");
}

std::vector<BlockTypeSpec> SpecsFromJson(const json& arr) {
  if (!arr.is_array()) Bad("block_types", "expected an array");
  std::vector<BlockTypeSpec> specs;
  for (size_t i = 0; i < arr.size(); ++i) {
    Section s(arr[i], "block_types[" + std::to_string(i) + "]");
    BlockTypeSpec spec;
    int id = static_cast<int>(i);
    std::string mode = "block";
    s.Get("id", &id);
    s.Get("name", &spec.name);
    s.Get("group_mode", &mode);
    if (id < 0 || id > 0xFFFE) Bad(s.path(), "id must lie in [0, 65534]");
    spec.type_id = static_cast<uint16_t>(id);
    spec.group_mode = ParseGroupMode(mode, s.path());
    if (spec.name.empty()) Bad(s.path(), "name is required");
    const json* members = s.Child("members");
    if (!members || !members->is_array() || members->empty()) {
      Bad(s.path(), "members must be a non-empty array");
    }
    for (size_t m = 0; m < members->size(); ++m) {
      Section ms((*members)[m], s.path() + ".members[" + std::to_string(m) + "]");
      BlockMember bm;
      ms.Get("tensor", &bm.tensor);
      ms.Get("axis", &bm.axis);
      if (bm.tensor.empty()) Bad(ms.path(), "tensor is required");
      ms.Finish();
      spec.members.push_back(std::move(bm));
    }
    s.Finish();
    specs.push_back(std::move(spec));
  }
  return specs;
}

json SpecsJson(const std::vector<BlockTypeSpec>& specs) {
  json arr = json::array();
  for (const BlockTypeSpec& s : specs) {
    json members = json::array();
    for (const BlockMember& m : s.members) members.push_back({{"tensor", m.tensor}, {"axis", m.axis}});
    arr.push_back({{"id", s.type_id},
                   {"name", s.name},
                   {"group_mode", GroupModeName(s.group_mode)},
                   {"members", std::move(members)}});
  }
  return arr;
}

json ParseText(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Bad("", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

const char* GroupModeName(GroupMode m) {
  switch (m) {
    case GroupMode::kBlock: return "block";
    case GroupMode::kMember: return "member";
    case GroupMode::kTensor: return "tensor";
  }
  return "block";
}

const char* SolverPolicyName(SolverPolicy p) {
  switch (p) {
    case SolverPolicy::kAdaptive: return "adaptive";
    case SolverPolicy::kExact: return "exact";
    case SolverPolicy::kScreened: return "screened";
    case SolverPolicy::kIdentity: return "identity";
    case SolverPolicy::kRandom: return "random";
  }
  return "adaptive";
}

ConfigDocument ParseConfig(const std::string& json_text) {
  const json root = ParseText(json_text);
  ConfigDocument doc;
  CodecConfig& c = doc.codec;
  Section top(root, "config");

  if (const json* j = top.Child("codec")) {
    Section s(*j, "codec");
    std::string step_mode = c.step_mode == StepMode::kFixed ? "fixed" : "std";
    s.Get("keyframe_interval", &c.keyframe_interval);
    s.Get("lambda", &c.lambda);
    s.Get("recompute_period", &c.recompute_period);
    s.Get("seed", &c.seed);
    s.Get("gamma", &c.gamma);
    s.Get("keyframe_gamma", &c.keyframe_gamma);
    s.Get("step_mode", &step_mode);
    s.Get("fixed_step", &c.fixed_step);
    s.Get("keyframe_fixed_step", &c.keyframe_fixed_step);
    s.Get("raw_fixed_step", &c.raw_fixed_step);
    s.Get("learned_means", &c.learned_means);
    s.Get("qmax_residual", &c.qmax_residual);
    s.Get("qmax_keyframe", &c.qmax_keyframe);
    s.Finish();
    if (step_mode == "std") {
      c.step_mode = StepMode::kStd;
    } else if (step_mode == "fixed") {
      c.step_mode = StepMode::kFixed;
    } else {
      Bad("codec.step_mode", "must be std or fixed");
    }
  }
  if (const json* j = top.Child("ablation")) {
    Section s(*j, "ablation");
    s.Get("no_alignment", &c.no_alignment);
    s.Get("random_alignment", &c.random_alignment);
    s.Get("no_predictor", &c.no_predictor);
    s.Get("fixed_length_codes", &c.fixed_length_codes);
    s.Get("fixed_length_perms", &c.fixed_length_perms);
    s.Get("residual_energy_alignment", &c.residual_energy_alignment);
    s.Get("delta_perm_coding", &c.delta_perm_coding);
    s.Get("alignment_gating", &c.alignment_gating);
    s.Finish();
  }
  if (const json* j = top.Child("align")) {
    Section s(*j, "align");
    std::string policy = SolverPolicyName(c.align.policy);
    s.Get("alpha", &c.align.alpha);
    s.Get("policy", &policy);
    s.Get("k_cand", &c.align.k_cand);
    s.Get("refine_passes", &c.align.refine_passes);
    s.Get("exact_threshold", &c.align.exact_threshold);
    s.Get("seed", &c.align.seed);
    s.Finish();
    c.align.policy = ParsePolicy(policy);
  }
  if (const json* j = top.Child("predictor")) {
    Section s(*j, "predictor");
    s.Get("d_lat", &c.d_lat);
    s.Get("d_emb", &c.d_emb);
    s.Get("hidden", &c.hidden);
    s.Finish();
  }
  if (const json* j = top.Child("train")) {
    Section s(*j, "train");
    s.Get("steps", &c.train.steps);
    s.Get("joint_steps", &c.train.joint_steps);
    s.Get("lr", &c.train.lr);
    s.Get("weight_decay", &c.train.weight_decay);
    s.Get("warmup", &c.train.warmup);
    s.Get("clip_norm", &c.train.clip_norm);
    s.Get("batch", &c.train.batch);
    s.Get("seed", &c.train.seed);
    s.Finish();
  }
  if (const json* j = top.Child("entropy")) {
    Section s(*j, "entropy");
    s.Get("d_emb", &c.entropy.d_emb);
    s.Get("hidden", &c.entropy.hidden);
    s.Get("fit_steps", &c.entropy_fit.steps);
    s.Get("fit_lr", &c.entropy_fit.lr);
    s.Get("fit_seed", &c.entropy_fit.seed);
    s.Finish();
  }
  if (const json* j = top.Child("block_types")) doc.specs = SpecsFromJson(*j);
  if (const json* j = top.Child("breakeven")) {
    Section s(*j, "breakeven");
    DeploymentScenario& d = doc.scenario;
    s.Get("baseline_gb", &d.baseline_gb);
    s.Get("compressed_gb", &d.compressed_gb);
    s.Get("bandwidth_gbps", &d.bandwidth_gbps);
    s.Get("decode_s", &d.decode_s);
    s.Get("materialize_s", &d.materialize_s);
    s.Get("encode_s", &d.encode_s);
    s.Finish();
  }
  if (const json* j = top.Child("sweep")) {
    Section s(*j, "sweep");
    s.Get("lambdas", &doc.lambdas);
    s.Get("target_bits_per_param", &doc.target_bits_per_param);
    s.Finish();
  }
  top.Finish();
  ValidateConfig(c);
  return doc;
}

ConfigDocument LoadConfig(const std::string& path) {
  const Bytes b = ReadFile(path);
  return ParseConfig(std::string(b.begin(), b.end()));
}

std::string ConfigToJson(const ConfigDocument& doc) {
  const CodecConfig& c = doc.codec;
  json j;
  j["codec"] = {{"keyframe_interval", c.keyframe_interval},
                {"lambda", c.lambda},
                {"recompute_period", c.recompute_period},
                {"seed", c.seed},
                {"gamma", c.gamma},
                {"keyframe_gamma", c.keyframe_gamma},
                {"step_mode", c.step_mode == StepMode::kFixed ? "fixed" : "std"},
                {"fixed_step", c.fixed_step},
                {"keyframe_fixed_step", c.keyframe_fixed_step},
                {"raw_fixed_step", c.raw_fixed_step},
                {"learned_means", c.learned_means},
                {"qmax_residual", c.qmax_residual},
                {"qmax_keyframe", c.qmax_keyframe}};
  j["ablation"] = {{"no_alignment", c.no_alignment},
                   {"random_alignment", c.random_alignment},
                   {"no_predictor", c.no_predictor},
                   {"fixed_length_codes", c.fixed_length_codes},
                   {"fixed_length_perms", c.fixed_length_perms},
                   {"residual_energy_alignment", c.residual_energy_alignment},
                   {"delta_perm_coding", c.delta_perm_coding},
                   {"alignment_gating", c.alignment_gating}};
  j["align"] = {{"alpha", c.align.alpha},
                {"policy", SolverPolicyName(c.align.policy)},
                {"k_cand", c.align.k_cand},
                {"refine_passes", c.align.refine_passes},
                {"exact_threshold", c.align.exact_threshold},
                {"seed", c.align.seed}};
  j["predictor"] = {{"d_lat", c.d_lat}, {"d_emb", c.d_emb}, {"hidden", c.hidden}};
  j["train"] = {{"steps", c.train.steps},
                {"joint_steps", c.train.joint_steps},
                {"lr", c.train.lr},
                {"weight_decay", c.train.weight_decay},
                {"warmup", c.train.warmup},
                {"clip_norm", c.train.clip_norm},
                {"batch", c.train.batch},
                {"seed", c.train.seed}};
  j["entropy"] = {{"d_emb", c.entropy.d_emb},
                  {"hidden", c.entropy.hidden},
                  {"fit_steps", c.entropy_fit.steps},
                  {"fit_lr", c.entropy_fit.lr},
                  {"fit_seed", c.entropy_fit.seed}};
  j["block_types"] = SpecsJson(doc.specs);
  const DeploymentScenario& d = doc.scenario;
  j["breakeven"] = {{"baseline_gb", d.baseline_gb},     {"compressed_gb", d.compressed_gb},
                    {"bandwidth_gbps", d.bandwidth_gbps}, {"decode_s", d.decode_s},
                    {"materialize_s", d.materialize_s}, {"encode_s", d.encode_s}};
  j["sweep"] = {{"lambdas", doc.lambdas}, {"target_bits_per_param", doc.target_bits_per_param}};
  return j.dump(2) + "\n";
}

std::vector<BlockTypeSpec> ParseBlockSpecs(const std::string& json_text) {
  const json root = ParseText(json_text);
  if (root.is_array()) return SpecsFromJson(root);
  Section s(root, "blockspec");
  const json* arr = s.Child("block_types");
  if (!arr) Bad("blockspec", "missing block_types");
  std::vector<BlockTypeSpec> specs = SpecsFromJson(*arr);
  s.Finish();
  return specs;
}

std::string BlockSpecsToJson(const std::vector<BlockTypeSpec>& specs) {
  json j;
  j["block_types"] = SpecsJson(specs);
  return j.dump(2) + "\n";
}

ActivationSet ActivationsFromCheckpoint(const Checkpoint& ckpt,
                                        const std::vector<BlockTypeSpec>& specs) {
  ActivationSet out;
  for (const Layer& layer : ckpt.layers) {
    for (size_t t = 0; t < specs.size(); ++t) {
      const Tensor* tensor = layer.Find(specs[t].name);
      if (!tensor) continue;
      if (tensor->shape.size() != 2) {
        Fail(Errc::kShapeMismatch, "activation tensor '" + specs[t].name + "' in layer " +
                                       std::to_string(layer.index) + " must be [B, m]");
      }
      ActivationSummary a;
      a.count = static_cast<int>(tensor->shape[0]);
      a.dim = static_cast<int>(tensor->shape[1]);
      a.mean.assign(tensor->data.begin(), tensor->data.end());
      out[{layer.index, static_cast<int>(t)}] = std::move(a);
    }
  }
  return out;
}

ActivationSet LoadActivations(const std::string& path, const std::vector<BlockTypeSpec>& specs) {
  return ActivationsFromCheckpoint(LoadCheckpoint(path), specs);
}

}  // namespace mcwc
