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

#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcwc/codec.hpp"
#include "mcwc/codec_format.hpp"
#include "mcwc/config_io.hpp"
#include "mcwc/container.hpp"
#include "mcwc/diagnostics.hpp"
#include "mcwc/error.hpp"
#include "mcwc/permcode.hpp"
#include "mcwc/quant.hpp"
#include "mcwc/range_coder.hpp"
#include "mcwc/synthetic.hpp"

namespace mcwc::cli {
namespace {

using nlohmann::json;

struct Options {
  std::string input;
  std::string output;
  std::string config;
  std::string spec;
  std::string activations;
  std::string report;
  std::string reconstruction;
  std::string format;
  std::optional<uint64_t> seed;
  int workers = 1;
  std::vector<double> lambdas;
  std::optional<int> keyframe_interval;
  bool no_alignment = false;
  bool random_alignment = false;
  bool no_predictor = false;
  bool fixed_length = false;
  bool residual_energy_alignment = false;
  bool trained = false;

  // synth
  int layers = 12;
  int blocks = 32;
  int width = 16;
  double noise = 0.05;
  double decay = 1.0;
  std::string spec_out;

  // breakeven overrides
  std::optional<double> baseline_gb, compressed_gb, bandwidth_gbps, decode_s, materialize_s,
      encode_s;
};

std::shared_ptr<spdlog::logger> Log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("mcwc");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    if (const char* env = std::getenv("MCWC_LOG")) {
      l->set_level(spdlog::level::from_str(env));
    }
    return l;
  }();
  return logger;
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFileAtomic(path, Bytes(text.begin(), text.end()));
}

void EmitText(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    WriteText(o.output, text);
    Log()->info("wrote {}", o.output);
  }
}

void RequireFile(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(Errc::kMissingFile, std::string(what) + " '" + path + "' does not exist");
  }
}

ConfigDocument LoadDocument(const Options& o) {
  ConfigDocument doc;
  if (!o.config.empty()) {
    RequireFile(o.config, "config");
    doc = LoadConfig(o.config);
  }
  if (!o.spec.empty()) {
    RequireFile(o.spec, "block spec");
    const Bytes b = ReadFile(o.spec);
    doc.specs = ParseBlockSpecs(std::string(b.begin(), b.end()));
  }
  CodecConfig& c = doc.codec;
  if (o.seed) {
    c.seed = *o.seed;
    c.align.seed = *o.seed;
    c.train.seed = *o.seed;
    c.entropy_fit.seed = *o.seed;
  }
  if (o.keyframe_interval) c.keyframe_interval = *o.keyframe_interval;
  if (o.lambdas.size() == 1) c.lambda = o.lambdas[0];
  if (o.lambdas.size() > 1) doc.lambdas = o.lambdas;
  c.no_alignment |= o.no_alignment;
  c.random_alignment |= o.random_alignment;
  c.no_predictor |= o.no_predictor;
  c.residual_energy_alignment |= o.residual_energy_alignment;
  if (o.fixed_length) {
    c.fixed_length_codes = true;
    c.fixed_length_perms = true;
  }
  ValidateConfig(c);
  return doc;
}

json RateJson(const RateBreakdown& r) {
  const std::vector<double> f = RateFractions(r);
  return json{{"total_bits", r.total()},
              {"param_count", r.param_count},
              {"bits_per_param", r.bits_per_param()},
              {"codes_keyframe_bits", r.codes_keyframe},
              {"codes_residual_bits", r.codes_residual},
              {"perm_bits", r.perm},
              {"qparam_bits", r.qparam},
              {"meta_bits", r.meta()},
              {"meta_detail",
               {{"header", r.meta_header},
                {"models", r.meta_models},
                {"framing", r.meta_framing},
                {"trailer", r.meta_trailer}}},
              {"percent",
               {{"codes_keyframe", f[0]},
                {"codes_residual", f[1]},
                {"perm", f[2]},
                {"qparam", f[3]},
                {"meta", f[4]}}}};
}

std::string RateTable(const RateBreakdown& r) {
  const std::vector<double> f = RateFractions(r);
  const uint64_t parts[5] = {r.codes_keyframe, r.codes_residual, r.perm, r.qparam, r.meta()};
  const char* names[5] = {"codes (keyframe)", "codes (residual)", "permutations", "quant params",
                          "meta"};
  std::string s;
  char line[160];
  for (int i = 0; i < 5; ++i) {
    std::snprintf(line, sizeof(line), "  %-18s %14llu bits  %6.2f%%\n", names[i],
                  static_cast<unsigned long long>(parts[i]), f[i]);
    s += line;
  }
  std::snprintf(line, sizeof(line), "  %-18s %14llu bits  (%llu bytes, %.4f bits/param)\n", "total",
                static_cast<unsigned long long>(r.total()),
                static_cast<unsigned long long>(r.total() / 8), r.bits_per_param());
  s += line;
  return s;
}

int Encode(const Options& o) {
  RequireFile(o.input, "checkpoint");
  const ConfigDocument doc = LoadDocument(o);
  const Checkpoint ckpt = LoadCheckpoint(o.input);
  std::optional<ActivationSet> acts;
  if (!o.activations.empty()) {
    RequireFile(o.activations, "activation sidecar");
    acts = LoadActivations(o.activations, doc.specs);
  }
  if (doc.specs.empty()) Log()->warn("no block specs; every tensor is coded raw");
  Log()->info("encoding {} layers, {} params", ckpt.num_layers(), ParamCount(ckpt));

  const auto t0 = std::chrono::steady_clock::now();
  EncodeResult result;
  json sweep;
  if (doc.lambdas.size() > 1) {
    OperatingPoint op = SelectOperatingPoint(ckpt, doc.specs, doc.codec, doc.lambdas,
                                             doc.target_bits_per_param, acts ? &*acts : nullptr);
    sweep = json{{"lambdas", op.lambdas},
                 {"bits_per_param", op.bits_per_param},
                 {"mse", op.mse},
                 {"chosen", op.chosen},
                 {"target_bits_per_param", doc.target_bits_per_param}};
    result = std::move(op.result);
  } else {
    result = EncodeCheckpoint(ckpt, doc.specs, doc.codec, acts ? &*acts : nullptr);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  WriteFileAtomic(o.output, result.bitstream);
  if (!o.reconstruction.empty()) SaveCheckpoint(result.reconstruction, o.reconstruction);

  json report = RateJson(result.rate);
  report["encode_seconds"] = secs;
  report["file_bytes"] = result.bitstream.size();
  report["mse"] = result.stats.mse;
  report["clips"] = result.stats.clips;
  report["records"] = result.stats.records;
  report["perms_gated"] = result.stats.perms_gated;
  report["proxy_code_bits"] = result.stats.proxy_code_bits;
  if (!sweep.is_null()) report["sweep"] = sweep;
  const std::string report_path = o.report.empty() ? o.output + ".rate.json" : o.report;
  WriteText(report_path, report.dump(2) + "\n");

  std::printf("wrote %s (%zu bytes) in %.2f s, mse %.6g\n%s", o.output.c_str(),
              result.bitstream.size(), secs, result.stats.mse, RateTable(result.rate).c_str());
  if (result.stats.clips) Log()->warn("{} values clipped", result.stats.clips);
  return kExitOk;
}

int Decode(const Options& o) {
  RequireFile(o.input, "bitstream");
  if (o.workers < 1) throw Error(Errc::kInvalidArgument, "--workers must be >= 1");
  const Bytes b = ReadFile(o.input);
  DecodeStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const Checkpoint ckpt = o.workers > 1 ? DecodeSegmentsParallel(b, o.workers, &stats)
                                        : DecodeCheckpoint(b, &stats);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  SaveCheckpoint(ckpt, o.output);
  std::printf("decoded %d layers, %llu params, %d segments, %d workers: T_dec %.4f s\n",
              ckpt.num_layers(), static_cast<unsigned long long>(ParamCount(ckpt)), stats.segments,
              o.workers, secs);
  return kExitOk;
}

int Inspect(const Options& o) {
  RequireFile(o.input, "bitstream");
  const Bytes b = ReadFile(o.input);
  ByteReader r(b);
  HeaderLayout layout;
  const BitstreamHeader h = ParseHeader(&r, &layout);
  const RateBreakdown rate = RateReport(b);
  if (o.format == "json") {
    json specs = json::array();
    for (const BlockTypeSpec& s : h.specs) specs.push_back(s.name);
    json j{{"version", h.version},
           {"flags", h.flags},
           {"num_layers", h.num_layers},
           {"keyframe_interval", h.keyframe_interval},
           {"segments", SegmentCount(static_cast<int>(h.num_layers), static_cast<int>(h.keyframe_interval))},
           {"arch_id", h.arch_id},
           {"block_types", specs},
           {"records", h.record_count},
           {"header_bytes", layout.total},
           {"model_bytes", layout.models},
           {"file_bytes", b.size()},
           {"rate", RateJson(rate)}};
    std::printf("%s\n", j.dump(2).c_str());
    return kExitOk;
  }
  std::printf("mcwc bitstream v%u, %zu bytes\n", h.version, b.size());
  std::printf("  layers %u, keyframe interval %u (%d segments), arch %u, %u records\n", h.num_layers,
              h.keyframe_interval,
              SegmentCount(static_cast<int>(h.num_layers), static_cast<int>(h.keyframe_interval)),
              h.arch_id, h.record_count);
  std::printf("  flags:%s%s%s\n", h.fixed_length_codes() ? " fixed-length-codes" : "",
              h.fixed_length_perms() ? " fixed-length-perms" : "",
              (h.flags & kFlagLearnedMeans) ? " learned-means" : "");
  std::printf("  predictor %s, header %zu bytes (models %zu)\n",
              h.predictor_kind == PredictorKind::kMlp ? "mlp" : "identity", layout.total,
              layout.models);
  for (const BlockTypeSpec& s : h.specs) {
    std::printf("  block type %u '%s' (%s, %zu members)\n", s.type_id, s.name.c_str(),
                GroupModeName(s.group_mode), s.members.size());
  }
  std::printf("rate breakdown:\n%s", RateTable(rate).c_str());
  return kExitOk;
}

int DiagnoseCmd(const Options& o) {
  RequireFile(o.input, "checkpoint");
  const ConfigDocument doc = LoadDocument(o);
  const Checkpoint ckpt = LoadCheckpoint(o.input);
  DiagnoseConfig dc;
  dc.align = doc.codec.align;
  dc.predictor = o.trained ? DiagnosePredictor::kTrained : DiagnosePredictor::kCopy;
  dc.train = doc.codec.train;
  dc.seed = doc.codec.seed;
  const PredictabilityReport r = Diagnose(ckpt, doc.specs, dc, nullptr);
  const bool as_json =
      o.format == "json" || (o.format.empty() && std::filesystem::path(o.output).extension() == ".json");
  EmitText(o, as_json ? r.ToJson() + "\n" : r.ToCsv());
  return kExitOk;
}

int BreakEvenCmd(const Options& o) {
  ConfigDocument doc;
  if (!o.config.empty()) {
    RequireFile(o.config, "config");
    doc = LoadConfig(o.config);
  }
  DeploymentScenario s = doc.scenario;
  if (o.baseline_gb) s.baseline_gb = *o.baseline_gb;
  if (o.compressed_gb) s.compressed_gb = *o.compressed_gb;
  if (o.bandwidth_gbps) s.bandwidth_gbps = *o.bandwidth_gbps;
  if (o.decode_s) s.decode_s = *o.decode_s;
  if (o.materialize_s) s.materialize_s = *o.materialize_s;
  if (o.encode_s) s.encode_s = *o.encode_s;
  json j{{"baseline_gb", s.baseline_gb},         {"compressed_gb", s.compressed_gb},
         {"bandwidth_gbps", s.bandwidth_gbps},   {"decode_s", s.decode_s},
         {"materialize_s", s.materialize_s},     {"encode_s", s.encode_s},
         {"load_saving_s", LoadSaving(s)}};
  try {
    j["break_even_loads"] = BreakEven(s);
  } catch (const Error& e) {
    if (e.code() != Errc::kNoBreakEven) throw;
    j["break_even_loads"] = nullptr;
    Log()->warn("{}", e.detail());
  }
  if (o.format == "csv") {
    std::string csv = "baseline_gb,compressed_gb,bandwidth_gbps,decode_s,materialize_s,encode_s,"
                      "load_saving_s,break_even_loads\n";
    for (const char* k : {"baseline_gb", "compressed_gb", "bandwidth_gbps", "decode_s",
                          "materialize_s", "encode_s", "load_saving_s", "break_even_loads"}) {
      csv += j[k].dump();
      csv += std::string(k) == "break_even_loads" ? "\n" : ",";
    }
    EmitText(o, csv);
  } else {
    EmitText(o, j.dump(2) + "\n");
  }
  return kExitOk;
}

int Synth(const Options& o) {
  SyntheticConfig sc = SmoothDriftConfig(o.layers, o.blocks, o.width, o.noise, o.seed.value_or(0));
  sc.decay = o.decay;
  const SyntheticModel m = GenerateSynthetic(sc);
  SaveCheckpoint(m.ckpt, o.output);
  const std::string spec_path = o.spec_out.empty() ? o.output + ".spec.json" : o.spec_out;
  WriteText(spec_path, BlockSpecsToJson(m.specs) + "\n");
  std::printf("wrote %s (%llu params) and %s\n", o.output.c_str(),
              static_cast<unsigned long long>(ParamCount(m.ckpt)), spec_path.c_str());
  return kExitOk;
}

int ConfigCmd(const Options& o) {
  EmitText(o, ConfigToJson(LoadDocument(o)) + "\n");
  return kExitOk;
}

// A fast embedded subset of the property suite.
int SelfTest() {
  int failed = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name);
    failed += !ok;
  };
  Rng rng(17);

  bool lehmer = true;
  for (int i = 0; i < 200; ++i) {
    const Permutation p = rng.Permutation(1 + rng.Below(64));
    lehmer &= LehmerDecode(LehmerEncode(p)) == p;
  }
  check("lehmer round trip", lehmer);

  const Cdf cdf = LogisticCdf(0.0, 2.0, 31);
  RangeEncoder enc;
  std::vector<int> syms(2000);
  for (int& s : syms) {
    s = static_cast<int>(rng.Below(63));
    enc.EncodeSymbol(cdf, s);
  }
  const Bytes stream = enc.Finish();
  RangeDecoder dec(stream.data(), stream.size());
  bool coder = true;
  for (int s : syms) coder &= dec.DecodeSymbol(cdf) == s;
  check("range coder round trip", coder);

  bool quant = true;
  for (int i = 0; i < 10000; ++i) {
    const double s = rng.Uniform(1e-3, 1.0), r = rng.Uniform(-50, 50) * s;
    bool clipped = false;
    const int c = QuantizeValue(r, s, 0.0, kResidualQmax, &clipped);
    quant &= std::abs(r - DequantizeValue(c, s, 0.0)) <= 0.5 * s * (1 + 1e-12);
  }
  check("quantizer half-step bound", quant);

  std::vector<double> w1(24), b1(6), w2(18), b2(3), x(40);
  for (auto* v : {&w1, &b1, &w2, &b2, &x}) {
    for (double& e : *v) e = rng.Normal();
  }
  check("mlp permutation invariance",
        VerifyMlpInvariance(w1, b1, w2, b2, 4, 6, 3, {2, 0, 5, 1, 4, 3}, x, Activation::kGelu) < 1e-10);

  const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(6, 8, 8, 0.05, 3));
  CodecConfig c;
  c.d_lat = 16;
  c.d_emb = 4;
  c.entropy.d_emb = 4;
  c.entropy.hidden = 16;
  c.entropy_fit.steps = 20;
  c.train.steps = 20;
  c.train.warmup = 4;
  c.keyframe_interval = 3;
  const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
  check("codec round trip", BitIdentical(DecodeCheckpoint(r.bitstream), r.reconstruction) &&
                                BitIdentical(DecodeSegmentsParallel(r.bitstream, 2), r.reconstruction));
  check("rate accounting", RateReport(r.bitstream).total() == 8 * r.bitstream.size());
  check("break-even preset", BreakEven(PythiaBreakEvenPreset()) == 402);

  std::printf("%s\n", failed ? "selftest FAILED" : "selftest passed");
  return failed ? kExitData : kExitOk;
}

void AddAblationFlags(CLI::App* sub, Options* o) {
  sub->add_flag("--no-alignment", o->no_alignment, "Keep canonical block order");
  sub->add_flag("--random-alignment", o->random_alignment, "Use random permutations");
  sub->add_flag("--no-predictor", o->no_predictor, "Predict each block by copying its predecessor");
  sub->add_flag("--fixed-length", o->fixed_length, "Fixed-length codes and permutations");
  sub->add_flag("--residual-energy-alignment", o->residual_energy_alignment,
                "Align by predicted residual energy");
}

void AddConfigFlags(CLI::App* sub, Options* o) {
  sub->add_option("-c,--config", o->config, "Encoder config document (JSON)");
  sub->add_option("--spec", o->spec, "Block-spec JSON; overrides block_types in the config");
  sub->add_option("--seed", o->seed, "Seed for every stochastic stage");
  sub->add_option("--lambda", o->lambdas, "Rate weight; several values run a sweep")->delimiter(',');
  sub->add_option("--keyframe-interval", o->keyframe_interval, "Keyframe interval K")
      ->check(CLI::PositiveNumber);
  AddAblationFlags(sub, o);
}

int MapError(const Error& e) {
  switch (e.code()) {
    case Errc::kConfig:
    case Errc::kInvalidArgument:
    case Errc::kMissingFile:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int Run(int argc, char** argv) {
  Options o;
  CLI::App app{"mcwc: layer-sequence weight checkpoint codec"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "mcwc 0.1.0");

  auto* encode = app.add_subcommand("encode", "Compress a checkpoint container");
  encode->add_option("input", o.input, "Checkpoint container")->required();
  encode->add_option("-o,--output", o.output, "Bitstream path")->required();
  encode->add_option("--activations", o.activations, "Activation sidecar container");
  encode->add_option("--report", o.report, "Rate report JSON (default <output>.rate.json)");
  encode->add_option("--reconstruction", o.reconstruction,
                     "Also write the encoder's quantized reconstruction");
  AddConfigFlags(encode, &o);

  auto* decode = app.add_subcommand("decode", "Reconstruct a checkpoint container");
  decode->add_option("input", o.input, "Bitstream")->required();
  decode->add_option("-o,--output", o.output, "Checkpoint path")->required();
  decode->add_option("--workers", o.workers, "Segment worker threads")->check(CLI::PositiveNumber);

  auto* inspect = app.add_subcommand("inspect", "Print the header and rate breakdown");
  inspect->add_option("input", o.input, "Bitstream")->required();
  inspect->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* diagnose = app.add_subcommand("diagnose", "Predictability before and after alignment");
  diagnose->add_option("input", o.input, "Checkpoint container")->required();
  diagnose->add_option("-o,--output", o.output, "Report path (stdout by default)");
  diagnose->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  diagnose->add_flag("--trained", o.trained, "Train predictors instead of copying the predecessor");
  AddConfigFlags(diagnose, &o);

  auto* breakeven = app.add_subcommand("breakeven", "Evaluate a deployment scenario");
  breakeven->add_option("-c,--config", o.config, "Config document with a breakeven section");
  breakeven->add_option("-o,--output", o.output, "Report path (stdout by default)");
  breakeven->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  breakeven->add_option("--baseline-gb", o.baseline_gb);
  breakeven->add_option("--compressed-gb", o.compressed_gb);
  breakeven->add_option("--bandwidth-gbps", o.bandwidth_gbps);
  breakeven->add_option("--decode-s", o.decode_s);
  breakeven->add_option("--materialize-s", o.materialize_s);
  breakeven->add_option("--encode-s", o.encode_s);

  auto* selftest = app.add_subcommand("selftest", "Run the embedded property checks");

  auto* synth = app.add_subcommand("synth", "Write a synthetic smooth-drift checkpoint");
  synth->add_option("-o,--output", o.output, "Checkpoint path")->required();
  synth->add_option("--spec-out", o.spec_out, "Block-spec path (default <output>.spec.json)");
  synth->add_option("--layers", o.layers)->check(CLI::PositiveNumber);
  synth->add_option("--blocks", o.blocks)->check(CLI::PositiveNumber);
  synth->add_option("--width", o.width)->check(CLI::PositiveNumber);
  synth->add_option("--noise", o.noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--decay", o.decay);
  synth->add_option("--seed", o.seed);

  auto* config = app.add_subcommand("config", "Print the effective config document");
  config->add_option("-o,--output", o.output, "Output path (stdout by default)");
  AddConfigFlags(config, &o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::fprintf(stderr, "mcwc: %s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  }

  try {
    if (*encode) return Encode(o);
    if (*decode) return Decode(o);
    if (*inspect) return Inspect(o);
    if (*diagnose) return DiagnoseCmd(o);
    if (*breakeven) return BreakEvenCmd(o);
    if (*selftest) return SelfTest();
    if (*synth) return Synth(o);
    if (*config) return ConfigCmd(o);
  } catch (const Error& e) {
    Log()->error("{}", e.what());
    return MapError(e);
  } catch (const std::exception& e) {
    Log()->error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mcwc::cli
