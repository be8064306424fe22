#ifndef KPFCP_EXPERIMENT_HPP
#define KPFCP_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kpfcp/common.hpp"
#include "kpfcp/complexity.hpp"
#include "kpfcp/dereverb.hpp"
#include "kpfcp/estimator.hpp"
#include "kpfcp/metrics.hpp"
#include "kpfcp/room.hpp"
#include "kpfcp/speech.hpp"
#include "kpfcp/stft.hpp"
#include "kpfcp/wav.hpp"

namespace kpfcp::experiment {

using nlohmann::json;

enum class InputSource { kSynthetic, kWav };

struct SyntheticInput {
  std::optional<room::RoomScene> scene;  // drawn from the seed when absent
  std::optional<double> t60;             // fixes the T60 of a drawn scene
  double snr_db = 25.0;                  // +inf disables noise
  double duration_s = 20.0;
  std::optional<std::string> clean_wav;  // synthetic utterance when absent
  std::optional<std::uint64_t> speech_seed;
  std::optional<std::uint64_t> noise_seed;
};

struct WavInput {
  std::string observed;
  std::optional<std::string> direct_truth;
  std::optional<std::string> estimate;
};

struct ExperimentConfig {
  InputSource source = InputSource::kSynthetic;
  SyntheticInput synthetic;
  WavInput wav;
  StftConfig stft;
  EstimatorSpec estimator{EstimatorKind::kOracle, 0.1, 0};
  bool estimator_seed_set = false;
  AlgorithmSpec algorithm;
  bool metrics = true;
  std::string out_dir = "out";
  std::optional<std::string> metrics_csv;
  std::optional<std::string> metrics_json;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool instrument_macs = false;
};

// ---------------------------------------------------------------------------
// JSON parsing with field paths in every error.

namespace detail {

inline const json* Find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

template <class T>
T As(const json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>)
        if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config field '" + path + "': wrong type (" + std::string(v.type_name()) +
                      ")");
  }
}

template <class T>
void Read(const json& obj, const std::string& key, const std::string& prefix, T& out) {
  if (const json* v = Find(obj, key)) out = As<T>(*v, prefix + key);
}

inline room::Vec3 ReadVec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("config field '" + path + "': expected [x, y, z]");
  return {As<double>(v[0], path + "[0]"), As<double>(v[1], path + "[1]"), As<double>(v[2], path + "[2]")};
}

inline void CheckKeys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("config field '" + path + "': expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("config field '" + path + (path.empty() ? "" : ".") + it.key() + "': unknown field");
  }
}

inline double ReadSnr(const json& v, const std::string& path) {
  if (v.is_null()) return room::kNoNoise;
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "none"))
    return room::kNoNoise;
  return As<double>(v, path);
}

}  // namespace detail

inline ExperimentConfig ParseConfig(const json& j) {
  using namespace detail;
  CheckKeys(j, "", {"input", "stft", "estimator", "algorithm", "metrics", "out_dir", "seed",
                    "threads", "instrument_macs", "run_record"});
  ExperimentConfig c;
  Read(j, "seed", "", c.seed);
  Read(j, "threads", "", c.threads);
  Read(j, "instrument_macs", "", c.instrument_macs);
  Read(j, "out_dir", "", c.out_dir);

  if (const json* in = Find(j, "input")) {
    CheckKeys(*in, "input", {"source", "scene", "t60", "snr_db", "duration_s", "clean_wav",
                             "speech_seed", "noise_seed", "observed", "direct_truth", "estimate"});
    std::string source = "synthetic";
    Read(*in, "source", "input.", source);
    if (source == "synthetic") {
      c.source = InputSource::kSynthetic;
      for (const char* k : {"observed", "direct_truth", "estimate"})
        if (Find(*in, k))
          throw ConfigError(std::string("config field 'input.") + k +
                            "': not allowed with synthetic input (exactly one input source)");
    } else if (source == "wav") {
      c.source = InputSource::kWav;
      for (const char* k : {"scene", "t60", "clean_wav", "duration_s"})
        if (Find(*in, k))
          throw ConfigError(std::string("config field 'input.") + k +
                            "': not allowed with wav input (exactly one input source)");
    } else {
      throw ConfigError("config field 'input.source': expected 'synthetic' or 'wav'");
    }
    auto& s = c.synthetic;
    if (const json* sc = Find(*in, "scene")) {
      CheckKeys(*sc, "input.scene", {"room_dims", "source_pos", "mic_pos", "t60", "sound_speed"});
      room::RoomScene scene;
      for (const char* k : {"room_dims", "source_pos", "mic_pos", "t60"})
        if (!Find(*sc, k)) throw ConfigError(std::string("config field 'input.scene.") + k + "': missing");
      scene.room_dims = ReadVec3((*sc)["room_dims"], "input.scene.room_dims");
      scene.source_pos = ReadVec3((*sc)["source_pos"], "input.scene.source_pos");
      scene.mic_pos = ReadVec3((*sc)["mic_pos"], "input.scene.mic_pos");
      Read(*sc, "t60", "input.scene.", scene.t60);
      Read(*sc, "sound_speed", "input.scene.", scene.sound_speed);
      s.scene = scene;
    }
    if (const json* v = Find(*in, "t60")) s.t60 = As<double>(*v, "input.t60");
    if (const json* v = Find(*in, "snr_db")) s.snr_db = ReadSnr(*v, "input.snr_db");
    Read(*in, "duration_s", "input.", s.duration_s);
    if (const json* v = Find(*in, "clean_wav")) s.clean_wav = As<std::string>(*v, "input.clean_wav");
    if (const json* v = Find(*in, "speech_seed")) s.speech_seed = As<std::uint64_t>(*v, "input.speech_seed");
    if (const json* v = Find(*in, "noise_seed")) s.noise_seed = As<std::uint64_t>(*v, "input.noise_seed");
    if (c.source == InputSource::kWav) {
      if (!Find(*in, "observed")) throw ConfigError("config field 'input.observed': missing");
      c.wav.observed = As<std::string>((*in)["observed"], "input.observed");
      if (const json* v = Find(*in, "direct_truth")) c.wav.direct_truth = As<std::string>(*v, "input.direct_truth");
      if (const json* v = Find(*in, "estimate")) c.wav.estimate = As<std::string>(*v, "input.estimate");
    }
  }

  if (const json* st = Find(j, "stft")) {
    CheckKeys(*st, "stft", {"frame_size", "hop", "window"});
    Read(*st, "frame_size", "stft.", c.stft.frame_size);
    Read(*st, "hop", "stft.", c.stft.hop);
    if (const json* w = Find(*st, "window"))
      if (As<std::string>(*w, "stft.window") != "sqrt_hann")
        throw ConfigError("config field 'stft.window': only 'sqrt_hann' is supported");
  }

  if (const json* e = Find(j, "estimator")) {
    CheckKeys(*e, "estimator", {"kind", "degradation", "seed"});
    if (const json* k = Find(*e, "kind")) c.estimator.kind = ParseEstimatorKind(As<std::string>(*k, "estimator.kind"));
    Read(*e, "degradation", "estimator.", c.estimator.degradation);
    if (const json* sd = Find(*e, "seed")) {
      c.estimator.seed = As<std::uint64_t>(*sd, "estimator.seed");
      c.estimator_seed_set = true;
    }
  }

  if (const json* a = Find(j, "algorithm")) {
    CheckKeys(*a, "algorithm", {"name", "k", "k1", "k2", "p", "alpha", "alpha1", "alpha2", "sigma",
                                "lambda_floor", "init"});
    if (const json* n = Find(*a, "name")) c.algorithm.algorithm = ParseAlgorithm(As<std::string>(*n, "algorithm.name"));
    auto& kp = c.algorithm.kpfcp;
    auto& fc = c.algorithm.fcp;
    Read(*a, "k1", "algorithm.", kp.k1);
    Read(*a, "k2", "algorithm.", kp.k2);
    Read(*a, "p", "algorithm.", kp.p);
    fc.k = kp.k1 * kp.k2;
    Read(*a, "k", "algorithm.", fc.k);
    Read(*a, "alpha", "algorithm.", fc.alpha);
    kp.alpha1 = kp.alpha2 = fc.alpha;
    Read(*a, "alpha1", "algorithm.", kp.alpha1);
    Read(*a, "alpha2", "algorithm.", kp.alpha2);
    Read(*a, "sigma", "algorithm.", fc.sigma);
    kp.sigma = fc.sigma;
    Read(*a, "lambda_floor", "algorithm.", fc.lambda_floor);
    kp.lambda_floor = fc.lambda_floor;
    if (const json* i = Find(*a, "init")) {
      const auto init = As<std::string>(*i, "algorithm.init");
      if (init == "lag_select")
        kp.init = KpInit::kLagSelect;
      else if (init == "leading_block_only")
        kp.init = KpInit::kLeadingBlockOnly;
      else
        throw ConfigError("config field 'algorithm.init': expected 'lag_select' or 'leading_block_only'");
    }
  }

  if (const json* m = Find(j, "metrics")) {
    CheckKeys(*m, "metrics", {"enabled", "csv", "json"});
    Read(*m, "enabled", "metrics.", c.metrics);
    if (const json* v = Find(*m, "csv")) c.metrics_csv = As<std::string>(*v, "metrics.csv");
    if (const json* v = Find(*m, "json")) c.metrics_json = As<std::string>(*v, "metrics.json");
  }
  return c;
}

inline void Validate(const ExperimentConfig& c) {
  try {
    Validate(c.stft);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'stft': ") + e.what());
  }
  try {
    Validate(c.estimator);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'estimator': ") + e.what());
  }
  try {
    Validate(c.algorithm);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'algorithm': ") + e.what());
  }
  if (c.source == InputSource::kSynthetic) {
    Require(c.synthetic.duration_s > 0, "config field 'input.duration_s': must be positive");
    if (c.estimator.kind == EstimatorKind::kExternal)
      throw ConfigError("config field 'estimator.kind': external estimates require wav input");
  } else {
    if (c.metrics && !c.wav.direct_truth)
      throw ConfigError("metrics require reference: set input.direct_truth or disable metrics");
    if (c.estimator.kind == EstimatorKind::kOracle && !c.wav.direct_truth)
      throw ConfigError("config field 'estimator.kind': oracle estimator requires input.direct_truth");
    if (c.estimator.kind == EstimatorKind::kExternal && !c.wav.estimate)
      throw ConfigError("config field 'input.estimate': required by the external estimator");
  }
}

/// Derives the sub-seeds from the master seed.
inline std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Fills every value left to the seed, so the result reruns bit-exactly.
inline ExperimentConfig Resolve(ExperimentConfig c) {
  if (c.source == InputSource::kSynthetic) {
    auto& s = c.synthetic;
    if (!s.scene) {
      std::mt19937_64 rng(SubSeed(c.seed, 0));
      s.scene = room::SampleScene(rng, s.t60);
    } else if (s.t60) {
      s.scene->t60 = *s.t60;
    }
    s.t60.reset();
    if (!s.speech_seed && !s.clean_wav) s.speech_seed = SubSeed(c.seed, 1);
    if (!s.noise_seed) s.noise_seed = SubSeed(c.seed, 2);
  }
  if (!c.estimator_seed_set) {
    c.estimator.seed = SubSeed(c.seed, 3);
    c.estimator_seed_set = true;
  }
  return c;
}

inline json ToJson(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["instrument_macs"] = c.instrument_macs;
  j["out_dir"] = c.out_dir;
  json in;
  if (c.source == InputSource::kSynthetic) {
    const auto& s = c.synthetic;
    in["source"] = "synthetic";
    if (s.scene) {
      in["scene"] = {{"room_dims", s.scene->room_dims},
                     {"source_pos", s.scene->source_pos},
                     {"mic_pos", s.scene->mic_pos},
                     {"t60", s.scene->t60},
                     {"sound_speed", s.scene->sound_speed}};
    }
    if (s.t60) in["t60"] = *s.t60;
    in["duration_s"] = s.duration_s;
    if (s.clean_wav) in["clean_wav"] = *s.clean_wav;
    if (s.speech_seed) in["speech_seed"] = *s.speech_seed;
    if (s.noise_seed) in["noise_seed"] = *s.noise_seed;
  } else {
    in["source"] = "wav";
    in["observed"] = c.wav.observed;
    if (c.wav.direct_truth) in["direct_truth"] = *c.wav.direct_truth;
    if (c.wav.estimate) in["estimate"] = *c.wav.estimate;
  }
  if (std::isfinite(c.synthetic.snr_db))
    in["snr_db"] = c.synthetic.snr_db;
  else
    in["snr_db"] = nullptr;
  j["input"] = in;
  j["stft"] = {{"frame_size", c.stft.frame_size}, {"hop", c.stft.hop}, {"window", "sqrt_hann"}};
  j["estimator"] = {{"kind", ToString(c.estimator.kind)}, {"degradation", c.estimator.degradation}};
  if (c.estimator_seed_set) j["estimator"]["seed"] = c.estimator.seed;
  const auto& kp = c.algorithm.kpfcp;
  const auto& fc = c.algorithm.fcp;
  j["algorithm"] = {{"name", ToString(c.algorithm.algorithm)},
                    {"k", fc.k},
                    {"k1", kp.k1},
                    {"k2", kp.k2},
                    {"p", kp.p},
                    {"alpha", fc.alpha},
                    {"alpha1", kp.alpha1},
                    {"alpha2", kp.alpha2},
                    {"sigma", fc.sigma},
                    {"lambda_floor", fc.lambda_floor},
                    {"init", kp.init == KpInit::kLagSelect ? "lag_select" : "leading_block_only"}};
  j["metrics"] = {{"enabled", c.metrics}};
  if (c.metrics_csv) j["metrics"]["csv"] = *c.metrics_csv;
  if (c.metrics_json) j["metrics"]["json"] = *c.metrics_json;
  return j;
}

// ---------------------------------------------------------------------------

struct PreparedInputs {
  SampleBuffer observed;
  std::optional<SampleBuffer> direct_truth;
  TFGrid observed_tf;
  TFGrid estimate_tf;
};

inline PreparedInputs Prepare(const ExperimentConfig& c) {
  PreparedInputs in;
  std::optional<TFGrid> truth_tf, external_tf;
  if (c.source == InputSource::kSynthetic) {
    const auto& s = c.synthetic;
    Require(s.scene.has_value(), "synthetic input requires a resolved scene");
    const SampleBuffer clean = s.clean_wav ? wav::Read(*s.clean_wav)
                                           : speech::SyntheticUtterance(s.duration_s, *s.speech_seed);
    const room::Rir rir = room::ImageMethod(*s.scene);
    auto rendered = room::RenderScene(clean, rir, s.snr_db, *s.noise_seed);
    in.observed = std::move(rendered.observed);
    in.direct_truth = std::move(rendered.direct_truth);
  } else {
    in.observed = wav::Read(c.wav.observed);
    if (c.wav.direct_truth) in.direct_truth = wav::Read(*c.wav.direct_truth);
    if (c.wav.estimate) {
      SampleBuffer est = wav::Read(*c.wav.estimate);
      est.samples.resize(in.observed.size(), 0.0);
      external_tf = Analyze(est, c.stft);
    }
  }
  if (in.direct_truth) {
    in.direct_truth->samples.resize(in.observed.size(), 0.0);
    truth_tf = Analyze(*in.direct_truth, c.stft);
  }
  in.observed_tf = Analyze(in.observed, c.stft);
  in.estimate_tf = Estimate(c.estimator, in.observed_tf, truth_tf ? &*truth_tf : nullptr,
                            external_tf ? &*external_tf : nullptr);
  return in;
}

struct ComplexityRecord {
  std::uint64_t model_macs_per_tf_unit = 0;
  std::uint64_t dnn_macs_per_tf_unit = complexity::kDnnMacsPerTfUnit;
  std::optional<double> measured_macs_per_tf_unit;
  double seconds = 0.0;
};

struct ExperimentResult {
  SampleBuffer output;  // before the clip-safe gain
  double output_gain = 1.0;
  std::optional<metrics::MetricsReport> report;
  ComplexityRecord complexity;
  json manifest;
};

inline ExperimentResult Process(const ExperimentConfig& c, const PreparedInputs& in) {
  ExperimentResult r;
  const ProcessOptions opt{c.threads};
  r.complexity.model_macs_per_tf_unit = complexity::ModelMacs(c.algorithm);
  const auto start = std::chrono::steady_clock::now();
  TFGrid out_tf;
  if (c.instrument_macs) {
    auto m = complexity::MeasureMacs(c.algorithm, in.observed_tf, in.estimate_tf, {true, opt});
    out_tf = std::move(m.output);
    r.complexity.measured_macs_per_tf_unit = m.macs_per_tf_unit;
  } else {
    out_tf = Dereverberate(c.algorithm, in.observed_tf, in.estimate_tf, opt);
  }
  r.complexity.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.output = Synthesize(out_tf, in.observed.sample_rate);
  r.output_gain = wav::ClipSafeGain(r.output);
  if (c.metrics) {
    Require(in.direct_truth.has_value(), "metrics require reference");
    r.report = metrics::Evaluate(*in.direct_truth, in.observed, r.output);
  }
  r.manifest = ToJson(c);
  r.manifest["run_record"] = {{"output_gain", r.output_gain}};
  return r;
}

inline ExperimentResult Run(const ExperimentConfig& config) {
  Validate(config);
  const ExperimentConfig c = Resolve(config);
  return Process(c, Prepare(c));
}

// ---------------------------------------------------------------------------
// Serialization of reports.

inline json ToJson(const metrics::MetricsReport& r) {
  json j;
  j["fwsnr_db"] = r.fwsnr_db;
  j["observed_fwsnr_db"] = r.observed_fwsnr_db;
  j["delta_fwsnr_db"] = r.delta_fwsnr_db;
  j["pesq"] = r.pesq ? json(*r.pesq) : json(nullptr);
  j["observed_pesq"] = r.observed_pesq ? json(*r.observed_pesq) : json(nullptr);
  json seg = json::array();
  for (std::size_t i = 0; i < r.per_segment.size(); ++i)
    seg.push_back({{"time_s", r.per_segment[i].time_s},
                   {"fwsnr_db", r.per_segment[i].value_db},
                   {"smoothed_db", r.smoothed[i].value_db}});
  j["segments"] = seg;
  return j;
}

inline std::string ToCsv(const metrics::MetricsReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "time_s,fwsnr_db,smoothed_db\n";
  for (std::size_t i = 0; i < r.per_segment.size(); ++i)
    os << r.per_segment[i].time_s << ',' << r.per_segment[i].value_db << ','
       << r.smoothed[i].value_db << '\n';
  return os.str();
}

inline json ToJson(const ComplexityRecord& c) {
  json j;
  j["model_macs_per_tf_unit"] = c.model_macs_per_tf_unit;
  j["dnn_macs_per_tf_unit"] = c.dnn_macs_per_tf_unit;
  j["measured_macs_per_tf_unit"] =
      c.measured_macs_per_tf_unit ? json(*c.measured_macs_per_tf_unit) : json(nullptr);
  j["seconds"] = c.seconds;
  return j;
}

inline void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), "cannot write " + path.string());
  out << text;
}

struct OutputPaths {
  std::filesystem::path audio, manifest, complexity, metrics_json, metrics_csv;
};

/// Writes audio, manifest, complexity record and (if present) metrics.
/// The complexity record carries wall-clock time and is not part of the
/// bit-exact outputs.
inline OutputPaths WriteOutputs(const ExperimentConfig& c, ExperimentResult& r,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  OutputPaths p;
  p.audio = dir / "dereverberated.wav";
  p.manifest = dir / "manifest.json";
  p.complexity = dir / "complexity.json";
  p.metrics_json = c.metrics_json ? std::filesystem::path(*c.metrics_json) : dir / "metrics.json";
  p.metrics_csv = c.metrics_csv ? std::filesystem::path(*c.metrics_csv) : dir / "metrics.csv";

  SampleBuffer scaled = r.output;
  for (double& v : scaled.samples) v *= r.output_gain;
  wav::Write(p.audio.string(), scaled);
  if (r.report) {
    WriteText(p.metrics_json, ToJson(*r.report).dump(2) + "\n");
    WriteText(p.metrics_csv, ToCsv(*r.report));
  }
  r.manifest["run_record"]["outputs"] = {{"audio", p.audio.string()},
                                         {"metrics_json", r.report ? json(p.metrics_json.string()) : json(nullptr)},
                                         {"metrics_csv", r.report ? json(p.metrics_csv.string()) : json(nullptr)}};
  WriteText(p.manifest, r.manifest.dump(2) + "\n");
  WriteText(p.complexity, ToJson(r.complexity).dump(2) + "\n");
  return p;
}

}  // namespace kpfcp::experiment

#endif  // KPFCP_EXPERIMENT_HPP
