// Command line front end: run, sweep-p, sweep-complexity, make-rir.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kpfcp/complexity.hpp"
#include "kpfcp/experiment.hpp"
#include "kpfcp/room.hpp"
#include "kpfcp/wav.hpp"

namespace {

using kpfcp::ConfigError;
using kpfcp::NumericalError;
using nlohmann::json;
namespace ex = kpfcp::experiment;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config;
  std::string algorithm;
  std::optional<int> p, k1, k2;
  std::optional<double> t60, snr;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::string metrics_csv;
  bool instrument_macs = false;
};

void AddRunFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--algorithm", o.algorithm, "fcp | kpfcp")->check(CLI::IsMember({"fcp", "kpfcp"}));
  cmd->add_option("--p", o.p, "Kronecker decomposition order P");
  cmd->add_option("--k1", o.k1, "length of the first short filter");
  cmd->add_option("--k2", o.k2, "length of the second short filter");
  cmd->add_option("--t60", o.t60, "reverberation time of the synthetic scene (s)");
  cmd->add_option("--snr", o.snr, "noise SNR of the synthetic scene (dB)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker threads across frequency bins (0: all cores)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--metrics-csv", o.metrics_csv, "path of the segmental metrics CSV");
  cmd->add_flag("--instrument-macs", o.instrument_macs, "count multiply-accumulates while running");
}

json LoadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// Precedence: flags > config file > defaults.
json MergedConfig(const Overrides& o) {
  json j = o.config.empty() ? json::object() : LoadJson(o.config);
  if (!j.is_object()) throw ConfigError("config root must be an object");
  auto section = [&](const char* key) -> json& {
    if (!j.contains(key)) j[key] = json::object();
    return j[key];
  };
  if (!o.algorithm.empty()) section("algorithm")["name"] = o.algorithm;
  if (o.p) section("algorithm")["p"] = *o.p;
  if (o.k1) section("algorithm")["k1"] = *o.k1;
  if (o.k2) section("algorithm")["k2"] = *o.k2;
  if (o.k1 || o.k2) {
    const int k1 = j["algorithm"].value("k1", 9);
    const int k2 = j["algorithm"].value("k2", 9);
    j["algorithm"]["k"] = k1 * k2;
  }
  if (o.t60) {
    json& in = section("input");
    if (in.contains("scene"))
      in["scene"]["t60"] = *o.t60;
    else
      in["t60"] = *o.t60;
  }
  if (o.snr) section("input")["snr_db"] = *o.snr;
  if (o.seed) {
    j["seed"] = *o.seed;
    // A new master seed re-derives every seed that was only implied by it.
    if (j.contains("run_record")) {
      if (j.contains("input")) {
        j["input"].erase("speech_seed");
        j["input"].erase("noise_seed");
        if (!j["input"].contains("clean_wav")) j["input"].erase("scene");
      }
      if (j.contains("estimator")) j["estimator"].erase("seed");
    }
  }
  if (o.threads) j["threads"] = *o.threads;
  if (!o.out.empty()) j["out_dir"] = o.out;
  if (!o.metrics_csv.empty()) section("metrics")["csv"] = o.metrics_csv;
  if (o.instrument_macs) j["instrument_macs"] = true;
  return j;
}

void PrintSummary(const std::string& label, const ex::ExperimentResult& r) {
  std::cout << label;
  if (r.report) {
    std::printf(" fwsnr=%.3f dB observed=%.3f dB delta=%.3f dB", r.report->fwsnr_db,
                r.report->observed_fwsnr_db, r.report->delta_fwsnr_db);
  }
  std::printf(" model_macs=%llu", static_cast<unsigned long long>(r.complexity.model_macs_per_tf_unit));
  if (r.complexity.measured_macs_per_tf_unit)
    std::printf(" measured_macs=%.1f", *r.complexity.measured_macs_per_tf_unit);
  std::printf(" time=%.2fs\n", r.complexity.seconds);
}

int CmdRun(const Overrides& o) {
  const ex::ExperimentConfig config = ex::ParseConfig(MergedConfig(o));
  ex::Validate(config);
  const ex::ExperimentConfig resolved = ex::Resolve(config);
  const auto inputs = ex::Prepare(resolved);
  auto result = ex::Process(resolved, inputs);
  const auto paths = ex::WriteOutputs(resolved, result, resolved.out_dir);
  PrintSummary(kpfcp::ToString(resolved.algorithm.algorithm), result);
  std::cout << "wrote " << paths.audio.string() << ", " << paths.manifest.string() << '\n';
  return 0;
}

std::vector<int> ParseList(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      values.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("--p-values: '" + item + "' is not an integer");
    }
  }
  return values;
}

int CmdSweepP(const Overrides& o, const std::string& p_values) {
  ex::ExperimentConfig config = ex::ParseConfig(MergedConfig(o));
  config.algorithm.algorithm = kpfcp::Algorithm::kKpfcp;
  const auto ps = ParseList(p_values);
  if (ps.empty()) throw ConfigError("--p-values: empty list");
  for (int p : ps) {
    config.algorithm.kpfcp.p = p;
    ex::Validate(config);
  }
  const ex::ExperimentConfig resolved = ex::Resolve(config);
  const auto inputs = ex::Prepare(resolved);  // one observed signal for every P
  for (int p : ps) {
    ex::ExperimentConfig run = resolved;
    run.algorithm.kpfcp.p = p;
    if (run.metrics_csv) run.metrics_csv = *run.metrics_csv + ".p" + std::to_string(p);
    if (run.metrics_json) run.metrics_json = *run.metrics_json + ".p" + std::to_string(p);
    auto result = ex::Process(run, inputs);
    ex::WriteOutputs(run, result, fs::path(resolved.out_dir) / ("p" + std::to_string(p)));
    PrintSummary("kpfcp P=" + std::to_string(p), result);
  }
  return 0;
}

int CmdSweepComplexity(int k1, int k2, int p_min, int p_max, const std::string& out) {
  const std::string csv = kpfcp::complexity::SweepCsv(kpfcp::complexity::Sweep(k1, k2, p_min, p_max));
  if (out.empty()) {
    std::cout << csv;
  } else {
    ex::WriteText(out, csv);
  }
  return 0;
}

int CmdMakeRir(const Overrides& o) {
  ex::ExperimentConfig config = ex::ParseConfig(MergedConfig(o));
  config.metrics = false;
  const auto resolved = ex::Resolve(config);
  if (resolved.source != ex::InputSource::kSynthetic)
    throw ConfigError("make-rir requires a synthetic scene");
  const auto& scene = *resolved.synthetic.scene;
  const auto rir = kpfcp::room::ImageMethod(scene);

  const fs::path dir = resolved.out_dir;
  fs::create_directories(dir);
  kpfcp::SampleBuffer buf{rir.taps, rir.sample_rate};
  double peak = 0.0;
  for (double v : buf.samples) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0 ? 0.99 / peak : 1.0;
  for (double& v : buf.samples) v *= gain;
  kpfcp::wav::Write((dir / "rir.wav").string(), buf);

  std::vector<float> raw(rir.taps.begin(), rir.taps.end());
  std::ofstream f32(dir / "rir.f32", std::ios::binary);
  f32.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));

  json info = ex::ToJson(resolved)["input"]["scene"];
  info["taps"] = rir.taps.size();
  info["direct_tap"] = rir.direct_tap;
  info["direct_cutoff"] = rir.direct_cutoff;
  info["wav_gain"] = gain;
  info["schroeder_t60"] = kpfcp::room::SchroederT60(rir.taps, rir.sample_rate);
  ex::WriteText(dir / "rir.json", info.dump(2) + "\n");
  std::cout << "rir: " << rir.taps.size() << " taps, direct tap " << rir.direct_tap
            << ", schroeder t60 " << info["schroeder_t60"].get<double>() << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame-online FCP / KP-FCP speech dereverberation"};
  app.require_subcommand(1);

  Overrides run_opts, sweep_opts, rir_opts;
  auto* run = app.add_subcommand("run", "dereverberate one scene or wav input");
  AddRunFlags(run, run_opts);

  auto* sweep_p = app.add_subcommand("sweep-p", "run KP-FCP for several P on one observed signal");
  AddRunFlags(sweep_p, sweep_opts);
  std::string p_values = "3,4,5";
  sweep_p->add_option("--p-values", p_values, "comma-separated P values");

  auto* sweep_c = app.add_subcommand("sweep-complexity", "MACs per TF unit as a function of P (CSV)");
  int k1 = 9, k2 = 9, p_min = 1, p_max = 9;
  std::string sweep_out;
  sweep_c->add_option("--k1", k1);
  sweep_c->add_option("--k2", k2);
  sweep_c->add_option("--p-min", p_min);
  sweep_c->add_option("--p-max", p_max);
  sweep_c->add_option("--out", sweep_out, "CSV path (stdout when absent)");

  auto* make_rir = app.add_subcommand("make-rir", "generate and export a room impulse response");
  make_rir->add_option("--config", rir_opts.config, "JSON experiment config (input.scene)");
  make_rir->add_option("--t60", rir_opts.t60, "reverberation time (s)");
  make_rir->add_option("--seed", rir_opts.seed, "seed for a drawn scene");
  make_rir->add_option("--out", rir_opts.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return CmdRun(run_opts);
    if (*sweep_p) return CmdSweepP(sweep_opts, p_values);
    if (*sweep_c) return CmdSweepComplexity(k1, k2, p_min, p_max, sweep_out);
    if (*make_rir) return CmdMakeRir(rir_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
