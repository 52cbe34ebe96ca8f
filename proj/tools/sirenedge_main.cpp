// sirenedge: run the detector on a clip or live source, evaluate logs,
// probe a backend's minimum input, generate test sirens, and drive the
// scheduler and pruning kernels.
//
// Every flag can also come from the environment (SIRENEDGE_<FLAG>, dashes as
// underscores) or from a key=value config file given with --config or
// SIRENEDGE_CONFIG. Precedence: flag > environment > file > default.

#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sirenedge/annotations.hpp"
#include "sirenedge/classify.hpp"
#include "sirenedge/engine.hpp"
#include "sirenedge/error.hpp"
#include "sirenedge/framing.hpp"
#include "sirenedge/metrics.hpp"
#include "sirenedge/modelmath.hpp"
#include "sirenedge/sebf.hpp"
#include "sirenedge/session_log.hpp"
#include "sirenedge/synth.hpp"
#include "sirenedge/telemetry.hpp"
#include "sirenedge/wav.hpp"

namespace fs = std::filesystem;
using namespace sirenedge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendError:
    case ErrorCode::BackendTimeout:
    case ErrorCode::ProtocolError:
    case ErrorCode::NoValidSize:
    case ErrorCode::InputTooShort:
      return kExitBackend;
    default:
      return kExitConfig;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Config file: `key = value` lines, optional [subcommand] sections, # or ;
// comments. Keys are long flag names without the leading dashes.
using ConfigEntries = std::vector<std::tuple<std::string, std::string, std::string, int>>;  // section, key, value, line

ConfigEntries read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path.string());
  ConfigEntries entries;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    entries.emplace_back(section, key, value, lineno);
  }
  return entries;
}

std::optional<std::string> config_path_from(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("SIRENEDGE_CONFIG"); env && *env) return std::string(env);
  return std::nullopt;
}

// CLI11 would rank a config file above the environment, so file values are
// installed as option defaults instead; flags and env vars then override them.
void apply_config_defaults(CLI::App& app, const fs::path& path) {
  for (const auto& [section, key, value, line] : read_config_file(path)) {
    bool used = false;
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      if (!section.empty() && sub->get_name() != section) continue;
      if (CLI::Option* opt = sub->get_option_no_throw("--" + key)) {
        opt->default_val(value);
        used = true;
      }
    }
    if (!used)
      throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(line) + ": unknown key '" + key + "'" +
                                              (section.empty() ? "" : " in [" + section + "]"));
  }
}

void bind_environment(CLI::App& app) {
  std::vector<CLI::App*> apps{&app};
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) apps.push_back(sub);
  for (CLI::App* a : apps) {
    for (CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "help-all") continue;
      std::string env = "SIRENEDGE_";
      for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      opt->envname(env);
    }
  }
}

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "Inf") return kInfiniteSnr;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "snr must be a number of dB or 'inf', got '" + text + "'");
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string input;
  bool live = false;
  std::string backend = "dsp";
  double growth = 0.0;
  double growth_threshold = 0.6;
  double threshold = 0.5;
  std::size_t window = 3;
  std::size_t consecutive = 3;
  std::size_t release = 0;
  std::size_t min_frame = 0;
  std::size_t hop = 0;
  double max_frame = 10.0;
  double chunk = 0.1;
  int rate = kDefaultSampleRate;
  std::string listen;
  std::string log;
  std::string clip_id;
  bool simulate = false;
  int timeout_ms = 2000;
};

std::unique_ptr<Backend> build_backend(const std::string& spec, int rate, int timeout_ms) {
  if (spec == "dsp") {
    DspDetectorConfig cfg;
    cfg.sample_rate_hz = rate;
    return std::make_unique<DspBackend>(cfg);
  }
  ExternalBackendOptions options;
  options.timeout = std::chrono::milliseconds(timeout_ms);
  return make_backend(spec, options);
}

int cmd_run(const RunArgs& a) {
  if (a.input.empty() && !a.live) throw Error(ErrorCode::ConfigError, "--input is required unless --live is given");
  AudioClip clip;
  clip.sample_rate_hz = a.rate;
  if (!a.input.empty()) {
    clip = load_wav(a.input);
    if (clip.sample_rate_hz != a.rate) clip = resample_linear(clip, a.rate);
  }
  auto backend = build_backend(a.backend, a.rate, a.timeout_ms);

  SessionConfig cfg;
  cfg.sample_rate_hz = a.rate;
  cfg.realtime = a.live || !a.simulate;
  cfg.chunk_s = a.chunk;
  cfg.frame_policy.growth_step_s = a.growth;
  cfg.frame_policy.growth_threshold = a.growth_threshold;
  cfg.frame_policy.max_frame_s = a.max_frame;
  cfg.frame_policy.hop_samples = a.hop;
  cfg.buffer_capacity_s = std::max(cfg.buffer_capacity_s, a.max_frame);
  cfg.frame_policy.min_frame_samples = a.min_frame != 0 ? a.min_frame : std::max<std::size_t>(9919, backend->min_input_samples());
  cfg.decision.event_threshold = a.threshold;
  cfg.decision.smoothing_window = a.window;
  cfg.decision.consecutive_required = a.consecutive;
  cfg.decision.release_required = a.release;

  std::unique_ptr<TelemetryServer> server;
  if (!a.listen.empty()) {
    TelemetryOptions topts;
    topts.listen = a.listen;
    server = std::make_unique<TelemetryServer>(topts);
    std::cerr << "telemetry on ws://" << parse_listen_address(a.listen).first << ":" << server->port() << "/ws\n";
  }
  const double clip_duration = clip.duration_s();
  auto source = std::make_shared<ClipSource>(std::move(clip), a.live);
  Session session(cfg, source, *backend, server.get());
  if (server) server->attach(&session);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done.load()) {
      if (g_interrupted.load()) {
        session.shutdown();
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  SessionResult result;
  try {
    session.start();
    result = session.wait();
  } catch (...) {
    done = true;
    watcher.join();
    if (server) server->stop();
    throw;
  }
  done = true;
  watcher.join();
  if (server) server->stop();

  if (!a.log.empty()) {
    SessionInfo info;
    info.clip_id = !a.clip_id.empty() ? a.clip_id : (a.input.empty() ? "live" : fs::path(a.input).stem().string());
    info.sample_rate_hz = a.rate;
    info.duration_s = a.live ? result.processed_audio_s : clip_duration;
    write_session_log(result.records, result.events, a.log, info);
  }
  std::printf("records=%zu events=%zu frames=%llu/%llu rtf=%.3f\n", result.records.size(), result.events.size(),
              static_cast<unsigned long long>(result.frames_succeeded),
              static_cast<unsigned long long>(result.frames_attempted), result.realtime_factor);
  for (const auto& e : result.events)
    std::printf("event onset=%.3f offset=%.3f peak=%.3f frames=%zu\n", e.onset_s, e.offset_s, e.peak_p, e.n_frames);
  if (result.error_code) {
    std::cerr << "error: " << result.error << "\n";
    return exit_code_for(*result.error_code);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> logs;
  std::string ref;
  bool ftp_filter = false;
  double resolution = 0.1;
  double collar = kDefaultCollar;
  double offset_ratio = kDefaultOffsetRatio;
  double fp_threshold = 0.6;
  std::size_t min_run = 3;
  std::string json_out;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<EvalClip> clips;
  for (const auto& path : a.logs) {
    const SessionLog log = read_session_log(path);
    EvalClip c;
    c.clip_id = log.info ? log.info->clip_id : fs::path(path).stem().string();
    c.records = log.records;
    c.events = log.events;
    if (log.info && log.info->duration_s > 0.0) {
      c.duration_s = log.info->duration_s;
    } else {
      const int sr = log.info ? log.info->sample_rate_hz : kDefaultSampleRate;
      for (const auto& r : log.records)
        c.duration_s = std::max(c.duration_s, r.t_start_s + static_cast<double>(r.frame_len_samples) / sr);
      for (const auto& e : log.events) c.duration_s = std::max(c.duration_s, e.offset_s);
    }
    clips.push_back(std::move(c));
  }
  const auto refs = read_annotations(fs::path(a.ref));
  EvalOptions o;
  o.resolution_s = a.resolution;
  o.collar_s = a.collar;
  o.offset_ratio = a.offset_ratio;
  o.fp_threshold = a.fp_threshold;
  o.min_run = a.min_run;
  o.ftp_filter = a.ftp_filter;
  const auto report = evaluate(clips, refs, o);
  std::cout << format_report(report);
  if (!a.json_out.empty()) {
    std::ofstream out(a.json_out, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + a.json_out);
    out << report.dump(2) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- minsize

struct MinsizeArgs {
  std::string backend;
  std::size_t lo = 1;
  std::size_t hi = 320000;
  int rate = kDefaultSampleRate;
  int timeout_ms = 2000;
};

int cmd_minsize(const MinsizeArgs& a) {
  std::size_t size = 0;
  if (a.backend == "dsp") {
    size = build_backend(a.backend, a.rate, a.timeout_ms)->min_input_samples();
  } else {
    ExternalBackendOptions options;
    options.timeout = std::chrono::milliseconds(a.timeout_ms);
    options.probe_lo = a.lo;
    options.probe_hi = a.hi;
    ExternalBackend backend(ExternalEndpoint::parse(a.backend), options);
    size = backend.min_input_samples();
    std::cerr << backend.probes_used() << " probes\n";
  }
  std::printf("%zu samples (%.2f ms @ %d Hz)\n", size, 1000.0 * static_cast<double>(size) / a.rate, a.rate);
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind = "wail";
  double duration = 10.0;
  std::string snr = "20";
  std::string out;
  std::uint64_t seed = 42;
  int rate = kDefaultSampleRate;
  double lead = 0.0;
  double tail = 0.0;
  double f_low = 700.0;
  double f_high = 1500.0;
  double period = 0.0;
  double amplitude = 0.5;
  bool float32 = false;
  std::string annotations;
};

int cmd_synth(const SynthArgs& a) {
  SceneSpec scene;
  scene.siren = a.kind == "yelp" ? SirenSpec::yelp(a.duration, a.seed) : SirenSpec::wail(a.duration, a.seed);
  scene.siren.f_low_hz = a.f_low;
  scene.siren.f_high_hz = a.f_high;
  scene.siren.period_s = a.period;
  scene.siren.amplitude = a.amplitude;
  scene.lead_s = a.lead;
  scene.tail_s = a.tail;
  scene.snr_db = parse_snr(a.snr);
  scene.noise_seed = a.seed + 1;
  const Scene s = compose_scene(scene, a.rate);
  write_wav(a.out, s.clip, a.float32 ? WavEncoding::Float32 : WavEncoding::Pcm16);
  if (!a.annotations.empty())
    write_annotations({GroundTruthEvent{fs::path(a.out).stem().string(), s.onset_s, s.offset_s, false}}, a.annotations);
  std::printf("wrote %s (%.3f s, siren %.3f-%.3f s)\n", a.out.c_str(), s.clip.duration_s(), s.onset_s, s.offset_s);
  return kExitOk;
}

// ---------------------------------------------------------------- sched / prune

struct SchedArgs {
  SchedulerConfig cfg;
  std::uint64_t steps = 300;
  std::string csv;
};

int cmd_sched(const SchedArgs& a) {
  a.cfg.validate();
  std::ofstream file;
  if (!a.csv.empty()) {
    file.open(a.csv, std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + a.csv);
  }
  std::ostream& out = a.csv.empty() ? std::cout : file;
  out << "step,lr\n";
  char buf[64];
  for (std::uint64_t t = 0; t < a.steps; ++t) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g\n", static_cast<unsigned long long>(t), lr_at_step(a.cfg, t));
    out << buf;
  }
  return kExitOk;
}

struct PruneArgs {
  std::string bank;
  double keep = 0.5;
  std::string method = "opnorm";
  double tol = 1e-3;
  std::string out;
};

int cmd_prune(const PruneArgs& a) {
  const SebfArray array = read_sebf(a.bank);
  std::vector<double> scores;
  if (a.method == "opnorm") {
    scores = operator_norm_salience(filter_bank_from(array));
  } else {
    // One response matrix per filter; fewer significant singular values
    // means a more redundant filter.
    for (const Map& r : response_matrices_from(array))
      scores.push_back(static_cast<double>(significant_sv_count(zscore_columns(r), a.tol)));
  }
  const auto mask = prune_mask(scores, a.keep);
  nlohmann::ordered_json report;
  report["method"] = a.method;
  report["keep_fraction"] = a.keep;
  report["scores"] = scores;
  report["mask"] = mask;
  const std::string text = report.dump(2);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + a.out);
    out << text << "\n";
  }
  std::cout << text << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time emergency-vehicle siren detection engine"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "key=value config file (flags and env vars override it)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a detection session on a clip or live source");
  run_cmd->add_option("--input", run.input, "WAV clip to play through the detector");
  run_cmd->add_flag("--live", run.live, "Keep the session open after the clip; accept load_clip commands");
  run_cmd->add_option("--backend", run.backend, "dsp | external:CMD | tcp:HOST:PORT")->capture_default_str();
  run_cmd->add_option("--growth", run.growth, "Frame growth step in seconds (0 disables growth)")->capture_default_str();
  run_cmd->add_option("--growth-threshold", run.growth_threshold, "Raw probability above which frames grow")->capture_default_str();
  run_cmd->add_option("--threshold", run.threshold, "Event decision threshold on the smoothed probability")->capture_default_str();
  run_cmd->add_option("--window", run.window, "Moving-average smoothing window (frames)")->capture_default_str();
  run_cmd->add_option("--consecutive", run.consecutive, "Frames at or above threshold needed for an onset")->capture_default_str();
  run_cmd->add_option("--release", run.release, "Frames below threshold needed for an offset (0 = same as --consecutive)")->capture_default_str();
  run_cmd->add_option("--min-frame", run.min_frame, "Minimum frame in samples (0 = max(9919, backend minimum))")->capture_default_str();
  run_cmd->add_option("--hop", run.hop, "Hop in samples (0 = minimum frame)")->capture_default_str();
  run_cmd->add_option("--max-frame", run.max_frame, "Maximum frame length in seconds")->capture_default_str();
  run_cmd->add_option("--chunk", run.chunk, "Producer chunk length in seconds")->capture_default_str();
  run_cmd->add_option("--rate", run.rate, "Session sample rate; input is resampled to it")->capture_default_str();
  run_cmd->add_option("--listen", run.listen, std::string("Serve telemetry on HOST:PORT (e.g. ") + kDefaultListen + ")");
  run_cmd->add_option("--log", run.log, "Write the JSONL session log here");
  run_cmd->add_option("--clip-id", run.clip_id, "Clip id recorded in the log (default: input file stem)");
  run_cmd->add_flag("--simulate", run.simulate, "Process as fast as possible in lockstep (reproducible)");
  run_cmd->add_option("--timeout-ms", run.timeout_ms, "External backend response timeout")->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score session logs against reference annotations");
  eval_cmd->add_option("--log", ev.logs, "Session log (repeatable)")->required();
  eval_cmd->add_option("--ref", ev.ref, "Annotation CSV (clip_id,onset_s,offset_s,ftp)")->required();
  eval_cmd->add_flag("--ftp-filter", ev.ftp_filter, "Also report metrics with FTP-flagged annotations removed");
  eval_cmd->add_option("--resolution", ev.resolution, "Frame grid resolution in seconds")->capture_default_str();
  eval_cmd->add_option("--collar", ev.collar, "Onset collar in seconds")->capture_default_str();
  eval_cmd->add_option("--offset-ratio", ev.offset_ratio, "Offset tolerance as a fraction of the reference duration")->capture_default_str();
  eval_cmd->add_option("--fp-threshold", ev.fp_threshold, "Raw probability above which a frame can be a false positive")->capture_default_str();
  eval_cmd->add_option("--min-run", ev.min_run, "Minimum run of FP frames forming an FP event")->capture_default_str();
  eval_cmd->add_option("--json", ev.json_out, "Write the JSON report here");

  MinsizeArgs ms;
  auto* minsize_cmd = app.add_subcommand("minsize", "Binary-search a backend's minimum valid input size");
  minsize_cmd->add_option("--backend", ms.backend, "dsp | external:CMD | tcp:HOST:PORT")->required();
  minsize_cmd->add_option("--lo", ms.lo, "Lower bound of the search")->capture_default_str();
  minsize_cmd->add_option("--hi", ms.hi, "Upper bound of the search")->capture_default_str();
  minsize_cmd->add_option("--rate", ms.rate, "Sample rate used to report milliseconds")->capture_default_str();
  minsize_cmd->add_option("--timeout-ms", ms.timeout_ms, "Backend response timeout")->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a siren clip mixed with white noise");
  synth_cmd->add_option("--kind", sy.kind, "wail | yelp")->check(CLI::IsMember({"wail", "yelp"}))->capture_default_str();
  synth_cmd->add_option("--duration", sy.duration, "Siren duration in seconds")->capture_default_str();
  synth_cmd->add_option("--snr", sy.snr, "Siren-to-noise ratio in dB, or inf for no noise")->capture_default_str();
  synth_cmd->add_option("--out", sy.out, "Output WAV")->required();
  synth_cmd->add_option("--seed", sy.seed, "Seed for siren phase and noise")->capture_default_str();
  synth_cmd->add_option("--rate", sy.rate, "Sample rate")->capture_default_str();
  synth_cmd->add_option("--lead", sy.lead, "Noise-only seconds before the siren")->capture_default_str();
  synth_cmd->add_option("--tail", sy.tail, "Noise-only seconds after the siren")->capture_default_str();
  synth_cmd->add_option("--f-low", sy.f_low, "Lowest siren frequency (Hz)")->capture_default_str();
  synth_cmd->add_option("--f-high", sy.f_high, "Highest siren frequency (Hz)")->capture_default_str();
  synth_cmd->add_option("--period", sy.period, "Modulation period in seconds (0 = 5 for wail, 0.5 for yelp)")->capture_default_str();
  synth_cmd->add_option("--amplitude", sy.amplitude, "Siren peak amplitude")->capture_default_str();
  synth_cmd->add_flag("--float", sy.float32, "Write 32-bit float samples instead of 16-bit PCM");
  synth_cmd->add_option("--annotations", sy.annotations, "Also write the siren interval as an annotation CSV");

  SchedArgs sc;
  auto* sched_cmd = app.add_subcommand("sched", "Print the cyclic cosine-annealing learning-rate schedule");
  sched_cmd->add_option("--eta-init", sc.cfg.eta_init, "Learning rate at cycle restart")->capture_default_str();
  sched_cmd->add_option("--eta-max", sc.cfg.eta_max, "Peak learning rate after warm-up")->capture_default_str();
  sched_cmd->add_option("--eta-min", sc.cfg.eta_min, "Learning rate at cycle end")->capture_default_str();
  sched_cmd->add_option("--t-cycle", sc.cfg.t_cycle, "Steps per cycle")->capture_default_str();
  sched_cmd->add_option("--t-warmup", sc.cfg.t_warmup, "Warm-up steps")->capture_default_str();
  sched_cmd->add_option("--steps", sc.steps, "Number of steps to print")->capture_default_str();
  sched_cmd->add_option("--csv", sc.csv, "Write CSV here instead of stdout");

  PruneArgs pr;
  auto* prune_cmd = app.add_subcommand("prune", "Rank filters by salience and emit a keep mask");
  prune_cmd->add_option("--bank", pr.bank, "SEBF array: [n,c,k,k] filters (opnorm) or [n,p,s] responses (redundancy)")->required();
  prune_cmd->add_option("--keep", pr.keep, "Fraction of filters to keep, in (0,1]")->capture_default_str();
  prune_cmd->add_option("--method", pr.method, "opnorm | redundancy")->check(CLI::IsMember({"opnorm", "redundancy"}))->capture_default_str();
  prune_cmd->add_option("--tol", pr.tol, "Relative singular-value tolerance for redundancy")->capture_default_str();
  prune_cmd->add_option("--out", pr.out, "Also write the JSON report here");

  bind_environment(app);

  try {
    if (const auto path = config_path_from(argc, argv)) apply_config_defaults(app, *path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::Error& e) {
    std::cerr << "error: config file: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*eval_cmd) return cmd_eval(ev);
    if (*minsize_cmd) return cmd_minsize(ms);
    if (*synth_cmd) return cmd_synth(sy);
    if (*sched_cmd) return cmd_sched(sc);
    if (*prune_cmd) return cmd_prune(pr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
