#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spear/detect.hpp"
#include "spear/e2e.hpp"
#include "spear/eval.hpp"
#include "spear/filter.hpp"
#include "spear/metrics.hpp"
#include "spear/nn/dae.hpp"
#include "spear/pipeline.hpp"
#include "spear/signal_io.hpp"
#include "spear/synth.hpp"
#include "spear/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAcceptance = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kFormats = R"(File formats:
  ppgcsv      line 1 `fs=<Hz>`, then one sample per line (9 significant digits).
              Lines starting with '#' after the fs line are comments; outputs use
              them to record the command, config and seed that produced the file.
  mask        same layout as ppgcsv with one 0/1 per line; 1 marks an artifact.
  peaks       one beat time in seconds per line; '#' comment lines allowed.
  checkpoint  JSON {"format":"spear-dae","version":1,"architecture":{...},
              "metadata":{...},"tensors":{name:{"size":n,"data":base64}}} where
              data is little-endian float64; loads back bit-exactly.
  report      JSON. denoise: {segments_total, segments_discarded, fractions,
              discarded, provenance, config}. eval-hr / eval-hrv: {hr_mae |
              sdnn_mae, rmssd_mae, windows_used, windows_dropped, config}.
              e2e: {summary, recordings, training, checks, passed, config}.
Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance failure.)";

std::string command_line(int argc, char** argv) {
  std::ostringstream s;
  for (int i = 0; i < argc; ++i) s << (i ? " " : "") << argv[i];
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

spear::nn::DaeArchitecture architecture(const std::string& name) {
  if (name == "default") return {};
  if (name == "compact") return spear::nn::DaeArchitecture::compact();
  if (name == "wide") return spear::nn::DaeArchitecture::wide();
  if (name == "light") return spear::nn::DaeArchitecture::light();
  throw UsageError("unknown architecture '" + name + "' (expected default|compact|wide|light)");
}

void print_seed(const char* command, std::uint64_t seed) {
  std::cerr << "spear " << command << ": seed " << seed << "\n";
}

std::string with_suffix(const fs::path& p, const std::string& suffix) {
  const std::string s = p.string();
  const std::string ext = ".ppg.csv";
  if (s.size() > ext.size() && s.compare(s.size() - ext.size(), ext.size(), ext) == 0) {
    return s.substr(0, s.size() - ext.size()) + suffix;
  }
  return s + suffix;
}

// ---- synth ----

struct SynthArgs {
  fs::path out_dir = ".";
  std::string name = "synth";
  int count = 1;
  double duration_s = 180.0;
  std::uint64_t seed = 7;
  int bursts = 6;
  spear::e2e::CorpusSpec corpus;
  spear::synth::NoiseSpec noise;
};

int run_synth(const SynthArgs& a, const std::string& cmd) {
  print_seed("synth", a.seed);
  fs::create_directories(a.out_dir);
  const auto corpus = spear::e2e::make_test_corpus(a.count, a.duration_s, a.corpus, a.noise, a.bursts, a.seed);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& rec = corpus[k];
    const std::string stem = a.count == 1 ? a.name : a.name + "_" + rec.id;
    const std::vector<std::string> comments{cmd, "seed=" + std::to_string(a.seed), "recording=" + rec.id};
    const fs::path base = a.out_dir / stem;
    spear::io::write_ppgcsv(base.string() + ".ppg.csv", rec.clean, comments);
    spear::io::write_ppgcsv(base.string() + ".noisy.ppg.csv", rec.noisy, comments);
    spear::io::write_mask(base.string() + ".mask.csv", rec.gt.noise_mask, comments);
    spear::io::write_peaks(base.string() + ".peaks.csv", rec.gt.peak_times_s, comments);
  }
  std::cerr << "wrote " << corpus.size() << " recording(s) to " << a.out_dir << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  fs::path corpus;
  std::string input = "clean";
  std::string detector = "oracle";
  int epochs = 50;
  int batch = 32;
  double lr = 1e-3;
  double val_frac = 0.1;
  std::uint64_t seed = 7;
  std::string arch = "default";
  fs::path save;
  fs::path log;
};

std::vector<spear::Segment> load_clean_segments(const TrainArgs& a) {
  std::vector<fs::path> files;
  const std::string wanted = a.input == "noisy" ? ".noisy.ppg.csv" : ".ppg.csv";
  for (const auto& entry : fs::directory_iterator(a.corpus)) {
    const std::string name = entry.path().filename().string();
    const bool noisy = name.size() > 14 && name.ends_with(".noisy.ppg.csv");
    if (!name.ends_with(wanted)) continue;
    if (a.input == "clean" && noisy) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("empty corpus: no " + wanted + " files in " + a.corpus.string());

  std::vector<spear::Segment> kept;
  std::size_t total = 0;
  for (const auto& f : files) {
    const auto rec = spear::io::read_ppgcsv(f);
    std::unique_ptr<spear::detect::Detector> det;
    if (a.detector == "oracle") {
      spear::BinaryMask mask{std::vector<std::uint8_t>(rec.size(), 0), rec.fs};
      if (a.input == "noisy") {
        const std::string base = f.string().substr(0, f.string().size() - std::string(".noisy.ppg.csv").size());
        mask = spear::io::read_mask(base + ".mask.csv");
      }
      det = spear::detect::make_detector("oracle", &mask);
    } else {
      det = spear::detect::make_detector(a.detector);
    }
    for (auto& seg : spear::segment(rec, spear::kSegmentSeconds, f.filename().string())) {
      ++total;
      seg.signal = spear::normalize_minmax(seg.signal);
      if (spear::detect::is_clean(seg, *det)) kept.push_back(std::move(seg));
    }
  }
  std::cerr << "clean segments: " << kept.size() << " of " << total << "\n";
  if (kept.empty()) throw std::runtime_error("empty corpus: no clean segments");
  return kept;
}

int run_train(const TrainArgs& a, const std::string& cmd) {
  print_seed("train", a.seed);
  if (a.input != "clean" && a.input != "noisy") throw UsageError("--input must be clean or noisy");
  const auto segments = load_clean_segments(a);
  const spear::e2e::StageSeeds seeds(a.seed);

  spear::train::MaskSpec ms;
  ms.seed = seeds.masks;
  // Segments were screened above; the oracle only has to cover the longest source recording.
  std::size_t longest = 0;
  for (const auto& seg : segments) longest = std::max(longest, (seg.index + 1) * seg.signal.size());
  const spear::detect::OracleDetector none(spear::BinaryMask{std::vector<std::uint8_t>(longest, 0),
                                                             segments.front().signal.fs});
  const auto dataset = spear::train::build_dataset(segments, ms, none);

  spear::train::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.lr = a.lr;
  tc.validation_fraction = a.val_frac;
  tc.architecture = architecture(a.arch);
  tc.shuffle_seed = seeds.shuffle;
  tc.init_seed = seeds.init;

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw std::runtime_error("cannot write " + a.log.string());
    log << "# " << cmd << "\n# seed=" << a.seed << "\nepoch,train_rmse,val_rmse,wall_ms\n";
  }
  const auto result = spear::train::train_dae(dataset, tc, [&](const spear::train::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << "/" << tc.epochs << " train_rmse " << e.train_rmse << " val_rmse " << e.val_rmse
              << " (" << static_cast<long>(e.wall_ms) << " ms)\n";
    if (log) log << e.epoch << "," << e.train_rmse << "," << e.val_rmse << "," << e.wall_ms << "\n";
  });

  const json meta = {{"command", cmd},
                     {"seed", a.seed},
                     {"epochs", a.epochs},
                     {"batch_size", a.batch},
                     {"lr", a.lr},
                     {"validation_fraction", a.val_frac},
                     {"segments", segments.size()},
                     {"pairs", dataset.size()},
                     {"best_epoch", result.best_epoch},
                     {"selected", "best_validation"}};
  spear::nn::DaeModel best = result.best_model;
  spear::nn::save_checkpoint(a.save, best, meta.dump());
  spear::nn::DaeModel final_model = result.final_model;
  json final_meta = meta;
  final_meta["selected"] = "final_epoch";
  spear::nn::save_checkpoint(a.save.string() + ".final", final_model, final_meta.dump());
  std::cerr << "saved best-validation model (epoch " << result.best_epoch << ") to " << a.save << " and final model to "
            << a.save.string() << ".final\n";
  return kExitOk;
}

// ---- denoise ----

struct DenoiseArgs {
  fs::path in;
  fs::path model;
  std::string detector = "oracle";
  fs::path mask;
  fs::path out;
  fs::path merged_out;
  fs::path report;
};

int run_denoise(const DenoiseArgs& a, const std::string& cmd) {
  const auto recording = spear::io::read_ppgcsv(a.in);
  const auto model = spear::nn::load_checkpoint(a.model);
  std::unique_ptr<spear::detect::Detector> det;
  if (a.detector == "oracle") {
    if (a.mask.empty()) throw UsageError("--detector oracle needs --mask <mask.csv>");
    const auto mask = spear::io::read_mask(a.mask);
    det = spear::detect::make_detector("oracle", &mask);
  } else {
    det = spear::detect::make_detector(a.detector);
  }
  const auto res = spear::pipeline::spear_denoise(recording, model, *det);
  const std::vector<std::string> comments{cmd, "detector=" + det->name()};
  spear::io::write_ppgcsv(a.out, res.filtered, comments);
  if (!a.merged_out.empty()) spear::io::write_ppgcsv(a.merged_out, res.merged.signal, comments);
  if (!a.report.empty()) {
    json j = spear::eval::to_json(res.report);
    j["config"] = {{"command", cmd}, {"detector", det->name()}, {"model", a.model.string()}};
    write_text(a.report, j.dump(2) + "\n");
  }
  std::cerr << "segments " << res.report.segments_total << ", discarded " << res.report.segments_discarded << "\n";
  return kExitOk;
}

// ---- eval-hr / eval-hrv ----

struct EvalArgs {
  fs::path in;
  fs::path truth;
  fs::path provenance;
  bool bandpass = false;
  double duration_s = 0.0;
  fs::path csv;
  fs::path summary;
};

struct Prepared {
  spear::metrics::BeatSeries est;
  spear::metrics::BeatSeries truth;
  std::vector<spear::TimeInterval> valid;
  double duration_s = 0.0;
};

Prepared prepare_eval(const EvalArgs& a) {
  auto signal = spear::io::read_ppgcsv(a.in);
  if (a.bandpass) signal = spear::filter::bandpass(signal);
  Prepared p;
  p.truth = spear::metrics::BeatSeries::from_peaks(spear::io::read_peaks(a.truth));
  auto beats = spear::metrics::detect_peaks(signal);
  p.duration_s = signal.duration();
  if (!a.provenance.empty()) {
    const json rep = read_json(a.provenance);
    spear::JoinedSignal joined;
    joined.signal = signal;
    for (const auto& r : rep.at("provenance")) {
      joined.provenance.push_back({r.at("out_begin").get<std::size_t>(), r.at("length").get<std::size_t>(),
                                   r.at("segment_index").get<std::size_t>(), r.at("source_t0").get<double>()});
    }
    for (auto& t : beats.peak_times_s) t = spear::to_source_time(joined, t);
    beats = spear::metrics::BeatSeries::from_peaks(std::move(beats.peak_times_s));
    p.valid = spear::source_intervals(joined);
    const auto total = rep.at("segments_total").get<double>();
    p.duration_s = total * spear::kSegmentSeconds;
  }
  if (a.duration_s > 0.0) p.duration_s = a.duration_s;
  p.est = std::move(beats);
  return p;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int run_eval_hr(const EvalArgs& a, const std::string& cmd) {
  const auto p = prepare_eval(a);
  const auto est = spear::metrics::estimate_hr_windows(p.est, p.duration_s, {}, p.valid);
  const auto truth = spear::metrics::estimate_hr_windows(p.truth, p.duration_s);
  std::vector<std::optional<double>> e, t;
  std::ostringstream csv;
  csv << "# " << cmd << "\nt_start,est_bpm,truth_bpm\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    e.push_back(est[i].bpm);
    t.push_back(truth[i].bpm);
    csv << est[i].t_start << "," << (est[i].bpm ? std::to_string(*est[i].bpm) : "") << ","
        << (truth[i].bpm ? std::to_string(*truth[i].bpm) : "") << "\n";
  }
  const auto m = spear::metrics::mae(e, t);
  if (!a.csv.empty()) write_text(a.csv, csv.str());
  const json j = {{"hr_mae", m.value},
                  {"windows_used", m.used},
                  {"windows_dropped", m.dropped},
                  {"config", {{"command", cmd}, {"window_s", 8.0}, {"step_s", 2.0}, {"bandpass", a.bandpass}}}};
  if (!a.summary.empty()) write_text(a.summary, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int run_eval_hrv(const EvalArgs& a, const std::string& cmd) {
  const auto p = prepare_eval(a);
  const auto est = spear::metrics::estimate_hrv_windows(p.est, p.duration_s, {}, p.valid);
  const auto truth = spear::metrics::estimate_hrv_windows(p.truth, p.duration_s);
  std::vector<std::optional<double>> es, ts, er, tr;
  std::ostringstream csv;
  csv << "# " << cmd << "\nt_start,t_end,est_sdnn_ms,truth_sdnn_ms,est_rmssd_ms,truth_rmssd_ms\n";
  auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (std::size_t i = 0; i < est.size(); ++i) {
    es.push_back(est[i].sdnn_ms);
    ts.push_back(truth[i].sdnn_ms);
    er.push_back(est[i].rmssd_ms);
    tr.push_back(truth[i].rmssd_ms);
    csv << est[i].t_start << "," << est[i].t_end << "," << cell(est[i].sdnn_ms) << "," << cell(truth[i].sdnn_ms) << ","
        << cell(est[i].rmssd_ms) << "," << cell(truth[i].rmssd_ms) << "\n";
  }
  const auto sd = spear::metrics::mae(es, ts);
  const auto rm = spear::metrics::mae(er, tr);
  if (!a.csv.empty()) write_text(a.csv, csv.str());
  const json j = {{"sdnn_mae", sd.value},
                  {"rmssd_mae", rm.value},
                  {"windows_used", sd.used},
                  {"windows_dropped", sd.dropped},
                  {"config", {{"command", cmd}, {"window_s", 300.0}, {"overlap_frac", 0.95}, {"bandpass", a.bandpass}}}};
  if (!a.summary.empty()) write_text(a.summary, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

// ---- e2e ----

struct E2eArgs {
  spear::e2e::E2eConfig cfg;
  std::string arch = "light";
  fs::path report;
  bool quiet = false;
};

int run_e2e(E2eArgs a) {
  print_seed("e2e", a.cfg.seed);
  a.cfg.architecture = architecture(a.arch);
  const auto result = spear::e2e::run_e2e(a.cfg, [&](const std::string& msg) {
    if (!a.quiet) std::cerr << msg << "\n";
  });
  const std::string text = result.report.dump(2) + "\n";
  if (!a.report.empty()) {
    write_text(a.report, text);
  } else {
    std::cout << text;
  }
  for (const auto& c : result.checks) std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  return result.passed ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPEAR: self-supervised PPG artifact removal by erase-and-reconstruct"};
  app.footer(kFormats);
  app.require_subcommand(1);
  const std::string cmd = command_line(argc, argv);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate paired clean/noisy synthetic recordings");
  s->add_option("--out-dir", synth.out_dir, "Output directory")->capture_default_str();
  s->add_option("--name", synth.name, "File name stem")->capture_default_str();
  s->add_option("--count", synth.count, "Number of recordings")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--duration", synth.duration_s, "Recording length in seconds (>= 30)")->capture_default_str();
  s->add_option("--seed", synth.seed, "Master seed")->capture_default_str();
  s->add_option("--bursts", synth.bursts, "Artifact bursts per recording")->check(CLI::NonNegativeNumber)->capture_default_str();
  s->add_option("--hr-lo", synth.corpus.hr_lo_bpm, "Lowest base HR (bpm)")->capture_default_str();
  s->add_option("--hr-hi", synth.corpus.hr_hi_bpm, "Highest base HR (bpm)")->capture_default_str();
  s->add_option("--bw-amp", synth.noise.bw_amp, "Baseline wander amplitude")->capture_default_str();
  s->add_option("--bw-freq", synth.noise.bw_freq_hz, "Baseline wander frequency (Hz)")->capture_default_str();
  s->add_option("--fm-jitter", synth.noise.fm_jitter_frac, "Beat timing jitter inside bursts")->capture_default_str();
  s->add_option("--burst-amp", synth.noise.burst_amp, "Peak burst noise amplitude")->capture_default_str();
  s->add_option("--burst-len-lo", synth.noise.burst_len_lo_s, "Shortest burst (s)")->capture_default_str();
  s->add_option("--burst-len-hi", synth.noise.burst_len_hi_s, "Longest burst (s)")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the denoising autoencoder on clean segments of a corpus");
  t->add_option("--corpus", train.corpus, "Directory of ppgcsv recordings")->required()->check(CLI::ExistingDirectory);
  t->add_option("--input", train.input, "Which files to read: clean (*.ppg.csv) or noisy (*.noisy.ppg.csv)")
      ->capture_default_str();
  t->add_option("--detector", train.detector, "Clean-segment selector: oracle|heuristic|external:<path>")
      ->capture_default_str();
  t->add_option("--epochs", train.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--batch", train.batch, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--val-frac", train.val_frac, "Validation fraction of segments")->capture_default_str();
  t->add_option("--seed", train.seed, "Master seed")->capture_default_str();
  t->add_option("--arch", train.arch, "Architecture: default, compact, wide or light")
      ->capture_default_str();
  t->add_option("--save", train.save, "Checkpoint path (best validation; <path>.final holds the last epoch)")
      ->required();
  t->add_option("--log", train.log, "Training log CSV (epoch,train_rmse,val_rmse,wall_ms)");

  DenoiseArgs den;
  auto* d = app.add_subcommand("denoise", "Detect, erase, reconstruct, merge and band-pass one recording");
  d->add_option("--in", den.in, "Noisy ppgcsv")->required()->check(CLI::ExistingFile);
  d->add_option("--model", den.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  d->add_option("--detector", den.detector, "oracle|heuristic|external:<path>")->capture_default_str();
  d->add_option("--mask", den.mask, "Ground-truth mask for the oracle detector")->check(CLI::ExistingFile);
  d->add_option("--out", den.out, "Denoised, band-passed ppgcsv")->required();
  d->add_option("--merged-out", den.merged_out, "Merged signal before band-pass");
  d->add_option("--report", den.report, "Report JSON");

  EvalArgs ev_hr, ev_hrv;
  auto add_eval = [&](CLI::App* sub, EvalArgs& ev) {
    sub->add_option("--in", ev.in, "Signal to score (ppgcsv)")->required()->check(CLI::ExistingFile);
    sub->add_option("--truth", ev.truth, "Ground-truth peaks file")->required()->check(CLI::ExistingFile);
    sub->add_option("--provenance", ev.provenance, "denoise report JSON mapping the signal to recording time")
        ->check(CLI::ExistingFile);
    sub->add_flag("--bandpass", ev.bandpass, "Band-pass the signal before peak detection");
    sub->add_option("--duration", ev.duration_s, "Recording duration in seconds (default: inferred)");
    sub->add_option("--csv", ev.csv, "Per-window CSV output");
    sub->add_option("--summary", ev.summary, "Summary JSON output");
  };
  auto* eh = app.add_subcommand("eval-hr", "HR MAE over 8 s windows with 2 s step");
  add_eval(eh, ev_hr);
  auto* ehv = app.add_subcommand("eval-hrv", "SDNN and RMSSD MAE over 5 min windows with 95% overlap");
  add_eval(ehv, ev_hrv);

  E2eArgs e2e;
  auto* e = app.add_subcommand("e2e", "Synthesize, train, denoise and evaluate; exit 3 if a check fails");
  e->add_option("--seed", e2e.cfg.seed, "Master seed")->capture_default_str();
  e->add_option("--train-segments", e2e.cfg.train_segments, "Clean 30 s training segments")->capture_default_str();
  e->add_option("--test-recordings", e2e.cfg.test_recordings, "Noisy test recordings")->capture_default_str();
  e->add_option("--duration", e2e.cfg.test_duration_s, "Test recording length (s)")->capture_default_str();
  e->add_option("--bursts", e2e.cfg.bursts_per_recording, "Artifact bursts per test recording")->capture_default_str();
  e->add_option("--epochs", e2e.cfg.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--batch", e2e.cfg.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--lr", e2e.cfg.lr, "Adam learning rate")->capture_default_str();
  e->add_option("--arch", e2e.arch, "default|compact|wide|light")->capture_default_str();
  e->add_option("--detector", e2e.cfg.detector, "oracle|heuristic")->capture_default_str();
  e->add_flag("--simnoise", e2e.cfg.simnoise_baseline, "Also train and score the simulated-noise baseline");
  e->add_option("--max-hr-mae", e2e.cfg.max_spear_hr_mae, "Largest acceptable SPEAR HR MAE (bpm)")
      ->capture_default_str();
  e->add_option("--report", e2e.report, "Report JSON (default: stdout)");
  e->add_flag("--quiet", e2e.quiet, "No progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return run_synth(synth, cmd);
    if (t->parsed()) return run_train(train, cmd);
    if (d->parsed()) return run_denoise(den, cmd);
    if (eh->parsed()) return run_eval_hr(ev_hr, cmd);
    if (ehv->parsed()) return run_eval_hrv(ev_hrv, cmd);
    if (e->parsed()) return run_e2e(e2e);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
