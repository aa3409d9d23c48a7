#include "spear/eval.hpp"

#include <algorithm>
#include <stdexcept>

#include "spear/filter.hpp"

namespace spear::eval {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Raw: return "raw";
    case Variant::Bandpass: return "bandpass";
    case Variant::SimNoise: return "simnoise";
    case Variant::Spear: return "spear";
  }
  return "unknown";
}

namespace {

VariantResult score_signal(const Signal& s, double duration_s, const EvalConfig& cfg,
                           const JoinedSignal* joined = nullptr) {
  VariantResult r;
  auto beats = metrics::detect_peaks(s, cfg.peaks);
  std::vector<TimeInterval> valid;
  if (joined != nullptr) {
    for (auto& t : beats.peak_times_s) t = to_source_time(*joined, t);
    beats = metrics::BeatSeries::from_peaks(std::move(beats.peak_times_s));
    valid = source_intervals(*joined);
  }
  r.peaks = beats.peak_times_s.size();
  r.hr = metrics::estimate_hr_windows(beats, duration_s, cfg.hr, valid);
  r.hrv = metrics::estimate_hrv_windows(beats, duration_s, cfg.hrv, valid);
  return r;
}

VariantResult failed(const std::string& what) {
  VariantResult r;
  r.error = what;
  return r;
}

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json mae_json(const std::optional<metrics::MaeResult>& m) {
  if (!m) return nullptr;
  return {{"mae", m->value}, {"windows_used", m->used}, {"windows_dropped", m->dropped}};
}

}  // namespace

RecordingEval eval_recording(const EvalInput& input, const nn::DaeModel& model, const detect::Detector& detector,
                             const nn::DaeModel* simnoise_model, const EvalConfig& cfg) {
  RecordingEval out;
  out.id = input.id;
  out.duration_s = input.noisy.duration();

  const auto truth = metrics::BeatSeries::from_peaks(input.gt.peak_times_s);
  out.truth_hr = metrics::estimate_hr_windows(truth, out.duration_s, cfg.hr);
  out.truth_hrv = metrics::estimate_hrv_windows(truth, out.duration_s, cfg.hrv);

  out.variants[Variant::Raw] = score_signal(normalize_minmax(input.noisy), out.duration_s, cfg);
  out.variants[Variant::Bandpass] = score_signal(filter::bandpass(input.noisy), out.duration_s, cfg);

  if (simnoise_model != nullptr) {
    try {
      const auto res = pipeline::reconstruct_full(input.noisy, *simnoise_model);
      out.variants[Variant::SimNoise] = score_signal(res.filtered, out.duration_s, cfg, &res.merged);
    } catch (const std::runtime_error& e) {
      out.variants[Variant::SimNoise] = failed(e.what());
    }
  }

  try {
    const auto res = pipeline::spear_denoise(input.noisy, model, detector);
    out.variants[Variant::Spear] = score_signal(res.filtered, out.duration_s, cfg, &res.merged);
    out.spear_report = res.report;
  } catch (const std::runtime_error& e) {
    out.variants[Variant::Spear] = failed(e.what());
  }
  return out;
}

CorpusSummary summarize(const std::vector<RecordingEval>& recordings) {
  std::vector<const RecordingEval*> by_id;
  for (const auto& r : recordings) by_id.push_back(&r);
  std::stable_sort(by_id.begin(), by_id.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  std::map<Variant, std::vector<std::optional<double>>> hr_est, hr_truth, sd_est, sd_truth, rm_est, rm_truth;
  for (const auto* rec_ptr : by_id) {
    const auto& rec = *rec_ptr;
    for (const auto& [variant, res] : rec.variants) {
      for (std::size_t i = 0; i < rec.truth_hr.size(); ++i) {
        hr_truth[variant].push_back(rec.truth_hr[i].bpm);
        hr_est[variant].push_back(i < res.hr.size() ? res.hr[i].bpm : std::nullopt);
      }
      for (std::size_t i = 0; i < rec.truth_hrv.size(); ++i) {
        const bool has = i < res.hrv.size();
        sd_truth[variant].push_back(rec.truth_hrv[i].sdnn_ms);
        sd_est[variant].push_back(has ? res.hrv[i].sdnn_ms : std::nullopt);
        rm_truth[variant].push_back(rec.truth_hrv[i].rmssd_ms);
        rm_est[variant].push_back(has ? res.hrv[i].rmssd_ms : std::nullopt);
      }
    }
  }
  auto safe_mae = [](const auto& e, const auto& t) -> std::optional<metrics::MaeResult> {
    try {
      return metrics::mae(e, t);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  };
  CorpusSummary s;
  for (const auto& [variant, est] : hr_est) {
    auto& v = s.variants[variant];
    v.hr = safe_mae(est, hr_truth[variant]);
    v.sdnn = safe_mae(sd_est[variant], sd_truth[variant]);
    v.rmssd = safe_mae(rm_est[variant], rm_truth[variant]);
  }
  return s;
}

nlohmann::json to_json(const pipeline::DenoiseReport& report) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : report.regions) {
    regions.push_back({{"out_begin", r.out_begin}, {"length", r.length}, {"segment_index", r.segment_index},
                       {"source_t0", r.source_t0}});
  }
  std::vector<bool> discarded;
  for (const auto& s : report.segments) discarded.push_back(s.discarded);
  return {{"segments_total", report.segments_total},
          {"segments_discarded", report.segments_discarded},
          {"fractions", report.fractions()},
          {"discarded", discarded},
          {"provenance", regions}};
}

nlohmann::json to_json(const CorpusSummary& summary, const std::vector<RecordingEval>& recordings) {
  nlohmann::json variants = nlohmann::json::object();
  for (const auto& [variant, v] : summary.variants) {
    variants[to_string(variant)] = {{"hr", mae_json(v.hr)}, {"sdnn", mae_json(v.sdnn)}, {"rmssd", mae_json(v.rmssd)}};
  }

  std::vector<const RecordingEval*> sorted;
  for (const auto& r : recordings) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  nlohmann::json recs = nlohmann::json::array();
  for (const auto* rec : sorted) {
    nlohmann::json hr_windows = nlohmann::json::array();
    for (std::size_t i = 0; i < rec->truth_hr.size(); ++i) {
      nlohmann::json w = {{"t_start", rec->truth_hr[i].t_start}, {"truth", opt(rec->truth_hr[i].bpm)}};
      for (const auto& [variant, res] : rec->variants) {
        w[to_string(variant)] = i < res.hr.size() ? opt(res.hr[i].bpm) : nlohmann::json(nullptr);
      }
      hr_windows.push_back(std::move(w));
    }
    nlohmann::json hrv_windows = nlohmann::json::array();
    for (std::size_t i = 0; i < rec->truth_hrv.size(); ++i) {
      const auto& t = rec->truth_hrv[i];
      nlohmann::json w = {{"t_start", t.t_start},
                          {"t_end", t.t_end},
                          {"truth", {{"sdnn", opt(t.sdnn_ms)}, {"rmssd", opt(t.rmssd_ms)}}}};
      for (const auto& [variant, res] : rec->variants) {
        if (i < res.hrv.size()) {
          w[to_string(variant)] = {{"sdnn", opt(res.hrv[i].sdnn_ms)},
                                   {"rmssd", opt(res.hrv[i].rmssd_ms)},
                                   {"intervals", res.hrv[i].intervals}};
        } else {
          w[to_string(variant)] = nullptr;
        }
      }
      hrv_windows.push_back(std::move(w));
    }
    nlohmann::json errors = nlohmann::json::object();
    for (const auto& [variant, res] : rec->variants) {
      if (res.error) errors[to_string(variant)] = *res.error;
    }
    nlohmann::json entry = {{"id", rec->id},
                            {"duration_s", rec->duration_s},
                            {"hr_windows", std::move(hr_windows)},
                            {"hrv_windows", std::move(hrv_windows)},
                            {"errors", std::move(errors)}};
    if (rec->spear_report) entry["spear_denoise"] = to_json(*rec->spear_report);
    recs.push_back(std::move(entry));
  }
  return {{"summary", std::move(variants)}, {"recordings", std::move(recs)}};
}

}  // namespace spear::eval
