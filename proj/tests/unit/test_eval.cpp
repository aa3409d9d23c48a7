#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "spear/e2e.hpp"
#include "spear/eval.hpp"

using namespace spear;

namespace {

nn::DaeModel small_model() {
  nn::DaeArchitecture a;
  a.channels = {4, 8};
  a.strides = {4, 4};
  return nn::DaeModel(a, 3);
}

eval::EvalInput uncorrupted(int k) {
  const auto corpus = e2e::make_test_corpus(1, 120.0, {}, {}, 0, derive_seed(std::uint64_t{31}, static_cast<std::uint64_t>(k)));
  return corpus.front();
}

}  // namespace

TEST_CASE("with no corruption every variant tracks the true heart rate") {
  const auto model = small_model();
  for (int k = 0; k < 4; ++k) {
    auto input = uncorrupted(k);
    input.noisy = input.clean;
    const detect::OracleDetector det(input.gt.noise_mask);
    const auto rec = eval::eval_recording(input, model, det, &model);
    REQUIRE(rec.variants.size() == 4);
    // The full-replacement baseline is untrained here, so only the three
    // variants that keep the clean samples are scored.
    for (const auto v : {eval::Variant::Raw, eval::Variant::Bandpass, eval::Variant::Spear}) {
      const auto& res = rec.variants.at(v);
      REQUIRE_FALSE(res.error);
      std::vector<std::optional<double>> est, truth;
      for (std::size_t i = 0; i < rec.truth_hr.size(); ++i) {
        est.push_back(res.hr[i].bpm);
        truth.push_back(rec.truth_hr[i].bpm);
      }
      const auto m = metrics::mae(est, truth);
      CHECK(m.value <= 1.0);
      CHECK(m.dropped == 0);
    }
  }
}

TEST_CASE("SPEAR failure is recorded, not thrown") {
  auto input = uncorrupted(9);
  const detect::OracleDetector all(BinaryMask{std::vector<std::uint8_t>(input.noisy.size(), 1), kDefaultFs});
  const auto rec = eval::eval_recording(input, small_model(), all);
  const auto& sp = rec.variants.at(eval::Variant::Spear);
  REQUIRE(sp.error);
  CHECK(*sp.error == "no recoverable signal");
  CHECK(rec.variants.count(eval::Variant::SimNoise) == 0);

  const auto summary = eval::summarize({rec});
  CHECK_FALSE(summary.variants.at(eval::Variant::Spear).hr);
  CHECK(summary.variants.at(eval::Variant::Raw).hr);
}

TEST_CASE("summaries pool windows across recordings") {
  eval::RecordingEval a, b;
  a.id = "a";
  b.id = "b";
  a.truth_hr = {{0.0, 60.0}, {2.0, 60.0}};
  b.truth_hr = {{0.0, 80.0}, {2.0, std::nullopt}};
  a.variants[eval::Variant::Raw].hr = {{0.0, 62.0}, {2.0, 66.0}};
  b.variants[eval::Variant::Raw].hr = {{0.0, 81.0}, {2.0, 90.0}};
  const auto s = eval::summarize({a, b});
  const auto& hr = *s.variants.at(eval::Variant::Raw).hr;
  CHECK(hr.value == doctest::Approx(3.0));
  CHECK(hr.used == 3);
  CHECK(hr.dropped == 1);
  CHECK_FALSE(s.variants.at(eval::Variant::Raw).sdnn);
}

TEST_CASE("the report is canonical") {
  const auto model = small_model();
  std::vector<eval::RecordingEval> recs;
  for (int k : {2, 1}) {
    auto input = uncorrupted(k);
    input.id = "rec" + std::to_string(k);
    recs.push_back(eval::eval_recording(input, model, detect::OracleDetector(input.gt.noise_mask)));
  }
  const auto summary = eval::summarize(recs);
  const auto j = eval::to_json(summary, recs);
  std::reverse(recs.begin(), recs.end());
  CHECK(eval::to_json(eval::summarize(recs), recs).dump() == j.dump());
  CHECK(j.dump().find("wall") == std::string::npos);
  CHECK(eval::to_string(eval::Variant::Spear) == "spear");
  CHECK(eval::to_string(eval::Variant::SimNoise) == "simnoise");
}

TEST_CASE("ordering checks") {
  eval::CorpusSummary s;
  auto set = [&](eval::Variant v, double hr, double sd, double rm) {
    s.variants[v].hr = metrics::MaeResult{hr, 1, 0};
    s.variants[v].sdnn = metrics::MaeResult{sd, 1, 0};
    s.variants[v].rmssd = metrics::MaeResult{rm, 1, 0};
  };
  set(eval::Variant::Raw, 10.0, 50.0, 60.0);
  set(eval::Variant::Bandpass, 8.0, 40.0, 50.0);
  set(eval::Variant::Spear, 4.0, 30.0, 55.0);
  const auto checks = e2e::ordering_checks(s, 5.0);
  REQUIRE(checks.size() == 4);
  CHECK(checks[0].passed);
  CHECK(checks[1].passed);
  CHECK(checks[2].passed);
  CHECK_FALSE(checks[3].passed);
  CHECK_FALSE(e2e::ordering_checks(s, 3.0)[1].passed);
}
