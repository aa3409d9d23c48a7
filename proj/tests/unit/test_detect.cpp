#include <stdexcept>
#include <filesystem>

#include "doctest.h"
#include "spear/detect.hpp"
#include "spear/signal_io.hpp"
#include "spear/synth.hpp"
#include "test_util.hpp"

using namespace spear;
using namespace spear::detect;

namespace {

Segment first_segment(const Signal& x) { return segment(x).front(); }

std::pair<Signal, synth::GroundTruth> clean_recording(std::uint64_t seed, double duration_s = 30.0) {
  Rng rng(seed);
  const double hr = rng.uniform(50.0, 110.0);
  return synth::gen_clean(duration_s, hr, {rng.uniform(2.0, 8.0), rng.uniform(0.05, 0.3)}, {}, derive_seed(seed, "beats"));
}

BinaryMask seconds_mask(double corrupted_s) {
  return spear::testing::span_mask(1920, 0, static_cast<std::size_t>(std::llround(corrupted_s * 64.0)));
}

}  // namespace

TEST_CASE("oracle returns the ground-truth mask of its segment") {
  const auto [x, gt] = clean_recording(1, 90.0);
  synth::NoiseSpec spec;
  spec.burst_len_lo_s = spec.burst_len_hi_s = 5.0;
  spec.burst_count = 2;
  spec.seed = 1;
  const auto [y, noisy_gt] = synth::corrupt(x, gt, spec);
  const OracleDetector oracle(noisy_gt.noise_mask);
  for (const auto& seg : segment(y)) {
    const auto out = oracle.detect(seg);
    CHECK(out.mask.flags == slice(noisy_gt.noise_mask, seg.index * 1920, 1920).flags);
    CHECK(out.probs.size() == 1920);
  }
}

TEST_CASE("heuristic detector leaves clean segments nearly untouched") {
  const HeuristicDetector det;
  CHECK(det.config().k == 3.5);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto [x, gt] = clean_recording(seed);
    worst = std::max(worst, det.detect(first_segment(x)).mask.corrupted_fraction());
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("heuristic detector flags most of a large burst") {
  const HeuristicDetector det;
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto [x, gt] = clean_recording(seed);
    synth::NoiseSpec spec;
    spec.bw_amp = 0.0;
    spec.burst_amp = 3.0;
    spec.seed = derive_seed(seed, "burst");
    const auto [y, noisy_gt] = synth::corrupt(x, gt, spec);
    const auto mask = det.detect(first_segment(y)).mask;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) hit += noisy_gt.noise_mask.flags[i] && mask.flags[i];
    worst = std::min(worst, static_cast<double>(hit) / static_cast<double>(noisy_gt.noise_mask.count()));
  }
  CHECK(worst >= 0.8);
}

TEST_CASE("detect rejects segments that are not 30 s long") {
  Segment short_seg{Signal{std::vector<double>(100, 0.5)}, "", 0};
  CHECK_THROWS_AS(HeuristicDetector().detect(short_seg), std::invalid_argument);
  CHECK_THROWS_AS(OracleDetector(seconds_mask(0)).detect(short_seg), std::invalid_argument);
}

TEST_CASE("is_clean") {
  const auto [x, gt] = clean_recording(3);
  const auto seg = first_segment(x);
  CHECK(is_clean(seg, OracleDetector(gt.noise_mask)));
  synth::NoiseSpec spec;
  spec.seed = 3;
  const auto [y, noisy_gt] = synth::corrupt(x, gt, spec);
  CHECK_FALSE(is_clean(first_segment(y), OracleDetector(noisy_gt.noise_mask)));
  CHECK_FALSE(is_clean(seg, OracleDetector(spear::testing::span_mask(1920, 100, 119))));
}

TEST_CASE("discard rule uses a strict 75% threshold") {
  CHECK(discard_rule(seconds_mask(23.0)) == Decision::Discard);
  CHECK(discard_rule(seconds_mask(22.0)) == Decision::Keep);
  CHECK(discard_rule(seconds_mask(22.5)) == Decision::Keep);
  CHECK(discard_rule(seconds_mask(0.0)) == Decision::Keep);
}

TEST_CASE("thresholding is monotone and preserves length") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(64);
    for (auto& v : p) v = rng.uniform();
    const auto before = threshold(p, 64.0).mask;
    for (auto& v : p) v = std::min(1.0, v + rng.uniform(0.0, 0.3));
    const auto after = threshold(p, 64.0).mask;
    REQUIRE(after.size() == 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(after.flags[i] >= before.flags[i]);
  }
  CHECK(threshold({0.5, 0.49}, 64.0).mask.flags == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("the oracle never discards a synthetic segment") {
  const auto [x, gt] = clean_recording(5, 180.0);
  synth::NoiseSpec spec;
  spec.burst_count = 5;
  spec.burst_len_lo_s = 5.0;
  spec.burst_len_hi_s = 15.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    spec.seed = seed;
    const auto [y, noisy_gt] = synth::corrupt(x, gt, spec);
    const OracleDetector oracle(noisy_gt.noise_mask);
    for (const auto& seg : segment(y)) CHECK(discard_rule(oracle.detect(seg).mask) == Decision::Keep);
  }
}

TEST_CASE("make_detector parses its specs") {
  const auto mask = seconds_mask(5.0);
  CHECK(make_detector("oracle", &mask)->name() == "oracle");
  CHECK(make_detector("heuristic")->name() == "heuristic");
  CHECK_THROWS_AS(make_detector("oracle"), std::invalid_argument);
  CHECK_THROWS_AS(make_detector("segade"), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "spear_detect_mask.csv";
  io::write_mask(path, mask);
  const auto external = make_detector("external:" + path.string());
  const auto [x, gt] = clean_recording(6);
  CHECK(external->detect(first_segment(x)).mask.flags == mask.flags);
}
