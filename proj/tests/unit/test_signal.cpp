#include <stdexcept>

#include "doctest.h"
#include "spear/signal.hpp"
#include "test_util.hpp"

using namespace spear;
using spear::testing::bit_equal;

namespace {

Signal ramp(std::size_t n, double fs = kDefaultFs) {
  Signal s;
  s.fs = fs;
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(static_cast<double>(i));
  return s;
}

BinaryMask mask_of(std::vector<std::uint8_t> flags) { return BinaryMask{std::move(flags), kDefaultFs}; }

}  // namespace

TEST_CASE("segment drops the trailing remainder") {
  const auto segs = segment(ramp(95 * 64));
  REQUIRE(segs.size() == 3);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].signal.size() == 1920);
    CHECK(segs[i].index == i);
    CHECK(segs[i].signal.samples.front() == static_cast<double>(i * 1920));
  }
}

TEST_CASE("segment of a 30 s recording is the recording") {
  const Signal x = ramp(1920);
  const auto segs = segment(x);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].signal.samples == x.samples);
}

TEST_CASE("segment records t0") {
  const auto segs = segment(ramp(3840));
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].signal.t0 == 0.0);
  CHECK(segs[1].signal.t0 == 30.0);
  CHECK(segs[1].signal.size() == 1920);
}

TEST_CASE("segment rejects an empty recording") {
  CHECK_THROWS_WITH_AS(segment(Signal{}), "empty signal", std::invalid_argument);
}

TEST_CASE("normalize_minmax") {
  CHECK(normalize_minmax(Signal{{2, 4, 6}}).samples == std::vector<double>{0, 0.5, 1});
  CHECK(normalize_minmax(Signal{{0, 1}}).samples == std::vector<double>{0, 1});
  CHECK(normalize_minmax(Signal{{3, 3, 3}}).samples == std::vector<double>{0.5, 0.5, 0.5});
  CHECK_THROWS(normalize_minmax(Signal{}));
}

TEST_CASE("normalize_minmax is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Signal x = spear::testing::random_signal(rng, 50 + static_cast<std::size_t>(trial));
    const Signal once = normalize_minmax(x);
    const Signal twice = normalize_minmax(once);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(twice.samples[i] == doctest::Approx(once.samples[i]).epsilon(1e-15));
  }
}

TEST_CASE("erase") {
  CHECK(erase(Signal{{0.2, 0.8, 0.5}}, mask_of({0, 1, 0})).samples == std::vector<double>{0.2, 0, 0.5});
  const Signal x = ramp(10);
  CHECK(erase(x, mask_of(std::vector<std::uint8_t>(10, 0))).samples == x.samples);

  Signal ones{std::vector<double>(1920, 1.0)};
  const auto out = erase(ones, spear::testing::span_mask(1920, 320, 512));
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.samples[i] == 0.0) {
      ++zeros;
      CHECK(i >= 320);
      CHECK(i < 512);
    }
  }
  CHECK(zeros == 192);
  CHECK_THROWS_AS(erase(x, mask_of({0, 1})), std::invalid_argument);
}

TEST_CASE("merge") {
  const Signal x_in{{0.1, 0.0, 0.3}};
  const Signal y_out{{0.9, 0.7, 0.9}};
  CHECK(merge(x_in, y_out, mask_of({0, 0, 0})).samples == x_in.samples);
  CHECK(merge(x_in, y_out, mask_of({1, 1, 1})).samples == y_out.samples);
  CHECK(merge(x_in, y_out, mask_of({0, 1, 0})).samples == std::vector<double>{0.1, 0.7, 0.3});
  CHECK_THROWS_AS(merge(x_in, Signal{{1.0}}, mask_of({0, 1, 0})), std::invalid_argument);
}

TEST_CASE("erase and merge round-trip and preserve clean samples") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 400));
    const Signal x = spear::testing::random_signal(rng, n);
    const Signal y = spear::testing::random_signal(rng, n);
    const BinaryMask m = spear::testing::random_mask(rng, n, rng.uniform());
    const Signal round_trip = merge(erase(x, m), x, m);
    const Signal merged = merge(x, y, m);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(bit_equal(round_trip.samples[i], x.samples[i]));
      if (!m.flags[i]) REQUIRE(bit_equal(merged.samples[i], x.samples[i]));
    }
  }
}

TEST_CASE("join concatenates and records provenance") {
  auto segs = segment(ramp(3 * 1920));
  const auto two = join(std::span<const Segment>(segs.data(), 2));
  CHECK(two.signal.size() == 3840);

  const auto one = join(std::span<const Segment>(segs.data(), 1));
  CHECK(one.signal.samples == segs[0].signal.samples);

  const std::vector<Segment> gap{segs[0], segs[2]};
  const auto joined = join(gap);
  CHECK(joined.signal.size() == 3840);
  REQUIRE(joined.provenance.size() == 2);
  CHECK(joined.provenance[1].out_begin == 1920);
  CHECK(joined.provenance[1].segment_index == 2);
  CHECK(joined.provenance[1].source_t0 == 60.0);

  const auto intervals = source_intervals(joined);
  REQUIRE(intervals.size() == 2);
  CHECK(intervals[0].end == 30.0);
  CHECK(intervals[1].start == 60.0);
  CHECK(to_source_time(joined, 31.0) == doctest::Approx(61.0));
  CHECK(to_source_time(joined, 10.0) == doctest::Approx(10.0));
}

TEST_CASE("join rejects mixed sampling rates and unordered segments") {
  auto segs = segment(ramp(2 * 1920));
  auto mixed = segs;
  mixed[1].signal.fs = 128.0;
  CHECK_THROWS_AS(join(mixed), std::invalid_argument);
  const std::vector<Segment> reversed{segs[1], segs[0]};
  CHECK_THROWS_AS(join(reversed), std::invalid_argument);
}

TEST_CASE("segment then join reproduces the recording") {
  Rng rng(9);
  for (int k = 1; k <= 4; ++k) {
    const Signal x = spear::testing::random_signal(rng, static_cast<std::size_t>(k) * 1920);
    const auto joined = join(segment(x));
    REQUIRE(joined.signal.samples == x.samples);
    CHECK(source_intervals(joined).size() == 1);
  }
}

TEST_CASE("mask helpers") {
  const auto m = mask_of({0, 1, 1, 0});
  CHECK(m.count() == 2);
  CHECK(m.corrupted_fraction() == 0.5);
  CHECK(m.any());
  CHECK(slice(m, 1, 2).flags == std::vector<std::uint8_t>{1, 1});
  CHECK_THROWS(slice(m, 3, 2));
}
