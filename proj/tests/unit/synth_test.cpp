#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ropocop/analyzer.hpp"
#include "ropocop/reference_corpus.hpp"
#include "ropocop/synth.hpp"
#include "ropocop/trace_io.hpp"

namespace ropocop::synth {
namespace {

AnalysisOptions only(DetectorId d, depplus::Mode mode = depplus::Mode::full_scan) {
  AnalysisOptions o;
  o.run_anticra = d == DetectorId::anticra;
  o.run_depplus = d == DetectorId::depplus;
  o.depplus.mode = mode;
  return o;
}

TEST(Synth, SameSeedSameBytes) {
  for (Kind k : {Kind::benign, Kind::pure_rop, Kind::pure_jop, Kind::two_staged, Kind::code_injection,
                 Kind::nop_gadget_evasion}) {
    const auto a = encode_trace(generate(default_spec(k, 77)).events);
    const auto b = encode_trace(generate(default_spec(k, 77)).events);
    EXPECT_EQ(a, b) << to_string(k);
    EXPECT_NE(a, encode_trace(generate(default_spec(k, 78)).events)) << to_string(k);
  }
}

TEST(Synth, KindAndLayoutNames) {
  for (Kind k : {Kind::benign, Kind::pure_rop, Kind::pure_jop, Kind::two_staged, Kind::code_injection,
                 Kind::nop_gadget_evasion}) {
    EXPECT_EQ(kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(layout_from_string("adversarial"), Layout::adversarial);
  EXPECT_FALSE(kind_from_string("rop"));
}

TEST(Synth, LengthDistParsing) {
  EXPECT_EQ(LengthDist::parse("3"), LengthDist::constant(3));
  EXPECT_EQ(LengthDist::parse("2,2,3"), LengthDist::cycle({2, 2, 3}));
  EXPECT_EQ(LengthDist::parse("2:9"), LengthDist::uniform(2, 9));
  for (const char* s : {"2,2,3", "2:9", "7"}) EXPECT_EQ(LengthDist::parse(s).to_string(), s);
  EXPECT_THROW(LengthDist::parse("9:2"), SynthError);
  EXPECT_THROW(LengthDist::parse("x"), SynthError);
}

TEST(Synth, PureRopSelfDescription) {
  const auto t = generate(default_spec(Kind::pure_rop, 1));
  const auto f = anticra::extract_features(t.events);
  EXPECT_EQ(f.max_consecutive, 9344u);
  EXPECT_EQ(f.lowest_window_avg, Ratio(1));
  const auto r = analyze_events(t.events, only(DetectorId::anticra));
  ASSERT_NE(r.first_alarm(DetectorId::anticra), nullptr);
  EXPECT_EQ(analyze_events(t.events, only(DetectorId::depplus)).alarms.size(), 0u);
}

TEST(Synth, PureJopIsCaught) {
  const auto t = generate(default_spec(Kind::pure_jop, 3));
  const auto r = analyze_events(t.events, only(DetectorId::anticra));
  ASSERT_NE(r.first_alarm(DetectorId::anticra), nullptr);
}

TEST(Synth, TwoStagedSplitsTheDetectors) {
  const auto t = generate(default_spec(Kind::two_staged, 9));
  ASSERT_TRUE(t.pivot_index);
  EXPECT_EQ(oracle::non_image_targets(t.events), std::vector<std::size_t>{*t.pivot_index});
  EXPECT_EQ(analyze_events(t.events, only(DetectorId::anticra)).alarms.size(), 0u);
  for (auto mode : {depplus::Mode::full_scan, depplus::Mode::watermark}) {
    const auto r = analyze_events(t.events, only(DetectorId::depplus, mode));
    const Alarm* a = r.first_alarm(DetectorId::depplus);
    ASSERT_NE(a, nullptr);
    EXPECT_EQ(a->event_index, *t.pivot_index);
  }
}

TEST(Synth, AdversarialLayoutSlipsPastTheWatermark) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto spec = default_spec(Kind::two_staged, seed);
    spec.params.layout = Layout::adversarial;
    const auto t = generate(spec);
    ASSERT_TRUE(t.pivot_index);
    EXPECT_EQ(oracle::non_image_targets(t.events), std::vector<std::size_t>{*t.pivot_index});
    const auto full = analyze_events(t.events, only(DetectorId::depplus, depplus::Mode::full_scan));
    ASSERT_NE(full.first_alarm(DetectorId::depplus), nullptr);
    EXPECT_EQ(full.first_alarm(DetectorId::depplus)->event_index, *t.pivot_index);
    const auto wm = analyze_events(t.events, only(DetectorId::depplus, depplus::Mode::watermark));
    EXPECT_EQ(wm.alarms.size(), 0u) << seed;
  }
}

TEST(Synth, CodeInjectionCaughtAtFirstReturn) {
  const auto t = generate(default_spec(Kind::code_injection, 4));
  ASSERT_TRUE(t.pivot_index);
  const auto r = analyze_events(t.events, only(DetectorId::depplus));
  ASSERT_NE(r.first_alarm(DetectorId::depplus), nullptr);
  EXPECT_EQ(r.first_alarm(DetectorId::depplus)->event_index, *t.pivot_index);
  EXPECT_EQ(analyze_events(t.events, only(DetectorId::anticra)).alarms.size(), 0u);
}

TEST(Synth, NopGadgetEvasionDefeatsTheAverage) {
  const auto t = generate(default_spec(Kind::nop_gadget_evasion, 2));
  EXPECT_EQ(analyze_events(t.events, only(DetectorId::anticra)).alarms.size(), 0u);
}

TEST(Synth, BenignTargetsStayInImages) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto spec = default_spec(Kind::benign, seed);
    spec.params.block_count = 500;
    const auto t = generate(spec);
    EXPECT_TRUE(oracle::non_image_targets(t.events).empty()) << seed;
    EXPECT_FALSE(t.pivot_index);
  }
}

TEST(Synth, BenignMatchesItsParameters) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto spec = default_spec(Kind::benign, seed);
    spec.params.block_count = 800;
    spec.params.max_run = static_cast<std::uint32_t>(15 + seed % 30);
    spec.params.min_avg = Ratio(5 + seed % 20, 4);
    const auto t = generate(spec);
    const auto brute = oracle::brute_force_features(oracle::blocks_of(t.events), anticra::Config{});
    EXPECT_EQ(brute.max_consecutive, spec.params.max_run) << seed;
    ASSERT_TRUE(brute.lowest) << seed;
    EXPECT_GE(*brute.lowest, oracle::big(spec.params.min_avg)) << seed;
  }
}

TEST(Synth, ContradictoryTargetsRejected) {
  auto spec = default_spec(Kind::benign, 0);
  spec.params.min_avg = Ratio(1, 2);
  EXPECT_THROW(generate(spec), SynthError);
  spec = default_spec(Kind::two_staged, 0);
  spec.params.layout = Layout::adversarial;
  spec.params.growth = Ratio(3, 10);
  EXPECT_THROW(generate(spec), SynthError);
}

TEST(Synth, PatternForAverage) {
  EXPECT_EQ(pattern_for_average(Ratio(22, 10)), (std::vector<std::uint32_t>{3, 2, 2, 2, 2, 3, 2, 2, 2, 2}));
  for (const char* text : {"1", "2.2", "2.25", "3.5", "4.14", "9.9"}) {
    const Ratio avg = Ratio::parse(text);
    const auto pattern = pattern_for_average(avg);
    ASSERT_EQ(pattern.size(), 10u);
    std::vector<std::uint32_t> run;
    for (int i = 0; i < 40; ++i) run.push_back(pattern[static_cast<std::size_t>(i) % 10]);
    for (std::size_t end = 10; end <= run.size(); ++end) {
      std::vector<std::uint32_t> w(run.begin() + static_cast<std::ptrdiff_t>(end - 10),
                                   run.begin() + static_cast<std::ptrdiff_t>(end));
      const auto got = oracle::window_average(w, 10);
      EXPECT_GE(got, oracle::big(avg)) << text;
      EXPECT_LT(got, oracle::big(avg) + oracle::BigRational(1, 10)) << text;
    }
  }
}

TEST(Synth, GenSectionRoundTrip) {
  auto spec = default_spec(Kind::two_staged, 12);
  spec.params.layout = Layout::adversarial;
  spec.params.growth = Ratio(3, 2);
  spec.params.gadget_len = LengthDist::cycle({2, 3});
  EXPECT_EQ(gen_spec_from(ConfigDocument::parse(render_gen_section(spec))), spec);
}

TEST(ReferenceCorpus, Shape) {
  const auto& rows = reference_corpus();
  ASSERT_EQ(rows.size(), 45u);
  std::size_t exploits = 0, spec = 0, apps = 0, malicious = 0;
  for (const auto& p : rows) {
    exploits += p.series == Series::exploit;
    spec += p.series == Series::spec;
    apps += p.series == Series::application;
    malicious += p.expected == anticra::Classification::malicious;
  }
  EXPECT_EQ(exploits, 11u);
  EXPECT_EQ(spec, 18u);
  EXPECT_EQ(apps, 16u);
  EXPECT_EQ(malicious, 10u);
}

} // namespace
} // namespace ropocop::synth
