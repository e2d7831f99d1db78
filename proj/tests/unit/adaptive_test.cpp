#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hedb/adaptive/switch.hpp"

namespace hedb {
namespace {

constexpr double kBase = 1000.0;

CostModelParams default_params() {
  CostModelParams p;
  SoftwareCosts sw;
  for (int k = 0; k < kUdfKindCount; ++k) p.software_calc[static_cast<std::size_t>(k)] = sw.of(static_cast<UdfKind>(k));
  p.tee_calc[{UdfKind::kCompare, Scheme::kPlain}] = 13.5;
  p.tee_calc[{UdfKind::kAdd, Scheme::kAhe}] = 21.5;
  p.c_fixed = 40.0;
  p.baseline_probe = kBase;
  return p;
}

std::vector<ProbeSample> window_of(std::initializer_list<double> durations) {
  std::vector<ProbeSample> w;
  double t = 0;
  for (double d : durations) w.push_back({t += 1, d, ProbeKind::kMixed, 8192});
  return w;
}

TEST(AdaptiveTest, RegimeClassification) {
  CostModelParams p = default_params();
  EXPECT_EQ(classify_regime({}, p), Regime::kNormal);
  EXPECT_EQ(classify_regime(window_of({kBase, kBase, kBase}), p), Regime::kNormal);
  EXPECT_EQ(classify_regime(window_of({2.2 * kBase, 2.2 * kBase, 2.2 * kBase}), p), Regime::kReplacement);
  auto outlier = window_of({kBase, kBase, kBase, kBase, 9 * kBase, kBase, kBase, kBase, kBase});
  EXPECT_EQ(classify_regime(outlier, p), Regime::kNormal);
  // Exactly at the threshold stays Normal.
  EXPECT_EQ(classify_regime(window_of({1.5 * kBase}), p), Regime::kNormal);
  p.baseline_probe = 0;
  EXPECT_EQ(classify_regime(window_of({5 * kBase}), p), Regime::kNormal);
}

TEST(AdaptiveTest, RuntimeEstimate) {
  CostModelParams p = default_params();
  EXPECT_DOUBLE_EQ(estimate_c_runtime(window_of({kBase, kBase}), p, UdfKind::kCompare, Scheme::kPlain), 0.0);
  EXPECT_DOUBLE_EQ(estimate_c_runtime(window_of({0.5 * kBase}), p, UdfKind::kCompare, Scheme::kPlain), 0.0);
  // Enclave-side cost equal to the probe's: ratio 1.
  p.c_fixed = 0;
  p.tee_calc[{UdfKind::kCompare, Scheme::kPlain}] = kBase;
  EXPECT_DOUBLE_EQ(estimate_c_runtime(window_of({2 * kBase}), p, UdfKind::kCompare, Scheme::kPlain), kBase);
}

TEST(AdaptiveTest, RuntimeEstimateIsMonotoneInMedian) {
  CostModelParams p = default_params();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.5 * kBase, 4 * kBase);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(5);
    for (auto& v : a) v = dist(rng);
    std::vector<double> b = a;
    for (auto& v : b) v += dist(rng) * 0.1;  // pointwise larger, so the median is larger
    auto wa = window_of({a[0], a[1], a[2], a[3], a[4]});
    auto wb = window_of({b[0], b[1], b[2], b[3], b[4]});
    ASSERT_LE(estimate_c_runtime(wa, p, UdfKind::kCompare, Scheme::kPlain),
              estimate_c_runtime(wb, p, UdfKind::kCompare, Scheme::kPlain));
  }
}

TEST(AdaptiveTest, NormalRegimeOffloadsComparisons) {
  AdaptiveSwitch sw(default_params());
  sw.record_probe({0, kBase, ProbeKind::kMixed, 8192});
  Decision d = sw.choose(UdfKind::kCompare, Scheme::kPlain, 1.0);
  EXPECT_EQ(d.path, Path::kTee);
  EXPECT_EQ(d.regime, Regime::kNormal);
  EXPECT_DOUBLE_EQ(d.c_runtime, 0.0);
  // Equality on DET is far cheaper in software.
  EXPECT_EQ(sw.choose(UdfKind::kEqual, Scheme::kPlain, 1.0).path, Path::kSoftware);
}

TEST(AdaptiveTest, ReplacementRegimeFallsBackToSoftware) {
  AdaptiveSwitch sw(default_params());
  for (int i = 0; i < 5; ++i) sw.record_probe({static_cast<double>(i), 2.2 * kBase, ProbeKind::kMixed, 8192});
  Decision d = sw.choose(UdfKind::kCompare, Scheme::kPlain, 10.0);
  EXPECT_EQ(d.regime, Regime::kReplacement);
  EXPECT_EQ(d.path, Path::kSoftware);
  EXPECT_GT(d.c_tee, d.c_soft);
}

TEST(AdaptiveTest, ForcedPathWhenOnlyOneIsRegistered) {
  AdaptiveSwitch sw(default_params());
  EXPECT_EQ(sw.choose(UdfKind::kCompare, Scheme::kPlain, 0, true, false).path, Path::kSoftware);
  EXPECT_EQ(sw.choose(UdfKind::kEqual, Scheme::kPlain, 0, false, true).path, Path::kTee);
  EXPECT_THROW(sw.choose(UdfKind::kEqual, Scheme::kPlain, 0, false, false), Error);
}

TEST(AdaptiveTest, ArgminWithTiesToSoftware) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0, 100);
  for (int i = 0; i < 500; ++i) {
    CostModelParams p = default_params();
    p.software_calc[0] = std::round(dist(rng));
    p.tee_calc[{UdfKind::kCompare, Scheme::kPlain}] = std::round(dist(rng));
    p.c_fixed = std::round(dist(rng) / 2);
    AdaptiveSwitch sw(p);
    Decision d = sw.choose(UdfKind::kCompare, Scheme::kPlain, 0);
    ASSERT_EQ(d.path, d.c_tee < d.c_soft ? Path::kTee : Path::kSoftware);
  }
  CostModelParams tie = default_params();
  tie.software_calc[0] = 53.5;
  AdaptiveSwitch sw(tie);
  Decision d = sw.choose(UdfKind::kCompare, Scheme::kPlain, 0);
  EXPECT_DOUBLE_EQ(d.c_soft, d.c_tee);
  EXPECT_EQ(d.path, Path::kSoftware);
}

TEST(AdaptiveTest, CountersAreConserved) {
  AdaptiveSwitch sw(default_params());
  std::vector<Decision> open;
  for (int i = 0; i < 20; ++i) open.push_back(sw.choose(static_cast<UdfKind>(i % 4), Scheme::kPlain, i));
  for (const auto& d : open) sw.feedback(d, 1.0);
  EXPECT_EQ(sw.dispatched(), sw.completed());
  for (const auto& row : sw.state().in_flight)
    for (auto c : row) EXPECT_EQ(c, 0);
  EXPECT_THROW(sw.feedback(open.front(), 1.0), Error);
}

TEST(AdaptiveTest, InFlightCallsRaiseDecideCost) {
  AdaptiveSwitch sw(default_params());
  Decision first = sw.choose(UdfKind::kCompare, Scheme::kPlain, 0);
  Decision second = sw.choose(UdfKind::kCompare, Scheme::kPlain, 0);
  ASSERT_EQ(first.path, second.path);
  double before = first.path == Path::kTee ? first.c_tee : first.c_soft;
  double after = second.path == Path::kTee ? second.c_tee : second.c_soft;
  EXPECT_DOUBLE_EQ(after - before, default_params().decide_unit);
}

TEST(AdaptiveTest, EmaConvergesToObservedCost) {
  AdaptiveSwitch sw(default_params());
  const double truth = 4.5;
  for (int i = 0; i < 200; ++i) {
    Decision d = sw.choose(UdfKind::kCompare, Scheme::kPlain, i);
    ASSERT_EQ(d.path, Path::kTee);
    sw.feedback(d, truth);
  }
  EXPECT_NEAR(sw.params().tee_calc_of(UdfKind::kCompare, Scheme::kPlain), truth, 1e-9);
  // One step moves a fraction alpha of the gap.
  AdaptiveSwitch one(default_params());
  one.feedback(one.choose(UdfKind::kEqual, Scheme::kPlain, 0), 11.0);
  EXPECT_DOUBLE_EQ(one.params().software_calc[1], 0.8 * 1.0 + 0.2 * 11.0);
}

TEST(AdaptiveTest, ProbeHistoryIsBoundedAndOrdered) {
  ProbeHistory h(3);
  for (int i = 0; i < 10; ++i) h.append({static_cast<double>(i), 1.0, ProbeKind::kMixed, 8});
  EXPECT_EQ(h.snapshot().size(), 3u);
  EXPECT_DOUBLE_EQ(h.snapshot().front().timestamp, 7.0);
  EXPECT_EQ(h.total_samples(), 10u);
  EXPECT_THROW(h.append({1.0, 1.0, ProbeKind::kMixed, 8}), Error);
}

TEST(AdaptiveTest, FirstProbeBecomesBaseline) {
  CostModelParams p = default_params();
  p.baseline_probe = 0;
  AdaptiveSwitch sw(p);
  EXPECT_EQ(sw.regime(), Regime::kNormal);
  sw.record_probe({0, 800, ProbeKind::kMixed, 8192});
  EXPECT_DOUBLE_EQ(sw.params().baseline_probe, 800);
  for (int i = 1; i <= 5; ++i) sw.record_probe({static_cast<double>(i), 1700, ProbeKind::kMixed, 8192});
  EXPECT_EQ(sw.regime(), Regime::kReplacement);
}

TEST(AdaptiveTest, DecisionLogCsv) {
  AdaptiveSwitch sw(default_params());
  sw.enable_log(true);
  sw.choose(UdfKind::kCompare, Scheme::kPlain, 12.5);
  std::ostringstream out;
  sw.write_log_csv(out);
  EXPECT_EQ(out.str(), "timestamp,kind,c_soft,c_tee,path,regime\n12.5,compare,60,53.5,tee,normal\n");
}

TEST(AdaptiveTest, InvalidParamsRejected) {
  CostModelParams p = default_params();
  p.tau = 1.0;
  EXPECT_THROW(AdaptiveSwitch{p}, Error);
  p = default_params();
  p.c_fixed = -1;
  EXPECT_THROW(AdaptiveSwitch{p}, Error);
}

}  // namespace
}  // namespace hedb
