#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "varpoint/experiments.hpp"

using namespace varpoint;

namespace {

using Curve = std::vector<std::pair<double, double>>;

NmseSweepConfig small_sweep(std::size_t trials) {
  NmseSweepConfig c;
  c.trials = trials;
  return c;
}

}  // namespace

TEST(RunTrials, OrderIndependentOfThreads) {
  const auto f = [](std::size_t k) { return static_cast<double>(k * k) + 0.5; };
  const auto one = run_trials(1000, 1, f);
  const auto four = run_trials(1000, 4, f);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one[10], 100.5);
  EXPECT_TRUE(run_trials(0, 3, f).empty());
}

TEST(NmseEstimate, ClosedFormTwoTrials) {
  CVector e1(2), x1(2), e2(2), x2(2);
  x1 << ComplexSample(1, 0), ComplexSample(0, 2);  // |x1|^2 = 5
  e1 << ComplexSample(1.5, 0), ComplexSample(0, 2);  // error 0.25
  x2 << ComplexSample(3, 4), ComplexSample(0, 0);  // |x2|^2 = 25
  e2 << ComplexSample(3, 4), ComplexSample(1, -1);  // error 2
  const std::vector<CVector> approx{e1, e2}, exact{x1, x2};
  EXPECT_DOUBLE_EQ(nmse_estimate(approx, exact), 2.25 / 30.0);
  EXPECT_DOUBLE_EQ(nmse_estimate(exact, exact), 0.0);
  EXPECT_THROW(nmse_estimate(std::span(approx).first(1), exact), FormatError);
}

TEST(NmseSweep, IdentityQuantizerGivesZero) {
  auto c = small_sweep(20);
  c.quantize = false;
  for (const auto& p : nmse_sweep(c).points) EXPECT_EQ(p.nmse, 0.0);
}

TEST(NmseSweep, ShapeAndOrdering) {
  const auto r = nmse_sweep(small_sweep(1000));
  ASSERT_EQ(r.points.size(), 10u);
  for (Domain d : {Domain::kAntenna, Domain::kBeamspace}) {
    const auto c = r.curve(d);
    ASSERT_EQ(c.size(), 5u);
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      EXPECT_LT(c[k + 1].nmse, c[k].nmse);
      EXPECT_EQ(c[k].trials, 1000u);
    }
  }
  const auto a = r.curve(Domain::kAntenna), b = r.curve(Domain::kBeamspace);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_GE(b[k].nmse, a[k].nmse);
  // Quantization noise scaling: about 6 dB per bit.
  for (std::size_t k = 0; k + 1 < a.size(); ++k) EXPECT_NEAR(a[k].nmse_db - a[k + 1].nmse_db, 6.0, 2.0);
}

TEST(NmseSweep, SingleTrialMonotone) {
  const auto r = nmse_sweep(small_sweep(1));
  for (Domain d : {Domain::kAntenna, Domain::kBeamspace}) {
    const auto c = r.curve(d);
    EXPECT_LT(c.back().nmse, c.front().nmse);
  }
}

TEST(NmseSweep, ThreadCountDoesNotChangeResult) {
  auto c = small_sweep(64);
  const auto one = nmse_sweep(c);
  c.threads = 3;
  const auto three = nmse_sweep(c);
  ASSERT_EQ(one.points.size(), three.points.size());
  for (std::size_t k = 0; k < one.points.size(); ++k) EXPECT_EQ(one.points[k].nmse, three.points[k].nmse);
  EXPECT_EQ(one.scales, three.scales);
}

TEST(NmseSweep, FrozenDatasetMatchesGenerated) {
  auto c = small_sweep(32);
  const CMatrix dft = dft_matrix(c.system.antennas);
  std::vector<TrialData> ds;
  for (std::size_t k = 0; k < c.trials; ++k) {
    Rng rng = trial_rng(c.system.seed, k);
    ds.push_back(simulate_trial(c.system, rng, dft));
  }
  const auto a = nmse_sweep(c);
  const auto b = nmse_sweep(c, ds);
  for (std::size_t k = 0; k < a.points.size(); ++k) EXPECT_EQ(a.points[k].nmse, b.points[k].nmse);
}

TEST(NmseSweep, RejectsBadConfig) {
  auto c = small_sweep(0);
  EXPECT_THROW(nmse_sweep(c), FormatError);
  c.trials = 2;
  c.bitwidths = {1};
  EXPECT_THROW(nmse_sweep(c), FormatError);
}

TEST(BitGap, ConstructedCurves) {
  const Curve a{{6, -27.0}, {7, -33.0}, {8, -39.0}, {9, -45.0}, {10, -51.0}};
  EXPECT_NEAR(interpolate_bit_gap(a, a), 0.0, 1e-12);
  Curve shifted;
  for (auto [w, n] : a) shifted.emplace_back(w + 1.0, n);
  EXPECT_NEAR(interpolate_bit_gap(a, shifted), 1.0, 1e-12);
  // 3 dB higher at 6 dB per bit is half a bit.
  const Curve b{{6, -24.0}, {7, -30.0}, {8, -36.0}, {9, -42.0}, {10, -48.0}};
  EXPECT_NEAR(interpolate_bit_gap(a, b), 0.5, 1e-12);
}

TEST(BitGap, Errors) {
  const Curve a{{6, -10.0}, {7, -20.0}};
  const Curve far{{6, -40.0}, {7, -50.0}};
  EXPECT_THROW(interpolate_bit_gap(a, far), FormatError);
  const Curve flat{{6, -10.0}, {7, -10.0}};
  EXPECT_THROW(interpolate_bit_gap(a, flat), FormatError);
  const Curve one{{6, -10.0}};
  EXPECT_THROW(interpolate_bit_gap(a, one), FormatError);
}

TEST(BitGap, FromSweepResult) {
  NmseResult r;
  for (int w = 6; w <= 10; ++w) {
    r.points.push_back({Domain::kAntenna, w, 0.0, -6.0 * w, 1});
    r.points.push_back({Domain::kBeamspace, w, 0.0, -6.0 * w + 7.2, 1});
  }
  EXPECT_NEAR(interpolate_bit_gap(r), 1.2, 1e-9);
}

TEST(WithinFactor, Symmetric) {
  EXPECT_TRUE(within_factor(0.0, 0.0, 1.3));
  EXPECT_TRUE(within_factor(0.01, 0.0125, 1.3));
  EXPECT_TRUE(within_factor(0.0125, 0.01, 1.3));
  EXPECT_FALSE(within_factor(0.01, 0.014, 1.3));
  EXPECT_FALSE(within_factor(0.0, 0.001, 1.3));
}

TEST(Ber, NoiseFreeWellConditionedChannelIsErrorFree) {
  BerConfig c;
  c.system.model = ChannelModel::kNlos;
  c.system.users = 4;
  c.snr_db = {std::numeric_limits<double>::infinity()};
  c.trials = 50;
  for (auto v : {MvmVariant::kAFxp, MvmVariant::kBFxp, MvmVariant::kBVp}) c.designs.push_back(reference_preset(v, 64, 4));
  const auto r = ber_experiment(c);
  ASSERT_EQ(r.points.size(), 4u);
  for (const auto& p : r.points) EXPECT_EQ(p.bit_errors, 0u) << p.design;
}

TEST(Ber, TracksFloatAtModerateSnr) {
  BerConfig c;
  c.snr_db = {6.0};
  c.trials = 300;
  for (auto v : {MvmVariant::kAFxp, MvmVariant::kBFxp, MvmVariant::kBVp}) c.designs.push_back(reference_preset(v));
  const auto r = ber_experiment(c);
  ASSERT_EQ(r.points.size(), 4u);
  const auto& ref = r.find("float", 6.0);
  EXPECT_GT(ref.bit_errors, 0u);
  EXPECT_EQ(ref.bits, 300u * 8 * 4);
  for (const char* d : {"a-fxp", "b-fxp", "b-vp"}) {
    const auto& p = r.find(d, 6.0);
    EXPECT_GE(p.ber, 0.0);
    EXPECT_LE(p.ber, 1.0);
    EXPECT_TRUE(within_factor(p.ber, ref.ber, 1.3)) << d << " " << p.ber << " vs " << ref.ber;
  }
  EXPECT_THROW(r.find("nope", 6.0), FormatError);
}

TEST(FlpComparison, FinitePositiveAndMantissaMonotone) {
  FlpComparisonConfig c;
  c.trials = 200;
  const auto r = flp_comparison(c);
  EXPECT_GT(r.nmse_vp, 0.0);
  EXPECT_GT(r.nmse_flp, 0.0);
  EXPECT_TRUE(std::isfinite(r.nmse_vp_db()));
  c.flp_format = CflpFormat(4, 4);
  const double narrow = flp_comparison(c).nmse_flp;
  c.flp_format = CflpFormat(8, 4);
  const double wide = flp_comparison(c).nmse_flp;
  EXPECT_LT(wide, narrow);
}

TEST(Csv, Formats) {
  NmseResult n;
  n.points.push_back({Domain::kBeamspace, 7, 0.001, -30.0, 5});
  std::ostringstream a;
  write_nmse_csv(a, n);
  EXPECT_EQ(a.str(), "domain,W,nmse_db\nbeamspace,7,-30\n");

  BerResult b;
  b.points.push_back({"b-vp", 20.0, 3, 320, 3.0 / 320.0});
  std::ostringstream s;
  write_ber_csv(s, b);
  EXPECT_EQ(s.str(), "design,snr_db,bit_errors,bits,ber\nb-vp,20,3,320,0.009375\n");

  std::ostringstream f;
  write_flp_csv(f, {0.1, 0.01});
  EXPECT_EQ(f.str(), "format,nmse,nmse_db\nvp,0.1,-10\ncflp,0.01,-20\n");
  EXPECT_EQ(format_double(0.1), "0.1");
}
