#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "noisygap/ensemble.hpp"
#include "noisygap/error.hpp"
#include "noisygap/spectral.hpp"

namespace noisygap {
namespace {

TEST(MomentAccumulator, MatchesTwoPassMoments) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> d(3.0, 2.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = d(gen);
  MomentAccumulator acc;
  for (double x : v) acc.add(x);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size();
  EXPECT_NEAR(acc.mean(), mean, 1e-12);
  EXPECT_NEAR(acc.variance(), var, 1e-10);
  for (int k : {1, 2, -2}) {
    double s = 0.0;
    for (double x : v) s += std::exp(k * x);
    EXPECT_NEAR(acc.log_mean_exp(k), std::log(s / v.size()), 1e-10) << k;
  }
  EXPECT_THROW(acc.log_mean_exp(3), DomainError);
}

TEST(MomentAccumulator, LogMeanExpSurvivesHugeValues) {
  MomentAccumulator acc;
  acc.add(1000.0);
  acc.add(1000.0 + std::log(3.0));
  EXPECT_NEAR(acc.log_mean_exp(1), 1000.0 + std::log(2.0), 1e-10);
  EXPECT_NEAR(acc.log_mean_exp(-2), -2000.0 + std::log((1.0 + 1.0 / 9.0) / 2.0), 1e-9);
}

TEST(MomentAccumulator, MergeOrderOnlyReassociates) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  std::vector<double> v(999);
  for (auto& x : v) x = d(gen);
  MomentAccumulator seq, merged;
  for (double x : v) seq.add(x);
  for (std::size_t start = 0; start < v.size(); start += 37) {
    MomentAccumulator part;
    for (std::size_t i = start; i < std::min(v.size(), start + 37); ++i) part.add(v[i]);
    merged.merge(part);
  }
  EXPECT_EQ(seq.count(), merged.count());
  EXPECT_NEAR(merged.mean(), seq.mean(), 1e-12 * std::max(1.0, std::abs(seq.mean())));
  EXPECT_NEAR(merged.variance(), seq.variance(), 1e-12 * seq.variance());
  for (int k : {1, 2, -2}) EXPECT_NEAR(merged.log_mean_exp(k), seq.log_mean_exp(k), 1e-12 * std::abs(seq.log_mean_exp(k)));
}

TEST(Ensemble, SingleSampleHasZeroVarianceAndMatchesDirectEvolution) {
  const auto spec = ModelSpec::brickwork(8, 0.5, 21);
  EnsembleOptions opts;
  opts.t_max = 60;
  opts.samples = 1;
  opts.cadence = 20;
  opts.diagnostics = {Diagnostic::kSvRatio, Diagnostic::kGap};
  const auto r = run_ensemble(spec, opts);
  ASSERT_EQ(r.times, (std::vector<std::size_t>{20, 40, 60}));
  const NoisyModel model(spec);
  ScaledProduct acc = ScaledProduct::identity(8);
  for (std::size_t t = 1; t <= 60; ++t) {
    model.apply_step(t, acc);
    if (t % 20 == 0) {
      const std::size_t i = t / 20 - 1;
      const auto sv = svd_sorted(acc.core()).singular_values;
      EXPECT_NEAR(r.at("lnSvRatio").moments[i].mean(), std::log(sv[1] / sv[0]), 1e-12);
      EXPECT_NEAR(r.at("gap").moments[i].mean(), gap_at(acc, t).delta_t, 1e-12);
      EXPECT_EQ(r.at("lnSvRatio").moments[i].variance(), 0.0);
    }
  }
}

TEST(Ensemble, UnitaryLimit) {
  EnsembleOptions opts;
  opts.t_max = 50;
  opts.samples = 10;
  opts.cadence = 10;
  opts.diagnostics = {Diagnostic::kSvRatio, Diagnostic::kGap, Diagnostic::kOmegaSv};
  const auto r = run_ensemble(ModelSpec::brickwork(8, 0.0), opts);
  for (const auto& m : r.at("lnSvRatio").moments) EXPECT_NEAR(m.mean(), 0.0, 1e-12);
  for (const auto& m : r.at("gap").moments) EXPECT_NEAR(m.mean(), 0.0, 1e-12);
  for (const auto& m : r.at("lnOmegaSv").moments) EXPECT_NEAR(m.mean(), std::log(1.0 - 1.0 / 8.0), 1e-10);
  // Every sample is the same deterministic trajectory.
  for (const auto& m : r.at("lnOmegaSv").moments) EXPECT_NEAR(m.variance(), 0.0, 1e-20);
  const auto ratio = fluctuation_report(r.at("gap"));
  for (double x : ratio) EXPECT_TRUE(std::isinf(x) || x < 1e-6);
}

TEST(Ensemble, ResultsDoNotDependOnWorkerCount) {
  const auto spec = ModelSpec::diagonal(6, 0.4, 3);
  EnsembleOptions opts;
  opts.t_max = 40;
  opts.samples = 29;
  opts.cadence = 8;
  opts.diagnostics = {Diagnostic::kSvRatio, Diagnostic::kEigRatio, Diagnostic::kTraceMoments};
  opts.threads = 1;
  const auto a = run_ensemble(spec, opts);
  opts.threads = 3;
  const auto b = run_ensemble(spec, opts);
  for (const auto& [name, s] : a.series) {
    const auto& o = b.at(name);
    for (std::size_t i = 0; i < s.moments.size(); ++i) {
      EXPECT_EQ(s.moments[i].mean(), o.moments[i].mean()) << name;
      EXPECT_EQ(s.moments[i].variance(), o.moments[i].variance()) << name;
      EXPECT_EQ(s.moments[i].log_mean_exp(-2), o.moments[i].log_mean_exp(-2)) << name;
    }
  }
}

TEST(Ensemble, RecordsFinalTimeAndRejectsBadInput) {
  EnsembleOptions opts;
  opts.t_max = 25;
  opts.samples = 2;
  opts.cadence = 10;
  opts.diagnostics = {Diagnostic::kIpr};
  const auto r = run_ensemble(ModelSpec::brickwork(4, 0.3), opts);
  EXPECT_EQ(r.times, (std::vector<std::size_t>{10, 20, 25}));
  for (const auto& m : r.at("ipr").moments) {
    EXPECT_GE(m.mean(), 0.25 - 1e-12);
    EXPECT_LE(m.mean(), 1.0 + 1e-12);
  }
  EXPECT_THROW(r.at("nope"), DomainError);
  opts.samples = 0;
  EXPECT_THROW(run_ensemble(ModelSpec::brickwork(4, 0.3), opts), DomainError);
  opts.samples = 1;
  opts.diagnostics = {Diagnostic::kXSquared};
  opts.input_a = {-5, 5};  // outside a 4-site ring
  EXPECT_THROW(run_ensemble(ModelSpec::brickwork(4, 0.3), opts), DomainError);
  EXPECT_THROW(parse_diagnostic("bogus"), ConfigError);
  EXPECT_EQ(parse_diagnostic("svRatio"), Diagnostic::kSvRatio);
}

TEST(Ensemble, TraceMomentsSatisfyCauchySchwarzOnAnySampleSet) {
  EnsembleOptions opts;
  opts.t_max = 200;
  opts.samples = 64;
  opts.cadence = 20;
  opts.diagnostics = {Diagnostic::kTraceMoments};
  const auto r = run_ensemble(ModelSpec::brickwork(6, 0.5, 5), opts);
  const auto tr = r.at("lnTraceSq").log_mean_exp(1);
  const auto defect = r.at("lnTraceDefectSq").log_mean_exp(1);
  const auto inv = r.at("lnInvOmegaEig").log_mean_exp(1);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_LE(2 * tr[i] - defect[i], inv[i] + 1e-12);
}

TEST(Ensemble, XSquaredGapShrinks) {
  EnsembleOptions opts;
  opts.t_max = 3000;
  opts.samples = 4;
  opts.cadence = 1000;
  opts.diagnostics = {Diagnostic::kXSquared};
  const auto r = run_ensemble(ModelSpec::brickwork(12, 1.0), opts);
  const auto m = r.at("x2Gap").mean();
  EXPECT_LT(m.back(), m.front());
}

TEST(Relaxation, FirstCrossingOfLinearFunctional) {
  std::vector<std::size_t> t;
  std::vector<double> f;
  for (std::size_t i = 1; i <= 20; ++i) {
    t.push_back(i);
    f.push_back(-static_cast<double>(i));
  }
  EXPECT_EQ(*first_crossing(t, f, RelaxationKind::kLambdaSv, std::exp(-5.0), 1).tau, 5.0);
  // nonincreasing in c
  double prev = 1e300;
  for (double c : {1e-8, 1e-6, 1e-4, 1e-2, 0.5}) {
    const auto e = first_crossing(t, f, RelaxationKind::kLambdaSv, c, 1);
    if (e.tau) {
      EXPECT_LE(*e.tau, prev);
      prev = *e.tau;
    }
  }
  const auto never = first_crossing(t, f, RelaxationKind::kLambdaSv, 1e-12, 1);
  EXPECT_FALSE(never.tau.has_value());
  EXPECT_EQ(never.last_f, -20.0);
  EXPECT_THROW(first_crossing(t, f, RelaxationKind::kLambdaSv, 1.0, 1), DomainError);
  EXPECT_THROW(first_crossing(t, f, RelaxationKind::kLambdaSv, 0.0, 1), DomainError);
}

TEST(Relaxation, ClosedForms) {
  const auto d = relaxation_time_delta(6e-4, 1e-2);
  EXPECT_NEAR(*d.tau, std::log(100.0) / 6e-4, 1e-9);
  EXPECT_NEAR(*d.tau, 7.7e3, 50.0);
  EXPECT_FALSE(relaxation_time_delta(0.0, 1e-2).tau.has_value());
  const auto sv = relaxation_time_closed(ModelSpec::brickwork(20, 0.3), RelaxationKind::kOmegaSv, 1e-6);
  EXPECT_NEAR(*sv.tau, 6 * 20 * std::abs(std::log(1e-6) + std::log(std::sqrt(2.0))) / 0.09, 1.0);
  EXPECT_NEAR(*sv.tau, 1.796e4, 5.0);  // quoted to four figures
  EXPECT_FALSE(relaxation_time_closed(ModelSpec::diagonal(4, 0.3), RelaxationKind::kOmegaEig, 1e-6).tau.has_value());
  EXPECT_THROW(relaxation_time_closed(ModelSpec::diagonal(4, 0.3), RelaxationKind::kLambdaSv, 1e-6), DomainError);
  EXPECT_THROW(parse_relaxation_kind("tauBogus"), ConfigError);
  EXPECT_EQ(parse_relaxation_kind("tauX"), RelaxationKind::kX);
}

TEST(Relaxation, MeasuredKindsAndTwoLevelAverage) {
  EnsembleOptions opts;
  opts.t_max = 1500;
  opts.samples = 16;
  opts.cadence = 10;
  opts.input_a = {-2, 3};
  opts.input_b = {-1, 0};
  const RelaxationKind kinds[] = {RelaxationKind::kLambdaSv, RelaxationKind::kLambdaEig, RelaxationKind::kX,
                                  RelaxationKind::kLambdaEigPrime, RelaxationKind::kLambdaSvPrime,
                                  RelaxationKind::kDelta};
  const auto est = two_level_relaxation(ModelSpec::brickwork(6, 0.8), opts, kinds, 1e-2, 3);
  ASSERT_EQ(est.size(), 6u);
  for (const auto& e : est) {
    ASSERT_EQ(e.taus.size(), 3u);
    ASSERT_TRUE(e.mean.has_value()) << relaxation_kind_name(e.kind);
    EXPECT_GE(*e.mean, 1.0);
    EXPECT_EQ(e.unbounded, 0u);
    EXPECT_GE(*e.median, 1.0);
  }
  // Jensen: avg ln r <= ln avg r, so the primed eigenvalue time is the latest.
  EXPECT_LE(*est[1].mean, *est[3].mean + 10.0);
}

TEST(Relaxation, DeltaIgnoresSaturatedRecords) {
  // Run far past the point where |lambda_2/lambda_1| reaches rounding level:
  // the final Delta_t collapses toward 30/t, the resolved one tracks the
  // Lyapunov gap.
  const auto spec = ModelSpec::brickwork(6, 1.0, 3);
  EnsembleOptions opts;
  opts.t_max = 40000;
  opts.samples = 16;
  opts.cadence = 200;
  opts.diagnostics = {Diagnostic::kGap};
  const auto r = run_ensemble(spec, opts);
  double lyap = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    auto sp = spec;
    sp.seed = 100 + s;
    lyap += lyapunov_pair(sp, 100, 2000).gap() / 8.0;
  }
  const double resolved = resolved_gap(r);
  const double final_gap = r.at("gap").moments.back().mean();
  EXPECT_LT(final_gap, 0.5 * lyap);
  EXPECT_NEAR(resolved, lyap, 0.15 * lyap);
  const auto est = relaxation_time(r, RelaxationKind::kDelta, 1e-6);
  ASSERT_TRUE(est.tau);
  EXPECT_DOUBLE_EQ(*est.tau, std::log(1e6) / resolved);
}

TEST(Relaxation, MeasuredEigenvalueTimeBelowCauchySchwarzBound) {
  const auto spec = ModelSpec::brickwork(6, 0.6, 2);
  EnsembleOptions opts;
  opts.t_max = 4000;
  opts.samples = 40;
  opts.cadence = 10;
  opts.diagnostics = {Diagnostic::kEigRatio};
  const auto r = run_ensemble(spec, opts);
  const auto measured = relaxation_time(r, RelaxationKind::kLambdaEig, 1e-3);
  const auto bound = relaxation_time_closed(spec, RelaxationKind::kOmegaEig, 1e-3);
  ASSERT_TRUE(measured.tau && bound.tau);
  EXPECT_LE(*measured.tau, *bound.tau);
}

TEST(PowerLaw, ExactAndNoisyData) {
  std::vector<std::pair<double, double>> pts;
  for (double b : {0.05, 0.1, 0.2, 0.4}) pts.emplace_back(b, 6 * 20 * 13.469 / (b * b));
  const auto fit = power_law_fit(pts);
  EXPECT_NEAR(fit.exponent, -2.0, 1e-10);
  EXPECT_NEAR(fit.prefactor, 6 * 20 * 13.469, 1e-6);
  EXPECT_NEAR(fit.residual, 0.0, 1e-10);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  pts.clear();
  for (int i = 0; i <= 20; ++i) {
    const double b = 0.01 * std::pow(10.0, i / 10.0);
    pts.emplace_back(b, 1.0 / (b * b) * (1.0 + noise(gen)));
  }
  EXPECT_NEAR(power_law_fit(pts).exponent, -2.0, 0.15);

  EXPECT_THROW(power_law_fit(std::vector<std::pair<double, double>>{{0.1, 1.0}, {0.2, 2.0}}), DomainError);
  pts = {{0.1, 1.0}, {0.2, std::numeric_limits<double>::infinity()}, {0.4, 3.0}};
  EXPECT_THROW(power_law_fit(pts), DomainError);
}

TEST(Fluctuation, ReplicatedSampleGivesZero) {
  EnsembleSeries s;
  s.name = "gap";
  MomentAccumulator m;
  for (int i = 0; i < 5; ++i) m.add(0.01);
  s.moments = {m};
  s.times = {1};
  EXPECT_NEAR(fluctuation_report(s)[0], 0.0, 1e-12);
}

TEST(Fluctuation, DecreasesAtLateTimes) {
  EnsembleOptions opts;
  opts.t_max = 4000;
  opts.samples = 24;
  opts.cadence = 1000;
  opts.diagnostics = {Diagnostic::kGap};
  const auto r = run_ensemble(ModelSpec::brickwork(6, 0.8), opts);
  const auto ratio = fluctuation_report(r.at("gap"));
  EXPECT_LT(ratio.back(), ratio.front());
}

}  // namespace
}  // namespace noisygap
