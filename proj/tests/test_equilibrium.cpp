#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cheaptalk/equilibrium.hpp"
#include "cheaptalk/errors.hpp"
#include "support.hpp"

namespace cheaptalk {
namespace {

using testing::Gen;

BiasVector B(std::vector<double> v) { return BiasVector(std::move(v)); }

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Equal-step recursion for the uniform law on [0, 1]: lengths d_{i+1} = d_i - 4 beta summing to 1.
std::vector<double> uniform_boundaries(double beta, std::size_t k) {
  const double kk = static_cast<double>(k);
  double d = (1.0 + 4.0 * beta * kk * (kk - 1.0) / 2.0) / kk;
  std::vector<double> out;
  double at = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    at += d;
    out.push_back(at);
    d -= 4.0 * beta;
  }
  return out;
}

// Both equilibrium conditions of the scalar game, checked against an independent law.
template <class Mass, class Mean>
void expect_scalar_equilibrium(const ScalarEquilibrium& eq, double lo, double hi, Mass mass, Mean mean,
                               double tol) {
  const auto& t = eq.codebook.thresholds;
  const auto& u = eq.codebook.levels;
  ASSERT_EQ(t.size() + 1, u.size());
  for (std::size_t i = 0; i + 1 < u.size(); ++i) EXPECT_NEAR(t[i], 0.5 * (u[i] + u[i + 1]) + eq.beta, tol);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = i == 0 ? lo : t[i - 1];
    const double b = i + 1 == u.size() ? hi : t[i];
    if (mass(a, b) < 1e-12) continue;
    EXPECT_NEAR(u[i], mean(a, b), tol) << "bin " << i;
  }
}

TEST(ScalarBiased, UniformMatchesRecursion) {
  const auto law = Marginal::uniform(0.0, 1.0);
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto eq = solve_scalar_biased(law, 0.05, k);
    const auto expected = uniform_boundaries(0.05, k);
    ASSERT_EQ(eq.codebook.thresholds.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(eq.codebook.thresholds[i], expected[i], 1e-9);
    double left = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double right = i + 1 < k ? expected[i] : 1.0;
      EXPECT_NEAR(eq.codebook.levels[i], 0.5 * (left + right), 1e-9);
      EXPECT_NEAR(eq.masses[i], right - left, 1e-9);
      left = right;
    }
  }
  const auto k3 = solve_scalar_biased(law, 0.05, 3);
  EXPECT_NEAR(k3.codebook.thresholds[0], 0.5333333333333333, 1e-9);
  EXPECT_NEAR(k3.codebook.thresholds[1], 0.8666666666666667, 1e-9);
}

TEST(ScalarBiased, UniformInfeasibleReportsMaximum) {
  const auto law = Marginal::uniform(0.0, 1.0);
  try {
    solve_scalar_biased(law, 0.05, 4);
    FAIL() << "expected Infeasible";
  } catch (const Infeasible& e) {
    EXPECT_EQ(e.max_feasible(), 3u);
  }
  // Largest K with a positive last length: K(K-1) * 2 beta < 1.
  for (double beta : {0.01, 0.02, 0.1, 0.2}) {
    std::size_t kmax = 1;
    while (2.0 * beta * static_cast<double>((kmax + 1) * kmax) < 1.0) ++kmax;
    EXPECT_NO_THROW(solve_scalar_biased(law, beta, kmax)) << beta;
    EXPECT_THROW(solve_scalar_biased(law, beta, kmax + 1), Infeasible) << beta;
    // Negative bias mirrors the partition.
    const auto pos = solve_scalar_biased(law, beta, kmax), neg = solve_scalar_biased(law, -beta, kmax);
    for (std::size_t i = 0; i < kmax; ++i)
      EXPECT_NEAR(pos.codebook.levels[i], 1.0 - neg.codebook.levels[kmax - 1 - i], 1e-9);
  }
}

TEST(ScalarBiased, GaussianLloydMax) {
  const auto law = Marginal::gaussian(0.0, 1.0);
  auto eq = solve_scalar_biased(law, 0.0, 2);
  EXPECT_NEAR(eq.codebook.thresholds[0], 0.0, 1e-9);
  EXPECT_NEAR(eq.codebook.levels[0], -std::sqrt(2 / std::numbers::pi), 1e-9);
  EXPECT_NEAR(eq.codebook.levels[1], std::sqrt(2 / std::numbers::pi), 1e-9);
  // Published 3- and 4-level Lloyd-Max quantizers for the standard normal.
  eq = solve_scalar_biased(law, 0.0, 3);
  EXPECT_NEAR(eq.codebook.thresholds[1], 0.6120, 1e-4);
  EXPECT_NEAR(eq.codebook.levels[2], 1.2240, 1e-4);
  EXPECT_NEAR(eq.codebook.levels[1], 0.0, 1e-9);
  eq = solve_scalar_biased(law, 0.0, 4);
  EXPECT_NEAR(eq.codebook.thresholds[2], 0.9816, 1e-4);
  EXPECT_NEAR(eq.codebook.levels[2], 0.4528, 1e-4);
  EXPECT_NEAR(eq.codebook.levels[3], 1.5104, 1e-4);
}

TEST(ScalarBiased, SingleBinIsMean) {
  for (const auto& law : {Marginal::gaussian(1.5, 2.0), Marginal::exponential(3.0), Marginal::uniform(-2, 7)}) {
    const auto eq = solve_scalar_biased(law, 0.3, 1);
    ASSERT_EQ(eq.codebook.levels.size(), 1u);
    EXPECT_DOUBLE_EQ(eq.codebook.levels[0], law.mean());
  }
  EXPECT_THROW(solve_scalar_biased(Marginal::gaussian(0, 1), 0.1, 0), InvalidArgument);
  EXPECT_THROW(solve_scalar_biased(SourceModel::iid_gaussian(2, 0, 1), 0.1, 2), DimensionMismatch);
}

TEST(ScalarBiased, GaussianConditionsHoldForRandomBias) {
  Gen g(40);
  const auto law = Marginal::gaussian(0.0, 1.0);
  const auto mass = [](double a, double b) { return Phi(b) - Phi(a); };
  // Upper-tail masses keep their precision far out in the right tail.
  const auto upper = [](double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); };
  const auto mean = [&](double a, double b) {
    if (a > 0) return (phi(a) - phi(b)) / (upper(a) - upper(b));
    return (phi(a) - phi(b)) / (Phi(b) - Phi(a));
  };
  for (int i = 0; i < 40; ++i) {
    const double beta = g.uniform(-1.5, 1.5);
    const std::size_t k = 2 + g.index(4);
    const auto eq = solve_scalar_biased(law, beta, k);
    expect_scalar_equilibrium(eq, -INFINITY, INFINITY, mass, mean, 1e-7);
  }
}

TEST(ScalarBiased, ExponentialConditions) {
  const auto law = Marginal::exponential(1.0);
  const auto mass = [](double a, double b) { return std::exp(-a) - std::exp(-b); };
  const auto mean = [](double a, double b) {
    if (std::isinf(b)) return a + 1.0;
    return (a * std::exp(-a) - b * std::exp(-b)) / (std::exp(-a) - std::exp(-b)) + 1.0;
  };
  for (double beta : {-0.4, -0.1, 0.1, 0.4}) {
    for (std::size_t k = 2; k <= 4; ++k) {
      try {
        const auto eq = solve_scalar_biased(law, beta, k);
        expect_scalar_equilibrium(eq, 0.0, INFINITY, mass, mean, 1e-7);
      } catch (const Infeasible& e) {
        // The bounded end can run out of room; the reported maximum must then be solvable.
        ASSERT_LT(e.max_feasible(), k);
        const auto eq = solve_scalar_biased(law, beta, e.max_feasible());
        expect_scalar_equilibrium(eq, 0.0, INFINITY, mass, mean, 1e-7);
      }
    }
  }
}

TEST(ScalarBiased, ScaleCovariance) {
  for (double c : {0.5, 3.0}) {
    const auto a = solve_scalar_biased(Marginal::gaussian(0.0, 1.0), 0.3, 3);
    const auto b = solve_scalar_biased(Marginal::gaussian(0.0, c * c), 0.3 * c, 3);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b.codebook.levels[i], c * a.codebook.levels[i], 1e-8 * c);
  }
}

TEST(ScalarCodebook, EncodeTiesGoLow) {
  const ScalarCodebook cb{{0.0, 1.0}, {-1.0, 0.5, 2.0}};
  EXPECT_EQ(cb.encode(-5.0), 0u);
  EXPECT_EQ(cb.encode(0.0), 0u);
  EXPECT_EQ(cb.encode(0.5), 1u);
  EXPECT_EQ(cb.encode(1.0), 1u);
  EXPECT_EQ(cb.encode(1.0000001), 2u);
}

TEST(BestResponse, SingleActionGoesToMean) {
  const auto s = SourceModel::iid_exponential(2, 2.0);
  const ActionSet a(std::vector<Point>{{3.0, -1.0}});
  const auto next = best_response_step(a, s, B({0.4, 0.1}));
  EXPECT_NEAR(next[0][0], 0.5, 1e-6);
  EXPECT_NEAR(next[0][1], 0.5, 1e-6);
  const auto again = best_response_step(next, s, B({0.4, 0.1}));
  EXPECT_NEAR(again[0][0], next[0][0], 1e-12);
}

TEST(BestResponse, UniformEquilibriumIsFixed) {
  const auto s = SourceModel::iid_uniform(1, 0.0, 1.0);
  const ActionSet eq(std::vector<Point>{{0.8 / 3.0}, {0.7}, {2.8 / 3.0}});
  const auto next = best_response_step(eq, s, B({0.05}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(next[i][0], eq[i][0], 1e-12);
}

TEST(BestResponse, GaussianLloydStep) {
  const auto s = SourceModel::iid_gaussian(1, 0.0, 1.0);
  const auto next = best_response_step(ActionSet(std::vector<Point>{{-1.0}, {1.0}}), s, B({0.0}));
  EXPECT_NEAR(next[0][0], -std::sqrt(2 / std::numbers::pi), 1e-12);
  EXPECT_NEAR(next[1][0], std::sqrt(2 / std::numbers::pi), 1e-12);
  const auto half = best_response_step(ActionSet(std::vector<Point>{{-1.0}, {1.0}}), s, B({0.0}), {}, 0.5);
  EXPECT_NEAR(half[1][0], 0.5 * (1.0 + std::sqrt(2 / std::numbers::pi)), 1e-12);
}

TEST(BestResponse, EmptyBinDies) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  try {
    best_response_step(ActionSet(std::vector<Point>{{0.0, 0.0}, {50.0, 0.0}}), s, B({0.0, 0.0}));
    FAIL() << "expected BinDeath";
  } catch (const BinDeath& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(FixedPoint, SingleBinConvergesImmediately) {
  for (const auto& s : {SourceModel::iid_gaussian(2, 1.0, 1.0), SourceModel::iid_uniform(1, 0, 2)}) {
    const auto r = solve_fixed_point(s, BiasVector(std::vector<double>(s.dimension(), 0.3)), 1);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 2u);
    for (std::size_t i = 0; i < s.dimension(); ++i) EXPECT_NEAR(r.actions[0][i], s.mean()[i], 1e-6);
  }
}

TEST(FixedPoint, UniformScalarRecursion) {
  const auto s = SourceModel::iid_uniform(1, 0.0, 1.0);
  const auto r = solve_fixed_point(s, B({0.05}), 3);
  ASSERT_TRUE(r.converged);
  const double expected[] = {0.8 / 3.0, 0.7, 2.8 / 3.0};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.actions[i][0], expected[i], 1e-6);
  EXPECT_THROW(solve_fixed_point(s, B({0.05}), 4), BinDeath);
}

TEST(FixedPoint, TwoDimensionalGaussianCertifies) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  SolverConfig config;
  config.budget.samples = 200'000;
  const auto b = B({0.3, 0.1});
  const auto r = solve_fixed_point(s, b, 3, config);
  ASSERT_TRUE(r.converged);
  VerifyOptions opts;
  opts.budget.samples = 400'000;
  opts.budget.seed = 77;
  const auto cert = verify_equilibrium(EncoderPolicy::quantizer(r.actions), s, b, opts);
  EXPECT_TRUE(cert.pass()) << cert.centroid.excess << " " << cert.centroid.std_error;
  EXPECT_TRUE(cert.distortions.identity_holds);
}

TEST(FixedPoint, ConfigValidation) {
  SolverConfig c;
  c.damping = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.damping = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.tolerance = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(solve_fixed_point(SourceModel::iid_gaussian(1, 0, 1), B({0.1}), 2, c), InvalidArgument);
}

TEST(FixedPoint, ScaleCovariance) {
  const auto a = solve_fixed_point(SourceModel::iid_gaussian(1, 0.0, 1.0), B({0.2}), 3);
  const auto b = solve_fixed_point(SourceModel::iid_gaussian(1, 0.0, 4.0), B({0.4}), 3);
  ASSERT_TRUE(a.converged && b.converged);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b.actions[i][0], 2.0 * a.actions[i][0], 1e-6);
}

TEST(EncoderPolicy, QuantizerEncodesByAssignAction) {
  Gen g(41);
  const ActionSet set(std::vector<Point>{{0, 0}, {2, 0}, {0, 3}});
  const auto p = EncoderPolicy::quantizer(set);
  const auto b = B({0.5, -0.2});
  EXPECT_EQ(p.message_count(), 3u);
  for (int i = 0; i < 200; ++i) {
    const Point m = g.point(2);
    const auto msg = p.encode(m, b);
    EXPECT_EQ(msg, assign_action(m, set, b));
    EXPECT_EQ(p.decode(msg), set.to_points()[msg]);
  }
  EXPECT_THROW(EncoderPolicy::quantizer(ActionSet()), InvalidArgument);
}

TEST(EncoderPolicy, LinearRoundTrip) {
  const auto t = helmert_transform(std::size_t{3});
  const ScalarCodebook grid{{-1, 0, 1}, {-1.5, -0.5, 0.5, 1.5}};
  const ScalarCodebook last{{0.2}, {-0.7, 0.9}};
  const auto p = EncoderPolicy::linear(t, {grid, grid, last}, {0, 1}, 4);
  EXPECT_EQ(p.message_count(), 32u);
  const auto actions = p.enumerate_actions();
  EXPECT_EQ(actions.size(), 32u);
  Gen g(42);
  const auto b = BiasVector(std::vector<double>(3, 0.0));
  for (int i = 0; i < 200; ++i) {
    const Point m = g.point(3, 2.0);
    const Point x = apply(t, m, Direction::forward);
    const Point y{grid.levels[grid.encode(x[0])], grid.levels[grid.encode(x[1])], last.levels[last.encode(x[2])]};
    const Point u = apply(t, y, Direction::inverse);
    const Point got = p.decode(p.encode(m, b));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(got[k], u[k], 1e-12);
  }
  EXPECT_THROW(EncoderPolicy::linear(t, {grid, grid, last}, {2}, 4), InvalidArgument);
  EXPECT_THROW(EncoderPolicy::linear(t, {grid, last}, {0}, 4), DimensionMismatch);
}

TEST(RevealPlusQuantize, Preconditions) {
  EXPECT_THROW(construct_reveal_plus_quantize(SourceModel::iid_exponential(2, 1.0), B({1, 2}), 1), InvalidArgument);
  EXPECT_THROW(construct_reveal_plus_quantize(SourceModel::iid_exponential(2, 1.0), B({1, 1}), 1), InvalidArgument);
  EXPECT_THROW(construct_reveal_plus_quantize(SourceModel::iid_gaussian(2, 0, 1), B({0, 0}), 1), InvalidArgument);
  EXPECT_THROW(construct_reveal_plus_quantize(SourceModel::correlated_gaussian_2d(0, 0, 1, 1, 0.5), B({1, 1}), 1),
               InvalidArgument);
  EXPECT_NO_THROW(construct_reveal_plus_quantize(SourceModel::iid_uniform(2, 0, 1), B({1, 1}), 1));
  EXPECT_NO_THROW(construct_reveal_plus_quantize(SourceModel::iid_exponential(2, 1.0), B({1, -1}), 1));
  EXPECT_NO_THROW(construct_reveal_plus_quantize(SourceModel::iid_exponential(2, 1.0), B({0, 3}), 2));
}

TEST(RevealPlusQuantize, GaussianStructure) {
  const auto p = construct_reveal_plus_quantize(SourceModel::iid_gaussian(2, 0, 1), B({1, 1}), 1, 256);
  EXPECT_EQ(p.kind(), EncoderPolicy::Kind::linear_reveal);
  EXPECT_EQ(p.message_count(), 256u);
  // Every action lies on the line through the mean orthogonal to the bias.
  const auto actions = p.enumerate_actions();
  for (std::size_t i = 0; i < actions.size(); ++i) EXPECT_NEAR(actions[i][0] + actions[i][1], 0.0, 1e-12);
}

TEST(RevealPlusQuantize, RevealingOneCoordinateKeepsOtherVariance) {
  // Revealing (M2 - M1)/sqrt(2) leaves the unit variance of (M1 + M2)/sqrt(2): Jd = 1 per vector.
  const auto s = SourceModel::iid_gaussian(2, 0, 1);
  const auto b = B({1, 1});
  const auto d = expected_distortions(construct_reveal_plus_quantize(s, b, 1), s, b);
  const double grid_error = 1e-4;
  EXPECT_NEAR(2.0 * d.decoder.value[0], 1.0, 3.0 * 2.0 * d.decoder.std_error + grid_error);
  EXPECT_NEAR(2.0 * d.encoder.value[0], 3.0, 3.0 * 2.0 * d.encoder.std_error + grid_error);
}

TEST(RevealPlusQuantize, UniformSymmetricCertifies) {
  const auto s = SourceModel::iid_uniform(2, 0.0, 1.0);
  const auto b = B({1, 1});
  const auto p = construct_reveal_plus_quantize(s, b, 1);
  VerifyOptions opts;
  opts.budget.samples = 400'000;
  const auto cert = verify_equilibrium(p, s, b, opts);
  EXPECT_TRUE(cert.pass());
  EXPECT_EQ(cert.grid_levels, 1024u);
}

TEST(RevealPlusQuantize, HelmertFourDimensions) {
  const auto s = SourceModel::iid_gaussian(4, 0.0, 1.0);
  const auto b = BiasVector(std::vector<double>(4, 0.5));
  const auto p = construct_reveal_plus_quantize(s, b, 3, 64);
  EXPECT_EQ(p.message_count(), 64u * 64u * 64u * 3u);
  VerifyOptions opts;
  opts.budget.samples = 400'000;
  const auto cert = verify_equilibrium(p, s, b, opts);
  EXPECT_TRUE(cert.pass()) << cert.min_pairwise_geo_slack << " " << cert.centroid.excess << " "
                           << cert.centroid.std_error << " " << cert.deviation_gain.value[0];
  EXPECT_TRUE(cert.pairs_sampled);
  EXPECT_TRUE(cert.centroid.coarsened);
  EXPECT_TRUE(cert.distortions.identity_holds);
}

TEST(Verify, NonInformativeMatchesVariance) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  const auto b = B({1, 1});
  const auto p = EncoderPolicy::quantizer(ActionSet(std::vector<Point>{s.mean()}));
  const auto cert = verify_equilibrium(p, s, b);
  EXPECT_TRUE(cert.pass());
  const auto& d = cert.distortions;
  EXPECT_NEAR(d.decoder.value[0], 1.0, 3 * d.decoder.std_error);
  EXPECT_NEAR(d.encoder.value[0], 2.0, 3 * d.encoder.std_error);
  EXPECT_NEAR(d.gap.value[0], 2.0, 3 * d.gap.std_error);
}

TEST(Verify, PlantedSlackViolation) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  const auto b = B({1, 0});
  const auto p = EncoderPolicy::quantizer(ActionSet(std::vector<Point>{{-0.5, 0}, {0.5, 0}}));
  VerifyOptions opts;
  opts.budget.samples = 100'000;
  const auto cert = verify_equilibrium(p, s, b, opts);
  EXPECT_DOUBLE_EQ(cert.min_pairwise_geo_slack, -1.0);
  EXPECT_FALSE(cert.slack_pass);
  EXPECT_FALSE(cert.pass());
}

TEST(Verify, OffCentroidActionsFail) {
  const auto s = SourceModel::iid_gaussian(1, 0.0, 1.0);
  const auto p = EncoderPolicy::quantizer(ActionSet(std::vector<Point>{{-1.0}, {1.0}}));
  VerifyOptions opts;
  opts.budget.samples = 100'000;
  const auto cert = verify_equilibrium(p, s, B({0.0}), opts);
  EXPECT_TRUE(cert.slack_pass);
  EXPECT_FALSE(cert.centroid.pass);
}

TEST(Verify, ProfitableDeviationDetected) {
  // Bins fixed by hand at the team boundary while the encoder is biased: encoding by
  // assign_action would move the boundary, so a linear policy with the wrong threshold deviates.
  const auto t = identity_transform(2);
  const ScalarCodebook first{{0.0}, {-0.8, 0.8}};
  const ScalarCodebook last{{0.0}, {-0.8, 0.8}};
  const auto p = EncoderPolicy::linear(t, {first, last}, {0}, 2);
  VerifyOptions opts;
  opts.budget.samples = 100'000;
  const auto cert = verify_equilibrium(p, SourceModel::iid_gaussian(2, 0, 1), B({0.0, 0.6}), opts);
  EXPECT_FALSE(cert.deviation_pass);
  EXPECT_GT(cert.deviation_gain.value[0], 3 * cert.deviation_gain.std_error);
}

TEST(Verify, TeamPolicyHasNoGap) {
  const auto s = SourceModel::iid_uniform(2, 0.0, 1.0);
  const auto b = B({0.0, 0.0});
  const auto p = construct_reveal_plus_quantize(s, B({0.0, 1e-3}), 1);
  const auto d = expected_distortions(p, s, b);
  EXPECT_EQ(d.gap.value[0], 0.0);
  EXPECT_EQ(d.encoder.value[0], d.decoder.value[0]);
  EXPECT_TRUE(d.identity_holds);
}

TEST(Verify, FixedPointPropertyOfCertifiedSet) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  const auto b = B({0.5, 0.0});
  SolverConfig config;
  config.budget.samples = 200'000;
  const auto r = solve_fixed_point(s, b, 2, config);
  ASSERT_TRUE(r.converged);
  Budget fresh;
  fresh.samples = 200'000;
  fresh.seed = 1234;
  fresh.method = EstimationMethod::monte_carlo;
  const auto next = best_response_step(r.actions, s, b, fresh);
  // One draw's worth of standard error for a bin mean is below sd / sqrt(mass * N).
  const double se = 1.0 / std::sqrt(0.1 * 200'000.0);
  for (std::size_t k = 0; k < r.actions.size(); ++k)
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(next[k][i], r.actions[k][i], 3 * se);
}

TEST(LinearEquilibrium, ExistingCasesPass) {
  const Budget budget;
  const std::vector<std::pair<SourceModel, BiasVector>> cases = {
      {SourceModel::iid_gaussian(2, 0.0, 1.0), B({1, 2})},
      {SourceModel::iid_uniform(2, 0.0, 1.0), B({1, -1})},
      {SourceModel::iid_uniform(2, 0.0, 1.0), B({1, 1})},
      {SourceModel::iid_exponential(2, 1.0), B({0, 3})}};
  for (const auto& [s, b] : cases) {
    const auto r = verify_linear_equilibrium(s, b, budget);
    EXPECT_TRUE(r.constant_curve) << to_string(s.family()) << " z=" << r.max_abs_z;
    EXPECT_TRUE(r.covers_support) << to_string(s.family()) << " coverage=" << r.coverage;
    EXPECT_TRUE(r.no_deviation) << to_string(s.family()) << " moved=" << r.deviation_fraction;
    EXPECT_TRUE(r.pass());
  }
}

TEST(LinearEquilibrium, ExponentialEqualBiasFails) {
  const auto r = verify_linear_equilibrium(SourceModel::iid_exponential(2, 1.0), B({1, 1}), {200'000, 11});
  EXPECT_GT(r.max_abs_z, 5.0);
  EXPECT_FALSE(r.constant_curve);
  EXPECT_FALSE(r.no_deviation);
  EXPECT_GT(r.max_report_gap, r.report_resolution);
  EXPECT_FALSE(r.pass());
}

TEST(LinearEquilibrium, RejectsBadInput) {
  const auto s = SourceModel::iid_gaussian(2, 0.0, 1.0);
  EXPECT_THROW(verify_linear_equilibrium(s, B({0, 0})), InvalidArgument);
  EXPECT_THROW(verify_linear_equilibrium(s, B({1, 1, 1})), DimensionMismatch);
  EXPECT_THROW(verify_linear_equilibrium(s, B({1, 1}), {}, 1), InvalidArgument);
}

}  // namespace
}  // namespace cheaptalk
