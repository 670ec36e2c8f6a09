#include "dgrham/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace dgrham;

namespace {

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr cartesian(int n) { return std::make_shared<const Mesh>(generate_cartesian(n, n)); }
MeshPtr perturbed(int n) { return std::make_shared<const Mesh>(generate_perturbed_quad(n, n, 0.2, 42)); }

VectorFunction trig_field() {
  return [](const Vec2& x) {
    return Vec2(std::sin(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y()), std::cos(2 * M_PI * (x.x() + x.y())));
  };
}

VectorFieldT steady(const VectorFunction& f) {
  return [f](const Vec2& x, double) { return f(x); };
}

}  // namespace

TEST(L2Error, ZeroFieldAgainstZero) {
  const SpacePtr sp = build_space(cartesian(3), SpaceFamily::VectorCurlOptimal, 1);
  const Field u = Field(sp);
  EXPECT_EQ(l2_error(u, VectorFieldT([](const Vec2&, double) { return Vec2(0, 0); }), 0.0), 0.0);
  const SpacePtr ss = build_space(cartesian(3), SpaceFamily::DGScalar, 1);
  EXPECT_EQ(l2_error(Field(ss), ScalarFieldT([](const Vec2&, double) { return 0.0; }), 0.0), 0.0);
}

TEST(L2Error, ProjectionIsBestApproximation) {
  const SpacePtr sp = build_space(perturbed(6), SpaceFamily::VectorDivOptimal, 1);
  const Field u = l2_project(sp, trig_field());
  const double best = l2_error(u, steady(trig_field()), 0.0);
  EXPECT_GT(best, 0.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Field v = u;
    for (auto& c : v.coeffs) c += 1e-3 * g(rng);
    EXPECT_GT(l2_error(v, steady(trig_field()), 0.0), best);
  }
}

TEST(L2Error, ComponentsCombineToFullError) {
  const SpacePtr sp = build_space(perturbed(5), SpaceFamily::VectorCurlOptimal, 2);
  const Field u = l2_project(sp, trig_field());
  const VectorFieldT shifted = [](const Vec2& x, double) { return Vec2(std::cos(2 * M_PI * x.y()), 1.0 + 0 * x.x()); };
  const double ex = l2_error_component(u, 0, shifted, 0.0);
  const double ey = l2_error_component(u, 1, shifted, 0.0);
  EXPECT_NEAR(std::hypot(ex, ey), l2_error(u, shifted, 0.0), 1e-13);
  EXPECT_THROW(l2_error_component(u, 2, shifted, 0.0), std::invalid_argument);
}

TEST(L2Error, RejectsMismatchedExactSolution) {
  const SpacePtr sp = build_space(cartesian(2), SpaceFamily::VectorCurlOptimal, 0);
  EXPECT_THROW(l2_error(Field(sp), ScalarFieldT([](const Vec2&, double) { return 0.0; }), 0.0), std::invalid_argument);
  const SpacePtr ss = build_space(cartesian(2), SpaceFamily::DGScalar, 0);
  EXPECT_THROW(l2_error(Field(ss), steady(trig_field()), 0.0), std::invalid_argument);
}

TEST(L2Error, ProjectionRateOnPerturbedQuads) {
  for (SpaceFamily fam : {SpaceFamily::VectorCurlOptimal, SpaceFamily::VectorDivOptimal}) {
    for (int k = 0; k <= 2; ++k) {
      std::vector<double> hs, es;
      for (int n : {8, 16, 32}) {
        const SpacePtr sp = build_space(perturbed(n), fam, k);
        hs.push_back(1.0 / n);
        es.push_back(l2_error(l2_project(sp, trig_field()), steady(trig_field()), 0.0));
      }
      EXPECT_GE(least_squares_slope(hs, es), k + 0.5) << to_string(fam) << " k=" << k;
    }
  }
}

TEST(L2Error, WavetrainPlusVortexReferenceErrors) {
  const TestCase tc = make_test_case("maxwell_wavetrain_plus_vortex");
  std::vector<double> es;
  for (int n : {10, 20}) {
    RunOptions opt;
    opt.degree = 1;
    opt.compute_drift = false;
    opt.stride = 1000;
    es.push_back(run_case(tc, cartesian(n), opt).error("e_x"));
  }
  EXPECT_NEAR(es[1], 3.94e-2, 0.01 * 3.94e-2);
  EXPECT_NEAR(std::log2(es[0] / es[1]), 2.12, 0.02);
}

TEST(Drift, ZeroForIdenticalFieldsAndSymmetric) {
  const SpacePtr sp = build_space(perturbed(4), SpaceFamily::VectorCurlOptimal, 1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Field u = Field(sp), v = Field(sp);
  for (auto& c : u.coeffs) c = g(rng);
  for (auto& c : v.coeffs) c = g(rng);
  for (DriftKind kind : {DriftKind::AdjointDiv, DriftKind::AdjointCurl}) {
    EXPECT_EQ(constraint_drift(u, u, kind), 0.0);
    EXPECT_GT(constraint_drift(u, v, kind), 0.0);
    EXPECT_EQ(constraint_drift(u, v, kind), constraint_drift(v, u, kind));
  }
}

TEST(Drift, MatchesAdjointNormOfDifference) {
  const SpacePtr sp = build_space(perturbed(4), SpaceFamily::VectorDivOptimal, 2);
  const Field u = l2_project(sp, trig_field());
  const Field u0 = Field(sp);
  const Field a = adjoint_perp(u);
  const MassOperator am(a.space);
  EXPECT_NEAR(constraint_drift(u, u0, DriftKind::AdjointCurl), std::sqrt(am.inner(a.coeffs, a.coeffs)), 1e-13);
}

TEST(Drift, RejectsSpaceMismatch) {
  const SpacePtr a = build_space(cartesian(3), SpaceFamily::VectorCurlOptimal, 1);
  const SpacePtr b = build_space(cartesian(3), SpaceFamily::VectorDivOptimal, 1);
  EXPECT_THROW(constraint_drift(Field(a), Field(b), DriftKind::AdjointDiv), std::invalid_argument);
  const SpacePtr c = build_space(cartesian(3), SpaceFamily::VectorCurlOptimal, 2);
  EXPECT_THROW(constraint_drift(Field(a), Field(c), DriftKind::AdjointDiv), std::invalid_argument);
}

TEST(Drift, StationaryWaveRuns) {
  const TestCase tc = make_test_case("wave_stationary");
  RunOptions opt;
  opt.vector_family = SpaceFamily::VectorDivOptimal;
  opt.degree = 1;
  opt.t_final = 3.0;
  opt.stride = 20;
  EXPECT_LE(run_case(tc, perturbed(10), opt).max_drift(), 1e-11);
  opt.vector_family = SpaceFamily::VectorTensor;
  EXPECT_GE(run_case(tc, perturbed(10), opt).drift.back(), 1e-3);
}

TEST(Energy, ClosedForms) {
  const SpacePtr sp = build_space(perturbed(4), SpaceFamily::VectorCurlOptimal, 1);
  EXPECT_EQ(energy(Field(sp)), 0.0);
  const Field one = l2_project(sp, VectorFunction([](const Vec2&) { return Vec2(1.0, 0.0); }));
  EXPECT_NEAR(energy(one), 0.5, 1e-13);
  const Field u = l2_project(sp, trig_field());
  Field twice = u;
  twice.coeffs *= 2.0;
  EXPECT_NEAR(energy(twice), 4.0 * energy(u), 1e-13 * energy(u));
}

TEST(ConvergenceTable, ClosedFormRate) {
  const ConvergenceTable t = convergence_table({{1e-2}, {2.5e-3}}, {0.1, 0.05});
  EXPECT_NEAR(t.rates[1][0], 2.0, 1e-14);
  EXPECT_TRUE(std::isnan(t.rates[0][0]));
  EXPECT_NEAR(t.slopes[0], 2.0, 1e-14);
  EXPECT_EQ(t.variables.front(), "var0");
}

TEST(ConvergenceTable, ReferenceRate) {
  const ConvergenceTable t = convergence_table({{4.90e-03}, {6.08e-04}}, {0.1, 0.05}, {"e_x"});
  EXPECT_NEAR(t.last_rate(0), 3.01, 0.005);
}

TEST(ConvergenceTable, SlopeOfExactPowerLaw) {
  std::vector<std::vector<double>> errs;
  std::vector<double> hs;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    hs.push_back(h);
    errs.push_back({3.0 * std::pow(h, 2.5), std::pow(h, 1.0)});
  }
  const ConvergenceTable t = convergence_table(errs, hs, {"a", "b"});
  for (std::size_t i = 1; i < hs.size(); ++i) {
    EXPECT_NEAR(t.rates[i][0], 2.5, 1e-12);
    EXPECT_NEAR(t.rates[i][1], 1.0, 1e-12);
  }
  EXPECT_NEAR(t.slopes[0], 2.5, 1e-12);
  EXPECT_NEAR(t.slopes[1], 1.0, 1e-12);
}

TEST(ConvergenceTable, Errors) {
  EXPECT_THROW(convergence_table({{1.0}}, {0.1}), std::invalid_argument);
  EXPECT_THROW(convergence_table({{1.0}, {0.5}}, {0.05, 0.1}), std::invalid_argument);
  EXPECT_THROW(convergence_table({{1.0}, {0.5}, {0.2}}, {0.1, 0.05, 0.05}), std::invalid_argument);
  EXPECT_THROW(convergence_table({{1.0}, {0.5, 0.2}}, {0.1, 0.05}), std::invalid_argument);
  EXPECT_THROW(convergence_table({{1.0}}, {0.1, 0.05}), std::invalid_argument);
}
