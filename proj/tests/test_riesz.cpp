#include "htype/riesz.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace htype;
using htype::testing::random_point;
using htype::testing::random_point_in_shell;
using htype::testing::random_vector;
using htype::testing::rel_diff;

namespace {

GroupPoint pt(const GroupSpec& spec, std::initializer_list<double> coords)
{
  std::vector<double> c(coords);
  return GroupPoint::from_coords(spec, c.data());
}

Density unit_bump(const GroupSpec& spec, double radius = 0.5, double amplitude = 1.0)
{
  return Density{{Bump{GroupPoint::identity(spec), radius, amplitude}}};
}

QuadratureConfig tight(double rel)
{
  QuadratureConfig q;
  q.rel_tol = rel;
  q.abs_tol = 1e-14;
  q.max_depth = 20;
  return q;
}

}  // namespace

TEST(RieszValue, SingleAtomExample)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Source mu = DiscreteMeasure{{{1.0, GroupPoint::identity(h1)}}};
  const IntegralResult r = riesz_value_result(h1, mu, RieszKernel{-1.0, false}, pt(h1, {0, 0, 1}), {});
  EXPECT_NEAR(r.value, 0.5, 1e-15);
  EXPECT_TRUE(r.converged);
}

TEST(RieszValue, EvaluationAtAtomThrows)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const GroupPoint a = pt(h1, {0.3, -0.2, 0.1});
  const Source mu = DiscreteMeasure{{{1.0, a}}};
  EXPECT_THROW(riesz_value_result(h1, mu, RieszKernel{-1.0, false}, a, {}), SingularityError);
  EXPECT_THROW(riesz_jet_result(h1, mu, RieszKernel{-1.0, false}, a, {}), SingularityError);
  EXPECT_THROW(field_K_result(h1, mu, -1.0, a, {}), SingularityError);
}

TEST(RieszValue, RejectsInvalidSources)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const GroupPoint g = pt(h1, {1, 0, 0});
  EXPECT_THROW(riesz_value_result(h1, Density{}, {}, g, {}), DomainError);
  EXPECT_THROW(riesz_value_result(h1, DiscreteMeasure{}, {}, g, {}), DomainError);
  EXPECT_THROW(riesz_value_result(h1, unit_bump(h1, -1.0), {}, g, {}), DomainError);
  EXPECT_THROW(riesz_value_result(h1, unit_bump(h1, 0.5, -1.0), {}, g, {}), DomainError);
  EXPECT_THROW(riesz_value_result(h1, DiscreteMeasure{{{-1.0, g}}}, {}, pt(h1, {0, 0, 0}), {}), DomainError);
  const GroupSpec h2 = GroupSpec::heisenberg(2);
  EXPECT_THROW(riesz_value_result(h1, unit_bump(h2), {}, g, {}), DimensionError);
}

// Brute-force midpoint sum on a 100^3 grid (agrees with 200^3 to 1e-10).
TEST(RieszValue, BumpMatchesRiemannSumOracle)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const double oracle = 0.0561455524;
  const IntegralResult r =
      riesz_value_result(h1, unit_bump(h1), RieszKernel{-0.5, false}, pt(h1, {2, 0, 0}), tight(1e-8));
  ASSERT_TRUE(r.converged);
  EXPECT_LT(std::abs(r.value - oracle) / oracle, 1e-3);
  EXPECT_LT(std::abs(r.value - oracle) / oracle, 1e-8);
}

TEST(RieszValue, PositiveForNegativeExponent)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    const GroupPoint g = random_point(h1, rng, 0.8);
    EXPECT_GT(riesz_value_result(h1, unit_bump(h1), RieszKernel{-0.5, false}, g, {}).value, 0.0);
  }
}

TEST(RieszValue, LinearInTheDensity)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  std::mt19937_64 rng(11);
  const QuadratureConfig quad = tight(1e-6);
  for (int trial = 0; trial < 3; ++trial) {
    const Bump b1{random_point(h1, rng, 0.5), 0.3 + 0.1 * trial, 1.3};
    const Bump b2{random_point(h1, rng, 0.5), 0.4, 0.7 + 0.2 * trial};
    const GroupPoint g = random_point(h1, rng, 0.8);
    const RieszKernel kernel{-0.5, false};
    const IntegralResult r1 = riesz_value_result(h1, Density{{b1}}, kernel, g, quad);
    const IntegralResult r2 = riesz_value_result(h1, Density{{b2}}, kernel, g, quad);
    const IntegralResult r12 = riesz_value_result(h1, Density{{b1, b2}}, kernel, g, quad);
    EXPECT_LE(std::abs(r12.value - r1.value - r2.value), r1.error_estimate + r2.error_estimate + 1e-14);
  }
}

TEST(RieszValue, KernelSymmetry)
{
  std::mt19937_64 rng(5);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(2), GroupSpec::quaternionic(1)}) {
    for (int i = 0; i < 200; ++i) {
      const GroupPoint g = random_point(spec, rng), gp = random_point(spec, rng);
      const double a = gauge_norm(multiply(spec, inverse(gp), g));
      const double b = gauge_norm(multiply(spec, inverse(g), gp));
      EXPECT_NEAR(a, b, 1e-15 * (1.0 + a));
    }
  }
}

TEST(RieszJet, SingleAtomIsAnalyticJet)
{
  const GroupSpec h2 = GroupSpec::heisenberg(2);
  std::mt19937_64 rng(2);
  const GroupPoint g = random_point(h2, rng);
  const Source mu = DiscreteMeasure{{{1.0, GroupPoint::identity(h2)}}};
  for (double q : {-1.5, 0.5, 2.0}) {
    const RieszJet rj = riesz_jet_result(h2, mu, RieszKernel{q, false}, g, {});
    const HorizontalJet ref = analytic_jet(h2, g, Kernel::N_pow(q));
    EXPECT_EQ(rj.jet.value, ref.value);
    EXPECT_EQ((rj.jet.grad - ref.grad).norm(), 0.0);
    EXPECT_EQ((rj.jet.hess - ref.hess).norm(), 0.0);
  }
  const RieszJet lj = riesz_jet_result(h2, mu, RieszKernel{0.0, true}, g, {});
  EXPECT_EQ((lj.jet.hess - analytic_jet(h2, g, Kernel::log_N()).hess).norm(), 0.0);
}

TEST(RieszJet, DensityJetMatchesFiniteDifferences)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Source rho = unit_bump(h1);
  const QuadratureConfig quad = tight(1e-10);
  for (const RieszKernel kernel : {RieszKernel{-0.5, false}, RieszKernel{0.5, false}, RieszKernel{0.0, true}}) {
    for (const GroupPoint& g : {pt(h1, {1.0, 0.3, 0.2}), pt(h1, {-0.4, 0.8, -0.5})}) {
      ScalarField f;
      f.value = [&](const GroupPoint& x) { return riesz_value_result(h1, rho, kernel, x, quad).value; };
      const HorizontalJet fd = fd_jet(h1, f, g, FdSteps{2e-2, 4e-2});
      const RieszJet rj = riesz_jet_result(h1, rho, kernel, g, quad);
      ASSERT_TRUE(rj.converged);
      const double gs = rj.jet.grad.norm();
      const double hs = rj.jet.hess.norm();
      EXPECT_LT((fd.grad - rj.jet.grad).norm() / gs, 1e-4) << kernel.q;
      EXPECT_LT((fd.hess - rj.jet.hess).norm() / hs, 1e-4) << kernel.q;
    }
  }
}

TEST(RieszJet, DensityJetInsideSupportMatchesFiniteDifferences)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Source rho = unit_bump(h1);
  // Adaptive meshes differ between stencil points, so the values must be far
  // more accurate than the derivatives; at this setting they are good to ~1e-11.
  const QuadratureConfig quad = tight(1e-7);
  const RieszKernel kernel{-0.5, false};
  const GroupPoint g = pt(h1, {0.1, -0.15, 0.05});
  ScalarField f;
  f.value = [&](const GroupPoint& x) { return riesz_value_result(h1, rho, kernel, x, quad).value; };
  const HorizontalJet fd = fd_jet(h1, f, g, FdSteps{2e-2, 4e-2});
  const RieszJet rj = riesz_jet_result(h1, rho, kernel, g, quad);
  ASSERT_TRUE(rj.converged);
  EXPECT_LT((fd.grad - rj.jet.grad).norm() / rj.jet.grad.norm(), 1e-4);
  EXPECT_LT((fd.hess - rj.jet.hess).norm() / rj.jet.hess.norm(), 1e-4);
}

TEST(RieszJet, HomogeneityUnderDilation)
{
  const GroupSpec spec = GroupSpec::quaternionic(1);
  std::mt19937_64 rng(9);
  DiscreteMeasure mu;
  for (int j = 0; j < 4; ++j) mu.atoms.push_back({0.5 + j, random_point(spec, rng)});
  const GroupPoint g = random_point(spec, rng, 2.0);
  for (double lambda : {0.5, 3.0}) {
    DiscreteMeasure dil = mu;
    for (Atom& a : dil.atoms) a.point = dilate(spec, lambda, a.point);
    for (double q : {-2.0, 1.0}) {
      const RieszJet base = riesz_jet_result(spec, mu, RieszKernel{q, false}, g, {});
      const RieszJet scaled = riesz_jet_result(spec, dil, RieszKernel{q, false}, dilate(spec, lambda, g), {});
      EXPECT_NEAR(scaled.jet.value, std::pow(lambda, q) * base.jet.value, 1e-12 * std::abs(scaled.jet.value));
      const Vector expected = std::pow(lambda, q - 1.0) * base.jet.grad;
      EXPECT_LT((scaled.jet.grad - expected).norm(), 1e-12 * expected.norm());
    }
  }
}

TEST(FieldK, GradientIsQTimesKForAtoms)
{
  std::mt19937_64 rng(21);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(2), GroupSpec::quaternionic(1)}) {
    DiscreteMeasure mu;
    for (int j = 0; j < 3; ++j) mu.atoms.push_back({1.0 + j, random_point(spec, rng)});
    for (int i = 0; i < 20; ++i) {
      const GroupPoint g = random_point(spec, rng, 1.5);
      for (double q : {-3.0, -0.5, 1.0, 2.5}) {
        const Vector K = field_K(spec, mu, q, g, {});
        const Vector grad = riesz_jet_result(spec, mu, RieszKernel{q, false}, g, {}).jet.grad;
        EXPECT_LT((grad - q * K).norm(), 1e-12 * (1.0 + grad.norm()));
      }
      const Vector K0 = field_K(spec, mu, 0.0, g, {});
      const Vector lgrad = riesz_jet_result(spec, mu, RieszKernel{0.0, true}, g, {}).jet.grad;
      EXPECT_LT((lgrad - K0).norm(), 1e-12 * (1.0 + lgrad.norm()));
    }
  }
}

TEST(FieldK, GradientIsQTimesKForDensity)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Source rho = unit_bump(h1);
  const QuadratureConfig quad = tight(1e-5);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 4; ++i) {
    const GroupPoint g = random_point(h1, rng, 0.7);
    const double q = -0.5;
    const FieldK K = field_K_result(h1, rho, q, g, quad);
    const RieszJet rj = riesz_jet_result(h1, rho, RieszKernel{q, false}, g, quad);
    ASSERT_TRUE(K.converged && rj.converged);
    for (int c = 0; c < 2; ++c) {
      EXPECT_LE(std::abs(rj.jet.grad(c) - q * K.value(c)), rj.error.grad(c) + std::abs(q) * K.error(c) + 1e-13);
    }
  }
}

// Mirror pair g exp(+-z0): for q = 4 the A-terms are -+ psi z0 and cancel.
TEST(FieldK, MirrorAtomsCancel)
{
  std::mt19937_64 rng(8);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(3), GroupSpec::quaternionic(1)}) {
    for (int i = 0; i < 20; ++i) {
      const GroupPoint g = random_point(spec, rng);
      const Vector z0 = random_vector(spec.m(), rng);
      const GroupPoint plus{z0, Vector::Zero(spec.k())}, minus{-z0, Vector::Zero(spec.k())};
      const DiscreteMeasure mu{{{1.0, multiply(spec, g, plus)}, {1.0, multiply(spec, g, minus)}}};
      const Vector K = field_K(spec, mu, 4.0, g, {});
      EXPECT_LT(K.norm(), 1e-13 * std::pow(z0.norm(), 3));
      const Vector K1 = field_K(spec, DiscreteMeasure{{mu.atoms[0]}}, 4.0, g, {});
      EXPECT_GT(K1.norm(), 0.1 * std::pow(z0.norm(), 3));
    }
  }
}

TEST(Bracket, IdentitiesAndSignsOverRandomDraws)
{
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uq(0.0, 6.0);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(2), GroupSpec::quaternionic(1)}) {
    const double Q = spec.Q();
    for (int i = 0; i < 10000; ++i) {
      const double p = std::array<double, 4>{2.5, 3.0, 6.0, 12.0}[static_cast<std::size_t>(i % 4)];
      const double q = (p - Q) / (p - 1.0) + (i % 5 == 0 ? 0.0 : uq(rng));
      const GroupPoint g = random_point(spec, rng);
      const Vector K = random_vector(spec.m(), rng);
      const BracketBreakdown b = bracket_terms(spec, p, q, g, K);
      // Every term of estimate0, I and II is bounded by a psi |K|^2.
      const Primitives pr = primitives(spec, g);
      const double scale = pr.a * pr.psi * K.squaredNorm();
      ASSERT_LE(std::abs(b.estimate0 - b.I - b.II), 1e-12 * scale);
      ASSERT_GE(b.I, 0.0);
      ASSERT_GE(b.II, -1e-12 * 16.0 * pr.chi * pr.psi * K.squaredNorm());
      ASSERT_NEAR(b.bracket, b.cs_part + 2.0 * (p - 2.0) * b.estimate0, 1e-12 * (std::abs(b.bracket) + 1.0));
      const double bscale = (std::abs(Q + p + q - 4.0) + std::abs((q - 2.0) * (p - 2.0)) + 4.0 * (p - 2.0)) * scale;
      ASSERT_GE(b.bracket, -1e-12 * bscale);
      const Matrix M = bracket_matrix(spec, p, q, g);
      ASSERT_NEAR(K.dot(M * K), b.bracket, 1e-12 * bscale);
    }
  }
}

TEST(Bracket, ParallelKAndZeroT)
{
  const GroupSpec h2 = GroupSpec::heisenberg(2);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const double p = 3.0 + i % 7;
    const double q = (p - h2.Q()) / (p - 1.0);
    GroupPoint g = random_point(h2, rng);
    const Primitives pr = primitives(h2, g);
    const BracketBreakdown par = bracket_terms(h2, p, q, g, 1.7 * pr.A);
    EXPECT_GE(par.cs_part, -1e-12 * pr.A.squaredNorm() * pr.A.squaredNorm());
    g.t.setZero();
    const Vector K = random_vector(h2.m(), rng);
    const BracketBreakdown b = bracket_terms(h2, p, q, g, K);
    const Primitives p0 = primitives(h2, g);
    const Vector KJ = p0.B.transpose() * K;
    EXPECT_EQ(b.II, 0.0);
    EXPECT_NEAR(b.I, p0.psi * p0.psi * KJ.squaredNorm(), 1e-13);
  }
}

TEST(Bracket, RejectsIdentityAndBadK)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  EXPECT_THROW(bracket_terms(h1, 3.0, -0.5, GroupPoint::identity(h1), Vector::Ones(2)), SingularityError);
  EXPECT_THROW(bracket_terms(h1, 3.0, -0.5, pt(h1, {1, 0, 0}), Vector::Ones(3)), DimensionError);
}

TEST(TwoWays, SingleAtomExample)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const TheoremCase c = TheoremCase::classify(h1.Q(), 3.0, 0.5);
  const Source mu = DiscreteMeasure{{{1.0, GroupPoint::identity(h1)}}};
  const TwoWays t = plaplacian_two_ways(h1, mu, c, pt(h1, {1, 0, 0}), {});
  ASSERT_FALSE(t.skipped);
  EXPECT_LE(t.gap(), 1e-12 * std::abs(t.direct));
  EXPECT_LE(t.gap(), t.combined_error());
  EXPECT_LE(t.via_bracket, 0.0);
}

TEST(TwoWays, AtomsAllCasesAndGroups)
{
  std::mt19937_64 rng(33);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(2), GroupSpec::quaternionic(1)}) {
    const int Q = spec.Q();
    const std::vector<TheoremCase> cases = {
        TheoremCase::classify(Q, 3.0, (Q - 3.0) / 2.0),
        TheoremCase::classify(Q, 3.0, 0.5 * (Q - 3.0) / 2.0),
        TheoremCase::classify(Q, Q + 2.0, -1.0),
        TheoremCase::classify(Q, double(Q), 0.0),
    };
    for (const TheoremCase& c : cases) {
      DiscreteMeasure mu;
      for (int j = 0; j < 3; ++j) mu.atoms.push_back({0.5 + j, random_point(spec, rng)});
      for (int i = 0; i < 10; ++i) {
        const GroupPoint g = random_point(spec, rng, 2.0);
        const TwoWays t = plaplacian_two_ways(spec, mu, c, g, {});
        if (t.skipped) continue;
        EXPECT_LE(t.gap(), t.combined_error()) << spec.name() << " p=" << c.p;
        EXPECT_LE(t.gap(), 1e-10 * (std::abs(t.direct) + std::abs(t.via_bracket)));
        if (c.kind == CaseKind::super) EXPECT_LE(t.via_bracket, 0.0);
        else EXPECT_GE(t.via_bracket, 0.0);
      }
    }
  }
}

TEST(TwoWays, DensityAgreesWithinCombinedError)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const TheoremCase c = TheoremCase::classify(h1.Q(), 3.0, 0.5);
  const Source rho = unit_bump(h1);
  const QuadratureConfig quad;
  std::mt19937_64 rng(17);
  int compared = 0;
  for (int i = 0; i < 20; ++i) {
    const GroupPoint g = random_point(h1, rng, 0.9);
    const TwoWays t = plaplacian_two_ways(h1, rho, c, g, quad);
    ASSERT_TRUE(t.converged);
    if (t.skipped) continue;
    ++compared;
    EXPECT_LE(t.gap(), t.combined_error()) << i;
    EXPECT_LE(t.via_bracket, t.via_err);
  }
  EXPECT_GE(compared, 18);
}

TEST(TheoremCase, Classification)
{
  const int Q = 4;
  EXPECT_EQ(TheoremCase::classify(Q, 3.0, 0.5).kind, CaseKind::super);
  EXPECT_EQ(TheoremCase::classify(Q, 3.0, 0.5).q, -0.5);
  EXPECT_EQ(TheoremCase::classify(Q, 6.0, -0.5).kind, CaseKind::sub);
  EXPECT_EQ(TheoremCase::classify(Q, 6.0, -0.4).kind, CaseKind::sub);
  EXPECT_EQ(TheoremCase::classify(Q, 4.0, 0.0).kind, CaseKind::log);
  EXPECT_EQ(TheoremCase::classify(Q, INFINITY, -1.0).kind, CaseKind::infinity);
  EXPECT_THROW(TheoremCase::classify(Q, 3.0, 0.6), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, 3.0, 0.0), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, 6.0, -0.3), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, 4.0, 0.1), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, INFINITY, -0.5), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, 2.0, 0.5), DomainError);
  EXPECT_THROW(TheoremCase::classify(Q, 3.0, 4.0, true), DomainError);
  const TheoremCase e = TheoremCase::classify(Q, 3.0, 0.6, true);
  EXPECT_TRUE(e.exploratory);
  EXPECT_EQ(e.kind, CaseKind::super);
}

TEST(Verify, ThreeAtomsAtThresholdSuper)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const TheoremCase c = TheoremCase::classify(h1.Q(), 3.0, 0.5);
  const DiscreteMeasure mu{{{1.0, pt(h1, {0.5, 0, 0})}, {2.0, pt(h1, {-0.3, 0.4, 0.2})}, {0.5, pt(h1, {0, -0.6, -0.3})}}};
  std::vector<GroupPoint> samples;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int l = 0; l < 5; ++l) samples.push_back(pt(h1, {-1.1 + 0.55 * i, -1.1 + 0.55 * j, -0.9 + 0.45 * l}));
  const VerificationReport rep = verify_theorem(h1, mu, c, samples, {}, {2});
  EXPECT_TRUE(rep.pass);
  EXPECT_FALSE(rep.numerical_failure);
  ASSERT_EQ(rep.points.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(rep.points[i].g, samples[i]);
    EXPECT_LE(rep.points[i].plap, rep.points[i].tau);
  }
}

TEST(Verify, SuperpositionOfFundamentalSolutions)
{
  std::mt19937_64 rng(77);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::heisenberg(2), GroupSpec::quaternionic(1)}) {
    const int Q = spec.Q();
    for (double p : {2.5, 3.0, Q - 0.5}) {
      const TheoremCase c = TheoremCase::classify(Q, p, (Q - p) / (p - 1.0));
      DiscreteMeasure mu;
      for (int j = 0; j < 6; ++j) mu.atoms.push_back({0.1 + j, random_point(spec, rng)});
      std::vector<GroupPoint> samples;
      for (int i = 0; i < 60; ++i) samples.push_back(random_point(spec, rng, 1.5));
      const VerificationReport rep = verify_theorem(spec, mu, c, samples, {});
      EXPECT_TRUE(rep.pass) << spec.name() << " p=" << p << " max violation " << rep.max_violation;
    }
  }
}

TEST(Verify, InfinityBranchOnAtoms)
{
  std::mt19937_64 rng(12);
  for (const GroupSpec& spec : {GroupSpec::heisenberg(1), GroupSpec::quaternionic(1)}) {
    for (double alpha : {-1.0, -2.5}) {
      const TheoremCase c = TheoremCase::classify(spec.Q(), INFINITY, alpha);
      DiscreteMeasure mu;
      for (int j = 0; j < 4; ++j) mu.atoms.push_back({1.0, random_point(spec, rng)});
      std::vector<GroupPoint> samples;
      for (int i = 0; i < 50; ++i) samples.push_back(random_point(spec, rng, 1.5));
      const VerificationReport rep = verify_theorem(spec, mu, c, samples, {});
      EXPECT_TRUE(rep.pass) << rep.max_violation;
    }
  }
}

TEST(Verify, DensityCasesOnH1)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Source rho = unit_bump(h1);
  QuadratureConfig quad;
  quad.rel_tol = 1e-5;
  const std::vector<GroupPoint> samples = {pt(h1, {0.1, 0.05, 0.0}), pt(h1, {0.3, -0.2, 0.1}),
                                           pt(h1, {0.8, 0.1, -0.2}), pt(h1, {-0.2, 0.9, 0.6})};
  for (const TheoremCase& c : {TheoremCase::classify(4, 3.0, 0.5), TheoremCase::classify(4, 6.0, -0.5),
                               TheoremCase::classify(4, 4.0, 0.0)}) {
    const VerificationReport rep = verify_theorem(h1, rho, c, samples, quad);
    EXPECT_TRUE(rep.pass) << to_string(c.kind) << " " << rep.max_violation;
    for (const PointReport& p : rep.points) {
      EXPECT_NE(p.verdict, Verdict::unconverged);
      EXPECT_GT(p.tau, 0.0);
      EXPECT_LT(p.error, 1e-2 * std::abs(p.plap) + 1e-6);
    }
  }
}

TEST(Verify, FlagsUnconvergedPoints)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  QuadratureConfig starved;
  starved.rel_tol = 1e-13;
  starved.abs_tol = 1e-16;
  starved.max_depth = 1;
  starved.singular_refine_depth = 0;
  const VerificationReport rep = verify_theorem(h1, unit_bump(h1), TheoremCase::classify(4, 3.0, 0.5),
                                                {pt(h1, {0.1, 0.05, 0.0})}, starved);
  EXPECT_FALSE(rep.pass);
  EXPECT_TRUE(rep.numerical_failure);
  EXPECT_EQ(rep.points[0].verdict, Verdict::unconverged);
}

TEST(Verify, ExploratoryPairsBeyondThresholdFail)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const TheoremCase c = TheoremCase::classify(h1.Q(), 3.0, 0.8, true);
  const DiscreteMeasure mu{{{1.0, GroupPoint::identity(h1)}}};
  const VerificationReport rep = verify_theorem(h1, mu, c, {pt(h1, {1, 0, 0}), pt(h1, {0.5, 0.5, 0.3})}, {});
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.max_violation, 0.0);
}

TEST(Verify, GuardsAndAtomSamples)
{
  const GroupSpec h2 = GroupSpec::heisenberg(2);
  const TheoremCase c = TheoremCase::classify(h2.Q(), 3.0, 1.0);
  std::mt19937_64 rng(1);
  EXPECT_THROW(verify_theorem(h2, unit_bump(h2), c, {random_point(h2, rng)}, {}), DomainError);
  const GroupPoint a = pt(h2, {0.1, 0.2, 0.3, 0.4, 0.5});
  EXPECT_THROW(verify_theorem(h2, DiscreteMeasure{{{1.0, a}}}, c, {a}, {}), SingularityError);
}

TEST(LinearPotential, ProportionalToDensity)
{
  const GroupSpec h1 = GroupSpec::heisenberg(1);
  const Density rho = unit_bump(h1, 0.6);
  std::vector<GroupPoint> samples;
  std::mt19937_64 rng(41);
  while (samples.size() < 10) {
    const GroupPoint g = random_point(h1, rng, 0.35);
    if (rho.value(g) > 0.2) samples.push_back(g);
  }
  // The density Hessian is only continuous at the support edge, which makes
  // tight tolerances expensive; 1e-3 leaves a wide margin under the spread bound.
  QuadratureConfig quad;
  quad.rel_tol = 1e-3;
  const LinearPotentialReport rep = verify_linear_potential(h1, rho, samples, quad, 0.25 * std::numbers::pi);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.spread, 0.02);
  EXPECT_GT(rep.mean, 0.0);
  EXPECT_NEAR(rep.predicted, 2.0 * std::numbers::pi, 1e-12);

  Density doubled = rho;
  doubled.bumps[0].amplitude = 2.0;
  const LinearPotentialReport rep2 = verify_linear_potential(h1, doubled, samples, quad);
  for (std::size_t i = 0; i < samples.size(); ++i)
    EXPECT_NEAR(rep2.ratios[i], rep.ratios[i], 2.0 * (rep.errors[i] + rep2.errors[i]) + 1e-10);

  // A general left translation shears the coordinate ball; central ones do not.
  const GroupPoint central = pt(h1, {0.0, 0.0, 0.3});
  Density moved = rho;
  moved.bumps[0].center = multiply(h1, central, rho.bumps[0].center);
  std::vector<GroupPoint> moved_samples;
  for (const GroupPoint& g : samples) moved_samples.push_back(multiply(h1, central, g));
  const LinearPotentialReport rep3 = verify_linear_potential(h1, moved, moved_samples, quad);
  for (std::size_t i = 0; i < samples.size(); ++i)
    EXPECT_NEAR(rep3.ratios[i], rep.ratios[i], 2.0 * (rep.errors[i] + rep3.errors[i]) + 1e-8);

  EXPECT_THROW(verify_linear_potential(h1, rho, {pt(h1, {2, 0, 0})}, quad), DomainError);
}
