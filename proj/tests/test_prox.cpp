#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace cs_test;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<ProxFn> catalog(Gen& gen, Index dim) {
  const Matrix P = gen.psd(dim, dim);
  return {ProxFn::zero(), ProxFn::l1(0.7),
          ProxFn::box(Vector::Constant(dim, -0.5), Vector::Constant(dim, 1.5)),
          ProxFn::box(Vector::Constant(dim, -kInf), Vector::Constant(dim, 0.25)),
          ProxFn::quadratic(P, gen.gaussian(dim), 0.5 * P)};
}

}  // namespace

TEST(ProxEval, ZeroIsIdentity) {
  const Vector v = vec({1.5, -2.0, 0.0});
  EXPECT_EQ(prox_eval(ProxFn::zero(), 0.3, v), v);
  EXPECT_EQ(prox_eval(ProxFn::zero(), 7.0, v), v);
}

TEST(ProxEval, SoftThreshold) {
  const ProxFn f = ProxFn::l1(1.0);
  EXPECT_DOUBLE_EQ(prox_eval(f, 1.0, vec({2.0}))(0), 1.0);
  EXPECT_DOUBLE_EQ(prox_eval(f, 1.0, vec({-0.5}))(0), 0.0);
  EXPECT_DOUBLE_EQ(prox_eval(f, 4.0, vec({-0.5}))(0), -0.25);
}

TEST(ProxEval, BoxProjection) {
  const ProxFn f = ProxFn::box(vec({0.0}), vec({1.0}));
  EXPECT_DOUBLE_EQ(prox_eval(f, 3.0, vec({1.7}))(0), 1.0);
  EXPECT_DOUBLE_EQ(prox_eval(f, 3.0, vec({-2.0}))(0), 0.0);
  EXPECT_DOUBLE_EQ(prox_eval(f, 3.0, vec({0.4}))(0), 0.4);
}

TEST(ProxEval, InfiniteBoundsRecoverOneSidedAndFree) {
  const ProxFn lower_only = ProxFn::box(vec({0.0}), vec({kInf}));
  EXPECT_DOUBLE_EQ(prox_eval(lower_only, 1.0, vec({5.0}))(0), 5.0);
  EXPECT_DOUBLE_EQ(prox_eval(lower_only, 1.0, vec({-5.0}))(0), 0.0);
  const ProxFn free = ProxFn::box(vec({-kInf}), vec({kInf}));
  EXPECT_DOUBLE_EQ(prox_eval(free, 1.0, vec({-5.0}))(0), -5.0);
}

TEST(ProxEval, QuadraticClosedForm) {
  // argmin 1/2 p x^2 + q x + r/2 (x - v)^2 = (r v - q) / (p + r)
  const ProxFn f = ProxFn::quadratic(mat({{2.0}}), vec({1.0}));
  EXPECT_NEAR(prox_eval(f, 2.0, vec({3.0}))(0), (2.0 * 3.0 - 1.0) / 4.0, 1e-15);
}

TEST(ProxEval, IndicatorIsIdempotent) {
  const ProxFn f = ProxFn::box(vec({-1.0, 0.0}), vec({1.0, 2.0}));
  const Vector y = prox_eval(f, 2.0, vec({3.0, -4.0}));
  EXPECT_EQ(prox_eval(f, 2.0, y), y);
}

TEST(ProxEval, RejectsNonpositiveR) {
  EXPECT_THROW(prox_eval(ProxFn::zero(), 0.0, vec({1.0})), UsageError);
  EXPECT_THROW(prox_eval(ProxFn::l1(1.0), -1.0, vec({1.0})), UsageError);
}

TEST(ProxEval, OpaqueDelegates) {
  const ProxFn hidden = ProxFn::opaque(ProxFn::l1(1.0));
  EXPECT_DOUBLE_EQ(prox_eval(hidden, 1.0, vec({2.0}))(0), 1.0);
  const ProxFn callable = ProxFn::opaque([](double r, const Vector& v) { return Vector(v / (1.0 + 1.0 / r)); });
  EXPECT_DOUBLE_EQ(prox_eval(callable, 1.0, vec({2.0}))(0), 1.0);
  EXPECT_TRUE(std::isnan(prox_value(callable, vec({1.0}))));
}

TEST(SubdiffDistance, ZeroKind) {
  EXPECT_DOUBLE_EQ(subdiff_distance(ProxFn::zero(), vec({3.0, 1.0}), vec({3.0, 4.0})), 5.0);
}

TEST(SubdiffDistance, L1) {
  const ProxFn f = ProxFn::l1(1.0);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({0.0}), vec({0.4})), 0.0);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({2.0}), vec({0.0})), 1.0);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({0.0}), vec({1.5})), 0.5);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({-3.0}), vec({1.0})), 0.0);
}

TEST(SubdiffDistance, BoxNormalCone) {
  const ProxFn f = ProxFn::box(vec({0.0}), vec({1.0}));
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({0.5}), vec({0.3})), 0.3);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({0.0}), vec({0.3})), 0.0);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({0.0}), vec({-0.3})), 0.3);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({1.0}), vec({-0.3})), 0.0);
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({1.0}), vec({0.3})), 0.3);
  const ProxFn point = ProxFn::box(vec({2.0}), vec({2.0}));
  EXPECT_DOUBLE_EQ(subdiff_distance(point, vec({2.0}), vec({5.0})), 0.0);
}

TEST(SubdiffDistance, BoxOutsideDomainThrows) {
  const ProxFn f = ProxFn::box(vec({0.0}), vec({1.0}));
  EXPECT_THROW(subdiff_distance(f, vec({1.5}), vec({0.0})), DomainError);
  EXPECT_NO_THROW(subdiff_distance(f, vec({1.0 + 1e-13}), vec({0.0})));
}

TEST(SubdiffDistance, QuadraticAndOpaque) {
  const ProxFn f = ProxFn::quadratic(mat({{2.0}}), vec({1.0}));
  EXPECT_DOUBLE_EQ(subdiff_distance(f, vec({1.0}), vec({-3.0})), 0.0);
  EXPECT_THROW(subdiff_distance(ProxFn::opaque(ProxFn::zero()), vec({1.0}), vec({0.0})), UnsupportedError);
}

TEST(ValidateProx, Invariants) {
  EXPECT_THROW(validate_prox(ProxFn::l1(-1.0), 1), StructuralError);
  EXPECT_THROW(validate_prox(ProxFn::box(vec({1.0}), vec({0.0})), 1), StructuralError);
  EXPECT_THROW(validate_prox(ProxFn::quadratic(mat({{1.0, 2.0}, {0.0, 1.0}}), vec({0, 0})), 2), StructuralError);
  EXPECT_THROW(validate_prox(ProxFn::quadratic(mat({{-1.0}}), vec({0})), 1), StructuralError);
  EXPECT_THROW(validate_prox(ProxFn::quadratic(mat({{1.0}}), vec({0}), mat({{2.0}})), 1), StructuralError);
  EXPECT_NO_THROW(validate_prox(ProxFn::quadratic(mat({{1.0}}), vec({0}), mat({{1.0}})), 1));
  ProxFn l1 = ProxFn::l1(1.0);
  l1.sigma = mat({{0.5}});
  EXPECT_THROW(validate_prox(l1, 1), StructuralError);
  EXPECT_THROW(validate_prox(ProxFn::opaque(ProxFn::ProxCallable{}), 1), StructuralError);
}

TEST(ProxKindNames, RoundTrip) {
  for (auto k : {ProxKind::zero, ProxKind::l1, ProxKind::box, ProxKind::quadratic, ProxKind::opaque})
    EXPECT_EQ(prox_kind_from_string(to_string(k)), k);
  EXPECT_THROW(prox_kind_from_string("nuclear"), StructuralError);
}

TEST(ProxProperties, FirmNonexpansive) {
  Gen gen(11);
  for (int t = 0; t < 200; ++t) {
    const Index dim = gen.integer(1, 4);
    const double r = gen.uniform(0.1, 5.0);
    for (const auto& f : catalog(gen, dim)) {
      const Vector v = 2.0 * gen.gaussian(dim), w = 2.0 * gen.gaussian(dim);
      const Vector pv = prox_eval(f, r, v), pw = prox_eval(f, r, w);
      EXPECT_LE((pv - pw).norm(), (v - w).norm() * (1.0 + 1e-12));
      EXPECT_LE((pv - pw).squaredNorm(), (pv - pw).dot(v - w) + 1e-12);
    }
  }
}

TEST(ProxProperties, OptimalityResidual) {
  Gen gen(12);
  for (int t = 0; t < 200; ++t) {
    const Index dim = gen.integer(1, 4);
    const double r = gen.uniform(0.1, 5.0);
    for (const auto& f : catalog(gen, dim)) {
      const Vector v = 2.0 * gen.gaussian(dim);
      const Vector y = prox_eval(f, r, v);
      EXPECT_LE(subdiff_distance(f, y, r * (y - v)), 1e-10 * (1.0 + v.norm()));
    }
  }
}

TEST(ProxProperties, QuadraticStrongMonotonicity) {
  Gen gen(13);
  for (int t = 0; t < 200; ++t) {
    const Index dim = gen.integer(1, 4);
    const Matrix P = gen.psd(dim, gen.integer(1, dim));
    const ProxFn f = ProxFn::quadratic(P, gen.gaussian(dim), 0.9 * P);
    ASSERT_NO_THROW(validate_prox(f, dim));
    const Vector x = gen.gaussian(dim), xh = gen.gaussian(dim);
    const Vector w = P * x + f.q, wh = P * xh + f.q;
    EXPECT_GE((x - xh).dot(w - wh) + 1e-12, linalg::wnorm_sq(x - xh, f.sigma_matrix(dim)));
  }
}
