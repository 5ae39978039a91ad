#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace psm;
using testing_support::random_vector;
using testing_support::truth_state;

namespace {

double fd_relative_error(const AssembledLoss& loss, const Vector& x) {
  const Vector g = loss.gradient(x);
  const Vector fd = oracle::fd_gradient([&](const Vector& y) { return loss.value(y); }, x, 1e-6);
  return (g - fd).cwiseAbs().maxCoeff() / std::max(1e-300, g.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(ParseNorm, Spellings) {
  EXPECT_EQ(parse_norm("l2").k, 0);
  EXPECT_EQ(parse_norm("l2-weak").mode, LossMode::Weak);
  EXPECT_EQ(parse_norm("l2-strong").mode, LossMode::Strong);
  const auto c = parse_norm("h-1-star");
  EXPECT_EQ(c.k, -1);
  EXPECT_EQ(c.variant, SobolevVariant::Starred);
  EXPECT_EQ(parse_norm("h2").k, 2);
  EXPECT_EQ(to_string(parse_norm("h-1-star-weak")), "h-1-star-weak");
  EXPECT_THROW(parse_norm("h"), std::invalid_argument);
  EXPECT_THROW(parse_norm("sobolev"), std::invalid_argument);
}

TEST(StrongLoss, VanishesAtExactPolynomialSolution) {
  const auto p = testing_support::polynomial_poisson2d();
  for (const char* norm : {"l2", "h1", "h-1-star", "h-1"}) {
    LossSpec spec;
    spec.pde = parse_norm(norm);
    const auto loss = assemble_loss(p, spec, 6, 8);
    EXPECT_LE(loss.value(truth_state(p, loss)), 1e-18 * std::max(1.0, loss.value(loss.initial_guess()))) << norm;
  }
}

TEST(StrongLoss, ZeroDataGivesZeroLossAndGradient) {
  auto p = testing_support::polynomial_poisson2d(0.0);
  const auto loss = assemble_loss(p, LossSpec{}, 6, 6);
  const Vector x0 = Vector::Zero(loss.size());
  EXPECT_EQ(loss.value(x0), 0.0);
  EXPECT_EQ(loss.gradient(x0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(StrongLoss, GradientMatchesFiniteDifferences) {
  const auto p = testing_support::polynomial_poisson2d();
  std::mt19937_64 rng(1);
  for (const char* norm : {"l2", "h1", "h-1-star"}) {
    LossSpec spec;
    spec.pde = parse_norm(norm);
    const auto loss = assemble_loss(p, spec, 6, 6);
    EXPECT_LE(fd_relative_error(loss, random_vector(rng, loss.size())), 1e-6) << norm;
  }
}

TEST(WeakLoss, ZeroOrderSquaresCubatureWeights) {
  auto p = testing_support::polynomial_poisson2d();
  p.boundary.clear();
  LossSpec strong_spec;
  strong_spec.pde = parse_norm("l2");
  LossSpec weak_spec = strong_spec;
  const auto strong = assemble_strong_loss(p, strong_spec, 5, 5);
  const auto weak = assemble_weak_loss(p, weak_spec, 5, 5);
  const auto& ops = strong.operators();
  std::mt19937_64 rng(2);
  const Vector c = random_vector(rng, strong.size());
  // Pointwise residual by direct summation over the grid.
  const Vector lap = ops.diff_operator({2, 0}).apply(c) + ops.diff_operator({0, 2}).apply(c);
  const Vector f = sample([](std::span<const double> x) { return -8.0 * x[1]; }, ops.grid().points());
  const Vector res = -lap - f;
  const Vector& w = ops.weights();
  const double want_strong = (w.array() * res.array().square()).sum();
  const double want_weak = (w.array().square() * res.array().square()).sum();
  EXPECT_NEAR(strong.value(c), want_strong, 1e-12 * want_strong);
  EXPECT_NEAR(weak.value(c), want_weak, 1e-12 * want_weak);
}

TEST(WeakLoss, VanishesAtExactSolutionAndGradientIsConsistent) {
  const auto p = testing_support::polynomial_poisson2d();
  std::mt19937_64 rng(3);
  for (const char* norm : {"l2", "h1", "h-1-star"}) {
    LossSpec spec;
    spec.pde = parse_norm(norm);
    const auto loss = assemble_weak_loss(p, spec, 6, 6);
    EXPECT_LE(loss.value(truth_state(p, loss)), 1e-18 * std::max(1.0, loss.value(loss.initial_guess())));
    EXPECT_LE(fd_relative_error(loss, random_vector(rng, loss.size())), 1e-6) << norm;
  }
}

TEST(NormalEquations, ZeroDataGivesZeroSolution) {
  const auto p = testing_support::polynomial_poisson2d(0.0);
  const auto loss = assemble_loss(p, LossSpec{}, 6, 6);
  const auto ne = loss.normal_equations();
  EXPECT_EQ(ne.rhs.cwiseAbs().maxCoeff(), 0.0);
  const Vector x = ne.kk.llt().solve(2.0 * ne.rhs);
  EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(NormalEquations, SymmetricAndConsistentWithGradient) {
  const auto p = testing_support::polynomial_poisson2d();
  const auto loss = assemble_loss(p, LossSpec{}, 8, 8);
  const auto ne = loss.normal_equations();
  EXPECT_LE((ne.kk - ne.kk.transpose()).cwiseAbs().maxCoeff(), 1e-11 * ne.kk.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(4);
  const Vector x = random_vector(rng, loss.size());
  const Vector g = loss.gradient(x);
  EXPECT_LE((g - (ne.kk * x - 2.0 * ne.rhs)).cwiseAbs().maxCoeff(), 1e-10 * g.cwiseAbs().maxCoeff());
  const Vector sol = ne.kk.llt().solve(2.0 * ne.rhs);
  EXPECT_LE((sol - truth_state(p, loss)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NormalEquations, LambdaConvexity) {
  const auto p = testing_support::polynomial_poisson2d();
  const auto loss = assemble_loss(p, LossSpec{}, 5, 5);
  const auto ne = loss.normal_equations();
  const double lambda = Eigen::SelfAdjointEigenSolver<Matrix>(ne.kk).eigenvalues().minCoeff();
  EXPECT_GT(lambda, 0.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_vector(rng, loss.size()), y = random_vector(rng, loss.size());
    const double gap = loss.value(x) - loss.value(y) - loss.gradient(y).dot(x - y);
    EXPECT_GE(gap, 0.5 * lambda * (x - y).squaredNorm() - 1e-9 * std::abs(loss.value(x)));
  }
}

TEST(NormalEquations, ScaleConsistency) {
  const auto a = assemble_loss(testing_support::polynomial_poisson2d(1.0), LossSpec{}, 6, 6);
  const auto b = assemble_loss(testing_support::polynomial_poisson2d(3.5), LossSpec{}, 6, 6);
  const auto na = a.normal_equations();
  const auto nb = b.normal_equations();
  const Vector xa = na.kk.llt().solve(2.0 * na.rhs);
  const Vector xb = nb.kk.llt().solve(2.0 * nb.rhs);
  EXPECT_LE((xb - 3.5 * xa).cwiseAbs().maxCoeff(), 1e-10 * xb.cwiseAbs().maxCoeff());
}

TEST(NormalEquations, RejectedForNonlinearLoss) {
  const auto loss = assemble_loss(make_problem("ns-forward"), LossSpec{}, 4, 4);
  EXPECT_FALSE(loss.affine());
  EXPECT_THROW(loss.normal_equations(), std::logic_error);
}

TEST(InverseLoss, VanishesAtGroundTruthAndParameterGradient) {
  const auto p = make_problem("poisson2d-inverse");
  const auto loss = assemble_loss(p, LossSpec{}, 20, 20);
  const Vector xt = truth_state(p, loss);
  EXPECT_LE(loss.value(xt), 1e-16 * std::max(1.0, loss.value(loss.initial_guess())));
  std::mt19937_64 rng(6);
  const auto small = assemble_loss(p, LossSpec{}, 6, 6);
  const Vector x = random_vector(rng, small.size());
  const Vector g = small.gradient(x);
  const Index mu = small.layout().param_offset(0);
  auto f = [&](double d) {
    Vector y = x;
    y(mu) += d;
    return small.value(y);
  };
  const double h = 1e-6 * std::max(1.0, std::abs(x(mu)));
  const double fd = (f(h) - f(-h)) / (2 * h);
  EXPECT_NEAR(g(mu), fd, 1e-6 * std::abs(g(mu)));
}

TEST(InverseLoss, QhoLossAtGroundTruth) {
  const auto p = make_problem("qho-inverse");
  const auto loss = assemble_loss(p, LossSpec{}, 50, 200);
  EXPECT_LE(loss.value(truth_state(p, loss)), 1e-14);
}

TEST(InverseLoss, DataOverridesAndMissingData) {
  auto p = make_problem("poisson2d-inverse");
  const auto ops = std::make_shared<const OperatorCache>(TensorGrid(6, p.box));
  const Vector d = sample(p.ground_truth["u"], ops->grid().points());
  const auto a = assemble_inverse_loss(p, {{"u", d}}, LossSpec{}, 6, 6);
  const auto b = assemble_loss(p, LossSpec{}, 6, 6);
  std::mt19937_64 rng(7);
  const Vector x = random_vector(rng, a.size());
  EXPECT_NEAR(a.value(x), b.value(x), 1e-12 * b.value(x));
  p.data[0].data = {};
  EXPECT_THROW(assemble_inverse_loss(p, {}, LossSpec{}, 6, 6), std::invalid_argument);
  EXPECT_THROW(assemble_inverse_loss(p, {{"u", Vector::Zero(3)}}, LossSpec{}, 6, 6), std::invalid_argument);
}

TEST(NonlinearLoss, GradientAndHessianMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (const char* name : {"ns-forward", "ns-inverse"}) {
    const auto loss = assemble_loss(make_problem(name), LossSpec{}, 5, 6);
    const Vector x = random_vector(rng, loss.size(), 0.5);
    EXPECT_LE(fd_relative_error(loss, x), 1e-6) << name;
    // Hessian columns against differences of the analytic gradient.
    const Matrix h = loss.hessian(x);
    for (Index j = 0; j < loss.size(); j += 7) {
      Vector a = x, b = x;
      a(j) += 1e-6;
      b(j) -= 1e-6;
      const Vector col = (loss.gradient(a) - loss.gradient(b)) / 2e-6;
      EXPECT_LE((h.col(j) - col).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, h.col(j).cwiseAbs().maxCoeff())) << name << " " << j;
    }
  }
}

TEST(Loss, NonNegativeAndBlockValuesSum) {
  std::mt19937_64 rng(9);
  const auto loss = assemble_loss(make_problem("ns-forward"), LossSpec{}, 4, 5);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, loss.size(), 3.0);
    const auto parts = loss.block_values(x);
    double sum = 0.0;
    for (double v : parts) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, loss.value(x), 1e-12 * sum);
  }
}

TEST(Loss, WrongStateLengthRejected) {
  const auto loss = assemble_loss(testing_support::polynomial_poisson2d(), LossSpec{}, 3, 3);
  EXPECT_THROW(loss.value(Vector::Zero(loss.size() + 1)), std::invalid_argument);
}
