#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "btmf/posterior.hpp"
#include "oracle/posterior_check.hpp"

using namespace btmf;

namespace {

PriorConfig scalar_prior(Index order = 1) {
  PriorConfig p = PriorConfig::defaults(1, order);
  p.v0 = 1.0;
  return p;
}

ArWorkspace scalar_ar(double a, double s) {
  ARModel ar = make_ar_model({1}, 1);
  ar.A(0, 0) = a;
  ar.Sigma(0, 0) = s;
  return ArWorkspace(ar);
}

}  // namespace

TEST(SpatialHyperPosterior, ScalarsGrowWithChannelCount) {
  const PriorConfig p = PriorConfig::defaults(2, 1);
  const auto post = spatial_hyper_posterior(MatrixXd::Random(2, 20), p);
  EXPECT_EQ(post.beta, 21.0);
  EXPECT_EQ(post.dof, 22.0);
}

TEST(SpatialHyperPosterior, HandEvaluatedScalarCase) {
  const MatrixXd U = (MatrixXd(1, 2) << 2, 4).finished();
  const auto post = spatial_hyper_posterior(U, scalar_prior());
  EXPECT_DOUBLE_EQ(post.u_bar(0), 3.0);
  EXPECT_DOUBLE_EQ(post.S_bar(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(post.mu(0), 2.0);
  EXPECT_DOUBLE_EQ(post.beta, 3.0);
  EXPECT_DOUBLE_EQ(post.dof, 3.0);
  EXPECT_DOUBLE_EQ(post.W_inv(0, 0), 9.0);
}

TEST(SpatialHyperPosterior, IdenticalColumnsHaveZeroScatter) {
  PriorConfig p = PriorConfig::defaults(2, 1);
  p.mu0 << 1.0, -1.0;
  const VectorXd c = (VectorXd(2) << 3.0, 0.5).finished();
  MatrixXd U(2, 4);
  U.colwise() = c;
  const auto post = spatial_hyper_posterior(U, p);
  EXPECT_LT(post.S_bar.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((post.mu - (p.beta0 * p.mu0 + 4.0 * c) / (p.beta0 + 4.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpatialFactorPosterior, HandEvaluatedScalarCase) {
  ObservationSet obs = make_observation_set((MatrixXd(1, 2) << 1, 2).finished());
  const MatrixXd X = (MatrixXd(1, 2) << 1, 2).finished();
  const SpatialHyperState hyper{VectorXd::Zero(1), MatrixXd::Identity(1, 1)};
  const auto post = spatial_factor_posterior(0, obs, X, hyper, 1.0);
  EXPECT_DOUBLE_EQ(post.precision(0, 0), 6.0);
  EXPECT_NEAR(post.mean(0), 5.0 / 6.0, 1e-15);
}

TEST(SpatialFactorPosterior, UnobservedRowFallsBackToPrior) {
  ObservationSet obs = make_observation_set(MatrixXd::Random(2, 5));
  apply_mask(obs, (Mask(2, 5) << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0).finished());
  const SpatialHyperState hyper{(VectorXd(2) << 0.3, -0.2).finished(),
                                (MatrixXd(2, 2) << 2.0, 0.1, 0.1, 1.0).finished()};
  const auto post = spatial_factor_posterior(1, obs, MatrixXd::Random(2, 5), hyper, 3.0);
  EXPECT_EQ(post.precision, hyper.Lambda_u);
  EXPECT_LT((post.mean - hyper.mu_u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpatialFactorPosterior, ZeroPrecisionLikelihoodGivesPrior) {
  const ObservationSet obs = make_observation_set(MatrixXd::Random(1, 6));
  const SpatialHyperState hyper{VectorXd::Constant(2, 0.7), MatrixXd::Identity(2, 2)};
  const auto post = spatial_factor_posterior(0, obs, MatrixXd::Random(2, 6), hyper, 0.0);
  EXPECT_EQ(post.precision, hyper.Lambda_u);
  EXPECT_LT((post.mean - hyper.mu_u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TemporalHyperPosterior, DofCountsRegressionRows) {
  const PriorConfig p = PriorConfig::defaults(2, 2);
  EXPECT_EQ(temporal_hyper_posterior(MatrixXd::Random(2, 30), {1, 3}, p).dof, 2.0 + 30 - 3);
}

TEST(TemporalHyperPosterior, HandEvaluatedScalarCase) {
  const MatrixXd X = (MatrixXd(1, 3) << 1, 2, 4).finished();
  const ArDesign design = ar_design(X, {1});
  EXPECT_EQ(design.targets, (MatrixXd(2, 1) << 2, 4).finished());
  EXPECT_EQ(design.regressors, (MatrixXd(2, 1) << 1, 2).finished());
  const auto post = temporal_hyper_posterior(X, {1}, scalar_prior());
  EXPECT_NEAR(post.V(0, 0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(post.Lambda(0, 0), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(post.Psi(0, 0), 13.0 / 3.0, 1e-13);
  EXPECT_EQ(post.dof, 3.0);
}

TEST(TemporalHyperPosterior, ZeroRegressorsKeepPriorMean) {
  PriorConfig p = PriorConfig::defaults(2, 1);
  p.Lambda0 = MatrixXd::Random(2, 2);
  p.V0 = 2.0 * MatrixXd::Identity(2, 2);
  const auto post = temporal_hyper_posterior(MatrixXd::Zero(2, 6), {1}, p);
  EXPECT_LT((post.Lambda - post.V * p.V0.inverse() * p.Lambda0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TemporalHyperPosterior, ShortHistoryIsRejected) {
  try {
    temporal_hyper_posterior(MatrixXd::Zero(2, 3), {1, 3}, PriorConfig::defaults(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_history);
  }
}

TEST(TemporalFactorPosterior, PriorOnlyBranch) {
  ARModel ar = make_ar_model({2, 3}, 2);
  ar.A = MatrixXd::Random(4, 2);
  ar.Sigma = 3.0 * MatrixXd::Identity(2, 2);
  const ArWorkspace ws(ar);
  ObservationSet obs = make_observation_set(MatrixXd::Random(3, 4));
  Mask mask = Mask::Ones(3, 4);
  mask.col(2).setZero();
  apply_mask(obs, mask);
  const auto terms = temporal_factor_terms(2, obs, MatrixXd::Random(2, 3), MatrixXd::Random(2, 4), ws, 1.0);
  EXPECT_EQ(terms.C, MatrixXd::Zero(2, 2));
  EXPECT_EQ(terms.E, VectorXd::Zero(2));
  EXPECT_EQ(terms.D, MatrixXd::Identity(2, 2));
  EXPECT_EQ(terms.F, VectorXd::Zero(2));
  const auto post = temporal_factor_posterior(terms);
  EXPECT_EQ(post.precision, MatrixXd::Identity(2, 2));
  EXPECT_EQ(post.mean, VectorXd::Zero(2));
}

TEST(TemporalFactorPosterior, LastColumnObservedScalar) {
  const double a = 0.8, s = 0.5, u = 1.5, tau = 2.0, y = 0.7, x1 = 1.2;
  ObservationSet obs = make_observation_set((MatrixXd(1, 2) << 0.0, y).finished());
  const MatrixXd X = (MatrixXd(1, 2) << x1, 0.0).finished();
  const auto post = temporal_factor_posterior(
      temporal_factor_terms(1, obs, MatrixXd::Constant(1, 1, u), X, scalar_ar(a, s), tau));
  const double precision = tau * u * u + 1.0 / s;
  EXPECT_NEAR(post.precision(0, 0), precision, 1e-14);
  EXPECT_NEAR(post.mean(0), (tau * u * y + a * x1 / s) / precision, 1e-14);
}

TEST(TemporalFactorPosterior, FirstColumnUnobservedScalar) {
  const double a = 0.8, s = 0.5, x2 = -0.9;
  ObservationSet obs = make_observation_set((MatrixXd(1, 2) << 0.0, 1.0).finished());
  apply_mask(obs, (Mask(1, 2) << 0, 1).finished());
  const MatrixXd X = (MatrixXd(1, 2) << 0.3, x2).finished();
  const auto terms = temporal_factor_terms(0, obs, MatrixXd::Constant(1, 1, 2.0), X, scalar_ar(a, s), 1.0);
  EXPECT_NEAR(terms.C(0, 0), a * a / s, 1e-15);
  EXPECT_NEAR(terms.E(0), a * x2 / s, 1e-15);
  EXPECT_EQ(terms.D(0, 0), 1.0);
  const auto post = temporal_factor_posterior(terms);
  const double precision = a * a / s + 1.0;
  EXPECT_NEAR(post.precision(0, 0), precision, 1e-15);
  EXPECT_NEAR(post.mean(0), (a * x2 / s) / precision, 1e-15);
}

TEST(PrecisionPosterior, ZeroResiduals) {
  const MatrixXd U = MatrixXd::Random(2, 2);
  const MatrixXd X = MatrixXd::Random(2, 2);
  const ObservationSet obs = make_observation_set(U.transpose() * X);
  const auto post = precision_posterior(obs, U, X, PriorConfig::defaults(2, 1));
  EXPECT_DOUBLE_EQ(post.shape, 2.000001);
  EXPECT_NEAR(post.rate, 1e-6, 1e-20);
}

TEST(PrecisionPosterior, EmptyObservationSetGivesPrior) {
  ObservationSet obs = make_observation_set(MatrixXd::Random(2, 3));
  apply_mask(obs, Mask::Zero(2, 3));
  const auto post = precision_posterior(obs, MatrixXd::Random(1, 2), MatrixXd::Random(1, 3),
                                        PriorConfig::defaults(1, 1));
  EXPECT_EQ(post.shape, 1e-6);
  EXPECT_EQ(post.rate, 1e-6);
}

TEST(PrecisionPosterior, UnitResiduals) {
  const MatrixXd U = MatrixXd::Zero(1, 2);
  const MatrixXd X = MatrixXd::Zero(1, 5);
  const ObservationSet obs = make_observation_set(MatrixXd::Ones(2, 5));
  const auto post = precision_posterior(obs, U, X, PriorConfig::defaults(1, 1));
  EXPECT_DOUBLE_EQ(post.rate, 1e-6 + 5.0);
}

TEST(InnovationPosterior, ZeroResidualKeepsScale) {
  const PriorConfig p = PriorConfig::defaults(2, 1);
  const VectorXd x = VectorXd::Random(2);
  EXPECT_EQ(innovation_posterior(x, x, p).Psi, p.Psi0);
}

TEST(InnovationPosterior, ScalarResidual) {
  const PriorConfig p = PriorConfig::defaults(1, 1);
  const auto post = innovation_posterior(VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 1.0), p);
  EXPECT_DOUBLE_EQ(post.Psi(0, 0), 5.0);
  EXPECT_EQ(post.dof, 2.0);
}

TEST(CurrentFactorPosterior, NoObservationsGivesArPrior) {
  const VectorXd mean = VectorXd::Random(2);
  const MatrixXd sigma = (MatrixXd(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  const auto post = current_factor_posterior(VectorXd::Zero(3), Mask::Zero(3, 1), MatrixXd::Random(2, 3), mean,
                                             sigma, 4.0);
  EXPECT_LT((post.mean - mean).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((post.precision.inverse() - sigma).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CurrentFactorPosterior, HandEvaluatedScalarCase) {
  const auto post = current_factor_posterior((VectorXd(2) << 1, 3).finished(), Mask::Ones(2, 1),
                                             MatrixXd::Ones(1, 2), VectorXd::Zero(1), MatrixXd::Identity(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(post.precision(0, 0), 3.0);
  EXPECT_NEAR(post.mean(0), 4.0 / 3.0, 1e-15);
}

TEST(CurrentFactorPosterior, DominatingLikelihoodRecoversObservation) {
  const auto post = current_factor_posterior((VectorXd(2) << 2.5, 100.0).finished(), (Mask(2, 1) << 1, 0).finished(),
                                             MatrixXd::Ones(1, 2), VectorXd::Zero(1), MatrixXd::Identity(1, 1), 1e12);
  EXPECT_NEAR(post.mean(0), 2.5, 1e-9);
}

// Perturbing any masked cell leaves every posterior parameter bit-identical.
TEST(MaskInvariance, MaskedValuesNeverInfluencePosteriors) {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 20; ++rep) {
    oracle::Instance in = oracle::random_instance(gen);
    oracle::Instance other = in;
    for (Index c = 0; c < other.obs.values.size(); ++c)
      if (!other.obs.mask.data()[c]) other.obs.values.data()[c] = 1e6 * (c + 1);
    ARModel ar;
    ar.lags = in.lags;
    ar.A = in.A;
    ar.Sigma = in.Sigma;
    const ArWorkspace ws(ar);
    for (Index i = 0; i < in.obs.channels(); ++i) {
      const auto a = spatial_factor_posterior(i, in.obs, in.X, in.hyper, in.tau);
      const auto b = spatial_factor_posterior(i, other.obs, in.X, in.hyper, in.tau);
      EXPECT_EQ(a.precision, b.precision);
      EXPECT_EQ(a.mean, b.mean);
    }
    for (Index t = 0; t < in.X.cols(); ++t) {
      const auto a = temporal_factor_posterior(temporal_factor_terms(t, in.obs, in.U, in.X, ws, in.tau));
      const auto b = temporal_factor_posterior(temporal_factor_terms(t, other.obs, in.U, in.X, ws, in.tau));
      EXPECT_EQ(a.precision, b.precision);
      EXPECT_EQ(a.mean, b.mean);
    }
    const auto ga = precision_posterior(in.obs, in.U, in.X, in.prior);
    const auto gb = precision_posterior(other.obs, in.U, in.X, in.prior);
    EXPECT_EQ(ga.shape, gb.shape);
    EXPECT_EQ(ga.rate, gb.rate);
  }
}

TEST(DenseOracle, RandomInstancesAgree) {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 30; ++rep) {
    const auto errors = oracle::compare_posteriors(oracle::random_instance(gen));
    for (const auto& [name, e] : errors) EXPECT_LT(e, 1e-10) << name << " instance " << rep;
  }
}
