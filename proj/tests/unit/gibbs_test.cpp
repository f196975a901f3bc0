#include <gtest/gtest.h>

#include "btmf/gibbs.hpp"
#include "btmf/synthetic.hpp"

using namespace btmf;

namespace {

ChainConfig short_chain(Index iters, Index burn_in) {
  ChainConfig c;
  c.n_iters_impute = iters;
  c.burn_in_impute = burn_in;
  return c;
}

SyntheticData small_data(Index rank = 2, Index length = 300) {
  SyntheticSpec spec;
  spec.channels = 6;
  spec.length = length;
  spec.rank = rank;
  spec.seed = 4;
  return generate_synthetic(spec);
}

}  // namespace

TEST(ChainConfig, RejectsBurnInNotBelowIterations) {
  EXPECT_THROW(short_chain(10, 10).validate(), Error);
  EXPECT_THROW(short_chain(10, -1).validate(), Error);
  EXPECT_NO_THROW(short_chain(10, 9).validate());
}

TEST(ImputationChain, SingleCollectedSample) {
  const auto data = small_data();
  const FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  const auto out = run_imputation_chain(data.obs, init, {1, 2}, PriorConfig::defaults(2, 2), short_chain(5, 4),
                                        RandomSource(2));
  EXPECT_EQ(out.prediction.n_samples, 1);
  EXPECT_EQ(out.prediction.mean, reconstruct(out.state));
  EXPECT_EQ(out.prediction.std, MatrixXd::Zero(6, 300));
}

TEST(ImputationChain, SameSeedIsBitIdentical) {
  const auto data = small_data();
  const FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  const PriorConfig prior = PriorConfig::defaults(2, 2);
  const auto a = run_imputation_chain(data.obs, init, {1, 2}, prior, short_chain(20, 10), RandomSource(3));
  const auto b = run_imputation_chain(data.obs, init, {1, 2}, prior, short_chain(20, 10), RandomSource(3));
  EXPECT_EQ(a.prediction.mean, b.prediction.mean);
  EXPECT_EQ(a.prediction.std, b.prediction.std);
  EXPECT_EQ(a.state.U, b.state.U);
  EXPECT_EQ(a.state.tau_eps, b.state.tau_eps);
}

TEST(ImputationChain, ThreadCountDoesNotChangeResult) {
  const auto data = small_data();
  const FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  const PriorConfig prior = PriorConfig::defaults(2, 2);
  ChainConfig one = short_chain(20, 10), four = one;
  four.threads = 4;
  const auto a = run_imputation_chain(data.obs, init, {1, 2}, prior, one, RandomSource(3));
  const auto b = run_imputation_chain(data.obs, init, {1, 2}, prior, four, RandomSource(3));
  EXPECT_EQ(a.prediction.mean, b.prediction.mean);
  EXPECT_EQ(a.prediction.std, b.prediction.std);
}

TEST(ImputationChain, NoiselessRankOneRecovery) {
  SyntheticSpec spec;
  spec.channels = 8;
  spec.length = 400;
  spec.rank = 1;
  spec.seed = 9;
  const auto data = generate_synthetic(spec);
  const FactorState init = random_factor_state(1, 8, 400, RandomSource(5));
  const auto out = run_imputation_chain(data.obs, init, {1, 2}, PriorConfig::defaults(1, 2), short_chain(60, 30),
                                        RandomSource(6));
  const double rel = (out.prediction.mean - data.clean).norm() / data.clean.norm();
  EXPECT_LE(rel, 0.02);
}

TEST(ImputationChain, SampledHyperParametersArePositiveDefinite) {
  const auto data = small_data();
  const FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  const auto out = run_imputation_chain(data.obs, init, {1, 2}, PriorConfig::defaults(2, 2), short_chain(10, 5),
                                        RandomSource(7));
  for (const MatrixXd* m : {&out.hyper.Lambda_u, &out.ar.Sigma}) {
    EXPECT_LE(symmetry_error(*m), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(*m).eigenvalues().minCoeff(), 0.0);
  }
  EXPECT_GT(out.state.tau_eps, 0.0);
}

TEST(ImputationChain, ObserverSeesEveryIteration) {
  const auto data = small_data();
  const FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  std::vector<Index> seen;
  run_imputation_chain(data.obs, init, {1, 2}, PriorConfig::defaults(2, 2), short_chain(7, 3), RandomSource(7),
                       [&](const IterationEvent& ev) { seen.push_back(ev.iteration); });
  EXPECT_EQ(seen, (std::vector<Index>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(ImputationChain, ShortWindowIsInsufficientHistory) {
  const ObservationSet obs = make_observation_set(MatrixXd::Random(3, 2));
  const FactorState init = random_factor_state(2, 3, 2, RandomSource(1));
  try {
    run_imputation_chain(obs, init, {1, 2}, PriorConfig::defaults(2, 2), short_chain(5, 1), RandomSource(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_history);
  }
}

TEST(ImputationChain, InnerFailuresCarryIterationIndex) {
  const auto data = small_data();
  FactorState init = random_factor_state(2, 6, 300, RandomSource(1));
  PriorConfig prior = PriorConfig::defaults(2, 2);
  prior.W0 << 1.0, 0.0, 0.0, -100.0;  // not positive definite
  try {
    run_imputation_chain(data.obs, init, {1, 2}, prior, short_chain(5, 1), RandomSource(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::decomposition);
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(SpatialFactors, FullyUnobservedChannelDrawsFromPrior) {
  ObservationSet obs = make_observation_set(MatrixXd::Random(2, 50));
  Mask mask = Mask::Ones(2, 50);
  mask.row(1).setZero();
  apply_mask(obs, mask);
  const SpatialHyperState hyper{VectorXd::Constant(1, 3.0), MatrixXd::Constant(1, 1, 4.0)};
  const RandomSource root(11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  MatrixXd U = MatrixXd::Zero(1, 2);
  for (int r = 0; r < n; ++r) {
    sample_spatial_factors(U, obs, MatrixXd::Random(1, 50), hyper, 1.0, root.split(r), 1);
    sum += U(0, 1);
    sum2 += U(0, 1) * U(0, 1);
  }
  EXPECT_NEAR(sum / n, 3.0, 0.02);
  EXPECT_NEAR(sum2 / n - (sum / n) * (sum / n), 0.25, 0.015);
}
