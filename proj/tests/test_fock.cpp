#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cvq/fock.hpp>
#include <cvq/generation.hpp>

#include "test_support.hpp"

using namespace cvq;
using cvq::testing::random_state;
using cvq::testing::satisfies_invariants;

namespace {

constexpr double kPi = std::numbers::pi;

/// Independent x matrix from the ladder formula, plain loops.
std::vector<std::vector<double>> x_matrix_by_hand(int d) {
  std::vector<std::vector<double>> x(d, std::vector<double>(d, 0.0));
  for (int n = 0; n + 1 < d; ++n) x[n][n + 1] = x[n + 1][n] = std::sqrt((n + 1) / 2.0);
  return x;
}

std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>> &a,
                                        const std::vector<std::vector<double>> &b) {
  const std::size_t d = a.size();
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Wigner oracle: (1/pi) Tr[rho D(a) P D(a)^dag] with D from a matrix
/// exponential on a much larger basis.
double wigner_by_expm(const QuantumState &s, double x, double p, int big = 70) {
  const CMatrix a = annihilation(big).matrix();
  const Complex alpha = Complex(x, p) / std::sqrt(2.0);
  const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  const CMatrix d = gen.exp();
  CMatrix parity = CMatrix::Zero(big, big);
  for (int n = 0; n < big; ++n) parity(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  const CMatrix rho = s.resized(big).matrix();
  return (rho * d * parity * d.adjoint()).trace().real() / kPi;
}

} // namespace

TEST(MakeSuperposition, VacuumIdentity) {
  const auto s = make_superposition({Complex(1.0)}, 10);
  EXPECT_DOUBLE_EQ(s(0, 0).real(), 1.0);
  EXPECT_EQ(s.dim(), 10);
  EXPECT_TRUE(satisfies_invariants(s));
}

TEST(MakeSuperposition, OptimalAncillaAmplitudes) {
  const auto s = make_superposition({Complex(0.79), Complex(0.0, -0.61)}, 10);
  const double n = 0.79 * 0.79 + 0.61 * 0.61;
  EXPECT_NEAR(s(0, 0).real(), 0.79 * 0.79 / n, 1e-14);
  EXPECT_NEAR(s(1, 1).real(), 0.61 * 0.61 / n, 1e-14);
  // rho01 = c0 c1^* = 0.79 * (+0.61 i) / n
  EXPECT_NEAR(s(0, 1).real(), 0.0, 1e-15);
  EXPECT_NEAR(s(0, 1).imag(), 0.79 * 0.61 / n, 1e-14);
  EXPECT_NEAR(s(0, 0).real(), 0.6264, 1e-4);
  EXPECT_NEAR(s(1, 1).real(), 0.3735, 1e-4);
}

TEST(MakeSuperposition, HandNormalization) {
  const auto s = make_superposition({Complex(3.0), Complex(4.0)}, 5);
  EXPECT_NEAR(s(0, 0).real(), 9.0 / 25.0, 1e-15);
  EXPECT_NEAR(s(1, 1).real(), 16.0 / 25.0, 1e-15);
}

TEST(MakeSuperposition, Errors) {
  EXPECT_THROW(make_superposition({Complex(0.0), Complex(0.0)}, 4), InvalidInput);
  EXPECT_THROW(make_superposition({Complex(1.0), Complex(1.0), Complex(1.0)}, 2), DimensionError);
}

TEST(Quadratures, LadderElements) {
  const auto q2 = quadrature_ops(2);
  EXPECT_NEAR(q2.x(0, 1).real(), 1.0 / std::sqrt(2.0), 1e-15);
  const auto q3 = quadrature_ops(3);
  EXPECT_NEAR((q3.x * q3.x)(0, 0).real(), 0.5, 1e-15);
  EXPECT_THROW(quadrature_ops(1), DimensionError);
}

TEST(Quadratures, FourthMomentOfSinglePhoton) {
  const auto q = quadrature_ops(6);
  const double lib = q.x.pow(4)(1, 1).real();
  const auto x = x_matrix_by_hand(6);
  const auto x4 = matmul(matmul(x, x), matmul(x, x));
  EXPECT_NEAR(x4[1][1], 15.0 / 4.0, 1e-13);
  EXPECT_NEAR(lib, 15.0 / 4.0, 1e-13);
}

TEST(Quadratures, HermitianAndCanonical) {
  const int d = 12;
  const auto q = quadrature_ops(d);
  EXPECT_LT((q.x.matrix() - q.x.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((q.p.matrix() - q.p.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  const CMatrix xx = (q.x * q.x).matrix();
  EXPECT_LT((xx - xx.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  const CMatrix comm = q.x.matrix() * q.p.matrix() - q.p.matrix() * q.x.matrix();
  const CMatrix inner = comm.topLeftCorner(d - 2, d - 2) - Complex(0.0, 1.0) * CMatrix::Identity(d - 2, d - 2);
  EXPECT_LT(inner.norm(), 1e-10);
}

TEST(Moment, Examples) {
  const auto q = quadrature_ops(6);
  EXPECT_NEAR(moment(vacuum(6), q.x * q.x).real(), 0.5, 1e-15);
  EXPECT_NEAR(moment(fock_state(1, 6), q.p * q.p).real(), 1.5, 1e-14);

  const auto s = make_superposition({Complex(0.79), Complex(0.0, -0.61)}, 6);
  const double n = 0.79 * 0.79 + 0.61 * 0.61;
  const Complex mp = moment(s, q.p);
  EXPECT_NEAR(mp.real(), -std::sqrt(2.0) * 0.79 * 0.61 / n, 1e-13);
  EXPECT_NEAR(mp.imag(), 0.0, 1e-13);
  EXPECT_NEAR(mp.real(), -0.6816, 5e-3);  // unnormalized two-level estimate
  EXPECT_THROW(moment(vacuum(5), q.p), DimensionError);
}

TEST(Moment, HermitianOperatorsGiveRealValues) {
  Rng rng(7);
  const auto q = quadrature_ops(8);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_state(8, rng);
    EXPECT_LT(std::abs(moment(s, q.x * q.p + q.p * q.x).imag()), 1e-10);
    EXPECT_LT(std::abs(moment(s, q.x.pow(3)).imag()), 1e-10);
  }
}

TEST(ApplyLoss, SinglePhotonSurvival) {
  const auto s = apply_loss(fock_state(1, 4), 0.25);
  EXPECT_NEAR(s(0, 0).real(), 0.25, 1e-15);
  EXPECT_NEAR(s(1, 1).real(), 0.75, 1e-15);
  EXPECT_NEAR(s(2, 2).real(), 0.0, 1e-15);
}

TEST(ApplyLoss, ZeroLossIsIdentity) {
  Rng rng(3);
  const auto s = random_state(7, rng);
  EXPECT_EQ(apply_loss(s, 0.0).matrix(), s.matrix());
}

TEST(ApplyLoss, MatchesLossyTwoLevelModel) {
  for (double loss : {0.1, 0.25, 0.5, 0.9}) {
    for (double theta : {0.3, 1.09, 2.0, kPi}) {
      for (double phi : {0.0, 1.0, 3 * kPi / 2}) {
        const auto pure = make_superposition({Complex(std::cos(theta / 2)), std::polar(std::sin(theta / 2), phi)}, 6);
        const CMatrix diff = apply_loss(pure, loss).matrix() - rho_theta_phi_L(theta, phi, loss, 6).matrix();
        EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(ApplyLoss, TotalLossGivesVacuum) {
  Rng rng(5);
  const auto s = apply_loss(random_state(6, rng), 1.0);
  EXPECT_NEAR(s(0, 0).real(), 1.0, 1e-12);
}

TEST(ApplyLoss, RejectsOutOfRange) {
  EXPECT_THROW(apply_loss(vacuum(3), -0.1), InvalidInput);
  EXPECT_THROW(apply_loss(vacuum(3), 1.1), InvalidInput);
}

TEST(ApplyLoss, ChannelComposition) {
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto s = random_state(8, rng);
    const double l1 = uniform01(rng), l2 = uniform01(rng);
    const CMatrix twice = apply_loss(apply_loss(s, l1), l2).matrix();
    const CMatrix once = apply_loss(s, 1.0 - (1.0 - l1) * (1.0 - l2)).matrix();
    EXPECT_LT((twice - once).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ApplyLoss, ContractsTowardVacuum) {
  Rng rng(13);
  const auto s = random_state(8, rng);
  double prev = -1.0;
  for (double loss = 0.0; loss <= 1.0 + 1e-12; loss += 0.05) {
    const auto out = apply_loss(s, std::min(loss, 1.0));
    const double f = fidelity(out, vacuum(8));
    EXPECT_GE(f, prev - 1e-14);
    prev = f;
    EXPECT_TRUE(satisfies_invariants(out));
  }
}

TEST(Fidelity, Basics) {
  Rng rng(17);
  const auto s = random_state(5, rng);
  EXPECT_NEAR(fidelity(s, s), 1.0, 1e-9);
  EXPECT_NEAR(fidelity(vacuum(4), fock_state(1, 4)), 0.0, 1e-12);
  const auto mix = QuantumState::from_matrix((CMatrix(2, 2) << 0.5, 0, 0, 0.5).finished());
  EXPECT_NEAR(fidelity(mix, vacuum(2)), 0.5, 1e-12);
}

TEST(Wigner, OriginValues) {
  EXPECT_NEAR(wigner_at(vacuum(3), 0, 0), 1.0 / kPi, 1e-15);
  EXPECT_NEAR(wigner_at(fock_state(1, 3), 0, 0), -1.0 / kPi, 1e-15);
  const auto mix = QuantumState::from_matrix((CMatrix(2, 2) << 0.5, 0, 0, 0.5).finished());
  EXPECT_NEAR(wigner_at(mix, 0, 0), 0.0, 1e-15);
}

TEST(Wigner, ParityOracleAtOrigin) {
  Rng rng(19);
  for (int i = 0; i < 5; ++i) {
    const auto s = random_state(10, rng);
    double parity = 0.0;
    for (int n = 0; n < 10; ++n) parity += ((n % 2) ? -1.0 : 1.0) * s(n, n).real();
    EXPECT_NEAR(wigner_at(s, 0, 0), parity / kPi, 1e-13);
  }
}

TEST(Wigner, MatchesDisplacedParityByMatrixExponential) {
  Rng rng(23);
  const auto s = random_state(6, rng);
  for (auto [x, p] : {std::pair{0.4, -0.3}, {1.2, 0.7}, {-2.0, 1.5}, {0.0, 2.5}})
    EXPECT_NEAR(wigner_at(s, x, p), wigner_by_expm(s, x, p), 1e-10) << x << "," << p;
}

TEST(Wigner, Normalization) {
  Rng rng(29);
  const auto s = random_state(8, rng);
  const auto xs = linspace(-8, 8, 161);
  const auto w = wigner(s, xs, xs);
  const double h = xs[1] - xs[0];
  double total = 0.0;
  for (double v : w.values) total += v;
  EXPECT_NEAR(total * h * h, 1.0, 1e-3);
}

TEST(Wigner, Errors) { EXPECT_THROW(wigner(vacuum(2), {}, {0.0}), InvalidInput); }

TEST(QuantumState, RejectsInvalidMatrices) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.7;
  m(1, 1) = 0.2;
  EXPECT_THROW(QuantumState::from_matrix(m), InvalidInput);  // trace
  m(1, 1) = 0.3;
  m(0, 1) = 0.1;
  EXPECT_THROW(QuantumState::from_matrix(m), InvalidInput);  // not Hermitian
  m(1, 0) = 0.1;
  m(0, 1) = 0.1;
  EXPECT_NO_THROW(QuantumState::from_matrix(m));
  m(0, 1) = m(1, 0) = 0.9;
  EXPECT_THROW(QuantumState::from_matrix(m), InvalidInput);  // not PSD
}

TEST(QuantumState, ResizeKeepsContent) {
  const auto s = make_superposition({Complex(0.6), Complex(0.8)}, 2);
  const auto big = s.resized(6);
  EXPECT_EQ(big.dim(), 6);
  EXPECT_EQ(big.resized(2).matrix(), s.matrix());
  EXPECT_THROW(fock_state(3, 5).resized(3), DimensionError);
}

TEST(Displacement, MatchesMatrixExponential) {
  const int big = 60;
  const Complex beta(0.7, -0.4);
  const CMatrix a = annihilation(big).matrix();
  const CMatrix d = (beta * a.adjoint() - std::conj(beta) * a).exp();
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 6; ++n) EXPECT_NEAR(std::abs(displacement_element(m, n, beta) - d(m, n)), 0.0, 1e-12);
}

TEST(SqueezedVacuum, QuadratureVariances) {
  const double r = 0.5;
  const auto s = squeezed_vacuum(r, 60);
  const auto q = quadrature_ops(60);
  EXPECT_NEAR(moment(s, q.x * q.x).real(), std::exp(-2 * r) / 2, 1e-12);
  EXPECT_NEAR(moment(s, q.p * q.p).real(), std::exp(2 * r) / 2, 1e-12);
  EXPECT_THROW(squeezed_vacuum(1.5, 6), DimensionError);
}
