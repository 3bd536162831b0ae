#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "locc/error.hpp"
#include "locc/states.hpp"

using namespace locc;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

ComplexVector basis_ket(int k) {
  ComplexVector v = ComplexVector::Zero(9);
  v(k) = 1.0;
  return v;
}

StateParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  StateParams p;
  p.e1 = u(rng) / 2.0;
  p.phi = u(rng) + kPi;
  p.theta = (u(rng) + kPi) / 2.0;
  for (double& l : p.lambda) l = u(rng);
  return p;
}

}  // namespace

TEST_CASE("psi_from_angles examples") {
  CHECK((psi_from_angles(kPi, 0.0) - basis_ket(0)).norm() < 1e-15);
  CHECK((psi_from_angles(0.0, 1.234) - basis_ket(8)).norm() < 1e-15);
  const ComplexVector bell = (basis_ket(0) + basis_ket(4)) / std::sqrt(2.0);
  // the quarter-angle makes phi = pi the balanced point; phi = 2 pi lands on |11>
  CHECK((psi_from_angles(kPi, kPi) - bell).norm() < 1e-15);
  CHECK((psi_from_angles(kPi, 2.0 * kPi) - basis_ket(4)).norm() < 1e-15);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const StateParams p = random_params(rng);
    CHECK(std::abs(psi_from_angles(p.theta, p.phi).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("generators are skew-Hermitian and linearly independent") {
  const auto& t = generators();
  CHECK(max_abs(t[8] - Complex(0.0, 1.0) * ComplexMatrix::Identity(3, 3)) == 0.0);
  Eigen::MatrixXd vecs(18, kNumGenerators);
  for (int j = 0; j < kNumGenerators; ++j) {
    CHECK(max_abs(t[j].adjoint() + t[j]) == 0.0);
    for (int k = 0; k < 9; ++k) {
      vecs(k, j) = t[j](k / 3, k % 3).real();
      vecs(9 + k, j) = t[j](k / 3, k % 3).imag();
    }
  }
  const Eigen::MatrixXd gram = vecs.transpose() * vecs;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  CHECK(lu.rank() == 9);
}

TEST_CASE("prepare_state examples and global-phase invariance") {
  StateParams p;
  p.theta = kPi;
  p.phi = 0.0;
  CHECK(max_abs(prepare_state(p).mat() - projector(basis_ket(0))) < 1e-15);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    StateParams q = random_params(rng);
    const DensityMatrix base = prepare_state(q);
    CHECK(base.purity() == doctest::Approx(1.0).epsilon(1e-9));
    q.lambda[8] += 0.77;
    CHECK(max_abs(prepare_state(q).mat() - base.mat()) < 1e-10);
  }
  StateParams zero_phase;
  zero_phase.theta = 1.0;
  zero_phase.phi = 2.0;
  StateParams shifted = zero_phase;
  shifted.lambda[8] = 2.5;
  CHECK(max_abs(prepare_state(shifted).mat() - prepare_state(zero_phase).mat()) < 1e-12);
}

TEST_CASE("p1 reparametrization") {
  StateParams p;
  p.e1 = e1_from_p1(0.7481);
  CHECK(p.e1 == doctest::Approx(0.5443).epsilon(1e-3));
  CHECK(p.p1() == doctest::Approx(0.7481).epsilon(1e-12));
  p.e1 = 40.0;
  CHECK(p.p1() == doctest::Approx(1.0));
  CHECK_THROWS_AS(e1_from_p1(1.0), InvalidInput);
}

TEST_CASE("optimized state") {
  CHECK(std::abs(optimized_vector_raw().norm() - 1.0) < 1e-3);
  const DensityMatrix rho = optimized_state();
  CHECK(std::abs(rho.mat().trace() - 1.0) < 1e-15);
  CHECK(rho.mat()(0, 0).real() == doctest::Approx(0.1550).epsilon(2e-3 / 0.155));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(rho.mat(), Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues()(7) <= 1e-9);
}

TEST_CASE("measurement bases are complete and orthonormal") {
  for (const auto& mm : {standard_bases(), uncalibrated_bases()}) {
    for (int x = 0; x < 3; ++x) {
      ComplexMatrix sum = ComplexMatrix::Zero(3, 3);
      for (int a = 0; a < 3; ++a) sum += mm.alice(x, a);
      CHECK(max_abs(sum - ComplexMatrix::Identity(3, 3)) < 1e-12);
    }
  }
  for (const auto& family : {standard_basis_vectors(), uncalibrated_basis_vectors()}) {
    const auto& fourier = family[1];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(std::abs(fourier[i].dot(fourier[j])) - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
    }
    CHECK(std::norm(fourier[2](0)) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("uncalibrated Fourier outcome 1 carries phase e^{-2 pi i/3} on |1>; the calibrated one is its conjugate") {
  const Complex w = std::polar(1.0, -2.0 * kPi / 3.0);
  const auto raw = uncalibrated_basis_vectors();
  const auto calibrated = standard_basis_vectors();
  CHECK(std::abs(raw[1][0](1) * std::sqrt(3.0) - w) < 1e-12);
  CHECK(std::abs(calibrated[1][0](1) * std::sqrt(3.0) - std::conj(w)) < 1e-12);
  CHECK(std::abs(raw[2][1](0) - 1.0) < 1e-15);
  CHECK(std::abs(calibrated[2][1](2) - 1.0) < 1e-15);
}

TEST_CASE("measurement model rejects incomplete settings") {
  auto v = standard_basis_vectors();
  v[0][2] = v[0][1];
  CHECK_THROWS_AS(MeasurementModel::from_vectors(v, v), InvalidInput);
}

TEST_CASE("born probabilities") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix zero = DensityMatrix::from_pure(basis_ket(0));
  CHECK(born_probability(zero, mm, 0, 0, 0, 0) == doctest::Approx(1.0));

  const DensityMatrix rho = optimized_state();
  double marginal = 0.0;
  for (int b = 0; b < 3; ++b) marginal += born_probability(rho, mm, 0, 0, 0, b);
  CHECK(marginal == doctest::Approx(0.3481).epsilon(2e-3 / 0.3481));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix r = prepare_state(random_params(rng));
    for (int x = 0; x < 3; ++x) {
      for (int y = 0; y < 3; ++y) {
        double total = 0.0;
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) total += born_probability(r, mm, x, a, y, b);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
  CHECK_THROWS_AS(born_probability(rho, mm, 3, 0, 0, 0), InvalidInput);
}

TEST_CASE("state JSON round trip and rejection") {
  const DensityMatrix rho = optimized_state();
  const DensityMatrix back = parse_state_json(state_to_json(rho));
  CHECK(max_abs(back.mat() - rho.mat()) < 1e-15);

  const DensityMatrix bundled = read_state_file(std::string(LOCC_DATA_DIR) + "/optimized_state.json");
  CHECK(max_abs(bundled.mat() - rho.mat()) < 1e-12);

  CHECK_THROWS_AS(parse_state_json("{\"vector\": [1, 2]"), InvalidInput);
  CHECK_THROWS_AS(parse_state_json("{\"dims\":[3,3],\"vector\":[]}"), InvalidInput);
  std::string unnormalized = "{\"vector\":[";
  for (int k = 0; k < 9; ++k) unnormalized += std::string(k ? "," : "") + "{\"re\":0.5,\"im\":0}";
  unnormalized += "]}";
  CHECK_THROWS_AS(parse_state_json(unnormalized), InvalidInput);
  try {
    parse_state_json("{\"vector\":[{\"re\":1}]}");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("vector") != std::string::npos);
  }
}
