#include <doctest.h>

#include <cmath>
#include <random>

#include "locc/detection.hpp"
#include "locc/error.hpp"
#include "locc/reference_tables.hpp"

using namespace locc;

namespace {

DensityMatrix random_pure(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector v(9);
  for (int k = 0; k < 9; ++k) v(k) = Complex(g(rng), g(rng));
  return DensityMatrix::from_pure(v);
}

DensityMatrix random_mixed(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) m(i, j) = Complex(g(rng), g(rng));
  const ComplexMatrix r = m * m.adjoint();
  return DensityMatrix(r / r.trace().real());
}

ComplexVector max_entangled() {
  ComplexVector phi = ComplexVector::Zero(9);
  for (int k = 0; k < 3; ++k) phi(k * 3 + k) = 1.0 / std::sqrt(3.0);
  return phi;
}

void check_result(const DetectionResult& r, const DensityMatrix& rho) {
  REQUIRE(r.ok());
  CHECK(std::abs(r.p2 - (r.m_n * rho.mat()).trace().real()) <= 1e-6);
  CHECK(validate(r.instructions, 1e-6).empty());
  const CertificateCheck c = check_certificate(r);
  CHECK(c.identity_error <= 1e-6);
  CHECK(c.min_eig_p >= -1e-7);
  CHECK(c.min_eig_q >= -1e-7);
}

}  // namespace

TEST_CASE("detection SDP reproduces the reference optimum for the optimized state") {
  const DensityMatrix rho = optimized_state();
  const MeasurementModel mm = standard_bases();
  const DetectionResult lo = solve_detection(rho, mm, kReferenceP1, Scenario::lo);
  const DetectionResult locc = solve_detection(rho, mm, kReferenceP1, Scenario::one_way_locc);
  check_result(lo, rho);
  check_result(locc, rho);
  CHECK(std::abs(lo.p2 - kReferenceP2Lo) <= 1e-2);
  CHECK(std::abs(locc.p2 - kReferenceP2Locc) <= 1e-2);
  CHECK(std::abs((lo.p2 - locc.p2) - kReferenceGap) <= 1e-2);
}

TEST_CASE("detection endpoints") {
  std::mt19937_64 rng(1);
  const MeasurementModel mm = standard_bases();
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix rho = trial == 0 ? optimized_state() : random_mixed(rng);
    for (Scenario sc : {Scenario::lo, Scenario::one_way_locc}) {
      const DetectionResult r0 = solve_detection(rho, mm, 0.0, sc);
      const DetectionResult r1 = solve_detection(rho, mm, 1.0, sc);
      check_result(r0, rho);
      check_result(r1, rho);
      CHECK(std::abs(r0.p2 - 1.0) <= 1e-6);
      CHECK(std::abs(r1.p2) <= 1e-6);
    }
  }
  CHECK_THROWS_AS(solve_detection(optimized_state(), mm, 1.5, Scenario::lo), InvalidInput);
}

TEST_CASE("monotonicity, scenario ordering and certificates on random states") {
  std::mt19937_64 rng(2);
  const MeasurementModel mm = standard_bases();
  const auto grid = uniform_grid(10);
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix rho = trial % 2 ? random_mixed(rng) : random_pure(rng);
    const TradeoffCurve lo = tradeoff_curve(rho, mm, Scenario::lo, grid, 1);
    const TradeoffCurve locc = tradeoff_curve(rho, mm, Scenario::one_way_locc, grid, 1);
    CHECK(lo.monotone());
    CHECK(locc.monotone());
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(locc.p2_values[k] <= lo.p2_values[k] + 1e-6);
  }
}

TEST_CASE("curve endpoints and consistency with single solves") {
  const DensityMatrix rho = optimized_state();
  const MeasurementModel mm = standard_bases();
  const TradeoffCurve c = tradeoff_curve(rho, mm, Scenario::lo, {0.0, kReferenceP1, 1.0}, 2);
  CHECK(std::abs(c.p2_values[0] - 1.0) <= 1e-6);
  CHECK(std::abs(c.p2_values[2]) <= 1e-6);
  CHECK(c.p2_values[1] == solve_detection(rho, mm, kReferenceP1, Scenario::lo).p2);
  CHECK_THROWS_AS(tradeoff_curve(rho, mm, Scenario::lo, {0.5, 0.2}), InvalidInput);
  const std::string csv = curve_to_csv(c);
  CHECK(csv.rfind("p1,p2,scenario,bound\n", 0) == 0);
  CHECK(uniform_grid(2) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("dual cone membership") {
  const ComplexMatrix id = ComplexMatrix::Identity(9, 9);
  DualConeResult r = dual_cone_member(id, 1e-7);
  CHECK(r.member);
  REQUIRE(r.certificate);
  CHECK(min_eigenvalue(r.certificate->p) >= -1e-7);
  CHECK(min_eigenvalue(r.certificate->q) >= -1e-7);

  CHECK_FALSE(dual_cone_member(-id, 1e-7).member);

  const ComplexMatrix w = partial_transpose(projector(max_entangled()), SubsystemDims{}, Party::B);
  r = dual_cone_member(w, 1e-7);
  CHECK(r.member);
  REQUIRE(r.certificate);
  const ComplexMatrix rebuilt = r.certificate->p + partial_transpose(r.certificate->q, SubsystemDims{}, Party::B);
  CHECK((rebuilt - w).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(min_eigenvalue(r.certificate->p) >= -1e-7);
  CHECK(min_eigenvalue(r.certificate->q) >= -1e-7);

  // witness operators from the detection SDP are members
  const DetectionResult det = solve_detection(optimized_state(), standard_bases(), kReferenceP1, Scenario::lo);
  CHECK(dual_cone_member(det.m_n - (1.0 - kReferenceP1) * id, 1e-7).member);

  ComplexMatrix bad = id;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(dual_cone_member(bad, 1e-7), InvalidInput);
}

TEST_CASE("product-state sampling") {
  const auto states = sample_product_states(10000, 17);
  ComplexMatrix mean = ComplexMatrix::Zero(9, 9);
  for (const DensityMatrix& s : states) {
    mean += s.mat();
  }
  for (int k = 0; k < 200; ++k) {
    const DensityMatrix& s = states[k];
    CHECK(std::abs(s.mat().trace() - 1.0) <= 1e-12);
    CHECK(is_psd(s.mat(), 1e-9));
    CHECK(is_psd(partial_transpose(s.mat(), s.dims(), Party::B), 1e-9));
  }
  mean /= static_cast<double>(states.size());
  CHECK((mean - ComplexMatrix::Identity(9, 9) / 9.0).cwiseAbs().maxCoeff() <= 5e-2);
  const auto again = sample_product_states(3, 17);
  CHECK((again[2].mat() - states[2].mat()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(sample_product_states(0, 1), InvalidInput);
}

TEST_CASE("type-I guarantee: tr(M_Y sigma) <= p1 on sampled product states") {
  const MeasurementModel mm = standard_bases();
  const auto states = sample_product_states(1000, 5);
  for (Scenario sc : {Scenario::lo, Scenario::one_way_locc}) {
    const DetectionResult r = solve_detection(optimized_state(), mm, kReferenceP1, sc);
    const ComplexMatrix m_y = ComplexMatrix::Identity(9, 9) - r.m_n;
    double worst = -1.0;
    for (const DensityMatrix& s : states) worst = std::max(worst, (m_y * s.mat()).trace().real());
    CHECK(worst <= kReferenceP1 + 1e-6);
  }
}

TEST_CASE("inner LP lies below the outer SDP") {
  const MeasurementModel mm = standard_bases();
  const auto states = sample_product_states(2000, 9);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2; ++trial) {
    const DensityMatrix rho = trial == 0 ? optimized_state() : random_pure(rng);
    for (double p1 : {0.2, kReferenceP1}) {
      const DetectionResult inner = solve_inner_lp(rho, mm, p1, states);
      const DetectionResult outer = solve_detection(rho, mm, p1, Scenario::lo);
      REQUIRE(inner.ok());
      CHECK_FALSE(inner.certificate.has_value());
      CHECK(validate(inner.instructions, 1e-6).empty());
      CHECK(inner.p2 <= outer.p2 + 1e-6);
    }
  }
  CHECK_THROWS_AS(solve_inner_lp(optimized_state(), mm, 0.5, {}), InvalidInput);
}

TEST_CASE("state estimation") {
  const MeasurementModel mm = standard_bases();
  const ReferenceTables t = load_reference_tables();
  const DensityMatrix rho = optimized_state();
  const auto support = instruction_support(t.locc);
  const ExpectationData exact = exact_expectations(rho, mm, support);
  const EstimateResult est = estimate_state(exact, mm);
  CHECK(est.residual <= 1e-8);
  for (const ExpectationEntry& e : exact.entries) {
    CHECK(std::abs(born_probability(est.rho, mm, e.x, e.a, e.y, e.b) - e.value) <= 1e-6);
  }

  ExpectationData single;
  single.entries.push_back({0, 0, 0, 0, 1.0});
  const EstimateResult sat = estimate_state(single, mm);
  CHECK(std::abs(sat.rho.mat()(0, 0).real() - 1.0) <= 1e-6);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1e-2);
  ExpectationData noisy = exact;
  for (auto& e : noisy.entries) e.value = std::clamp(e.value + noise(rng), 0.0, 1.0);
  const EstimateResult rough = estimate_state(noisy, mm);
  CHECK(rough.residual <= 81 * 1e-4 * 3);
  CHECK(is_psd(rough.rho.mat(), 1e-9));

  CHECK_THROWS_AS(estimate_state(ExpectationData{}, mm), InvalidInput);
}

TEST_CASE("expectation CSV") {
  ExpectationData d;
  d.entries.push_back({0, 1, 2, 0, 0.25});
  const ExpectationData back = parse_expectations_csv(expectations_to_csv(d));
  REQUIRE(back.entries.size() == 1);
  CHECK(back.entries[0].x == 0);
  CHECK(back.entries[0].y == 1);
  CHECK(back.entries[0].a == 2);
  CHECK(back.entries[0].b == 0);
  CHECK(back.entries[0].value == 0.25);
  CHECK_THROWS_AS(parse_expectations_csv("a,b,x,y,value\n"), InvalidInput);
  CHECK_THROWS_AS(parse_expectations_csv("a,b,x,y,value\n4,1,1,1,0.5\n"), InvalidInput);
  CHECK_THROWS_AS(parse_expectations_csv("a,b,x,y,value\n1,1,1,1,1.5\n"), InvalidInput);
}

TEST_CASE("detection result JSON carries the certificate") {
  const DetectionResult r = solve_detection(optimized_state(), standard_bases(), kReferenceP1, Scenario::one_way_locc);
  const std::string json = detection_result_to_json(r);
  CHECK(json.find("\"certificate\"") != std::string::npos);
  CHECK(json.find("\"1LOCC\"") != std::string::npos);
}

TEST_CASE("stalled interior-point runs fall back to their best iterate") {
  // At this grid point the dual residual stalls just above the strict
  // tolerance while later iterates drift; the solve must still succeed.
  const DetectionResult r =
      solve_detection(optimized_state(), standard_bases(), uniform_grid(100)[89], Scenario::one_way_locc);
  CHECK(r.ok());
  const CertificateCheck c = check_certificate(r);
  CHECK(c.identity_error <= 1e-6);
  CHECK(c.min_eig_p >= -1e-6);
  CHECK(c.min_eig_q >= -1e-6);
}
