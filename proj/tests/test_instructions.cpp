#include <doctest.h>

#include <cmath>
#include <random>

#include "locc/error.hpp"
#include "locc/instructions.hpp"
#include "locc/reference_tables.hpp"

using namespace locc;

namespace {

const Shape kShape;

std::vector<double> random_simplex(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) total += (x = e(rng));
  for (double& x : v) x /= total;
  return v;
}

std::vector<double> random_unit_box(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

InstructionSet random_lo(std::mt19937_64& rng) {
  return lo_from_factors(random_simplex(9, rng), random_unit_box(kShape.n_size(), rng));
}

InstructionSet random_locc(std::mt19937_64& rng) {
  std::vector<double> pyax;
  for (int row = 0; row < 9; ++row) {
    const auto r = random_simplex(3, rng);
    pyax.insert(pyax.end(), r.begin(), r.end());
  }
  return locc_from_factors(random_simplex(3, rng), pyax, random_unit_box(kShape.n_size(), rng));
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("assemble_povm trivial cases") {
  const MeasurementModel mm = standard_bases();
  InstructionSet zero = lo_from_factors(std::vector<double>(9, 1.0 / 9.0), std::vector<double>(81, 0.0));
  const Povm p0 = assemble_povm(zero, mm);
  CHECK(max_abs(p0.m_n) == 0.0);
  CHECK(max_abs(p0.m_y - ComplexMatrix::Identity(9, 9)) == 0.0);

  std::mt19937_64 rng(1);
  for (const InstructionSet& full : {lo_from_factors(random_simplex(9, rng), std::vector<double>(81, 1.0)),
                                     random_locc(rng)}) {
    InstructionSet saturated = full;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) saturated.n_table[kShape.n_index(x, y, a, b)] = saturated.bound(x, y, a);
    CHECK(max_abs(assemble_povm(saturated, mm).m_n - ComplexMatrix::Identity(9, 9)) < 1e-9);
  }
}

TEST_CASE("bundled tables give the reference error probabilities on the optimized state") {
  const ReferenceTables t = load_reference_tables();
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const double p_lo = (assemble_povm(t.lo, mm, kReferenceTableTol).m_n * rho.mat()).trace().real();
  const double p_locc = (assemble_povm(t.locc, mm, kReferenceTableTol).m_n * rho.mat()).trace().real();
  CHECK(std::abs(p_lo - kReferenceP2Lo) < 5e-3);
  CHECK(std::abs(p_locc - kReferenceP2Locc) < 5e-3);
}

TEST_CASE("validate: bundled tables clean, constructed defects named") {
  const ReferenceTables t = load_reference_tables();
  CHECK(validate(t.lo, kReferenceTableTol).empty());
  CHECK(validate(t.locc, kReferenceTableTol).empty());

  InstructionSet bad = t.lo;
  bad.n_table[kShape.n_index(0, 0, 0, 0)] = 1.5;
  auto v = validate(bad, kReferenceTableTol);
  int range_hits = 0;
  for (const auto& e : v) range_hits += e.constraint == "range";
  CHECK(range_hits == 1);

  InstructionSet skew = t.locc;
  // move mass from y=3 to y=2 only for a=1 at x=1, keeping P(x) fixed but breaking sum_y s(1,y|1) = P(1)
  skew.locc_s[kShape.s_index(0, 2, 0)] += 0.05;
  v = validate(skew, kReferenceTableTol);
  REQUIRE(v.size() == 1);
  CHECK(v[0].constraint == "marginal");
  CHECK(v[0].where.find("x=1,a=1") != std::string::npos);
}

TEST_CASE("factorize_locc recovers the factor and decision entries") {
  const ReferenceTables t = load_reference_tables();
  const LoccFactors f = factorize_locc(t.locc, 1e-6);
  // (x=1, y=3, a=1, b=2): 0.2020 * 0.9622 * 0.7473 = 0.1453
  CHECK(t.locc.n(0, 2, 0, 1) == doctest::Approx(0.1453).epsilon(1e-3));
  CHECK(f.p_x[0] * f.p_y_given_ax[kShape.y_given_ax_index(0, 0, 2)] * f.p_n_given_xyab[kShape.n_index(0, 2, 0, 1)] ==
        doctest::Approx(t.locc.n(0, 2, 0, 1)).epsilon(1e-9));
  CHECK(std::abs(f.p_n_given_xyab[kShape.n_index(0, 2, 0, 1)] - 0.7473) < 1e-3);
  CHECK(std::abs(t.locc.n(1, 0, 0, 0) - 0.4768) < 1e-9);
  CHECK(std::abs(f.p_n_given_xyab[kShape.n_index(1, 0, 0, 0)] - 1.0) < 1e-3);

  InstructionSet half = t.locc;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) half.n_table[kShape.n_index(x, y, a, b)] = half.bound(x, y, a) / 2.0;
  const LoccFactors fh = factorize_locc(half, 1e-12);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int a = 0; a < 3; ++a) {
        if (half.bound(x, y, a) > 1e-12) CHECK(fh.p_n_given_xyab[kShape.n_index(x, y, a, 0)] == doctest::Approx(0.5));
      }
}

TEST_CASE("recombining factor and decision tables reproduces the joint table") {
  const ReferenceTables t = load_reference_tables();
  const InstructionSet lo = recombine_lo(t);
  const InstructionSet locc = recombine_locc(t);
  double worst = 0.0;
  for (int k = 0; k < kShape.n_size(); ++k) {
    worst = std::max(worst, std::abs(lo.n_table[k] - t.lo.n_table[k]));
    worst = std::max(worst, std::abs(locc.n_table[k] - t.locc.n_table[k]));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("factor constructors") {
  std::vector<double> pxy(9, 0.0);
  pxy[0] = 1.0;
  const InstructionSet det = lo_from_factors(pxy, std::vector<double>(81, 1.0));
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) CHECK((det.n(x, y, a, b) != 0.0) == (x == 0 && y == 0));

  CHECK_THROWS_AS(lo_from_factors(std::vector<double>(9, 0.2), std::vector<double>(81, 0.0)), InvalidInput);
  CHECK_THROWS_AS(locc_from_factors({0.5, 0.5, 0.5}, std::vector<double>(27, 1.0 / 3.0), std::vector<double>(81, 0.0)),
                  InvalidInput);

  // a-independent P(y|a,x): the 1-LOCC set is also an LO set with P(x,y) = P(x) P(y|x)
  std::mt19937_64 rng(4);
  const auto px = random_simplex(3, rng);
  std::vector<double> pyax(27), pxy2(9);
  for (int x = 0; x < 3; ++x) {
    const auto row = random_simplex(3, rng);
    for (int a = 0; a < 3; ++a)
      for (int y = 0; y < 3; ++y) pyax[kShape.y_given_ax_index(x, a, y)] = row[y];
    for (int y = 0; y < 3; ++y) pxy2[kShape.xy_index(x, y)] = px[x] * row[y];
  }
  InstructionSet as_lo = locc_from_factors(px, pyax, random_unit_box(81, rng));
  CHECK(validate(as_lo, 1e-6).empty());
  as_lo.scenario = Scenario::lo;
  as_lo.lo_joint = pxy2;
  CHECK(validate(as_lo, 1e-6).empty());
}

TEST_CASE("properties: containment, linearity, round trips, range of tr(M_N rho)") {
  std::mt19937_64 rng(5);
  const MeasurementModel mm = standard_bases();
  for (int trial = 0; trial < 100; ++trial) {
    const InstructionSet lo = random_lo(rng);
    REQUIRE(validate(lo, 1e-6).empty());
    CHECK(validate(lo_as_locc(lo), 1e-6).empty());
  }
  for (int trial = 0; trial < 10; ++trial) {
    const InstructionSet p = random_lo(rng);
    const InstructionSet q = random_lo(rng);
    const double w = 0.3;
    InstructionSet mix = p;
    for (int k = 0; k < 81; ++k) mix.n_table[k] = w * p.n_table[k] + (1 - w) * q.n_table[k];
    for (int k = 0; k < 9; ++k) mix.lo_joint[k] = w * p.lo_joint[k] + (1 - w) * q.lo_joint[k];
    const ComplexMatrix lhs = assemble_povm(mix, mm).m_n;
    const ComplexMatrix rhs = w * assemble_povm(p, mm).m_n + (1 - w) * assemble_povm(q, mm).m_n;
    CHECK(max_abs(lhs - rhs) < 1e-10);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const InstructionSet s = random_locc(rng);
    const LoccFactors f = factorize_locc(s, 1e-12);
    const InstructionSet back = locc_from_factors(f.p_x, f.p_y_given_ax, f.p_n_given_xyab);
    for (int k = 0; k < 81; ++k) CHECK(std::abs(back.n_table[k] - s.n_table[k]) < 1e-12);
    const ComplexVector v = ComplexVector::Random(9).normalized();
    const double p = (assemble_povm(s, mm).m_n * projector(v)).trace().real();
    CHECK(p >= -1e-12);
    CHECK(p <= 1.0 + 1e-8);
  }
}

TEST_CASE("merge_shuffled reproduces the shuffled-protocol tables at weight 1/2") {
  const ReferenceTables t = load_reference_tables();
  const double w = fit_merge_weight(t.lo, t.locc, t.merged.pm_x);
  CHECK(w == doctest::Approx(0.5).epsilon(0.05));
  const MergedInstructionSet m = merge_shuffled(t.lo, t.locc, w);
  for (int x = 0; x < 3; ++x) CHECK(std::abs(m.pm_x[x] - t.merged.pm_x[x]) <= 5e-3);
  CHECK(validate_merged(m, 1e-9).empty());
  CHECK(validate_merged(t.merged, 1e-3).empty());
  // LO half of row (a=1, x=1) matches the tabulated 0.0000, 0.2435, 0.2947 for every a
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(m.yprime(0, a, 1) - 0.2435) <= 5e-3);
    CHECK(std::abs(m.yprime(0, a, 2) - 0.2947) <= 5e-3);
    CHECK(m.yprime(0, a, 0) == 0.0);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < m.pm_yprime.size(); ++k) worst = std::max(worst, std::abs(m.pm_yprime[k] - t.merged.pm_yprime[k]));
  CHECK(worst <= 5e-3);

  const MergedInstructionSet pure_lo = merge_shuffled(t.lo, t.locc, 1.0);
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < 3; ++a)
      for (int yp = 3; yp < 6; ++yp) CHECK(pure_lo.yprime(x, a, yp) == 0.0);
}

TEST_CASE("instruction JSON round trip and errors") {
  const ReferenceTables t = load_reference_tables();
  for (const InstructionSet& s : {t.lo, t.locc}) {
    const InstructionSet back = parse_instructions_json(instructions_to_json(s));
    CHECK(back.scenario == s.scenario);
    for (int k = 0; k < 81; ++k) CHECK(back.n_table[k] == doctest::Approx(s.n_table[k]).epsilon(1e-12));
    CHECK(validate(back, kReferenceTableTol).empty());
  }
  CHECK_THROWS_AS(parse_instructions_json("{\"scenario\":\"LO\"}"), InvalidInput);
  CHECK_THROWS_AS(parse_instructions_json("{\"scenario\":\"2LOCC\",\"n_table\":[],\"factors\":{}}"), InvalidInput);
  try {
    parse_instructions_json("{\"scenario\":\"LO\",\"n_table\":[[1,1,1,9,0.5]],\"factors\":{\"p_xy\":[]}}");
    FAIL("expected an exception");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("n_table[0].b") != std::string::npos);
  }
}
