#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "locc/error.hpp"
#include "locc/reference_tables.hpp"
#include "locc/simulator.hpp"

using namespace locc;

namespace {

double exact_p2(const InstructionSet& instr, const MeasurementModel& mm, const DensityMatrix& rho) {
  return (assemble_povm(instr, mm, kReferenceTableTol).m_n * rho.mat()).trace().real();
}

bool same_records(const std::vector<RoundRecord>& a, const std::vector<RoundRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const RoundRecord& l = a[k];
    const RoundRecord& r = b[k];
    if (l.round != r.round || l.protocol != r.protocol || l.x != r.x || l.a != r.a || l.y != r.y || l.b != r.b ||
        l.yprime != r.yprime || l.verdict != r.verdict) {
      return false;
    }
  }
  return true;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("locc_sim_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("counter rng: uniform range, categorical never picks zero weight") {
  CounterRng rng(7, 1, 0);
  for (int k = 0; k < 10000; ++k) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  const double w[4] = {0.0, 2.0, 0.0, 1.0};
  int counts[4] = {0, 0, 0, 0};
  for (int k = 0; k < 30000; ++k) ++counts[rng.categorical(w, 4)];
  CHECK(counts[0] == 0);
  CHECK(counts[2] == 0);
  CHECK(std::abs(counts[1] / 30000.0 - 2.0 / 3.0) < 0.02);
  const double zeros[3] = {0.0, 0.0, 0.0};
  CHECK(rng.categorical(zeros, 3) == -1);
  CHECK(CounterRng(1, 2, 3).next_u64() == CounterRng(1, 2, 3).next_u64());
  CHECK(CounterRng(1, 2, 3).next_u64() != CounterRng(1, 2, 4).next_u64());
  CHECK(CounterRng(1, 2, 3).next_u64() != CounterRng(1, 3, 3).next_u64());
}

TEST_CASE("all-Y instruction sets never report N") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  InstructionSet lo = t.lo;
  std::fill(lo.n_table.begin(), lo.n_table.end(), 0.0);
  InstructionSet locc = t.locc;
  std::fill(locc.n_table.begin(), locc.n_table.end(), 0.0);
  CHECK(run_rounds(rho, mm, lo, 5000, 3, kReferenceTableTol).empirical_p2 == 0.0);
  CHECK(run_rounds(rho, mm, locc, 5000, 3, kReferenceTableTol).empirical_p2 == 0.0);
}

TEST_CASE("empirical p2 converges to tr(M_N rho) within three standard errors") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const std::uint64_t n = 200000;
  for (const InstructionSet* instr : {&t.lo, &t.locc}) {
    const double p = exact_p2(*instr, mm, rho);
    const SimulationResult r = run_rounds(rho, mm, *instr, n, 11, kReferenceTableTol);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(std::abs(r.empirical_p2 - p) < 3.0 * sigma);
    CHECK(r.records.size() == n);
  }
}

TEST_CASE("run_rounds is reproducible and independent of thread count") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const auto a = run_rounds(rho, mm, t.locc, 4000, 99, kReferenceTableTol, 1);
  const auto b = run_rounds(rho, mm, t.locc, 4000, 99, kReferenceTableTol, 3);
  const auto c = run_rounds(rho, mm, t.locc, 4000, 100, kReferenceTableTol, 1);
  CHECK(same_records(a.records, b.records));
  CHECK_FALSE(same_records(a.records, c.records));
  CHECK(records_to_csv(a.records) == records_to_csv(b.records));
}

TEST_CASE("run_rounds rejects bad input") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  CHECK_THROWS_AS(run_rounds(rho, mm, t.lo, 0, 1), InvalidInput);
  InstructionSet broken = t.lo;
  broken.lo_joint[0] += 0.5;
  CHECK_THROWS_AS(run_rounds(rho, mm, broken, 10, 1), InvalidInput);
}

TEST_CASE("shuffled run: per-protocol counts, a-independence and replay") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const MergedInstructionSet m = merge_shuffled(t.lo, t.locc, 0.5);
  const std::uint64_t n = 3000;
  const ShuffledResult live = run_shuffled(rho, mm, m, n, 5);
  CHECK(live.lo_rounds + live.locc_rounds == n);
  std::uint64_t lo = 0;
  for (const RoundRecord& r : live.records) {
    lo += r.protocol == Scenario::lo;
    CHECK((r.yprime < 3) == (r.protocol == Scenario::lo));
    CHECK(r.y == r.yprime % 3);
  }
  CHECK(lo == live.lo_rounds);
  REQUIRE(live.p2_lo.has_value());
  REQUIRE(live.p2_locc.has_value());

  // LO half of the merged rows does not depend on Alice's outcome.
  for (int x = 0; x < 3; ++x)
    for (int yp = 0; yp < 3; ++yp) {
      CHECK(m.yprime(x, 0, yp) == doctest::Approx(m.yprime(x, 1, yp)).epsilon(1e-12));
      CHECK(m.yprime(x, 0, yp) == doctest::Approx(m.yprime(x, 2, yp)).epsilon(1e-12));
    }

  // Replay from tables as long as the run: identical records.
  const RngTableBundle tables = generate_rng_tables(m, 5, {n, n, n});
  CHECK(tables.table_count() == 172);
  const ShuffledResult replay = run_shuffled_replay(rho, mm, m, tables, n, 5);
  CHECK(same_records(live.records, replay.records));

  // Short tables run out.
  const RngTableBundle short_tables = generate_rng_tables(m, 5, {10, 10, 10});
  CHECK_THROWS_AS(run_shuffled_replay(rho, mm, m, short_tables, n, 5), InvalidInput);
}

TEST_CASE("shuffled run converges to each protocol's p2") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const MergedInstructionSet m = merge_shuffled(t.lo, t.locc, 0.5);
  const ShuffledResult r = run_shuffled(rho, mm, m, 200000, 21);
  const double p_lo = exact_p2(t.lo, mm, rho);
  const double p_locc = exact_p2(t.locc, mm, rho);
  CHECK(std::abs(*r.p2_lo - p_lo) < 3.0 * std::sqrt(p_lo * (1 - p_lo) / static_cast<double>(r.lo_rounds)));
  CHECK(std::abs(*r.p2_locc - p_locc) < 3.0 * std::sqrt(p_locc * (1 - p_locc) / static_cast<double>(r.locc_rounds)));
}

TEST_CASE("degenerate merge weight leaves one protocol empty") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const ShuffledResult r = run_shuffled(rho, mm, merge_shuffled(t.lo, t.locc, 1.0), 500, 2);
  CHECK(r.lo_rounds == 500);
  CHECK(r.locc_rounds == 0);
  CHECK(r.p2_lo.has_value());
  CHECK_FALSE(r.p2_locc.has_value());
}

TEST_CASE("merged tables with an a-dependent LO half are rejected") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  MergedInstructionSet m = merge_shuffled(t.lo, t.locc, 0.5);
  const double shift = 0.01;
  m.pm_yprime[m.yprime_index(0, 0, 1)] += shift;
  m.pm_yprime[m.yprime_index(0, 0, 2)] -= shift;
  CHECK_THROWS_AS(run_shuffled(rho, mm, m, 10, 1), InvalidInput);
}

TEST_CASE("random-number tables: counts, frequencies, file round trip") {
  const ReferenceTables t = load_reference_tables();
  const MergedInstructionSet m = merge_shuffled(t.lo, t.locc, 0.5);
  const std::size_t len = 20000;
  const RngTableBundle b = generate_rng_tables(m, 8, {len, 200, 50});
  CHECK(b.table_count() == 172);
  CHECK(b.rt_yprime.size() == 9);
  CHECK(b.rt_n.size() == 162);
  double counts[3] = {0, 0, 0};
  for (int d : b.rt_x) counts[d] += 1.0;
  for (int x = 0; x < 3; ++x) CHECK(std::abs(counts[x] / len - m.pm_x[x]) < 3.0 / std::sqrt(static_cast<double>(len)));

  CHECK_THROWS_AS(generate_rng_tables(m, 8, {0, 1, 1}), InvalidInput);
  CHECK_THROWS_AS(generate_rng_tables(m, 8, {1, 1, 0}), InvalidInput);

  const auto dir = temp_dir("tables");
  write_rng_tables(b, dir.string());
  CHECK(std::filesystem::exists(dir / "RTx.txt"));
  CHECK(std::filesystem::exists(dir / "RTy_a1x1.txt"));
  CHECK(std::filesystem::exists(dir / "RTN_1LOCC_a3b3x3y3.txt"));
  const RngTableBundle back = read_rng_tables(dir.string());
  CHECK(back.rt_x == b.rt_x);
  CHECK(back.rt_yprime == b.rt_yprime);
  CHECK(back.rt_n == b.rt_n);
  std::filesystem::remove_all(dir);
}

TEST_CASE("expectation estimates from records") {
  const MeasurementModel mm = standard_bases();
  const DensityMatrix rho = optimized_state();
  const ReferenceTables t = load_reference_tables();
  const auto support = instruction_support(t.lo);
  const SimulationResult r = run_rounds(rho, mm, t.lo, 100000, 4, kReferenceTableTol);
  const ExpectationData est = estimate_expectations(r.records, support);
  const ExpectationData exact = exact_expectations(rho, mm, support);
  REQUIRE(est.entries.size() + est.missing.size() == support.size());
  for (const ExpectationEntry& e : est.entries) {
    for (const ExpectationEntry& f : exact.entries) {
      if (e.x == f.x && e.y == f.y && e.a == f.a && e.b == f.b) CHECK(std::abs(e.value - f.value) < 0.02);
    }
  }

  // A single record leaves every other setting pair missing.
  std::vector<RoundRecord> one(1);
  std::vector<ExpectationEntry> cells = {{0, 0, 0, 0, 0.0}, {1, 2, 0, 1, 0.0}};
  const ExpectationData partial = estimate_expectations(one, cells);
  CHECK(partial.entries.size() == 1);
  CHECK(partial.entries[0].value == 1.0);
  CHECK(partial.missing.size() == 1);
}

TEST_CASE("records CSV header and verdict letters") {
  RoundRecord r;
  r.verdict = Verdict::no;
  const std::string csv = records_to_csv({r});
  CHECK(csv.rfind("round,protocol,x,a,yprime,y,b,verdict\n", 0) == 0);
  CHECK(csv.find("0,LO,1,1,,1,1,N") != std::string::npos);
}
