#pragma once

// Event-ready Monte Carlo rounds for the LO, 1-LOCC and shuffled procedures,
// pre-generated random-number tables, and empirical expectation estimates.
//
// Randomness is counter based: every draw comes from a splitmix64 stream
// keyed by (seed, purpose, counter), so results do not depend on execution
// order or thread count.
//   - run_rounds: one stream per round.
//   - run_shuffled: the Born-rule draws of round r use the per-round stream;
//     the k-th use of random-number table T draws from the stream of (T, k),
//     which is exactly digit k of T in generate_rng_tables. Replaying a
//     bundle therefore reproduces a live run record for record.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locc/detection.hpp"
#include "locc/instructions.hpp"
#include "locc/states.hpp"

namespace locc {

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t counter);

  std::uint64_t next_u64();
  double uniform();  // [0, 1), 53 random bits
  // Index drawn from unnormalized nonnegative weights; zero-weight entries are
  // never returned. Returns -1 when all weights vanish.
  int categorical(const double* weights, int count);

 private:
  std::uint64_t state_;
};

enum class Verdict { yes, no };  // yes = "entangled", no = N

struct RoundRecord {
  std::uint64_t round = 0;
  Scenario protocol = Scenario::lo;
  int x = 0, a = 0, y = 0, b = 0;  // 0-based
  int yprime = -1;                 // 0-based merged setting; -1 outside shuffled runs
  Verdict verdict = Verdict::yes;
};

struct SimulationResult {
  std::vector<RoundRecord> records;
  double empirical_p2 = 0.0;
  std::uint64_t resampled = 0;  // rounds redrawn after a zero-probability conditioning
};

// Born probabilities p(x,y,a,b) = tr(rho A_x^a (x) B_y^b), n_index layout,
// clamped at zero.
std::vector<double> born_table(const DensityMatrix& rho, const MeasurementModel& mm);

// Throws InvalidInput for n == 0 or an instruction set failing validation at
// tol. threads <= 0 picks the hardware concurrency.
SimulationResult run_rounds(const DensityMatrix& rho, const MeasurementModel& mm, const InstructionSet& instr,
                            std::uint64_t n, std::uint64_t seed, double tol = 1e-6, int threads = 1);

struct ShuffledResult {
  std::vector<RoundRecord> records;
  std::uint64_t lo_rounds = 0;
  std::uint64_t locc_rounds = 0;
  std::optional<double> p2_lo;    // empty when no LO rounds were drawn
  std::optional<double> p2_locc;  // empty when no 1-LOCC rounds were drawn
};

struct RngTableBundle {
  Shape shape;
  std::vector<int> rt_x;                   // digits 0..settings-1
  std::vector<std::vector<int>> rt_yprime;  // [x * outcomes + a], digits 0..2*settings-1
  std::vector<std::vector<int>> rt_n;      // [protocol * n_size + n_index], 1 = N, 0 = Y

  std::size_t table_count() const { return 1 + rt_yprime.size() + rt_n.size(); }
};

struct TableLengths {
  std::size_t rt_x = 0;
  std::size_t rt_yprime = 0;
  std::size_t rt_n = 0;
};

// Structural checks on the merged tables (rows normalized within tol, LO half
// a-independent within 1e-9). Throws InvalidInput on failure.
void check_merged_for_run(const MergedInstructionSet& merged, double tol);

ShuffledResult run_shuffled(const DensityMatrix& rho, const MeasurementModel& mm, const MergedInstructionSet& merged,
                            std::uint64_t n, std::uint64_t seed, double tol = 1e-6);

// Consumes digits from the bundle instead of sampling the tables live.
// Throws InvalidInput when a table runs out.
ShuffledResult run_shuffled_replay(const DensityMatrix& rho, const MeasurementModel& mm,
                                   const MergedInstructionSet& merged, const RngTableBundle& tables,
                                   std::uint64_t n, std::uint64_t seed, double tol = 1e-6);

// Throws InvalidInput if any length is zero.
RngTableBundle generate_rng_tables(const MergedInstructionSet& merged, std::uint64_t seed, TableLengths lengths);

// RTx.txt, RTy_a{a}x{x}.txt, RTN_{LO|1LOCC}_a{a}b{b}x{x}y{y}.txt (1-based
// indices), one line of digits each.
void write_rng_tables(const RngTableBundle& tables, const std::string& dir);
RngTableBundle read_rng_tables(const std::string& dir, Shape shape = {});

// E(a,b,x,y) = #(x,y,a,b) / #(x,y) over all records, for each support cell.
// Cells whose settings never occurred are listed in `missing`.
ExpectationData estimate_expectations(const std::vector<RoundRecord>& records,
                                      const std::vector<ExpectationEntry>& support);

// Adds i.i.d. Gaussian noise of standard deviation `scale` to every entry and
// clamps the result to [0, 1]. Deterministic in seed.
ExpectationData perturb_expectations(const ExpectationData& data, double scale, std::uint64_t seed);

// header "round,protocol,x,a,yprime,y,b,verdict"; 1-based x, a, y, b; yprime
// 0-based and empty outside shuffled runs; verdict Y or N.
std::string records_to_csv(const std::vector<RoundRecord>& records);

}  // namespace locc
