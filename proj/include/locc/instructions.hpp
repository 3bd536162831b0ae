#pragma once

// Protocol instruction sets P(x, y, N | a, b) for the LO and one-way LOCC
// scenarios, their factor tables, POVM assembly and the merged tables used
// for shuffled runs.
//
// All indices are 0-based in memory. Files use 1-based x, y, a, b (y' in the
// merged tables stays 0-based, as tabulated).
//
// Polytopes, with n(x,y,a,b) = P(x,y,N|a,b):
//   LO      0 <= n(x,y,a,b) <= m(x,y),  sum m = 1
//   1-LOCC  0 <= n(x,y,a,b) <= s(x,y|a),  sum_y s(x,y|a) = r(x) for all a,
//           sum r = 1,  s >= 0
// m is P(x,y); r is P(x); s is P(x) P(y|a,x).

#include <string>
#include <vector>

#include "locc/linalg.hpp"
#include "locc/states.hpp"

namespace locc {

enum class Scenario { lo, one_way_locc };

// "LO" / "1LOCC"
std::string to_string(Scenario s);
// Accepts "LO", "lo", "1LOCC", "1locc", "1-LOCC".
Scenario parse_scenario(const std::string& text);

struct Shape {
  int settings = 3;
  int outcomes = 3;

  int n_size() const { return settings * settings * outcomes * outcomes; }
  int n_index(int x, int y, int a, int b) const { return ((x * settings + y) * outcomes + a) * outcomes + b; }
  int xy_index(int x, int y) const { return x * settings + y; }
  int s_index(int x, int y, int a) const { return (x * settings + y) * outcomes + a; }
  // P(y|a,x) rows
  int y_given_ax_index(int x, int a, int y) const { return (x * outcomes + a) * settings + y; }
  bool operator==(const Shape&) const = default;
};

struct InstructionSet {
  Scenario scenario = Scenario::lo;
  Shape shape;
  std::vector<double> n_table;   // n_index
  std::vector<double> lo_joint;  // xy_index; LO only
  std::vector<double> locc_px;   // x; 1-LOCC only
  std::vector<double> locc_s;    // s_index; 1-LOCC only

  double n(int x, int y, int a, int b) const { return n_table[shape.n_index(x, y, a, b)]; }
  // Upper bound of n(x,y,a,b) in this scenario: m(x,y) or s(x,y|a).
  double bound(int x, int y, int a) const;
};

struct Violation {
  std::string constraint;  // "range", "normalization", "marginal", "bound", "shape"
  std::string where;       // 1-based indices
  double excess = 0.0;

  std::string describe() const;
};

// Empty iff every invariant holds within tol. Never throws.
std::vector<Violation> validate(const InstructionSet& instr, double tol);

struct LoFactors {
  std::vector<double> p_xy;          // xy_index
  std::vector<double> p_n_given_xyab;  // n_index
};

struct LoccFactors {
  std::vector<double> p_x;
  std::vector<double> p_y_given_ax;  // y_given_ax_index
  std::vector<double> p_n_given_xyab;
};

// Degenerate rows: P(y|a,x) uniform where P(x) <= tol, P(N|.) zero where the
// bound is <= tol.
LoccFactors factorize_locc(const InstructionSet& instr, double tol);
LoFactors factorize_lo(const InstructionSet& instr, double tol);

// Throw InvalidInput when a factor is not a (conditional) distribution within
// 1e-6.
InstructionSet lo_from_factors(const std::vector<double>& p_xy, const std::vector<double>& p_n_given_xyab,
                               Shape shape = {});
InstructionSet locc_from_factors(const std::vector<double>& p_x, const std::vector<double>& p_y_given_ax,
                                 const std::vector<double>& p_n_given_xyab, Shape shape = {});

// Re-express an LO set as a 1-LOCC set with P(y|a,x) = P(x,y) / P(x).
InstructionSet lo_as_locc(const InstructionSet& lo);

struct Povm {
  ComplexMatrix m_n;
  ComplexMatrix m_y;
};

// Throws InvalidInput if validate(instr, tol) is not empty or the shapes of
// instr and mm disagree.
Povm assemble_povm(const InstructionSet& instr, const MeasurementModel& mm, double tol = 1e-6);

// --- merged tables for shuffled runs ---------------------------------------

struct MergedInstructionSet {
  Shape shape;
  std::vector<double> pm_x;        // x
  std::vector<double> pm_yprime;   // (x * outcomes + a) * (2 * settings) + y'
  std::vector<double> pn_lo;       // P_LO(N|x,y,a,b), n_index
  std::vector<double> pn_locc;     // P_1LOCC(N|x,y,a,b), n_index
  double weight = 0.5;             // LO share per round, NaN when unknown

  int yprime_count() const { return 2 * shape.settings; }
  int yprime_index(int x, int a, int yp) const { return (x * shape.outcomes + a) * yprime_count() + yp; }
  double yprime(int x, int a, int yp) const { return pm_yprime[yprime_index(x, a, yp)]; }
};

inline constexpr double kDefaultMergeWeight = 0.5;

// P_m(x) = w P_LO(x) + (1-w) P_1LOCC(x). LO rows y' = y carry
// w P_LO(x,y) / P_m(x); 1-LOCC rows y' = settings + y carry
// (1-w) P_1LOCC(x) P(y|a,x) / P_m(x).
MergedInstructionSet merge_shuffled(const InstructionSet& lo, const InstructionSet& locc,
                                    double weight = kDefaultMergeWeight);

// Least-squares weight in [0, 1] matching a target P_m(x).
double fit_merge_weight(const InstructionSet& lo, const InstructionSet& locc, const std::vector<double>& target_pm_x);

// Row normalization, range, and a-independence of the LO half.
std::vector<Violation> validate_merged(const MergedInstructionSet& merged, double tol);

// --- JSON ------------------------------------------------------------------
//
// {"scenario":"LO"|"1LOCC", "settings":3, "outcomes":3,
//  "n_table":[[x,y,a,b,value], ...],
//  "factors": {"p_xy":[[x,y,value], ...]}                        (LO)
//             {"p_x":[[x,value], ...], "p_y_given_ax":[[a,x,y,value], ...]}   (1-LOCC)}
// Indices 1-based; omitted n_table entries are zero.
InstructionSet parse_instructions_json(const std::string& text);
InstructionSet read_instructions_file(const std::string& path);
std::string instructions_to_json(const InstructionSet& instr);

}  // namespace locc
