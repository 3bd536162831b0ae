#pragma once

// Bundled reference tables for the optimized state (see data/).
//
//   joint_instructions.csv  x,y,a,b,p_lo,p_1locc        P(x,y,N|a,b)
//   decision_probabilities.csv        x,y,a,b,pn_lo,pn_1locc      P(N|x,y,a,b)
//   locc_px.csv             x,p                          1-LOCC P(x)
//   locc_py_given_ax.csv    a,x,y,p                      1-LOCC P(y|a,x)
//   lo_pxy.csv            x,y,p                        LO P(x,y)
//   merged_px.csv            x,p                          merged P_m(x)
//   merged_pyprime_given_ax.csv       a,x,yprime,p                 merged P_m(y'|a,x), y' 0-based
//   optimized_state.json                optimized state
//   instructions_{lo,1locc}.json joint instruction columns with their factors, in the
//                                instruction JSON format

#include <string>
#include <vector>

#include "locc/instructions.hpp"

namespace locc {

inline constexpr double kReferenceTableTol = 1e-3;
inline constexpr double kReferenceP1 = 0.7481;
inline constexpr double kReferenceP2Lo = 0.0944;
inline constexpr double kReferenceP2Locc = 0.0283;
inline constexpr double kReferenceGap = 0.0661;

struct ReferenceTables {
  Shape shape;
  // Joint instruction columns with the factor tables attached.
  InstructionSet lo;
  InstructionSet locc;
  // Decision probabilities
  std::vector<double> pn_lo;
  std::vector<double> pn_locc;
  // Factor tables
  std::vector<double> px;
  std::vector<double> py_given_ax;
  std::vector<double> pxy;
  // Merged shuffled tables
  MergedInstructionSet merged;
};

// Throws InvalidInput on missing files or malformed rows.
ReferenceTables load_reference_tables(const std::string& dir);
ReferenceTables load_reference_tables();

// Factor and decision tables chained back into P(x,y,N|a,b).
InstructionSet recombine_lo(const ReferenceTables& t);
InstructionSet recombine_locc(const ReferenceTables& t);

}  // namespace locc
