#pragma once

// Optimal entanglement-detection programs.
//
// Given a target state rho and a false-positive level p1, find the instruction
// set minimizing the false-negative probability p2 = tr(M_N rho) subject to
// p1 I - M_Y lying in the dual of the PPT-relaxed separable set, i.e.
//   M_N - (1 - p1) I = P + Q^{T_B},   P, Q >= 0.
// Also: the optimistic LP that only enforces tr(M_Y sigma_i) <= p1 on sampled
// product states, and least-squares state estimation from expectation values.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locc/conic.hpp"
#include "locc/instructions.hpp"
#include "locc/linalg.hpp"
#include "locc/states.hpp"

namespace locc {

enum class BoundType { outer_sdp, inner_lp };

// "outer" / "inner"
std::string to_string(BoundType b);
BoundType parse_bound(const std::string& text);

struct WitnessCertificate {
  ComplexMatrix p;
  ComplexMatrix q;
};

struct DetectionResult {
  Scenario scenario = Scenario::lo;
  BoundType bound = BoundType::outer_sdp;
  double p1 = 0.0;
  double p2 = 0.0;
  InstructionSet instructions;
  ComplexMatrix m_n;
  std::optional<WitnessCertificate> certificate;  // absent for the inner LP
  conic::SolverStatus status = conic::SolverStatus::numerical_failure;
  int iterations = 0;

  bool ok() const;
};

// Throws InvalidInput for p1 outside [0, 1] or shape mismatches and
// SolverError if the solver reports infeasibility (the all-N rule is always
// feasible). Numerical trouble is reported through `status`.
DetectionResult solve_detection(const DensityMatrix& rho, const MeasurementModel& mm, double p1, Scenario scenario,
                                const conic::SolverSettings& settings = {});

struct DualConeResult {
  bool member = false;
  double margin = 0.0;  // smallest t with w + t I in the cone family; <= tol iff member
  std::optional<WitnessCertificate> certificate;
  conic::SolverStatus status = conic::SolverStatus::numerical_failure;
};

// Is w = P + Q^{T_B} with P, Q >= -tol I? Throws InvalidInput if w is not a
// Hermitian 9x9 matrix.
DualConeResult dual_cone_member(const ComplexMatrix& w, double tol, SubsystemDims dims = {});

// Max violation of the certificate identity and the PSD conditions.
struct CertificateCheck {
  double identity_error = 0.0;  // max |(M_N - (1-p1) I) - (P + Q^{T_B})|
  double min_eig_p = 0.0;
  double min_eig_q = 0.0;
};
CertificateCheck check_certificate(const DetectionResult& r, SubsystemDims dims = {});

struct TradeoffCurve {
  Scenario scenario = Scenario::lo;
  BoundType bound = BoundType::outer_sdp;
  std::vector<double> p1_grid;
  std::vector<double> p2_values;
  std::vector<conic::SolverStatus> status;

  // p2 non-increasing along the grid within tol; failed points are skipped.
  bool monotone(double tol = 1e-6) const;
};

std::vector<double> uniform_grid(int points);

// Grid points run on up to `threads` workers; results are stored by grid
// index. threads <= 0 picks the hardware concurrency.
TradeoffCurve tradeoff_curve(const DensityMatrix& rho, const MeasurementModel& mm, Scenario scenario,
                             const std::vector<double>& grid, int threads = 0);
TradeoffCurve inner_tradeoff_curve(const DensityMatrix& rho, const MeasurementModel& mm, Scenario scenario,
                                   const std::vector<double>& grid, const std::vector<DensityMatrix>& product_states,
                                   int threads = 0);

// |u><u| (x) |v><v| with u, v independent Haar-random qutrit vectors.
std::vector<DensityMatrix> sample_product_states(int count, std::uint64_t seed, SubsystemDims dims = {});

// Optimistic LP: minimize tr(M_N rho) over the scenario polytope subject to
// tr(M_Y sigma_i) <= p1 for every sampled state. Throws InvalidInput for an
// empty sample set.
DetectionResult solve_inner_lp(const DensityMatrix& rho, const MeasurementModel& mm, double p1,
                               const std::vector<DensityMatrix>& product_states, Scenario scenario = Scenario::lo,
                               const conic::SolverSettings& settings = {});

// Expectation values E(a,b,x,y) = tr(rho A_x^a (x) B_y^b), 0-based indices.
struct ExpectationEntry {
  int x = 0, y = 0, a = 0, b = 0;
  double value = 0.0;
};

struct ExpectationData {
  std::vector<ExpectationEntry> entries;
  // Cells of the requested support with no data behind them.
  std::vector<ExpectationEntry> missing;
};

// Support cells where the instruction set has nonzero n(x,y,a,b).
std::vector<ExpectationEntry> instruction_support(const InstructionSet& instr, double tol = 0.0);
ExpectationData exact_expectations(const DensityMatrix& rho, const MeasurementModel& mm,
                                   const std::vector<ExpectationEntry>& support);

struct EstimateResult {
  DensityMatrix rho;
  double residual = 0.0;  // sum of squared deviations at the optimum
  conic::SolverStatus status = conic::SolverStatus::numerical_failure;
};

// min sum (E - tr(rho Pi))^2 over density matrices, as a second-order-cone
// program with one Hermitian PSD block. Throws InvalidInput for empty data
// and SolverError when the solver does not converge.
EstimateResult estimate_state(const ExpectationData& data, const MeasurementModel& mm);

// --- files -------------------------------------------------------------------

// header "a,b,x,y,value", 1-based indices. Throws InvalidInput on empty
// files, bad indices or values outside [-1e-6, 1 + 1e-6].
ExpectationData parse_expectations_csv(const std::string& text, const std::string& source = "<string>");
ExpectationData read_expectations_csv(const std::string& path);
std::string expectations_to_csv(const ExpectationData& data);

// header "p1,p2,scenario,bound"
std::string curve_to_csv(const TradeoffCurve& curve);

// JSON document with p1, p2, scenario, bound, status, m_n, certificate and
// the instruction set.
std::string detection_result_to_json(const DetectionResult& r);

}  // namespace locc
