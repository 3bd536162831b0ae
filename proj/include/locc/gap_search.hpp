#pragma once

// Black-box search for preparable states maximizing the advantage of 1-LOCC
// over LO detection, G(rho, p1) = p2_LO*(rho, p1) - p2_LOCC*(rho, p1).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locc/detection.hpp"
#include "locc/states.hpp"

namespace locc {

struct GapEvaluation {
  double p1 = 0.0;
  double p2_lo = 0.0;
  double p2_locc = 0.0;
  double gap = 0.0;  // p2_lo - p2_locc
  bool ok = false;   // both solves converged
};

GapEvaluation evaluate_gap(const DensityMatrix& rho, double p1, const MeasurementModel& mm);

// Throws SolverError when either solve fails.
double gap_objective(const DensityMatrix& rho, double p1, const MeasurementModel& mm);
double gap_objective_params(const StateParams& p, const MeasurementModel& mm);

enum class Optimizer { nelder_mead, evolution };

// "nelder-mead" / "evolution"
std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& text);

struct ParamBounds {
  double e1_min = -3.0;
  double e1_max = 3.0;
  double lambda_min = -3.14159265358979323846;
  double lambda_max = 3.14159265358979323846;
};

// Projects onto the box: e1 and lambda clamped, theta clamped to [0, pi],
// phi clamped to [0, 2 pi]. phi is clamped rather than wrapped because the
// state depends on phi / 4, so phi = 0 and phi = 2 pi are different states.
StateParams clamp_params(const StateParams& p, const ParamBounds& bounds);

// 12 coordinates: e1, phi, theta, lambda_1..9.
inline constexpr int kParamCount = 3 + kNumGenerators;
std::array<double, kParamCount> to_array(const StateParams& p);
StateParams from_array(const std::array<double, kParamCount>& v);

struct SearchConfig {
  int restarts = 1;
  int iterations = 200;  // objective evaluations per restart
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::nelder_mead;
  ParamBounds bounds;
  // Restart 0 starts here when set; other restarts start at uniform random
  // points inside the bounds.
  std::optional<StateParams> initial;
  // Euclidean length of a random displacement applied to `initial`.
  double initial_perturbation = 0.0;
  double step = 0.1;  // initial simplex edge / mutation scale
  int threads = 1;    // restarts run concurrently

  // Throws InvalidInput on restarts or iterations < 1, step <= 0 or an empty
  // box.
  void validate() const;
};

struct TraceEntry {
  int restart = 0;
  int iteration = 0;  // 0-based evaluation index within the restart
  StateParams params;
  GapEvaluation eval;
  double best_so_far = 0.0;  // over all entries up to and including this one
};

struct SearchTrace {
  std::vector<TraceEntry> entries;  // ordered by restart, then iteration

  bool best_monotone() const;
};

struct SearchResult {
  StateParams best;
  GapEvaluation best_eval;
  SearchTrace trace;
};

// Deterministic given (cfg, mm). Failed evaluations are kept in the trace with
// ok = false and never become the best point. Throws SolverError when no
// evaluation succeeds.
SearchResult search(const SearchConfig& cfg, const MeasurementModel& mm);

struct StateFit {
  StateParams params;
  double fidelity = 0.0;
};

// Least-squares fit of the preparable family to the leading eigenvector of
// rho (Schmidt decomposition for the angles, matrix logarithm for lambda,
// then a Nelder-Mead polish of the fidelity). e1 is set from p1.
StateFit fit_state_params(const DensityMatrix& rho, double p1);

// header "restart,iteration,e1,phi,theta,l1,...,l9,p1,p2_lo,p2_locc,gap"
std::string trace_to_csv(const SearchTrace& trace);

// {"e1":..,"phi":..,"theta":..,"lambda":[9], "p1":..}
std::string params_to_json(const StateParams& p);
// Missing fields default to zero; "p1" may stand in for "e1".
StateParams parse_params_json(const std::string& text);

// Config file: {"restarts":1, "iterations":200, "seed":0,
// "optimizer":"nelder-mead", "step":0.1, "threads":1,
// "bounds":{"e1":[-3,3], "lambda":[-pi,pi]},
// "initial": <params> | "fit-optimized", "perturbation":0.01}
SearchConfig parse_search_config(const std::string& text);

}  // namespace locc
