#pragma once

// Preparable qutrit-qutrit states, the optimized target state and the local
// measurement bases.

#include <array>
#include <string>
#include <vector>

#include "locc/linalg.hpp"

namespace locc {

inline constexpr int kNumGenerators = 9;

struct StateParams {
  double e1 = 0.0;     // false-positive reparametrization, p1 = (tanh(e1) + 1) / 2
  double phi = 0.0;    // [0, 2 pi)
  double theta = 0.0;  // [0, pi]
  std::array<double, kNumGenerators> lambda{};

  double p1() const;
  // phi wrapped into [0, 2 pi), theta clamped into [0, pi].
  StateParams canonical() const;
};

double e1_from_p1(double p1);

// sin(t/2) cos(f/4) |00> + sin(t/2) sin(f/4) |11> + cos(t/2) |22>
ComplexVector psi_from_angles(double theta, double phi);

// i * Gell-Mann_1..8 followed by i * I_3.
const std::array<ComplexMatrix, kNumGenerators>& generators();
const std::array<ComplexMatrix, 8>& gell_mann();

ComplexMatrix local_unitary(const std::array<double, kNumGenerators>& lambda);

// (U_A (x) I) |psi(theta, phi)>
ComplexVector prepared_vector(const StateParams& p);
DensityMatrix prepare_state(const StateParams& p);

// The hard-coded optimized state vector (given to four decimals),
// renormalized.
ComplexVector optimized_vector_raw();
DensityMatrix optimized_state();

// Rank-1 projective measurements for both parties, indexed [setting][outcome]
// (0-based).
class MeasurementModel {
 public:
  using Family = std::vector<std::vector<ComplexMatrix>>;

  // Throws InvalidInput unless every setting is a complete set of
  // idempotent Hermitian projectors within 1e-10.
  MeasurementModel(Family alice, Family bob);

  static MeasurementModel from_vectors(const std::vector<std::vector<ComplexVector>>& alice,
                                       const std::vector<std::vector<ComplexVector>>& bob);

  int settings() const { return static_cast<int>(alice_.size()); }
  int outcomes() const { return static_cast<int>(alice_.front().size()); }
  const ComplexMatrix& alice(int x, int a) const;
  const ComplexMatrix& bob(int y, int b) const;

  // A_x^a (x) B_y^b
  ComplexMatrix effect(int x, int a, int y, int b) const;

 private:
  Family alice_;
  Family bob_;
};

// Basis vectors per setting. The calibrated set is the labeling under which
// the bundled instruction tables and optimized state reproduce the reference
// error probabilities: computational basis; Fourier vectors with phase
// e^{+i 2pi/3} on |1> for outcome 1, its conjugate for outcome 2, uniform
// superposition for outcome 3; and {(|0>-|1>)/sqrt2, |2>, (|0>+|1>)/sqrt2}.
std::vector<std::vector<ComplexVector>> standard_basis_vectors();
// Uncalibrated variant of the same three bases: Fourier outcome 1
// with phase e^{-i 2pi/3} on |1>, third setting {(|1>-|2>)/sqrt2, |0>,
// (|1>+|2>)/sqrt2}.
std::vector<std::vector<ComplexVector>> uncalibrated_basis_vectors();

MeasurementModel standard_bases();
MeasurementModel uncalibrated_bases();

// tr(rho (A_x^a (x) B_y^b)) clamped to [0, 1]. Indices 0-based; throws
// InvalidInput when out of range.
double born_probability(const DensityMatrix& rho, const MeasurementModel& mm, int x, int a, int y, int b);

// JSON state format:
//   {"dims":[3,3], "vector":[{"re":..,"im":..}, ...]}   pure state
//   {"dims":[3,3], "matrix":[[{"re":..,"im":..}, ...], ...]}   mixed state
// Inputs off by more than 1e-6 in norm, trace, Hermiticity or positivity are
// rejected with InvalidInput naming the field.
inline constexpr double kStateFileTol = 1e-6;
DensityMatrix parse_state_json(const std::string& text);
DensityMatrix read_state_file(const std::string& path);
std::string state_to_json(const DensityMatrix& rho);

}  // namespace locc
