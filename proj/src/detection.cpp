#include "locc/detection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <json.hpp>

#include "locc/error.hpp"
#include "locc/io.hpp"

namespace locc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(BoundType b) { return b == BoundType::outer_sdp ? "outer" : "inner"; }

BoundType parse_bound(const std::string& text) {
  if (text == "outer") return BoundType::outer_sdp;
  if (text == "inner") return BoundType::inner_lp;
  throw InvalidInput("unknown bound type \"" + text + "\" (expected outer or inner)");
}

bool DetectionResult::ok() const {
  return status == conic::SolverStatus::optimal || status == conic::SolverStatus::near_optimal;
}

namespace {

// tr(A B) for Hermitian A, B without forming the product.
double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.cwiseProduct(b.transpose())).sum().real();
}

std::vector<ComplexMatrix> all_effects(const MeasurementModel& mm, const Shape& sh) {
  std::vector<ComplexMatrix> effects(sh.n_size());
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y)
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) effects[sh.n_index(x, y, a, b)] = mm.effect(x, a, y, b);
  return effects;
}

Shape shape_of(const MeasurementModel& mm) { return Shape{mm.settings(), mm.outcomes()}; }

// Variable layout shared by the SDP and the LP: n(x,y,a,b) first, then the
// scenario's bound variables (m(x,y) for LO, s(x,y|a) for 1-LOCC).
struct Polytope {
  Scenario scenario;
  Shape shape;
  int num_n = 0;
  int num_bound = 0;

  int vars() const { return num_n + num_bound; }
  int bound_var(int x, int y, int a) const {
    return num_n + (scenario == Scenario::lo ? shape.xy_index(x, y) : shape.s_index(x, y, a));
  }
  int inequality_rows() const { return 2 * num_n; }

  // Rows [row0, row0 + 2 num_n): n >= 0 and bound - n >= 0, as G x + s = h.
  void fill_inequalities(MatrixXd& g, int row0) const {
    for (int x = 0; x < shape.settings; ++x)
      for (int y = 0; y < shape.settings; ++y)
        for (int a = 0; a < shape.outcomes; ++a)
          for (int b = 0; b < shape.outcomes; ++b) {
            const int k = shape.n_index(x, y, a, b);
            g(row0 + k, k) = -1.0;
            g(row0 + num_n + k, k) = 1.0;
            g(row0 + num_n + k, bound_var(x, y, a)) = -1.0;
          }
  }

  // Normalization, plus for 1-LOCC the a-independence of sum_y s(x,y|a).
  void fill_equalities(MatrixXd& a_mat, VectorXd& b_vec, int total_vars) const {
    const int S = shape.settings;
    const int O = shape.outcomes;
    if (scenario == Scenario::lo) {
      a_mat = MatrixXd::Zero(1, total_vars);
      a_mat.block(0, num_n, 1, num_bound).setOnes();
      b_vec = VectorXd::Ones(1);
      return;
    }
    const int rows = S * (O - 1) + 1;
    a_mat = MatrixXd::Zero(rows, total_vars);
    b_vec = VectorXd::Zero(rows);
    int r = 0;
    for (int x = 0; x < S; ++x) {
      for (int a = 1; a < O; ++a, ++r) {
        for (int y = 0; y < S; ++y) {
          a_mat(r, bound_var(x, y, a)) += 1.0;
          a_mat(r, bound_var(x, y, 0)) -= 1.0;
        }
      }
    }
    for (int x = 0; x < S; ++x)
      for (int y = 0; y < S; ++y) a_mat(r, bound_var(x, y, 0)) = 1.0;
    b_vec(r) = 1.0;
  }

  // Clamp solver noise so the instruction set passes validation exactly.
  InstructionSet extract(const VectorXd& x) const {
    const int S = shape.settings;
    const int O = shape.outcomes;
    InstructionSet out;
    out.scenario = scenario;
    out.shape = shape;
    out.n_table.assign(num_n, 0.0);
    if (scenario == Scenario::lo) {
      out.lo_joint.assign(S * S, 0.0);
      double total = 0.0;
      for (int k = 0; k < S * S; ++k) total += (out.lo_joint[k] = std::max(0.0, x(num_n + k)));
      for (double& v : out.lo_joint) v /= total;
    } else {
      out.locc_px.assign(S, 0.0);
      out.locc_s.assign(S * S * O, 0.0);
      for (int xs = 0; xs < S; ++xs)
        for (int y = 0; y < S; ++y)
          for (int a = 0; a < O; ++a) out.locc_s[shape.s_index(xs, y, a)] = std::max(0.0, x(bound_var(xs, y, a)));
      // make every a-row share the marginal of a = 0 exactly
      double total = 0.0;
      for (int xs = 0; xs < S; ++xs) {
        double ref = 0.0;
        for (int y = 0; y < S; ++y) ref += out.locc_s[shape.s_index(xs, y, 0)];
        for (int a = 1; a < O; ++a) {
          double row = 0.0;
          for (int y = 0; y < S; ++y) row += out.locc_s[shape.s_index(xs, y, a)];
          if (row > 0.0) {
            for (int y = 0; y < S; ++y) out.locc_s[shape.s_index(xs, y, a)] *= ref / row;
          } else {
            for (int y = 0; y < S; ++y) out.locc_s[shape.s_index(xs, y, a)] = ref / S;
          }
        }
        out.locc_px[xs] = ref;
        total += ref;
      }
      for (double& v : out.locc_px) v /= total;
      for (double& v : out.locc_s) v /= total;
    }
    for (int xs = 0; xs < S; ++xs)
      for (int y = 0; y < S; ++y)
        for (int a = 0; a < O; ++a)
          for (int b = 0; b < O; ++b) {
            const int k = shape.n_index(xs, y, a, b);
            out.n_table[k] = std::clamp(x(k), 0.0, out.bound(xs, y, a));
          }
    return out;
  }
};

Polytope make_polytope(Scenario scenario, const Shape& sh) {
  Polytope p{scenario, sh, sh.n_size(), 0};
  p.num_bound = scenario == Scenario::lo ? sh.settings * sh.settings : sh.settings * sh.settings * sh.outcomes;
  return p;
}

// Columns: vec(B_j^{T_B}) for the Hermitian vec basis B_j.
MatrixXd partial_transpose_operator(SubsystemDims dims) {
  const int d = dims.total();
  const int len = d * d;
  MatrixXd out(len, len);
  VectorXd e = VectorXd::Zero(len);
  for (int j = 0; j < len; ++j) {
    e.setZero();
    e(j) = 1.0;
    out.col(j) = conic::hermitian_to_vec(partial_transpose(conic::vec_to_hermitian(e, d), dims, Party::B));
  }
  return out;
}

const MatrixXd& partial_transpose_operator_3x3() {
  static const MatrixXd op = partial_transpose_operator(SubsystemDims{});
  return op;
}

void check_p1(double p1) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw InvalidInput("p1 must lie in [0, 1], got " + io::format_double(p1));
}

void check_dims(const DensityMatrix& rho, const MeasurementModel& mm) {
  const auto d = mm.alice(0, 0).rows() * mm.bob(0, 0).rows();
  if (rho.dim() != d) throw InvalidInput("state dimension does not match the measurement model");
  if (!(rho.dims() == SubsystemDims{})) throw InvalidInput("detection programs support qutrit-qutrit states only");
}

ComplexMatrix assemble_m_n(const InstructionSet& instr, const std::vector<ComplexMatrix>& effects) {
  const int d = static_cast<int>(effects.front().rows());
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (std::size_t k = 0; k < effects.size(); ++k) {
    if (instr.n_table[k] != 0.0) m += instr.n_table[k] * effects[k];
  }
  return hermitian_part(m);
}

}  // namespace

DetectionResult solve_detection(const DensityMatrix& rho, const MeasurementModel& mm, double p1, Scenario scenario,
                                const conic::SolverSettings& settings) {
  check_p1(p1);
  check_dims(rho, mm);
  const Shape sh = shape_of(mm);
  const SubsystemDims dims;
  const int d = dims.total();
  const int hv = d * d;  // Hermitian vec length
  const Polytope poly = make_polytope(scenario, sh);
  const int q0 = poly.vars();
  const int nvars = q0 + hv;
  const auto effects = all_effects(mm, sh);

  conic::ConeProgram prog;
  prog.cones.nonneg = poly.inequality_rows();
  prog.cones.hermitian_psd = {d, d};
  const int rows = prog.cones.size();
  prog.c = VectorXd::Zero(nvars);
  for (int k = 0; k < poly.num_n; ++k) prog.c(k) = trace_product(rho.mat(), effects[k]);
  prog.G = MatrixXd::Zero(rows, nvars);
  prog.h = VectorXd::Zero(rows);
  poly.fill_inequalities(prog.G, 0);

  // P = M_N - (1 - p1) I - Q^{T_B} >= 0
  const int p_row = poly.inequality_rows();
  for (int k = 0; k < poly.num_n; ++k) prog.G.block(p_row, k, hv, 1) = -conic::hermitian_to_vec(effects[k]);
  prog.G.block(p_row, q0, hv, hv) = partial_transpose_operator_3x3();
  prog.h.segment(p_row, hv) = -(1.0 - p1) * conic::hermitian_to_vec(ComplexMatrix::Identity(d, d));
  // Q >= 0
  const int q_row = p_row + hv;
  prog.G.block(q_row, q0, hv, hv) = -MatrixXd::Identity(hv, hv);
  poly.fill_equalities(prog.A, prog.b, nvars);

  const conic::ConeSolution sol = conic::solve(prog, settings);
  if (sol.status == conic::SolverStatus::infeasible) {
    throw SolverError("detection program reported infeasible; the all-N rule is always feasible (internal error)");
  }

  DetectionResult r;
  r.scenario = scenario;
  r.bound = BoundType::outer_sdp;
  r.p1 = p1;
  r.status = sol.status;
  r.iterations = sol.iterations;
  if (sol.x.size() != nvars) {
    r.instructions = poly.extract(VectorXd::Zero(nvars).cwiseMax(0.0));
    r.m_n = ComplexMatrix::Zero(d, d);
    return r;
  }
  r.instructions = poly.extract(sol.x);
  r.m_n = assemble_m_n(r.instructions, effects);
  r.p2 = std::clamp(trace_product(rho.mat(), r.m_n), 0.0, 1.0);
  const ComplexMatrix q = conic::vec_to_hermitian(sol.x.segment(q0, hv), d);
  WitnessCertificate cert;
  cert.q = q;
  cert.p = r.m_n - (1.0 - p1) * ComplexMatrix::Identity(d, d) - partial_transpose(q, dims, Party::B);
  r.certificate = cert;
  return r;
}

CertificateCheck check_certificate(const DetectionResult& r, SubsystemDims dims) {
  CertificateCheck c;
  if (!r.certificate) return c;
  const int d = dims.total();
  const ComplexMatrix lhs = r.m_n - (1.0 - r.p1) * ComplexMatrix::Identity(d, d);
  const ComplexMatrix rhs = r.certificate->p + partial_transpose(r.certificate->q, dims, Party::B);
  c.identity_error = (lhs - rhs).cwiseAbs().maxCoeff();
  c.min_eig_p = min_eigenvalue(r.certificate->p);
  c.min_eig_q = min_eigenvalue(r.certificate->q);
  return c;
}

DualConeResult dual_cone_member(const ComplexMatrix& w, double tol, SubsystemDims dims) {
  const int d = dims.total();
  if (w.rows() != d || w.cols() != d) throw InvalidInput("dual_cone_member: w must be " + std::to_string(d) + "x" + std::to_string(d));
  if (!is_hermitian(w)) throw InvalidInput("dual_cone_member: w is not Hermitian");
  const int hv = d * d;
  const int t = hv;  // variable index of the margin t
  const MatrixXd pt = dims == SubsystemDims{} ? partial_transpose_operator_3x3() : partial_transpose_operator(dims);
  const VectorXd vec_i = conic::hermitian_to_vec(ComplexMatrix::Identity(d, d));

  // min t  s.t.  t >= -1,  w - Q^{T_B} + t I >= 0,  Q + t I >= 0
  conic::ConeProgram prog;
  prog.cones.nonneg = 1;
  prog.cones.hermitian_psd = {d, d};
  prog.c = VectorXd::Zero(hv + 1);
  prog.c(t) = 1.0;
  prog.G = MatrixXd::Zero(prog.cones.size(), hv + 1);
  prog.h = VectorXd::Zero(prog.cones.size());
  prog.G(0, t) = -1.0;
  prog.h(0) = 1.0;
  prog.G.block(1, 0, hv, hv) = pt;
  prog.G.block(1, t, hv, 1) = -vec_i;
  prog.h.segment(1, hv) = conic::hermitian_to_vec(hermitian_part(w));
  prog.G.block(1 + hv, 0, hv, hv) = -MatrixXd::Identity(hv, hv);
  prog.G.block(1 + hv, t, hv, 1) = -vec_i;
  prog.A = MatrixXd(0, hv + 1);
  prog.b = VectorXd(0);

  const conic::ConeSolution sol = conic::solve(prog);
  DualConeResult r;
  r.status = sol.status;
  if (sol.x.size() != hv + 1) return r;
  r.margin = sol.x(t);
  r.member = (sol.status == conic::SolverStatus::optimal || sol.status == conic::SolverStatus::near_optimal) &&
             r.margin <= tol;
  if (r.member) {
    WitnessCertificate cert;
    cert.q = conic::vec_to_hermitian(sol.x.head(hv), d);
    cert.p = hermitian_part(w) - partial_transpose(cert.q, dims, Party::B);
    r.certificate = cert;
  }
  return r;
}

bool TradeoffCurve::monotone(double tol) const {
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p2_values.size(); ++k) {
    if (status[k] != conic::SolverStatus::optimal && status[k] != conic::SolverStatus::near_optimal) continue;
    if (p2_values[k] > prev + tol) return false;
    prev = p2_values[k];
  }
  return true;
}

std::vector<double> uniform_grid(int points) {
  if (points < 1) throw InvalidInput("grid size must be at least 1");
  if (points == 1) return {0.0};
  std::vector<double> g(points);
  for (int k = 0; k < points; ++k) g[k] = static_cast<double>(k) / (points - 1);
  g.back() = 1.0;
  return g;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    check_p1(grid[k]);
    if (k > 0 && grid[k] < grid[k - 1]) throw InvalidInput("p1 grid must be sorted ascending");
  }
}

template <class Solve>
TradeoffCurve run_curve(Scenario scenario, BoundType bound, const std::vector<double>& grid, int threads,
                        Solve&& solve_point) {
  check_grid(grid);
  TradeoffCurve curve;
  curve.scenario = scenario;
  curve.bound = bound;
  curve.p1_grid = grid;
  curve.p2_values.assign(grid.size(), std::nan(""));
  curve.status.assign(grid.size(), conic::SolverStatus::numerical_failure);
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(grid.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      try {
        const DetectionResult r = solve_point(grid[k]);
        curve.p2_values[k] = r.p2;
        curve.status[k] = r.status;
      } catch (const SolverError&) {
        curve.status[k] = conic::SolverStatus::numerical_failure;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return curve;
}

}  // namespace

TradeoffCurve tradeoff_curve(const DensityMatrix& rho, const MeasurementModel& mm, Scenario scenario,
                             const std::vector<double>& grid, int threads) {
  return run_curve(scenario, BoundType::outer_sdp, grid, threads,
                   [&](double p1) { return solve_detection(rho, mm, p1, scenario); });
}

TradeoffCurve inner_tradeoff_curve(const DensityMatrix& rho, const MeasurementModel& mm, Scenario scenario,
                                   const std::vector<double>& grid, const std::vector<DensityMatrix>& product_states,
                                   int threads) {
  if (product_states.empty()) throw InvalidInput("inner bound needs at least one product state");
  return run_curve(scenario, BoundType::inner_lp, grid, threads,
                   [&](double p1) { return solve_inner_lp(rho, mm, p1, product_states, scenario); });
}

std::vector<DensityMatrix> sample_product_states(int count, std::uint64_t seed, SubsystemDims dims) {
  if (count < 1) throw InvalidInput("sample_product_states: count must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto haar = [&](int n) {
    ComplexVector v(n);
    for (int k = 0; k < n; ++k) {
      const double re = g(rng);
      const double im = g(rng);
      v(k) = Complex(re, im);
    }
    return ComplexVector(v / v.norm());
  };
  std::vector<DensityMatrix> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const ComplexVector u = haar(dims.dim_a);
    const ComplexVector v = haar(dims.dim_b);
    out.push_back(DensityMatrix::from_pure(kron(u, v), dims));
  }
  return out;
}

DetectionResult solve_inner_lp(const DensityMatrix& rho, const MeasurementModel& mm, double p1,
                               const std::vector<DensityMatrix>& product_states, Scenario scenario,
                               const conic::SolverSettings& settings) {
  check_p1(p1);
  check_dims(rho, mm);
  if (product_states.empty()) throw InvalidInput("solve_inner_lp: the product-state sample set is empty");
  const Shape sh = shape_of(mm);
  const Polytope poly = make_polytope(scenario, sh);
  const int nvars = poly.vars();
  const int samples = static_cast<int>(product_states.size());
  const auto effects = all_effects(mm, sh);

  conic::ConeProgram prog;
  prog.cones.nonneg = poly.inequality_rows() + samples;
  prog.c = VectorXd::Zero(nvars);
  for (int k = 0; k < poly.num_n; ++k) prog.c(k) = trace_product(rho.mat(), effects[k]);
  prog.G = MatrixXd::Zero(prog.cones.size(), nvars);
  prog.h = VectorXd::Zero(prog.cones.size());
  poly.fill_inequalities(prog.G, 0);
  // tr(M_Y sigma_i) <= p1  <=>  p1 - 1 + sum_k n_k tr(E_k sigma_i) >= 0
  const int row0 = poly.inequality_rows();
  for (int i = 0; i < samples; ++i) {
    if (product_states[i].dim() != rho.dim()) throw InvalidInput("solve_inner_lp: sample dimension mismatch");
    for (int k = 0; k < poly.num_n; ++k) prog.G(row0 + i, k) = -trace_product(product_states[i].mat(), effects[k]);
    prog.h(row0 + i) = p1 - 1.0;
  }
  poly.fill_equalities(prog.A, prog.b, nvars);

  const conic::ConeSolution sol = conic::solve(prog, settings);
  if (sol.status == conic::SolverStatus::infeasible) {
    throw SolverError("inner LP reported infeasible; the all-N rule is always feasible (internal error)");
  }
  DetectionResult r;
  r.scenario = scenario;
  r.bound = BoundType::inner_lp;
  r.p1 = p1;
  r.status = sol.status;
  r.iterations = sol.iterations;
  const int d = rho.dim();
  if (sol.x.size() != nvars) {
    r.instructions = poly.extract(VectorXd::Zero(nvars));
    r.m_n = ComplexMatrix::Zero(d, d);
    return r;
  }
  r.instructions = poly.extract(sol.x);
  r.m_n = assemble_m_n(r.instructions, effects);
  r.p2 = std::clamp(trace_product(rho.mat(), r.m_n), 0.0, 1.0);
  return r;
}

// --- estimation ----------------------------------------------------------------

std::vector<ExpectationEntry> instruction_support(const InstructionSet& instr, double tol) {
  std::vector<ExpectationEntry> out;
  const Shape& sh = instr.shape;
  for (int x = 0; x < sh.settings; ++x)
    for (int y = 0; y < sh.settings; ++y)
      for (int a = 0; a < sh.outcomes; ++a)
        for (int b = 0; b < sh.outcomes; ++b) {
          if (std::abs(instr.n(x, y, a, b)) > tol) out.push_back({x, y, a, b, 0.0});
        }
  return out;
}

ExpectationData exact_expectations(const DensityMatrix& rho, const MeasurementModel& mm,
                                   const std::vector<ExpectationEntry>& support) {
  ExpectationData data;
  for (ExpectationEntry e : support) {
    e.value = trace_product(rho.mat(), mm.effect(e.x, e.a, e.y, e.b));
    data.entries.push_back(e);
  }
  return data;
}

EstimateResult estimate_state(const ExpectationData& data, const MeasurementModel& mm) {
  if (data.entries.empty()) throw InvalidInput("estimate_state: no expectation values");
  const SubsystemDims dims;
  const int d = dims.total();
  const int hv = d * d;
  const int k_count = static_cast<int>(data.entries.size());
  const int t = hv;

  // min t  s.t.  ||E - <Pi, rho>|| <= t,  rho >= 0,  tr rho = 1
  conic::ConeProgram prog;
  prog.cones.soc = {1 + k_count};
  prog.cones.hermitian_psd = {d};
  prog.c = VectorXd::Zero(hv + 1);
  prog.c(t) = 1.0;
  prog.G = MatrixXd::Zero(prog.cones.size(), hv + 1);
  prog.h = VectorXd::Zero(prog.cones.size());
  prog.G(0, t) = -1.0;
  for (int k = 0; k < k_count; ++k) {
    const ExpectationEntry& e = data.entries[k];
    prog.G.block(1 + k, 0, 1, hv) = conic::hermitian_to_vec(mm.effect(e.x, e.a, e.y, e.b)).transpose();
    prog.h(1 + k) = e.value;
  }
  prog.G.block(1 + k_count, 0, hv, hv) = -MatrixXd::Identity(hv, hv);
  prog.A = MatrixXd::Zero(1, hv + 1);
  prog.A.block(0, 0, 1, hv) = conic::hermitian_to_vec(ComplexMatrix::Identity(d, d)).transpose();
  prog.b = VectorXd::Ones(1);

  const conic::ConeSolution sol = conic::solve(prog);
  if (sol.x.size() != hv + 1 ||
      (sol.status != conic::SolverStatus::optimal && sol.status != conic::SolverStatus::near_optimal)) {
    throw SolverError("estimate_state: solver finished with status " + conic::to_string(sol.status));
  }
  // Project onto density matrices to remove ~1e-9 solver noise.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(conic::vec_to_hermitian(sol.x.head(hv), d));
  const RealVector clipped = eig.eigenvalues().cwiseMax(0.0);
  ComplexMatrix rho = eig.eigenvectors() * clipped.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
  rho /= rho.trace().real();

  EstimateResult out{DensityMatrix(rho, dims, 1e-6), 0.0, sol.status};
  for (const ExpectationEntry& e : data.entries) {
    const double diff = e.value - trace_product(out.rho.mat(), mm.effect(e.x, e.a, e.y, e.b));
    out.residual += diff * diff;
  }
  return out;
}

// --- files -------------------------------------------------------------------

ExpectationData parse_expectations_csv(const std::string& text, const std::string& source) {
  const io::CsvTable t = io::parse_csv(text, source);
  ExpectationData data;
  if (t.rows.empty()) throw InvalidInput(source + ": no expectation values");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ExpectationEntry e;
    const int a = t.integer(r, "a");
    const int b = t.integer(r, "b");
    const int x = t.integer(r, "x");
    const int y = t.integer(r, "y");
    if (a < 1 || a > 3 || b < 1 || b > 3 || x < 1 || x > 3 || y < 1 || y > 3) {
      throw InvalidInput(source + ": row " + std::to_string(r + 2) + " has an index outside 1..3");
    }
    e.a = a - 1;
    e.b = b - 1;
    e.x = x - 1;
    e.y = y - 1;
    e.value = t.number(r, "value");
    if (!(e.value >= -1e-6 && e.value <= 1.0 + 1e-6)) {
      throw InvalidInput(source + ": row " + std::to_string(r + 2) + " value outside [0, 1]");
    }
    data.entries.push_back(e);
  }
  return data;
}

ExpectationData read_expectations_csv(const std::string& path) {
  return parse_expectations_csv(io::read_file(path), path);
}

std::string expectations_to_csv(const ExpectationData& data) {
  std::string out = "a,b,x,y,value\n";
  for (const ExpectationEntry& e : data.entries) {
    out += std::to_string(e.a + 1) + "," + std::to_string(e.b + 1) + "," + std::to_string(e.x + 1) + "," +
           std::to_string(e.y + 1) + "," + io::format_double(e.value) + "\n";
  }
  return out;
}

std::string curve_to_csv(const TradeoffCurve& curve) {
  std::string out = "p1,p2,scenario,bound\n";
  for (std::size_t k = 0; k < curve.p1_grid.size(); ++k) {
    out += io::format_double(curve.p1_grid[k]) + "," + io::format_double(curve.p2_values[k]) + "," +
           to_string(curve.scenario) + "," + to_string(curve.bound) + "\n";
  }
  return out;
}

namespace {

nlohmann::json matrix_json(const ComplexMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({{"re", m(i, j).real()}, {"im", m(i, j).imag()}});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string detection_result_to_json(const DetectionResult& r) {
  nlohmann::json doc;
  doc["p1"] = r.p1;
  doc["p2"] = r.p2;
  doc["scenario"] = to_string(r.scenario);
  doc["bound"] = to_string(r.bound);
  doc["status"] = conic::to_string(r.status);
  doc["iterations"] = r.iterations;
  doc["m_n"] = matrix_json(r.m_n);
  if (r.certificate) {
    doc["certificate"] = {{"P", matrix_json(r.certificate->p)}, {"Q", matrix_json(r.certificate->q)}};
  } else {
    doc["certificate"] = nullptr;
  }
  doc["instructions"] = nlohmann::json::parse(instructions_to_json(r.instructions));
  return doc.dump(2);
}

}  // namespace locc
