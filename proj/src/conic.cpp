#include "locc/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "locc/error.hpp"

namespace locc::conic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int ConeDims::size() const {
  int n = nonneg;
  for (int q : soc) n += q;
  for (int p : hermitian_psd) n += p * p;
  return n;
}

int ConeDims::degree() const {
  int nu = nonneg + static_cast<int>(soc.size());
  for (int p : hermitian_psd) nu += p;
  return nu;
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::optimal:
      return "optimal";
    case SolverStatus::near_optimal:
      return "near_optimal";
    case SolverStatus::infeasible:
      return "infeasible";
    case SolverStatus::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

VectorXd hermitian_to_vec(const ComplexMatrix& m) {
  const int n = static_cast<int>(m.rows());
  VectorXd v(n * n);
  int k = 0;
  for (int i = 0; i < n; ++i) v(k++) = m(i, i).real();
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // average the two triangles so slightly non-Hermitian input is projected
      const Complex off = 0.5 * (m(i, j) + std::conj(m(j, i)));
      v(k++) = r2 * off.real();
      v(k++) = r2 * off.imag();
    }
  }
  return v;
}

ComplexMatrix vec_to_hermitian(const Eigen::Ref<const VectorXd>& v, int n) {
  ComplexMatrix m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) m(i, i) = v(k++);
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Complex off(v(k) / r2, v(k + 1) / r2);
      k += 2;
      m(i, j) = off;
      m(j, i) = std::conj(off);
    }
  }
  return m;
}

namespace {

struct SocScaling {
  double beta = 1.0;
  VectorXd w;  // normalized scaling point, w' J w = 1
};

struct PsdScaling {
  ComplexMatrix r;      // W(u) = r^* u r
  ComplexMatrix r_inv;  // r^{-1}
  VectorXd lambda;      // diagonal of the scaled point
};

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda for the current iterate.
class Scaling {
 public:
  Scaling(const ConeDims& dims, const VectorXd& s, const VectorXd& z) : dims_(dims) {
    lambda_.resize(dims.size());
    int off = 0;
    lp_d_.resize(dims.nonneg);
    for (int i = 0; i < dims.nonneg; ++i) {
      lp_d_(i) = std::sqrt(s(off + i) / z(off + i));
      lambda_(off + i) = std::sqrt(s(off + i) * z(off + i));
    }
    off += dims.nonneg;
    for (int q : dims.soc) {
      const VectorXd sb = s.segment(off, q);
      const VectorXd zb = z.segment(off, q);
      const double sn = std::sqrt(std::max(jnorm2(sb), 1e-300));
      const double zn = std::sqrt(std::max(jnorm2(zb), 1e-300));
      const VectorXd ss = sb / sn;
      const VectorXd zs = zb / zn;
      const double gamma = std::sqrt(std::max(0.5 * (1.0 + ss.dot(zs)), 1e-300));
      SocScaling sc;
      sc.beta = std::sqrt(sn / zn);
      sc.w = ss;
      sc.w(0) += zs(0);
      sc.w.tail(q - 1) -= zs.tail(q - 1);
      sc.w /= 2.0 * gamma;
      // sc.w now holds the normalized NT point wbar; W uses its Jordan square root
      const double head = sc.w(0);
      sc.w(0) += 1.0;
      sc.w /= std::sqrt(2.0 * (head + 1.0));
      soc_.push_back(sc);
      lambda_.segment(off, q) = apply_soc_w(sc, zb);
      off += q;
    }
    for (int n : dims.hermitian_psd) {
      const ComplexMatrix sm = vec_to_hermitian(s.segment(off, n * n), n);
      const ComplexMatrix zm = vec_to_hermitian(z.segment(off, n * n), n);
      const ComplexMatrix ls = Eigen::LLT<ComplexMatrix>(sm).matrixL();
      const ComplexMatrix lz = Eigen::LLT<ComplexMatrix>(zm).matrixL();
      Eigen::JacobiSVD<ComplexMatrix> svd(lz.adjoint() * ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const VectorXd sig = svd.singularValues();
      const VectorXd isq = sig.cwiseSqrt().cwiseInverse();
      PsdScaling sc;
      sc.r = ls * svd.matrixV() * isq.cast<Complex>().asDiagonal();
      sc.r_inv = isq.cast<Complex>().asDiagonal() * svd.matrixU().adjoint() * lz.adjoint();
      sc.lambda = sig;
      ComplexMatrix lam = ComplexMatrix::Zero(n, n);
      lam.diagonal() = sig.cast<Complex>();
      lambda_.segment(off, n * n) = hermitian_to_vec(lam);
      psd_.push_back(std::move(sc));
      off += n * n;
    }
  }

  const VectorXd& lambda() const { return lambda_; }

  enum class Op { W, WT, Winv, WinvT };

  VectorXd apply(Op op, const VectorXd& u) const {
    VectorXd out(u.size());
    int off = 0;
    for (int i = 0; i < dims_.nonneg; ++i) {
      const double d = lp_d_(i);
      out(i) = (op == Op::W || op == Op::WT) ? d * u(i) : u(i) / d;
    }
    off += dims_.nonneg;
    for (std::size_t k = 0; k < dims_.soc.size(); ++k) {
      const int q = dims_.soc[k];
      const VectorXd ub = u.segment(off, q);
      out.segment(off, q) = (op == Op::W || op == Op::WT) ? apply_soc_w(soc_[k], ub) : apply_soc_winv(soc_[k], ub);
      off += q;
    }
    for (std::size_t k = 0; k < dims_.hermitian_psd.size(); ++k) {
      const int n = dims_.hermitian_psd[k];
      const ComplexMatrix um = vec_to_hermitian(u.segment(off, n * n), n);
      const PsdScaling& sc = psd_[k];
      ComplexMatrix res;
      switch (op) {
        case Op::W:
          res = sc.r.adjoint() * um * sc.r;
          break;
        case Op::WT:
          res = sc.r * um * sc.r.adjoint();
          break;
        case Op::Winv:
          res = sc.r_inv.adjoint() * um * sc.r_inv;
          break;
        case Op::WinvT:
          res = sc.r_inv * um * sc.r_inv.adjoint();
          break;
      }
      out.segment(off, n * n) = hermitian_to_vec(res);
      off += n * n;
    }
    return out;
  }

  // Applies W^{-T} to every column of g; orthant rows are a row scaling.
  MatrixXd apply_winvt_columns(const MatrixXd& g) const {
    MatrixXd out(g.rows(), g.cols());
    if (dims_.nonneg > 0) {
      out.topRows(dims_.nonneg) = lp_d_.cwiseInverse().asDiagonal() * g.topRows(dims_.nonneg);
    }
    const int rest = static_cast<int>(g.rows()) - dims_.nonneg;
    if (rest == 0) return out;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      VectorXd col = g.col(j);
      if (col.tail(rest).isZero(0.0)) {
        out.col(j).tail(rest).setZero();
        continue;
      }
      out.col(j).tail(rest) = apply(Op::WinvT, col).tail(rest);
    }
    return out;
  }

  // Solves lambda o u = r for u.
  VectorXd lambda_div(const VectorXd& r) const {
    VectorXd u(r.size());
    int off = 0;
    for (int i = 0; i < dims_.nonneg; ++i) u(i) = r(i) / lambda_(i);
    off += dims_.nonneg;
    for (int q : dims_.soc) {
      const VectorXd l = lambda_.segment(off, q);
      const VectorXd rb = r.segment(off, q);
      const double det = l(0) * l(0) - l.tail(q - 1).squaredNorm();
      const double u0 = (l(0) * rb(0) - l.tail(q - 1).dot(rb.tail(q - 1))) / det;
      u(off) = u0;
      u.segment(off + 1, q - 1) = (rb.tail(q - 1) - u0 * l.tail(q - 1)) / l(0);
      off += q;
    }
    for (std::size_t k = 0; k < dims_.hermitian_psd.size(); ++k) {
      const int n = dims_.hermitian_psd[k];
      const VectorXd& lam = psd_[k].lambda;
      ComplexMatrix rm = vec_to_hermitian(r.segment(off, n * n), n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) rm(i, j) *= 2.0 / (lam(i) + lam(j));
      }
      u.segment(off, n * n) = hermitian_to_vec(rm);
      off += n * n;
    }
    return u;
  }

 private:
  static double jnorm2(const VectorXd& v) { return v(0) * v(0) - v.tail(v.size() - 1).squaredNorm(); }

  // W u = beta (2 w w' - J) u
  static VectorXd apply_soc_w(const SocScaling& sc, const VectorXd& u) {
    VectorXd ju = u;
    ju.tail(u.size() - 1) *= -1.0;
    return sc.beta * (2.0 * sc.w.dot(u) * sc.w - ju);
  }

  // W^{-1} u = (2 J w w' J - J) u / beta
  static VectorXd apply_soc_winv(const SocScaling& sc, const VectorXd& u) {
    VectorXd jw = sc.w;
    jw.tail(jw.size() - 1) *= -1.0;
    VectorXd ju = u;
    ju.tail(u.size() - 1) *= -1.0;
    return (2.0 * jw.dot(u) * jw - ju) / sc.beta;
  }

  const ConeDims& dims_;
  VectorXd lp_d_;
  std::vector<SocScaling> soc_;
  std::vector<PsdScaling> psd_;
  VectorXd lambda_;
};

VectorXd identity_element(const ConeDims& dims) {
  VectorXd e = VectorXd::Zero(dims.size());
  int off = 0;
  e.head(dims.nonneg).setOnes();
  off += dims.nonneg;
  for (int q : dims.soc) {
    e(off) = 1.0;
    off += q;
  }
  for (int n : dims.hermitian_psd) {
    for (int i = 0; i < n; ++i) e(off + i) = 1.0;
    off += n * n;
  }
  return e;
}

VectorXd jordan_product(const ConeDims& dims, const VectorXd& u, const VectorXd& v) {
  VectorXd out(u.size());
  int off = 0;
  out.head(dims.nonneg) = u.head(dims.nonneg).cwiseProduct(v.head(dims.nonneg));
  off += dims.nonneg;
  for (int q : dims.soc) {
    const VectorXd ub = u.segment(off, q);
    const VectorXd vb = v.segment(off, q);
    out(off) = ub.dot(vb);
    out.segment(off + 1, q - 1) = ub(0) * vb.tail(q - 1) + vb(0) * ub.tail(q - 1);
    off += q;
  }
  for (int n : dims.hermitian_psd) {
    const ComplexMatrix um = vec_to_hermitian(u.segment(off, n * n), n);
    const ComplexMatrix vm = vec_to_hermitian(v.segment(off, n * n), n);
    out.segment(off, n * n) = hermitian_to_vec(0.5 * (um * vm + vm * um));
    off += n * n;
  }
  return out;
}

// Largest alpha with x + alpha d in K, searching in scaled coordinates where x
// is the scaled point lambda. Returns +inf when the ray never leaves the cone.
double max_step(const ConeDims& dims, const Scaling& scaling, const VectorXd& d) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const VectorXd& x = scaling.lambda();
  double alpha = inf;
  int off = 0;
  for (int i = 0; i < dims.nonneg; ++i) {
    if (d(i) < 0.0) alpha = std::min(alpha, -x(i) / d(i));
  }
  off += dims.nonneg;
  for (int q : dims.soc) {
    const VectorXd xb = x.segment(off, q);
    const VectorXd db = d.segment(off, q);
    const double qa = db(0) * db(0) - db.tail(q - 1).squaredNorm();
    const double qb = xb(0) * db(0) - xb.tail(q - 1).dot(db.tail(q - 1));
    const double qc = std::max(xb(0) * xb(0) - xb.tail(q - 1).squaredNorm(), 0.0);
    double root = inf;
    if (qa < 0.0) {
      root = (-qb - std::sqrt(qb * qb - qa * qc)) / qa;
    } else if (qa == 0.0) {
      if (qb < 0.0) root = -qc / (2.0 * qb);
    } else if (db(0) < 0.0) {
      root = (-qb - std::sqrt(std::max(qb * qb - qa * qc, 0.0))) / qa;
    }
    if (root >= 0.0) alpha = std::min(alpha, root);
    off += q;
  }
  for (int n : dims.hermitian_psd) {
    ComplexMatrix dm = vec_to_hermitian(d.segment(off, n * n), n);
    // scaled point is diagonal: test I + alpha L^{-1/2} D L^{-1/2}
    VectorXd lam(n);
    for (int i = 0; i < n; ++i) lam(i) = x(off + i);
    const VectorXd isq = lam.cwiseSqrt().cwiseInverse();
    dm = isq.cast<Complex>().asDiagonal() * dm * isq.cast<Complex>().asDiagonal();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(dm, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    off += n * n;
  }
  return alpha;
}

// Smallest t with u + t e in K (negative when u is interior).
double cone_violation(const ConeDims& dims, const VectorXd& u) {
  double t = -std::numeric_limits<double>::infinity();
  int off = 0;
  for (int i = 0; i < dims.nonneg; ++i) t = std::max(t, -u(i));
  off += dims.nonneg;
  for (int q : dims.soc) {
    t = std::max(t, u.segment(off + 1, q - 1).norm() - u(off));
    off += q;
  }
  for (int n : dims.hermitian_psd) {
    t = std::max(t, -min_eigenvalue(vec_to_hermitian(u.segment(off, n * n), n)));
    off += n * n;
  }
  return t;
}

// Dense solver for [H A'; A 0] [dx; dy] = [r1; r2] with H positive definite.
class ReducedKkt {
 public:
  ReducedKkt(const MatrixXd& h, const MatrixXd& a) : a_(a) {
    h_ = h;
    // tiny diagonal shift keeps the factorization defined when G loses rank numerically
    const double shift = 1e-14 * std::max(1.0, h_.diagonal().cwiseAbs().maxCoeff());
    h_.diagonal().array() += shift;
    hfac_.compute(h_);
    if (a_.rows() > 0) {
      hinv_at_ = hfac_.solve(a_.transpose());
      schur_ = a_ * hinv_at_;
      sfac_.compute(schur_);
    }
  }

  bool ok() const { return hfac_.info() == Eigen::Success; }

  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dx, VectorXd& dy) const {
    solve_once(r1, r2, dx, dy);
    // one step of iterative refinement
    VectorXd e1 = r1 - h_ * dx;
    VectorXd e2 = r2;
    if (a_.rows() > 0) {
      e1 -= a_.transpose() * dy;
      e2 -= a_ * dx;
    }
    VectorXd cx, cy;
    solve_once(e1, e2, cx, cy);
    dx += cx;
    dy += cy;
  }

 private:
  void solve_once(const VectorXd& r1, const VectorXd& r2, VectorXd& dx, VectorXd& dy) const {
    const VectorXd hr = hfac_.solve(r1);
    if (a_.rows() == 0) {
      dx = hr;
      dy = VectorXd(0);
      return;
    }
    dy = sfac_.solve(a_ * hr - r2);
    dx = hr - hinv_at_ * dy;
  }

  MatrixXd h_;
  MatrixXd a_;
  Eigen::LDLT<MatrixXd> hfac_;
  MatrixXd hinv_at_;
  MatrixXd schur_;
  Eigen::LDLT<MatrixXd> sfac_;
};

void check_dimensions(const ConeProgram& p) {
  const auto n = p.c.size();
  const auto m = p.cones.size();
  if (p.G.rows() != m || p.G.cols() != n || p.h.size() != m) {
    throw InvalidInput("cone program: G/h do not match the cone dimensions");
  }
  if (p.A.cols() != n && p.A.rows() > 0) throw InvalidInput("cone program: A has wrong column count");
  if (p.A.rows() != p.b.size()) throw InvalidInput("cone program: A/b row mismatch");
  for (int q : p.cones.soc) {
    if (q < 1) throw InvalidInput("cone program: empty second-order cone");
  }
}

}  // namespace

ConeSolution solve(const ConeProgram& p, const SolverSettings& settings) {
  check_dimensions(p);
  const ConeDims& dims = p.cones;
  const int n = static_cast<int>(p.c.size());
  const MatrixXd a = p.A.rows() > 0 ? p.A : MatrixXd(0, n);
  const VectorXd e = identity_element(dims);
  const double nu = dims.degree();

  ConeSolution sol;

  // Initial point: least-squares primal and least-norm dual, shifted into K.
  VectorXd x, y, s, z;
  {
    const MatrixXd gtg = p.G.transpose() * p.G;
    ReducedKkt kkt(gtg, a);
    if (!kkt.ok()) {
      sol.status = SolverStatus::numerical_failure;
      return sol;
    }
    kkt.solve(p.G.transpose() * p.h, p.b, x, y);
    s = p.h - p.G * x;
    VectorXd v;
    kkt.solve(-p.c, VectorXd::Zero(a.rows()), v, y);
    z = p.G * v;
    const double ts = cone_violation(dims, s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + std::max(ts, 0.0)) * e;
    const double tz = cone_violation(dims, z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + std::max(tz, 0.0)) * e;
  }

  const double resx0 = std::max(1.0, p.c.norm());
  const double resy0 = std::max(1.0, p.b.norm());
  const double resz0 = std::max(1.0, p.h.norm());

  auto record = [&](SolverStatus status, int iters, double pres, double dres, double gap) {
    sol.status = status;
    sol.x = x;
    sol.y = y;
    sol.s = s;
    sol.z = z;
    sol.primal_objective = p.c.dot(x);
    sol.dual_objective = -p.h.dot(z) - p.b.dot(y);
    sol.gap = gap;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.iterations = iters;
  };

  // Best iterate by max(pres, dres, gap measure); returned when later
  // iterations stall on ill-conditioned scalings.
  struct Snapshot {
    VectorXd x, y, s, z;
    double pres = 0.0, dres = 0.0, gap = 0.0, relgap = 0.0, merit = std::numeric_limits<double>::infinity();
    int iter = 0;
  } best;
  auto near_optimal_at = [](double pres, double dres, double gap, double relgap) {
    return pres <= 1e-6 && dres <= 1e-6 && (gap <= 1e-6 || relgap <= 1e-5);
  };
  auto fail = [&](double pres, double dres, double gap, double relgap, int iter) {
    if (near_optimal_at(pres, dres, gap, relgap)) {
      record(SolverStatus::near_optimal, iter, pres, dres, gap);
    } else if (near_optimal_at(best.pres, best.dres, best.gap, best.relgap)) {
      x = best.x;
      y = best.y;
      s = best.s;
      z = best.z;
      record(SolverStatus::near_optimal, best.iter, best.pres, best.dres, best.gap);
    } else {
      record(SolverStatus::numerical_failure, iter, pres, dres, gap);
    }
    return sol;
  };

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    const VectorXd rx = -(p.c + a.transpose() * y + p.G.transpose() * z);
    const VectorXd ry = p.b - a * x;
    const VectorXd rz = p.h - p.G * x - s;
    const double pres = std::max(ry.size() ? ry.norm() / resy0 : 0.0, rz.norm() / resz0);
    const double dres = rx.norm() / resx0;
    const double gap = s.dot(z);
    const double pcost = p.c.dot(x);
    const double dcost = -p.h.dot(z) - p.b.dot(y);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) {
      relgap = gap / -pcost;
    } else if (dcost > 0.0) {
      relgap = gap / dcost;
    }

    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
      record(SolverStatus::numerical_failure, iter, pres, dres, gap);
      return sol;
    }
    if (pres <= settings.feastol && dres <= settings.feastol &&
        (gap <= settings.abstol || relgap <= settings.reltol)) {
      record(SolverStatus::optimal, iter, pres, dres, gap);
      return sol;
    }
    const double merit = std::max({pres, dres, std::min(std::abs(gap), std::abs(relgap))});
    if (merit < best.merit) best = {x, y, s, z, pres, dres, gap, relgap, merit, iter};
    if (iter == settings.max_iterations) return fail(pres, dres, gap, relgap, iter);

    const Scaling scaling(dims, s, z);
    const VectorXd& lambda = scaling.lambda();
    if (!lambda.allFinite() || (lambda.array() != lambda.array()).any()) {
      return fail(pres, dres, gap, relgap, iter);
    }
    const MatrixXd gs = scaling.apply_winvt_columns(p.G);
    const ReducedKkt kkt(gs.transpose() * gs, a);
    if (!kkt.ok()) {
      return fail(pres, dres, gap, relgap, iter);
    }

    // Returns dx, dy and the scaled directions ds~ = W^{-T} ds, dz~ = W dz.
    auto newton = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& ds_t, VectorXd& dz_t) {
      const VectorXd t = scaling.lambda_div(rc);
      const VectorXd rz2 = rz - scaling.apply(Scaling::Op::WT, t);
      const VectorXd wrz = scaling.apply(Scaling::Op::WinvT, rz2);
      kkt.solve(rx + gs.transpose() * wrz, ry, dx, dy);
      dz_t = gs * dx - wrz;
      ds_t = t - dz_t;
    };

    const VectorXd lsq = jordan_product(dims, lambda, lambda);
    VectorXd dx, dy, ds_t, dz_t;
    newton(-lsq, dx, dy, ds_t, dz_t);
    const double alpha_aff = std::min({1.0, max_step(dims, scaling, ds_t), max_step(dims, scaling, dz_t)});
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const double mu = gap / nu;

    const VectorXd rc = sigma * mu * e - lsq - jordan_product(dims, ds_t, dz_t);
    newton(rc, dx, dy, ds_t, dz_t);
    const double alpha_max = std::min(max_step(dims, scaling, ds_t), max_step(dims, scaling, dz_t));
    const double alpha = std::min(1.0, 0.99 * alpha_max);
    if (!(alpha > 1e-12) || !dx.allFinite()) {
      return fail(pres, dres, gap, relgap, iter);
    }

    x += alpha * dx;
    y += alpha * dy;
    s += alpha * scaling.apply(Scaling::Op::WT, ds_t);
    z += alpha * scaling.apply(Scaling::Op::Winv, dz_t);
  }
  return sol;
}

}  // namespace locc::conic
