#include "clothfold/qp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace clothfold::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dual active-set method for  min 1/2 y'G y - y'g  s.t.  C y >= d,
/// starting from the unconstrained minimum and adding violated constraints
/// one at a time. The working-set factorization J = L^-T Q, with
/// L^-1 N = Q [R; 0], is maintained through Givens updates.
struct DualActiveSet {
  const Mat& C;
  const Vec& d;
  double tol;
  int max_iter;

  Mat J;             // n x n
  Mat R;             // n x n, top-left q x q upper triangular in use
  std::vector<int> active;
  Vec u;             // multipliers of the active set
  Vec y;
  int iterations = 0;
  QpStatus status = QpStatus::Solved;

  DualActiveSet(const Eigen::LLT<Mat>& llt, const Vec& g, const Mat& C_, const Vec& d_,
                double tol_, int max_iter_)
      : C(C_), d(d_), tol(tol_), max_iter(max_iter_) {
    const int n = static_cast<int>(g.size());
    J = Mat::Identity(n, n);
    llt.matrixU().solveInPlace(J);  // J = L^-T
    R = Mat::Zero(n, n);
    u = Vec::Zero(n);
    y = llt.solve(g);
  }

  int q() const { return static_cast<int>(active.size()); }

  // Appends the constraint whose projected normal is dvec; returns false if
  // the normal is numerically dependent on the working set.
  bool add_to_working_set(Vec& dvec) {
    const int n = static_cast<int>(J.rows());
    const int iq = q();
    for (int j = n - 1; j >= iq + 1; --j) {
      double cc = dvec[j - 1];
      double ss = dvec[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      dvec[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        dvec[j - 1] = -h;
      } else {
        dvec[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    for (int i = 0; i <= iq; ++i) R(i, iq) = dvec[i];
    double r_norm = 1.0;
    for (int i = 0; i < iq; ++i) r_norm = std::max(r_norm, std::abs(R(i, i)));
    return std::abs(dvec[iq]) > 1e-14 * r_norm;
  }

  void remove_from_working_set(int pos) {
    const int n = static_cast<int>(J.rows());
    int iq = q();
    for (int i = pos; i + 1 < iq; ++i) {
      active[i] = active[i + 1];
      u[i] = u[i + 1];
      R.col(i) = R.col(i + 1);
    }
    active.pop_back();
    --iq;
    u[iq] = 0.0;
    // Re-triangularize columns pos..iq-1.
    for (int j = pos; j < iq; ++j) {
      double cc = R(j, j);
      double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (t1 + J(k, j)) - t2;
      }
    }
  }

  void run() {
    const int n = static_cast<int>(J.rows());
    const int m = static_cast<int>(C.rows());
    if (m == 0) return;

    std::vector<char> in_active(m, 0);

    while (true) {
      // Most violated constraint outside the working set, lowest index wins ties.
      int p = -1;
      double worst = -tol;
      for (int i = 0; i < m; ++i) {
        if (in_active[i]) continue;
        const double s = C.row(i).dot(y) - d[i];
        if (s < worst) {
          worst = s;
          p = i;
        }
      }
      if (p < 0) {
        status = QpStatus::Solved;
        return;
      }

      const Vec np = C.row(p).transpose();
      double u_p = 0.0;
      double s_p = worst;

      while (true) {
        if (++iterations > max_iter) {
          status = QpStatus::MaxIterations;
          return;
        }

        Vec dvec = J.transpose() * np;
        const int iq = q();
        Vec z = Vec::Zero(n);
        if (iq < n) z = J.rightCols(n - iq) * dvec.tail(n - iq);
        Vec r;
        if (iq > 0)
          r = R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(dvec.head(iq));

        // Partial step: first blocking active constraint.
        double t1 = kInf;
        int blocking = -1;
        for (int k = 0; k < iq; ++k) {
          if (r[k] > 1e-14) {
            const double ratio = u[k] / r[k];
            if (ratio < t1) {
              t1 = ratio;
              blocking = k;
            }
          }
        }

        // Full step to satisfy constraint p.
        const double zz = z.squaredNorm();
        const double z_dot_np = z.dot(np);
        const bool primal_possible = zz > 1e-26 * std::max(1.0, np.squaredNorm()) &&
                                     z_dot_np > 0.0;
        const double t2 = primal_possible ? -s_p / z_dot_np : kInf;

        const double t = std::min(t1, t2);
        if (t >= kInf) {
          status = QpStatus::Infeasible;
          return;
        }

        if (t2 >= kInf) {
          // Dual step only: move multipliers, drop the blocking constraint.
          for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
          u_p += t;
          in_active[active[blocking]] = 0;
          remove_from_working_set(blocking);
          continue;
        }

        y += t * z;
        for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
        u_p += t;
        s_p = np.dot(y) - d[p];

        if (t == t2) {
          if (!add_to_working_set(dvec)) {
            status = QpStatus::MaxIterations;  // numerically degenerate normal
            return;
          }
          active.push_back(p);
          u[q() - 1] = u_p;
          in_active[p] = 1;
          break;
        }
        // Partial step: constraint p stays violated, blocking one leaves.
        in_active[active[blocking]] = 0;
        remove_from_working_set(blocking);
      }
    }
  }
};

struct EqualityReduction {
  Vec x_particular;   // minimal-norm solution of A_eq x = b_eq
  Mat nullspace;      // n x (n - rank)
  int rank = 0;
  int dropped = 0;
  bool consistent = true;
  Eigen::ColPivHouseholderQR<Mat> qr;  // of A_eq'
};

EqualityReduction reduce_equalities(const Mat& a_eq, const Vec& b_eq, double tol) {
  const int n = static_cast<int>(a_eq.cols());
  const int m = static_cast<int>(a_eq.rows());

  EqualityReduction red;
  red.qr.setThreshold(1e-12);
  red.qr.compute(a_eq.transpose());
  red.rank = static_cast<int>(red.qr.rank());
  red.dropped = m - red.rank;

  const Mat q_full = red.qr.householderQ() * Mat::Identity(n, n);
  const Mat r_full = red.qr.matrixQR().topRows(std::min(n, m));
  const Vec b_perm = red.qr.colsPermutation().transpose() * b_eq;

  const int r = red.rank;
  Vec w1 = Vec::Zero(r);
  if (r > 0) {
    w1 = r_full.topLeftCorner(r, r)
             .triangularView<Eigen::Upper>()
             .transpose()
             .solve(b_perm.head(r));
  }
  // Redundant rows must still be satisfied by the particular solution.
  if (m > r) {
    const Vec tail = r_full.block(0, r, r, m - r).transpose() * w1;
    const double mismatch = (tail - b_perm.tail(m - r)).lpNorm<Eigen::Infinity>();
    if (mismatch > tol * std::max(1.0, b_eq.lpNorm<Eigen::Infinity>()))
      red.consistent = false;
  }

  red.x_particular = q_full.leftCols(r) * w1;
  red.nullspace = q_full.rightCols(n - r);
  return red;
}

}  // namespace

void QpProblem::check_dimensions() const {
  const int n = dim();
  if (p_matrix.rows() != n || p_matrix.cols() != n)
    throw std::invalid_argument("QpProblem: P must be n x n");
  if (eq_matrix.rows() != eq_rhs.size() || (eq_matrix.rows() > 0 && eq_matrix.cols() != n))
    throw std::invalid_argument("QpProblem: equality block dimensions mismatch");
  if (ineq_matrix.rows() != ineq_rhs.size() ||
      (ineq_matrix.rows() > 0 && ineq_matrix.cols() != n))
    throw std::invalid_argument("QpProblem: inequality block dimensions mismatch");
}

QpSolution solve(const QpProblem& problem, const QpOptions& opts) {
  problem.check_dimensions();
  const int n = problem.dim();
  const int m_e = static_cast<int>(problem.eq_matrix.rows());
  const int m_i = static_cast<int>(problem.ineq_matrix.rows());

  const double asym =
      (problem.p_matrix - problem.p_matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, problem.p_matrix.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("QpProblem: P is not symmetric");
  const Mat p_sym = 0.5 * (problem.p_matrix + problem.p_matrix.transpose());

  QpSolution sol;
  sol.eq_multipliers = Vec::Zero(m_e);
  sol.ineq_multipliers = Vec::Zero(m_i);

  Vec x_part = Vec::Zero(n);
  Mat nullsp;
  EqualityReduction red;
  bool reduced = false;
  if (m_e > 0) {
    red = reduce_equalities(problem.eq_matrix, problem.eq_rhs, opts.tol);
    sol.dropped_equality_rows = red.dropped;
    if (!red.consistent) {
      sol.status = QpStatus::Infeasible;
      sol.q_star = red.x_particular;
      return sol;
    }
    x_part = red.x_particular;
    nullsp = red.nullspace;
    reduced = true;
  } else {
    nullsp = Mat::Identity(n, n);
  }

  const int n_red = static_cast<int>(nullsp.cols());
  Vec y = Vec::Zero(n_red);
  QpStatus status = QpStatus::Solved;
  int iterations = 0;

  if (n_red == 0) {
    // Fully determined by the equalities; only feasibility remains.
    if (m_i > 0) {
      const double viol =
          (problem.ineq_rhs - problem.ineq_matrix * x_part).maxCoeff();
      if (viol > opts.tol) status = QpStatus::Infeasible;
    }
  } else {
    const Mat g_red = nullsp.transpose() * p_sym * nullsp;
    const Vec f_red = nullsp.transpose() * (problem.f_vector - p_sym * x_part);
    Eigen::LLT<Mat> llt(g_red);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "qp::solve: P is not positive definite on the equality nullspace");

    Mat c_red;
    Vec d_red;
    if (m_i > 0) {
      c_red = problem.ineq_matrix * nullsp;
      d_red = problem.ineq_rhs - problem.ineq_matrix * x_part;
    } else {
      c_red = Mat::Zero(0, n_red);
      d_red = Vec::Zero(0);
    }

    DualActiveSet das(llt, f_red, c_red, d_red, opts.tol, opts.max_iter);
    das.run();
    y = das.y;
    status = das.status;
    iterations = das.iterations;
    for (int k = 0; k < das.q(); ++k) sol.ineq_multipliers[das.active[k]] = das.u[k];
  }

  sol.q_star = x_part + nullsp * y;
  sol.status = status;
  sol.iterations = iterations;

  if (reduced && red.rank > 0) {
    // Stationarity P q - f + A_eq' lambda - A_in' mu = 0 fixes lambda.
    Vec resid = p_sym * sol.q_star - problem.f_vector;
    if (m_i > 0) resid -= problem.ineq_matrix.transpose() * sol.ineq_multipliers;
    sol.eq_multipliers = red.qr.solve(-resid);
  }
  return sol;
}

double KktReport::worst() const {
  return std::max({eq_residual, ineq_violation, dual_violation, stationarity,
                   complementarity});
}

std::string KktReport::to_string() const {
  std::ostringstream os;
  os << "eq=" << eq_residual << " ineq=" << ineq_violation << " dual=" << dual_violation
     << " stat=" << stationarity << " comp=" << complementarity
     << (ok ? " [ok]" : " [violated]");
  return os.str();
}

KktReport verify_kkt(const QpProblem& problem, const QpSolution& solution, double tol) {
  problem.check_dimensions();
  const Mat p_sym = 0.5 * (problem.p_matrix + problem.p_matrix.transpose());
  const Vec& q = solution.q_star;

  KktReport report;
  if (problem.eq_matrix.rows() > 0)
    report.eq_residual =
        (problem.eq_matrix * q - problem.eq_rhs).lpNorm<Eigen::Infinity>();

  Vec stat = p_sym * q - problem.f_vector;
  if (problem.eq_matrix.rows() > 0)
    stat += problem.eq_matrix.transpose() * solution.eq_multipliers;

  if (problem.ineq_matrix.rows() > 0) {
    const Vec slack = problem.ineq_matrix * q - problem.ineq_rhs;
    report.ineq_violation = std::max(0.0, (-slack).maxCoeff());
    report.dual_violation = std::max(0.0, (-solution.ineq_multipliers).maxCoeff());
    report.complementarity =
        (solution.ineq_multipliers.array() * slack.array()).abs().maxCoeff();
    stat -= problem.ineq_matrix.transpose() * solution.ineq_multipliers;
  }
  report.stationarity = stat.lpNorm<Eigen::Infinity>();
  report.ok = report.worst() <= tol;
  return report;
}

}  // namespace clothfold::qp
