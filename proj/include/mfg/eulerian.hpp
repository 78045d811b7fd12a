#pragma once

// Eulerian route: Newton solve of the degenerate quasilinear elliptic
// equation for the value function,
//
//   -u_tt + 2 u_x u_xt - (u_x^2 + m f'(m)) u_xx = 0,
//   m = f^{-1}(-u_t + u_x^2 / 2),
//
// on a torus or zero-Neumann interval, with oblique rows at t = 0 and t = T
// pinning -u_t + u_x^2/2 to f of the (epsilon-regularized) marginals, or an
// implicit terminal pay-off row. For the power law the diffusivity is simply
// theta * (-u_t + u_x^2/2); for the log law it is 1.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg/coupling.hpp"
#include "mfg/grid.hpp"
#include "mfg/numerics.hpp"
#include "mfg/profile.hpp"

namespace mfg {

class PositivityError : public SolverError {
 public:
  explicit PositivityError(const std::string& what) : SolverError(what) {}
};

// --------------------------------------------------------------------------
// epsilon-regularized marginals

struct RegularizedMarginals {
  std::vector<double> m0, mT;      // node samples, strictly positive
  std::array<double, 3> c0{}, cT{};  // bump coefficients (componentwise c0*cT = 0)
  double epsilon = 0.0;
};

inline double cosine_bump(double x, double lo, double hi) {
  if (x <= lo || x >= hi) return 0.0;
  return 0.5 * (1.0 - std::cos(2.0 * M_PI * (x - lo) / (hi - lo)));
}

// The r-compatible lift for the power law: node samples of
//   m^eps = f^{-1}( sqrt(f(m)^2 + f(eps)^2) + c . eta )
// with three bump corrections enforcing equal left-tail, central, and
// right-tail masses of the two marginals. Requires f(0) = 0, so Power only.
inline RegularizedMarginals regularize_marginals(const CouplingLaw& law,
                                                 const MarginalProfile& m0,
                                                 const MarginalProfile& mT,
                                                 double epsilon, double r,
                                                 std::span<const double> x_nodes) {
  if (!law.is_power())
    throw std::invalid_argument("regularize_marginals: construction needs f(0)=0 (power law)");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("regularize_marginals: epsilon must lie in (0,1)");
  double a0 = m0.a(), b0 = m0.b(), a1 = mT.a(), b1 = mT.b();
  if (a0 - 2.0 < -r || b0 + 2.0 > r || a1 - 2.0 < -r || b1 + 2.0 > r)
    throw std::invalid_argument(
        "regularize_marginals: supports too close to the tail cutoff r");
  if (x_nodes.front() > -r || x_nodes.back() < r)
    throw std::invalid_argument("regularize_marginals: grid does not cover [-r, r]");

  // Snap the compatibility window to grid nodes so that the pure-epsilon
  // tails outside it are cell-aligned; otherwise the cell straddling +-r mixes
  // bump mass into the tails and the total masses drift apart.
  double r_lo = x_nodes.front(), r_hi = x_nodes.back();
  for (double x : x_nodes)
    if (x <= -r) r_lo = x;
  for (size_t k = x_nodes.size(); k-- > 0;)
    if (x_nodes[k] >= r) r_hi = x_nodes[k];

  double feps = law.f(epsilon);
  auto eta0 = [&](double x, int k) {
    switch (k) {
      case 0: return cosine_bump(x, a0 - 2.0, a0 - 1.0);
      case 1: return cosine_bump(x, (2 * a0 + b0) / 3.0, (a0 + 2 * b0) / 3.0);
      default: return cosine_bump(x, b0 + 1.0, b0 + 2.0);
    }
  };
  auto etaT = [&](double x, int k) {
    switch (k) {
      case 0: return cosine_bump(x, a1 - 2.0, a1 - 1.0);
      case 1: return cosine_bump(x, (2 * a1 + b1) / 3.0, (a1 + 2 * b1) / 3.0);
      default: return cosine_bump(x, b1 + 1.0, b1 + 2.0);
    }
  };

  auto sample = [&](const MarginalProfile& m, auto&& eta, const std::array<double, 3>& c) {
    std::vector<double> out(x_nodes.size());
    for (size_t i = 0; i < x_nodes.size(); ++i) {
      double x = x_nodes[i];
      double base = std::sqrt(std::pow(law.f(m.value(x)), 2) + feps * feps);
      out[i] = law.f_inv(base + c[0] * eta(x, 0) + c[1] * eta(x, 1) + c[2] * eta(x, 2));
    }
    return out;
  };

  std::array<double, 3> c0{0, 0, 0}, cT{0, 0, 0};
  auto segment_mass = [&](const std::vector<double>& vals, double lo, double hi) {
    return num::trapezoid_partial(x_nodes, vals, lo, hi);
  };

  // one bisection per compatibility equality; the larger baseline side keeps
  // a zero coefficient
  struct Piece {
    double lo_m0, hi_m0, lo_mT, hi_mT;
    int bump;
  };
  const Piece pieces[3] = {{r_lo, a0, r_lo, a1, 0},
                           {a0, b0, a1, b1, 1},
                           {b0, r_hi, b1, r_hi, 2}};
  for (const auto& piece : pieces) {
    double base_m0 = segment_mass(sample(m0, eta0, {0, 0, 0}), piece.lo_m0, piece.hi_m0);
    double base_mT = segment_mass(sample(mT, etaT, {0, 0, 0}), piece.lo_mT, piece.hi_mT);
    if (base_m0 <= base_mT) {
      auto gap = [&](double c) {
        std::array<double, 3> trial{0, 0, 0};
        trial[piece.bump] = c;
        return segment_mass(sample(m0, eta0, trial), piece.lo_m0, piece.hi_m0) - base_mT;
      };
      c0[piece.bump] = num::bisect_increasing(gap, 0.0, 1.0, 1e-13);
    } else {
      auto gap = [&](double c) {
        std::array<double, 3> trial{0, 0, 0};
        trial[piece.bump] = c;
        return segment_mass(sample(mT, etaT, trial), piece.lo_mT, piece.hi_mT) - base_m0;
      };
      cT[piece.bump] = num::bisect_increasing(gap, 0.0, 1.0, 1e-13);
    }
  }

  RegularizedMarginals out;
  out.m0 = sample(m0, eta0, c0);
  out.mT = sample(mT, etaT, cT);
  out.c0 = c0;
  out.cT = cT;
  out.epsilon = epsilon;
  return out;
}

// Additive lift used for the log coupling (the sqrt construction needs
// f(0) = 0). Equal masses are preserved exactly.
inline RegularizedMarginals lift_marginals(const MarginalProfile& m0,
                                           const MarginalProfile& mT, double epsilon,
                                           std::span<const double> x_nodes) {
  RegularizedMarginals out;
  out.epsilon = epsilon;
  out.m0.resize(x_nodes.size());
  out.mT.resize(x_nodes.size());
  for (size_t i = 0; i < x_nodes.size(); ++i) {
    out.m0[i] = m0.value(x_nodes[i]) + epsilon;
    out.mT[i] = mT.value(x_nodes[i]) + epsilon;
  }
  return out;
}

// --------------------------------------------------------------------------
// problem and solution containers

enum class EulerianMode { Planning, TerminalCost };

struct EulerianProblem {
  SpaceTimeGrid grid;              // Torus (duplicated seam) or NeumannInterval
  CouplingLaw coupling = CouplingLaw::log();
  EulerianMode mode = EulerianMode::Planning;
  std::vector<double> m0_eps;       // node samples, strictly positive
  std::vector<double> mT_eps;       // Planning only
  double terminal_weight = 0.0;     // c1*T (power) or c_T (log)
  double epsilon = 0.0;

  void validate() const {
    size_t n = size_t(grid.n_x);
    if (m0_eps.size() != n)
      throw std::invalid_argument("eulerian: m0 samples do not match the grid");
    for (double v : m0_eps)
      if (!(v > 0.0)) throw std::invalid_argument("eulerian: m0 not strictly positive");
    if (mode == EulerianMode::Planning) {
      if (mT_eps.size() != n)
        throw std::invalid_argument("eulerian: mT samples do not match the grid");
      for (double v : mT_eps)
        if (!(v > 0.0)) throw std::invalid_argument("eulerian: mT not strictly positive");
      double h = grid.h_x();
      double q0 = num::trapezoid_uniform(m0_eps, h);
      double qT = num::trapezoid_uniform(mT_eps, h);
      if (std::abs(q0 - qT) > 1e-8)
        throw std::invalid_argument("eulerian: marginal masses differ");
    } else if (terminal_weight < 0.0) {
      throw std::invalid_argument("eulerian: negative terminal weight");
    }
  }
};

struct SupportCurves {
  std::vector<double> t;
  std::vector<double> left, right;  // level-set {m > threshold} extent
  double threshold = 0.0;
};

struct SolutionBundle {
  ScalarField u, m, v;
  SupportCurves support;
  double newton_residual = 0.0;
  int newton_iterations = 0;
  int clamped_nodes = 0;      // power law: nodes where -u_t+u_x^2/2 dipped below 0
  double gauge_offset = 0.0;  // planning: level absorbed by the t=0 rows
};

struct EulerianSolveOptions {
  double residual_tol = 1e-9;
  int max_iter = 300;
  double backtrack_factor = 0.5;
  int max_backtracks = 30;
  bool use_ptc_fallback = true;
  std::optional<ScalarField> initial_guess;
};

namespace detail {

class EllipticSystem {
 public:
  EllipticSystem(const EulerianProblem& pb) : pb_(pb), g_(pb.grid) {
    periodic_ = (g_.topology == Topology::Torus);
    ncols_ = periodic_ ? g_.n_x - 1 : g_.n_x;
    gauge_ = (pb_.mode == EulerianMode::Planning);
    n_ = ncols_ * g_.n_t + (gauge_ ? 1 : 0);
  }

  int n_unknowns() const { return n_; }
  int ncols() const { return ncols_; }
  bool has_gauge() const { return gauge_; }
  int gauge_index() const { return ncols_ * g_.n_t; }

  int col(int i) const {
    if (periodic_) {
      int p = ncols_;
      return ((i % p) + p) % p;
    }
    if (i < 0) return -i;                      // Neumann reflection
    if (i >= g_.n_x) return 2 * g_.n_x - 2 - i;
    return i;
  }
  int idx(int i, int j) const { return j * ncols_ + col(i); }

  double value(const Eigen::VectorXd& u, int i, int j) const { return u[idx(i, j)]; }

  struct Stencil {
    int cols[12];
    double w[12];
    int n = 0;
    void add(int c, double wt) {
      for (int k = 0; k < n; ++k)
        if (cols[k] == c) {
          w[k] += wt;
          return;
        }
      cols[n] = c;
      w[n] = wt;
      ++n;
    }
  };

  // first derivatives (centered x; one-sided second-order t at the ends)
  double u_x(const Eigen::VectorXd& u, int i, int j, Stencil* s = nullptr) const {
    double hx = g_.h_x();
    double val = (value(u, i + 1, j) - value(u, i - 1, j)) / (2 * hx);
    if (s) {
      s->add(idx(i + 1, j), 1.0 / (2 * hx));
      s->add(idx(i - 1, j), -1.0 / (2 * hx));
    }
    return val;
  }

  double u_t(const Eigen::VectorXd& u, int i, int j, Stencil* s = nullptr) const {
    double ht = g_.h_t();
    int J = g_.n_t - 1;
    if (j == 0) {
      double val = (-3 * value(u, i, 0) + 4 * value(u, i, 1) - value(u, i, 2)) / (2 * ht);
      if (s) {
        s->add(idx(i, 0), -3.0 / (2 * ht));
        s->add(idx(i, 1), 4.0 / (2 * ht));
        s->add(idx(i, 2), -1.0 / (2 * ht));
      }
      return val;
    }
    if (j == J) {
      double val = (3 * value(u, i, J) - 4 * value(u, i, J - 1) + value(u, i, J - 2)) /
                   (2 * ht);
      if (s) {
        s->add(idx(i, J), 3.0 / (2 * ht));
        s->add(idx(i, J - 1), -4.0 / (2 * ht));
        s->add(idx(i, J - 2), 1.0 / (2 * ht));
      }
      return val;
    }
    double val = (value(u, i, j + 1) - value(u, i, j - 1)) / (2 * ht);
    if (s) {
      s->add(idx(i, j + 1), 1.0 / (2 * ht));
      s->add(idx(i, j - 1), -1.0 / (2 * ht));
    }
    return val;
  }

  // y = -u_t + u_x^2/2 = f(m)
  double y_value(const Eigen::VectorXd& u, int i, int j, Stencil* s = nullptr) const {
    Stencil sx, st;
    double ux = u_x(u, i, j, s ? &sx : nullptr);
    double ut = u_t(u, i, j, s ? &st : nullptr);
    if (s) {
      for (int k = 0; k < st.n; ++k) s->add(st.cols[k], -st.w[k]);
      for (int k = 0; k < sx.n; ++k) s->add(sx.cols[k], ux * sx.w[k]);
    }
    return -ut + 0.5 * ux * ux;
  }

  void residual_and_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd& F,
                             std::vector<Eigen::Triplet<double>>* trip,
                             int* clamped = nullptr) const {
    const double hx = g_.h_x(), ht = g_.h_t();
    const int J = g_.n_t - 1;
    F.setZero(n_);
    if (trip) trip->clear();
    if (clamped) *clamped = 0;
    const bool power = pb_.coupling.is_power();
    const double theta = power ? pb_.coupling.theta() : 0.0;

    for (int j = 0; j <= J; ++j) {
      for (int ci = 0; ci < ncols_; ++ci) {
        int i = ci;
        int row = idx(i, j);
        Stencil s;
        if (j == 0 || (j == J && pb_.mode == EulerianMode::Planning)) {
          // oblique marginal row: y = f(m_marginal)
          double target = (j == 0) ? pb_.coupling.f(pb_.m0_eps[i])
                                   : pb_.coupling.f(pb_.mT_eps[i]);
          double y = y_value(u, i, j, trip ? &s : nullptr);
          F[row] = y - target;
          if (j == 0 && gauge_) {
            F[row] += u[gauge_index()];
            if (trip) trip->emplace_back(row, gauge_index(), 1.0);
          }
          if (trip)
            for (int k = 0; k < s.n; ++k) trip->emplace_back(row, s.cols[k], s.w[k]);
          continue;
        }
        if (j == J) {
          // implicit terminal pay-off row: u = w * y (power: g(m) = c1 T m^theta
          // = c1 T y; log: g(m) = c_T log m = c_T y)
          double y = y_value(u, i, j, trip ? &s : nullptr);
          F[row] = value(u, i, J) - pb_.terminal_weight * y;
          if (trip) {
            for (int k = 0; k < s.n; ++k)
              trip->emplace_back(row, s.cols[k], -pb_.terminal_weight * s.w[k]);
            trip->emplace_back(row, idx(i, J), 1.0);
          }
          continue;
        }

        // interior row
        Stencil sy;
        double ux = u_x(u, i, j);
        double y = y_value(u, i, j, trip ? &sy : nullptr);
        double mob, dmob;
        if (power) {
          if (y < 0.0) {
            if (clamped) ++(*clamped);
            mob = 0.0;
            dmob = 0.0;
          } else {
            mob = theta * y;
            dmob = theta;
          }
        } else {
          mob = 1.0;
          dmob = 0.0;
        }
        double utt = (value(u, i, j + 1) - 2 * value(u, i, j) + value(u, i, j - 1)) /
                     (ht * ht);
        double uxx = (value(u, i + 1, j) - 2 * value(u, i, j) + value(u, i - 1, j)) /
                     (hx * hx);
        double uxt = (value(u, i + 1, j + 1) - value(u, i + 1, j - 1) -
                      value(u, i - 1, j + 1) + value(u, i - 1, j - 1)) /
                     (4 * hx * ht);
        F[row] = -utt + 2 * ux * uxt - (ux * ux + mob) * uxx;
        if (!trip) continue;

        auto put = [&](int k, double w) { s.add(k, w); };
        // -u_tt
        put(idx(i, j + 1), -1.0 / (ht * ht));
        put(idx(i, j), 2.0 / (ht * ht));
        put(idx(i, j - 1), -1.0 / (ht * ht));
        // 2 u_x u_xt: cross stencil and the u_x factor
        double cw = 2.0 * ux / (4 * hx * ht);
        put(idx(i + 1, j + 1), cw);
        put(idx(i + 1, j - 1), -cw);
        put(idx(i - 1, j + 1), -cw);
        put(idx(i - 1, j - 1), cw);
        double dF_dux = 2.0 * uxt - 2.0 * ux * uxx;
        put(idx(i + 1, j), dF_dux / (2 * hx));
        put(idx(i - 1, j), -dF_dux / (2 * hx));
        // -(ux^2 + mob) uxx
        double coef = -(ux * ux + mob);
        put(idx(i + 1, j), coef / (hx * hx));
        put(idx(i, j), -2.0 * coef / (hx * hx));
        put(idx(i - 1, j), coef / (hx * hx));
        // mobility depends on y
        for (int k = 0; k < sy.n; ++k) put(sy.cols[k], -dmob * uxx * sy.w[k]);
        for (int k = 0; k < s.n; ++k) trip->emplace_back(row, s.cols[k], s.w[k]);
      }
    }

    if (gauge_) {
      // normalization row: int u(.,T) mT dx = 0 (torus: seam column once)
      int row = gauge_index();
      double hxw = g_.h_x();
      double acc = 0.0;
      for (int ci = 0; ci < ncols_; ++ci) {
        double w = pb_.mT_eps[ci] * hxw;
        acc += w * u[idx(ci, J)];
        if (trip) trip->emplace_back(row, idx(ci, J), w);
      }
      F[row] = acc;
    }
  }

  Eigen::VectorXd initial_guess() const {
    Eigen::VectorXd u(n_);
    u.setZero();
    const int J = g_.n_t - 1;
    double ht = g_.h_t();
    if (pb_.mode == EulerianMode::Planning) {
      // u = -int_0^t f(m_lin) ds along the linear interpolation of marginals
      for (int ci = 0; ci < ncols_; ++ci) {
        double acc = 0.0;
        u[idx(ci, 0)] = 0.0;
        for (int j = 1; j <= J; ++j) {
          auto f_lin = [&](int jj) {
            double w = g_.t(jj) / g_.horizon;
            return pb_.coupling.f((1.0 - w) * pb_.m0_eps[ci] + w * pb_.mT_eps[ci]);
          };
          acc -= 0.5 * (f_lin(j) + f_lin(j - 1)) * ht;
          u[idx(ci, j)] = acc;
        }
      }
    } else {
      for (int ci = 0; ci < ncols_; ++ci) {
        double f0 = pb_.coupling.f(pb_.m0_eps[ci]);
        double g0 = pb_.terminal_weight * f0;
        for (int j = 0; j <= J; ++j)
          u[idx(ci, j)] = f0 * (g_.horizon - g_.t(j)) + g0;
      }
    }
    return u;
  }

 private:
  const EulerianProblem& pb_;
  const SpaceTimeGrid& g_;
  bool periodic_ = false;
  bool gauge_ = false;
  int ncols_ = 0;
  int n_ = 0;
};

}  // namespace detail

// Pointwise recovery m = f^{-1}(-u_t + u_x^2/2) with the solver stencils
// (centered interior, one-sided second order at t ends). For the power law,
// negative arguments clamp to zero and are counted.
inline ScalarField recover_m(const ScalarField& u, const CouplingLaw& law,
                             int* clamped = nullptr) {
  const auto& g = u.grid();
  ScalarField m(g);
  double hx = g.h_x(), ht = g.h_t();
  int J = g.n_t - 1;
  if (clamped) *clamped = 0;
  for (int j = 0; j <= J; ++j) {
    for (int i = 0; i < g.n_x; ++i) {
      double ux;
      if (g.topology == Topology::Torus) {
        ux = (u.at(g.wrap_right(i), j) - u.at(g.wrap_left(i), j)) / (2 * hx);
      } else if (i == 0) {
        ux = 0.0;  // Neumann
      } else if (i == g.n_x - 1) {
        ux = 0.0;
      } else {
        ux = (u.at(i + 1, j) - u.at(i - 1, j)) / (2 * hx);
      }
      double ut;
      if (j == 0)
        ut = (-3 * u.at(i, 0) + 4 * u.at(i, 1) - u.at(i, 2)) / (2 * ht);
      else if (j == J)
        ut = (3 * u.at(i, J) - 4 * u.at(i, J - 1) + u.at(i, J - 2)) / (2 * ht);
      else
        ut = (u.at(i, j + 1) - u.at(i, j - 1)) / (2 * ht);
      double y = -ut + 0.5 * ux * ux;
      if (law.is_power() && y < 0.0) {
        if (clamped) ++(*clamped);
        m.at(i, j) = 0.0;
      } else {
        m.at(i, j) = law.f_inv(y);
      }
    }
  }
  return m;
}

inline SupportCurves support_curves(const ScalarField& m, double threshold) {
  const auto& g = m.grid();
  SupportCurves out;
  out.threshold = threshold;
  out.t = g.t_nodes();
  out.left.assign(g.n_t, 0.0);
  out.right.assign(g.n_t, 0.0);
  for (int j = 0; j < g.n_t; ++j) {
    int lo = -1, hi = -1;
    for (int i = 0; i < g.n_x; ++i)
      if (m.at(i, j) > threshold) {
        if (lo < 0) lo = i;
        hi = i;
      }
    out.left[j] = lo < 0 ? 0.0 : g.x(lo);
    out.right[j] = hi < 0 ? 0.0 : g.x(hi);
  }
  return out;
}

inline SolutionBundle solve_u(const EulerianProblem& pb,
                              const EulerianSolveOptions& opt = EulerianSolveOptions{}) {
  pb.validate();
  detail::EllipticSystem sys(pb);
  const auto& g = pb.grid;
  const int J = g.n_t - 1;

  Eigen::VectorXd u;
  if (opt.initial_guess) {
    u.resize(sys.n_unknowns());
    u.setZero();
    for (int j = 0; j <= J; ++j)
      for (int ci = 0; ci < sys.ncols(); ++ci)
        u[sys.idx(ci, j)] = opt.initial_guess->at(ci, j);
  } else {
    u = sys.initial_guess();
  }

  Eigen::VectorXd F;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> Jm(sys.n_unknowns(), sys.n_unknowns());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  sys.residual_and_jacobian(u, F, nullptr);
  double fnorm = F.lpNorm<Eigen::Infinity>();
  double ptc_dt = 0.0;  // 0 = plain Newton
  int it = 0;
  int stalls = 0;
  for (; it < opt.max_iter && fnorm > opt.residual_tol; ++it) {
    int clamped = 0;
    sys.residual_and_jacobian(u, F, &trip, &clamped);
    if (ptc_dt > 0.0) {
      for (int k = 0; k < sys.n_unknowns(); ++k)
        trip.emplace_back(k, k, 1.0 / ptc_dt);
    }
    Jm.setFromTriplets(trip.begin(), trip.end());
    lu.compute(Jm);
    if (lu.info() != Eigen::Success) {
      if (opt.use_ptc_fallback && ptc_dt == 0.0) {
        ptc_dt = 1e-2;
        --it;
        continue;
      }
      throw SolverError("solve_u: singular Jacobian at residual " +
                        std::to_string(fnorm));
    }
    Eigen::VectorXd step = lu.solve(-F);

    double lambda = 1.0;
    bool accepted = false;
    double f_new = fnorm;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      Eigen::VectorXd cand = u + lambda * step;
      Eigen::VectorXd Fc;
      sys.residual_and_jacobian(cand, Fc, nullptr);
      double fc = Fc.lpNorm<Eigen::Infinity>();
      if (fc < fnorm || fc <= opt.residual_tol) {
        u = cand;
        f_new = fc;
        accepted = true;
        break;
      }
      lambda *= opt.backtrack_factor;
    }
    if (accepted) {
      double drop = fnorm / std::max(f_new, 1e-300);
      fnorm = f_new;
      if (ptc_dt > 0.0) {
        ptc_dt *= std::min(drop, 10.0);  // SER growth
        if (ptc_dt > 1e8) ptc_dt = 0.0;  // back to plain Newton
      }
      stalls = 0;
    } else {
      ++stalls;
      if (!opt.use_ptc_fallback || stalls > 2)
        throw SolverError("solve_u: Newton stalled at residual " +
                          std::to_string(fnorm));
      ptc_dt = (ptc_dt == 0.0) ? 1e-2 : ptc_dt * 0.1;
    }
  }
  if (fnorm > opt.residual_tol)
    throw SolverError("solve_u: no convergence in " + std::to_string(opt.max_iter) +
                      " iterations (residual " + std::to_string(fnorm) + ")");

  SolutionBundle bundle;
  bundle.u = ScalarField(g);
  for (int j = 0; j <= J; ++j)
    for (int i = 0; i < g.n_x; ++i) bundle.u.at(i, j) = u[sys.idx(i, j)];
  bundle.gauge_offset = sys.has_gauge() ? u[sys.gauge_index()] : 0.0;

  int clamped = 0;
  bundle.m = recover_m(bundle.u, pb.coupling, &clamped);
  bundle.clamped_nodes = clamped;
  if (pb.coupling.is_power()) {
    for (int j = 0; j <= J; ++j)
      for (int i = 0; i < g.n_x; ++i)
        if (!(bundle.m.at(i, j) > 0.0))
          throw PositivityError("solve_u: recovered density vanished at a node");
  }
  bundle.v = ScalarField(g);
  for (int j = 0; j <= J; ++j)
    for (int i = 0; i < g.n_x; ++i)
      bundle.v.at(i, j) = pb.coupling.f(bundle.m.at(i, j));
  bundle.support = support_curves(bundle.m, 2.0 * pb.epsilon);
  bundle.newton_residual = fnorm;
  bundle.newton_iterations = it;
  return bundle;
}

// --------------------------------------------------------------------------
// epsilon sweep

struct SweepEntry {
  double epsilon = 0.0;
  double delta_prev = 0.0;   // sup |m_eps - m_prev|
  double delta_oracle = 0.0; // sup |m_eps - oracle|, if an oracle is given
  double support_left = 0.0, support_right = 0.0;  // extent of {m > 2 eps}
  double min_mid = 0.0;      // min_x m(x, T/2)
  int newton_iterations = 0;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  bool deltas_monotone = true;
  std::vector<SolutionBundle> bundles;
};

// Re-solves the same problem for a decreasing epsilon list, warm-starting
// each solve from the previous solution. make_problem(eps) supplies the
// regularized instance.
inline SweepReport epsilon_sweep(
    const std::function<EulerianProblem(double)>& make_problem,
    std::span<const double> eps_list,
    const std::function<double(double, double)>& oracle = nullptr,
    bool keep_bundles = false) {
  SweepReport report;
  std::optional<ScalarField> warm;
  const ScalarField* prev_m = nullptr;
  ScalarField prev_store;
  double prev_delta = -1.0;
  for (double eps : eps_list) {
    EulerianProblem pb = make_problem(eps);
    EulerianSolveOptions opt;
    opt.initial_guess = warm;
    SolutionBundle bundle;
    try {
      bundle = solve_u(pb, opt);
    } catch (const SolverError& e) {
      throw SolverError("epsilon_sweep: solve failed at eps=" + std::to_string(eps) +
                        ": " + e.what());
    }
    SweepEntry entry;
    entry.epsilon = eps;
    entry.newton_iterations = bundle.newton_iterations;
    const auto& g = pb.grid;
    if (prev_m) {
      double d = 0.0;
      for (int j = 0; j < g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i)
          d = std::max(d, std::abs(bundle.m.at(i, j) - prev_m->at(i, j)));
      entry.delta_prev = d;
      if (prev_delta >= 0.0 && d > prev_delta) report.deltas_monotone = false;
      prev_delta = d;
    }
    if (oracle) {
      double d = 0.0;
      for (int j = 0; j < g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i)
          d = std::max(d, std::abs(bundle.m.at(i, j) - oracle(g.x(i), g.t(j))));
      entry.delta_oracle = d;
    }
    auto sup = support_curves(bundle.m, 2.0 * eps);
    entry.support_left = *std::min_element(sup.left.begin(), sup.left.end());
    entry.support_right = *std::max_element(sup.right.begin(), sup.right.end());
    int jmid = g.n_t / 2;
    double mn = bundle.m.at(0, jmid);
    for (int i = 0; i < g.n_x; ++i) mn = std::min(mn, bundle.m.at(i, jmid));
    entry.min_mid = mn;

    prev_store = bundle.m;
    prev_m = &prev_store;
    warm = bundle.u;
    if (keep_bundles) report.bundles.push_back(bundle);
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace mfg
