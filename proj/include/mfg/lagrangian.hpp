#pragma once

// Lagrangian route: solve the quasilinear elliptic equation for the flow of
// optimal trajectories,
//
//   gamma_tt + theta f(m0) gamma_xx / gamma_x^(2+theta)
//            = f(m0)_x / gamma_x^(1+theta)
//
// on [a0,b0] x [0,T] with gamma(x,0) = x and either a prescribed terminal
// rearrangement (planning) or the Robin relation gamma_t = -c1 T gamma_tt at
// t = T (terminal cost). Everything else -- densities, value function, free
// boundary -- is reconstructed from the solved flow.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>
#include <vector>

#include "mfg/coupling.hpp"
#include "mfg/grid.hpp"
#include "mfg/numerics.hpp"
#include "mfg/profile.hpp"

namespace mfg {

enum class TerminalKind { Planning, TerminalCost };

struct FlowProblem {
  MarginalProfile m0;
  CouplingLaw coupling;           // Power only
  double horizon = 1.0;
  TerminalKind terminal = TerminalKind::Planning;
  std::optional<MarginalProfile> m_terminal;  // Planning
  double c1 = 0.0;                            // TerminalCost weight
  int n_x = 65, n_t = 65;

  FlowProblem(MarginalProfile m0_, CouplingLaw law, double T)
      : m0(std::move(m0_)), coupling(law), horizon(T) {
    if (!law.is_power())
      throw std::invalid_argument("flow problem: Lagrangian route needs the power law");
  }
};

struct FlowField {
  SpaceTimeGrid grid;   // LagrangianInterval over [a0,b0] x [0,T]
  ScalarField gamma;
  ScalarField gamma_x, gamma_t, gamma_tt;
  double newton_residual = 0.0;
  int newton_iterations = 0;

  // Centered differences inside, second-order one-sided at the edges; the
  // edge stencils match the ones the solver enforces its boundary rows with.
  void rebuild_derivatives() {
    gamma_x = ScalarField(grid);
    gamma_t = ScalarField(grid);
    gamma_tt = ScalarField(grid);
    double hx = grid.h_x(), ht = grid.h_t();
    int nx = grid.n_x, nt = grid.n_t;
    for (int j = 0; j < nt; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (i == 0)
          gamma_x.at(i, j) =
              (-3 * gamma.at(0, j) + 4 * gamma.at(1, j) - gamma.at(2, j)) / (2 * hx);
        else if (i == nx - 1)
          gamma_x.at(i, j) = (3 * gamma.at(i, j) - 4 * gamma.at(i - 1, j) +
                              gamma.at(i - 2, j)) /
                             (2 * hx);
        else
          gamma_x.at(i, j) = (gamma.at(i + 1, j) - gamma.at(i - 1, j)) / (2 * hx);
        if (j == 0)
          gamma_t.at(i, j) =
              (-3 * gamma.at(i, 0) + 4 * gamma.at(i, 1) - gamma.at(i, 2)) / (2 * ht);
        else if (j == nt - 1)
          gamma_t.at(i, j) = (3 * gamma.at(i, j) - 4 * gamma.at(i, j - 1) +
                              gamma.at(i, j - 2)) /
                             (2 * ht);
        else
          gamma_t.at(i, j) = (gamma.at(i, j + 1) - gamma.at(i, j - 1)) / (2 * ht);
        if (j > 0 && j < nt - 1)
          gamma_tt.at(i, j) =
              (gamma.at(i, j + 1) - 2 * gamma.at(i, j) + gamma.at(i, j - 1)) / (ht * ht);
      }
    }
    for (int i = 0; i < nx; ++i) {
      gamma_tt.at(i, 0) = gamma_tt.at(i, 1);
      gamma_tt.at(i, nt - 1) = gamma_tt.at(i, nt - 2);
    }
  }

  void validate() const {
    for (int i = 0; i < grid.n_x; ++i)
      if (gamma.at(i, 0) != grid.x(i))
        throw SolverError("flow: gamma(x,0) != x");
    for (int j = 0; j < grid.n_t; ++j) {
      for (int i = 0; i < grid.n_x; ++i)
        if (!(gamma_x.at(i, j) > 0.0))
          throw DegeneracyError("flow: gamma_x <= 0 at a node");
      for (int i = 0; i + 1 < grid.n_x; ++i)
        if (!(gamma.at(i + 1, j) > gamma.at(i, j)))
          throw DegeneracyError("flow: gamma(.,t) not strictly increasing");
    }
  }
};

struct FreeBoundaryCurves {
  std::vector<double> t;
  std::vector<double> left, right;
  std::vector<double> d;  // dist(t, {0,T}) or t, by problem kind
  std::vector<double> left_dot, right_dot;
  std::vector<double> left_ddot, right_ddot;
};

// G = cdf(mT)^{-1} o cdf(m0): the monotone rearrangement of m0 onto mT.
inline std::vector<double> transport_boundary_map(const MarginalProfile& m0,
                                                  const MarginalProfile& mT,
                                                  std::span<const double> x_nodes) {
  if (std::abs(m0.quadrature_mass() - mT.quadrature_mass()) > 1e-8)
    throw std::invalid_argument("transport map: marginal masses differ");
  std::vector<double> G(x_nodes.size());
  for (size_t i = 0; i < x_nodes.size(); ++i)
    G[i] = mT.cdf_inv(m0.cdf(x_nodes[i]));
  if (!x_nodes.empty()) {
    G.front() = mT.a();
    G.back() = mT.b();
  }
  for (size_t i = 0; i + 1 < G.size(); ++i)
    if (!(G[i + 1] > G[i]))
      throw SolverError("transport map: not strictly increasing");
  return G;
}

namespace detail {

// Nonlinear residual and analytic Jacobian of the discretized flow equation.
// Unknowns are gamma at all nodes with j >= 1 (the j = 0 row is identity).
class FlowSystem {
 public:
  FlowSystem(const FlowProblem& pb, const SpaceTimeGrid& grid)
      : pb_(pb), grid_(grid), theta_(pb.coupling.theta()) {
    int nx = grid_.n_x;
    fm0_.resize(nx);
    for (int i = 0; i < nx; ++i) fm0_[i] = pb_.coupling.f(pb_.m0.value(grid_.x(i)));
    fm0_.front() = 0.0;
    fm0_.back() = 0.0;
    fm0x_.resize(nx);
    double hx = grid_.h_x();
    for (int i = 1; i + 1 < nx; ++i) fm0x_[i] = (fm0_[i + 1] - fm0_[i - 1]) / (2 * hx);
    // second-order one-sided at the support endpoints
    fm0x_[0] = (-3 * fm0_[0] + 4 * fm0_[1] - fm0_[2]) / (2 * hx);
    fm0x_[nx - 1] = (3 * fm0_[nx - 1] - 4 * fm0_[nx - 2] + fm0_[nx - 3]) / (2 * hx);
    if (pb_.terminal == TerminalKind::Planning) {
      G_ = transport_boundary_map(pb_.m0, *pb_.m_terminal, grid_.x_nodes());
    }
  }

  int n_unknowns() const { return grid_.n_x * (grid_.n_t - 1); }
  int idx(int i, int j) const { return (j - 1) * grid_.n_x + i; }

  const std::vector<double>& terminal_map() const { return G_; }

  double gamma_at(const Eigen::VectorXd& u, int i, int j) const {
    return j == 0 ? grid_.x(i) : u[idx(i, j)];
  }

  // One-sided (edges) or centered gamma_x at (i,j); also writes the stencil
  // dependence into cols/weights when requested.
  double gamma_x(const Eigen::VectorXd& u, int i, int j, int* cols = nullptr,
                 double* wts = nullptr, int* ncols = nullptr) const {
    double hx = grid_.h_x();
    int nx = grid_.n_x;
    auto put = [&](int k, double w, int slot) {
      if (cols) {
        cols[slot] = k;
        wts[slot] = w;
      }
    };
    if (i == 0) {
      if (ncols) *ncols = 3;
      put(0, -3.0 / (2 * hx), 0);
      put(1, 4.0 / (2 * hx), 1);
      put(2, -1.0 / (2 * hx), 2);
      return (-3 * gamma_at(u, 0, j) + 4 * gamma_at(u, 1, j) - gamma_at(u, 2, j)) /
             (2 * hx);
    }
    if (i == nx - 1) {
      if (ncols) *ncols = 3;
      put(nx - 1, 3.0 / (2 * hx), 0);
      put(nx - 2, -4.0 / (2 * hx), 1);
      put(nx - 3, 1.0 / (2 * hx), 2);
      return (3 * gamma_at(u, nx - 1, j) - 4 * gamma_at(u, nx - 2, j) +
              gamma_at(u, nx - 3, j)) /
             (2 * hx);
    }
    if (ncols) *ncols = 2;
    put(i + 1, 1.0 / (2 * hx), 0);
    put(i - 1, -1.0 / (2 * hx), 1);
    return (gamma_at(u, i + 1, j) - gamma_at(u, i - 1, j)) / (2 * hx);
  }

  double min_gamma_x(const Eigen::VectorXd& u) const {
    double mn = std::numeric_limits<double>::max();
    for (int j = 1; j < grid_.n_t; ++j)
      for (int i = 0; i < grid_.n_x; ++i) mn = std::min(mn, gamma_x(u, i, j));
    return mn;
  }

  // PDE right-hand side bundle: P(gamma) = f(m0)_x / gx^(1+theta)
  //                                        - theta f(m0) gxx / gx^(2+theta)
  // evaluated at row j (gamma_tt = P at interior rows; also used to eliminate
  // gamma_tt in the Robin terminal row).
  struct PdeTerm {
    double value;
    // partials wrt gx and gxx
    double d_gx;
    double d_gxx;
  };

  PdeTerm pde_rhs(double gx, double gxx, int i) const {
    PdeTerm out{};
    double p1 = std::pow(gx, 1.0 + theta_);
    double p2 = p1 * gx;
    out.value = fm0x_[i] / p1 - theta_ * fm0_[i] * gxx / p2;
    out.d_gx = -(1.0 + theta_) * fm0x_[i] / (p1 * gx) +
               theta_ * (2.0 + theta_) * fm0_[i] * gxx / (p2 * gx);
    out.d_gxx = -theta_ * fm0_[i] / p2;
    return out;
  }

  void residual_and_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd& F,
                             std::vector<Eigen::Triplet<double>>* trip) const {
    int nx = grid_.n_x, nt = grid_.n_t;
    double ht = grid_.h_t(), hx = grid_.h_x();
    F.setZero(n_unknowns());
    if (trip) trip->clear();
    auto add = [&](int row, int i, int j, double w) {
      if (trip && j >= 1) trip->emplace_back(row, idx(i, j), w);
    };

    int cols[3];
    double wts[3];
    int ncols = 0;

    for (int j = 1; j < nt; ++j) {
      bool terminal_row = (j == nt - 1);
      for (int i = 0; i < nx; ++i) {
        int row = idx(i, j);
        if (terminal_row && pb_.terminal == TerminalKind::Planning) {
          F[row] = u[row] - G_[i];
          add(row, i, j, 1.0);
          continue;
        }
        double gx = gamma_x(u, i, j, cols, wts, &ncols);
        double gxx = (i > 0 && i < nx - 1)
                         ? (gamma_at(u, i + 1, j) - 2 * gamma_at(u, i, j) +
                            gamma_at(u, i - 1, j)) /
                               (hx * hx)
                         : 0.0;  // edge columns: f(m0)=0 kills this term anyway
        PdeTerm P = pde_rhs(gx, gxx, i);

        if (!terminal_row) {
          double gtt = (gamma_at(u, i, j + 1) - 2 * gamma_at(u, i, j) +
                        gamma_at(u, i, j - 1)) /
                       (ht * ht);
          F[row] = gtt - P.value;
          add(row, i, j + 1, 1.0 / (ht * ht));
          add(row, i, j, -2.0 / (ht * ht));
          add(row, i, j - 1, 1.0 / (ht * ht));
          for (int k = 0; k < ncols; ++k) add(row, cols[k], j, -P.d_gx * wts[k]);
          if (i > 0 && i < nx - 1) {
            add(row, i + 1, j, -P.d_gxx / (hx * hx));
            add(row, i, j, 2.0 * P.d_gxx / (hx * hx));
            add(row, i - 1, j, -P.d_gxx / (hx * hx));
          }
        } else {
          // Robin row: gamma_t + c1 T gamma_tt = 0 with gamma_tt eliminated
          // through the PDE and gamma_t by a second-order backward stencil.
          double gt = (3 * gamma_at(u, i, j) - 4 * gamma_at(u, i, j - 1) +
                       gamma_at(u, i, j - 2)) /
                      (2 * ht);
          double c1T = pb_.c1 * pb_.horizon;
          F[row] = gt + c1T * P.value;
          add(row, i, j, 3.0 / (2 * ht));
          add(row, i, j - 1, -4.0 / (2 * ht));
          add(row, i, j - 2, 1.0 / (2 * ht));
          for (int k = 0; k < ncols; ++k) add(row, cols[k], j, c1T * P.d_gx * wts[k]);
          if (i > 0 && i < nx - 1) {
            add(row, i + 1, j, c1T * P.d_gxx / (hx * hx));
            add(row, i, j, -2.0 * c1T * P.d_gxx / (hx * hx));
            add(row, i - 1, j, c1T * P.d_gxx / (hx * hx));
          }
        }
      }
    }
  }

 private:
  const FlowProblem& pb_;
  const SpaceTimeGrid& grid_;
  double theta_;
  std::vector<double> fm0_, fm0x_;
  std::vector<double> G_;
};

}  // namespace detail

struct FlowSolveOptions {
  double residual_tol = 1e-9;
  int max_iter = 200;
  double gamma_x_floor = 1e-6;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
};

inline FlowField solve_flow(const FlowProblem& pb,
                            const FlowSolveOptions& opt = FlowSolveOptions{}) {
  if (pb.terminal == TerminalKind::Planning && !pb.m_terminal)
    throw std::invalid_argument("solve_flow: planning problem needs a terminal marginal");
  if (pb.terminal == TerminalKind::TerminalCost && pb.c1 < 0.0)
    throw std::invalid_argument("solve_flow: negative terminal-cost weight");

  SpaceTimeGrid grid(pb.m0.a(), pb.m0.b(), pb.horizon, pb.n_x, pb.n_t,
                     Topology::LagrangianInterval);
  detail::FlowSystem sys(pb, grid);

  // Initial guess: linear-in-t interpolation towards the boundary target
  // (planning) or the frozen initial positions (terminal cost).
  Eigen::VectorXd u(sys.n_unknowns());
  for (int j = 1; j < grid.n_t; ++j) {
    double s = grid.t(j) / pb.horizon;
    for (int i = 0; i < grid.n_x; ++i) {
      double target = pb.terminal == TerminalKind::Planning
                          ? sys.terminal_map()[i]
                          : grid.x(i);
      u[sys.idx(i, j)] = (1.0 - s) * grid.x(i) + s * target;
    }
  }

  Eigen::VectorXd F;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> J(sys.n_unknowns(), sys.n_unknowns());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  sys.residual_and_jacobian(u, F, nullptr);
  double fnorm = F.lpNorm<Eigen::Infinity>();
  int it = 0;
  for (; it < opt.max_iter && fnorm > opt.residual_tol; ++it) {
    sys.residual_and_jacobian(u, F, &trip);
    J.setFromTriplets(trip.begin(), trip.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw SolverError("solve_flow: singular Jacobian (residual " +
                        std::to_string(fnorm) + ")");
    Eigen::VectorXd step = lu.solve(-F);

    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      Eigen::VectorXd candidate = u + lambda * step;
      if (sys.min_gamma_x(candidate) > opt.gamma_x_floor) {
        Eigen::VectorXd Fc;
        sys.residual_and_jacobian(candidate, Fc, nullptr);
        double fc = Fc.lpNorm<Eigen::Infinity>();
        if (fc < fnorm || fc < opt.residual_tol) {
          u = candidate;
          fnorm = fc;
          accepted = true;
          break;
        }
      }
      lambda *= opt.backtrack_factor;
    }
    if (!accepted) {
      if (sys.min_gamma_x(u + lambda * step) <= opt.gamma_x_floor)
        throw DegeneracyError("solve_flow: gamma_x floor violation persists");
      throw SolverError("solve_flow: Newton stalled at residual " +
                        std::to_string(fnorm));
    }
  }
  if (fnorm > opt.residual_tol)
    throw SolverError("solve_flow: no convergence in " + std::to_string(opt.max_iter) +
                      " iterations (residual " + std::to_string(fnorm) + ")");

  FlowField flow;
  flow.grid = grid;
  flow.gamma = ScalarField(grid);
  for (int i = 0; i < grid.n_x; ++i) flow.gamma.at(i, 0) = grid.x(i);
  for (int j = 1; j < grid.n_t; ++j)
    for (int i = 0; i < grid.n_x; ++i) flow.gamma.at(i, j) = u[sys.idx(i, j)];
  flow.rebuild_derivatives();
  flow.newton_residual = fnorm;
  flow.newton_iterations = it;
  flow.validate();
  return flow;
}

struct LagrangianDensity {
  ScalarField m_along_flow;  // m(gamma(x,t), t)
  ScalarField v;             // f of it
};

inline LagrangianDensity density_along_flow(const FlowField& flow,
                                            const MarginalProfile& m0,
                                            const CouplingLaw& law) {
  const auto& g = flow.grid;
  LagrangianDensity out{ScalarField(g), ScalarField(g)};
  for (int j = 0; j < g.n_t; ++j) {
    for (int i = 0; i < g.n_x; ++i) {
      double gx = flow.gamma_x.at(i, j);
      if (!(gx > 0.0)) throw DegeneracyError("density_along_flow: gamma_x <= 0");
      double m0v = (i == 0 || i == g.n_x - 1) ? 0.0 : m0.value(g.x(i));
      double m = m0v / gx;
      out.m_along_flow.at(i, j) = m;
      out.v.at(i, j) = law.is_power() ? std::pow(m, law.theta()) : law.f(m);
    }
  }
  return out;
}

// Push the Lagrangian density to a target Eulerian grid: invert the monotone
// map x -> gamma(x,t) with monotone cubic interpolation per time row.
inline ScalarField eulerian_density(const FlowField& flow, const MarginalProfile& m0,
                                    const CouplingLaw& law,
                                    const SpaceTimeGrid& target) {
  auto lag = density_along_flow(flow, m0, law);
  ScalarField out(target);
  const auto& g = flow.grid;
  if (target.n_t != g.n_t)
    throw std::invalid_argument("eulerian_density: target must share the time grid");
  for (int j = 0; j < g.n_t; ++j) {
    std::vector<double> gam(g.n_x), xl(g.n_x), mrow(g.n_x);
    for (int i = 0; i < g.n_x; ++i) {
      gam[i] = flow.gamma.at(i, j);
      xl[i] = g.x(i);
      mrow[i] = lag.m_along_flow.at(i, j);
    }
    for (int i = 0; i + 1 < g.n_x; ++i)
      if (!(gam[i + 1] > gam[i]))
        throw DegeneracyError("eulerian_density: gamma(.,t) not monotone");
    num::PchipInterpolant inverse(gam, xl);
    num::PchipInterpolant m_of_x(xl, mrow);
    double lo = gam.front(), hi = gam.back();
    for (int k = 0; k < target.n_x; ++k) {
      double y = target.x(k);
      if (y <= lo || y >= hi) {
        out.at(k, j) = 0.0;
      } else {
        out.at(k, j) = std::max(0.0, m_of_x(inverse(y)));
      }
    }
  }
  return out;
}

struct FlowValue {
  ScalarField u_along_flow;   // u(gamma(x,t), t)
  ScalarField ux_along_flow;  // u_x(gamma(x,t), t) = -gamma_t
};

// Value along trajectories:
//   u(gamma(x,t),t) = int_t^T (gamma_s^2/2 + f(m o gamma)) ds + u_T(gamma(x,T))
// with u_T = g(m(.,T)) for the terminal-cost problem and, for planning, the
// antiderivative of -gamma_t gamma_x at t = T normalized by
// int u(.,T) m_T = 0.
inline FlowValue velocity_and_value(const FlowField& flow, const FlowProblem& pb) {
  const auto& g = flow.grid;
  auto lag = density_along_flow(flow, pb.m0, pb.coupling);
  FlowValue out{ScalarField(g), ScalarField(g)};
  int J = g.n_t - 1;
  double ht = g.h_t(), hx = g.h_x();

  std::vector<double> uT(g.n_x, 0.0);
  if (pb.terminal == TerminalKind::TerminalCost) {
    for (int i = 0; i < g.n_x; ++i)
      uT[i] = pb.c1 * pb.horizon *
              std::pow(lag.m_along_flow.at(i, J), pb.coupling.theta());
  } else {
    // u_x(gamma(x,T),T) = -gamma_t(x,T); integrate along gamma(.,T)
    std::vector<double> integrand(g.n_x);
    for (int i = 0; i < g.n_x; ++i)
      integrand[i] = -flow.gamma_t.at(i, J) * flow.gamma_x.at(i, J);
    uT[0] = 0.0;
    for (int i = 1; i < g.n_x; ++i)
      uT[i] = uT[i - 1] + 0.5 * (integrand[i] + integrand[i - 1]) * hx;
    // normalize against the terminal marginal (pulled back to x)
    std::vector<double> w(g.n_x), m0row(g.n_x);
    for (int i = 0; i < g.n_x; ++i) {
      m0row[i] = pb.m0.value(g.x(i));
      w[i] = uT[i] * m0row[i];
    }
    double shift = num::trapezoid_uniform(w, hx) / num::trapezoid_uniform(m0row, hx);
    for (auto& v : uT) v -= shift;
  }

  for (int i = 0; i < g.n_x; ++i) {
    out.u_along_flow.at(i, J) = uT[i];
    out.ux_along_flow.at(i, J) = -flow.gamma_t.at(i, J);
    double acc = uT[i];
    for (int j = J; j > 0; --j) {
      auto running = [&](int jj) {
        double gt = flow.gamma_t.at(i, jj);
        return 0.5 * gt * gt + lag.v.at(i, jj);
      };
      acc += 0.5 * (running(j) + running(j - 1)) * ht;
      out.u_along_flow.at(i, j - 1) = acc;
      out.ux_along_flow.at(i, j - 1) = -flow.gamma_t.at(i, j - 1);
    }
  }
  return out;
}

inline FreeBoundaryCurves extract_free_boundary(const FlowField& flow,
                                                TerminalKind kind) {
  const auto& g = flow.grid;
  FreeBoundaryCurves out;
  out.t = g.t_nodes();
  out.left.resize(g.n_t);
  out.right.resize(g.n_t);
  out.d.resize(g.n_t);
  for (int j = 0; j < g.n_t; ++j) {
    out.left[j] = flow.gamma.at(0, j);
    out.right[j] = flow.gamma.at(g.n_x - 1, j);
    double t = g.t(j);
    out.d[j] = kind == TerminalKind::TerminalCost
                   ? t
                   : std::min(t, g.horizon - t);
  }
  double ht = g.h_t();
  out.left_dot = num::gradient_uniform(out.left, ht);
  out.right_dot = num::gradient_uniform(out.right, ht);
  out.left_ddot = num::second_diff_uniform(out.left, ht);
  out.right_ddot = num::second_diff_uniform(out.right, ht);
  return out;
}

// Max interior residual of the Euler equation gamma_tt = v_x / gamma_x.
inline double euler_residual(const FlowField& flow, const ScalarField& v) {
  const auto& g = flow.grid;
  double hx = g.h_x();
  double worst = 0.0;
  for (int j = 1; j + 1 < g.n_t; ++j) {
    for (int i = 1; i + 1 < g.n_x; ++i) {
      double vx = (v.at(i + 1, j) - v.at(i - 1, j)) / (2 * hx);
      double r = flow.gamma_tt.at(i, j) - vx / flow.gamma_x.at(i, j);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

// Discrete residual of the divergence-form identity
//   (v_x / gamma_x)_x + (gamma_x v_t / (theta v))_t = 0
// over interior nodes whose whole stencil has v above the floor (the
// coefficient 1/(theta v) degenerates at the support edges).
inline double divergence_form_residual(const FlowField& flow, const ScalarField& v,
                                       double theta, double v_floor = 1e-2) {
  const auto& g = flow.grid;
  double hx = g.h_x(), ht = g.h_t();
  auto flux_x = [&](int i, int j) {  // at half node i+1/2
    double vx = (v.at(i + 1, j) - v.at(i, j)) / hx;
    double gx = 0.5 * (flow.gamma_x.at(i + 1, j) + flow.gamma_x.at(i, j));
    return vx / gx;
  };
  auto flux_t = [&](int i, int j) {  // at half node j+1/2
    double vt = (v.at(i, j + 1) - v.at(i, j)) / ht;
    double gx = 0.5 * (flow.gamma_x.at(i, j + 1) + flow.gamma_x.at(i, j));
    double vm = 0.5 * (v.at(i, j + 1) + v.at(i, j));
    return gx * vt / (theta * vm);
  };
  double worst = 0.0;
  for (int j = 1; j + 1 < g.n_t; ++j) {
    for (int i = 1; i + 1 < g.n_x; ++i) {
      double vmin = std::min({v.at(i, j), v.at(i - 1, j), v.at(i + 1, j),
                              v.at(i, j - 1), v.at(i, j + 1)});
      if (vmin < v_floor) continue;
      double r = (flux_x(i, j) - flux_x(i - 1, j)) / hx +
                 (flux_t(i, j) - flux_t(i, j - 1)) / ht;
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

}  // namespace mfg
