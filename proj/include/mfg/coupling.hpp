#pragma once

// Congestion laws: f(m) = m^theta (finite speed of propagation) and
// f(m) = log m (infinite speed). Everything downstream talks to the law
// through f, f', f'', the antiderivative F, and the inverse.

#include <cmath>
#include <stdexcept>
#include <string>

#include "mfg/numerics.hpp"

namespace mfg {

enum class CouplingKind { Power, Log };

class CouplingLaw {
 public:
  static CouplingLaw power(double theta) {
    if (!(theta > 0.0))
      throw std::invalid_argument("CouplingLaw: power exponent must be positive");
    return CouplingLaw(CouplingKind::Power, theta);
  }
  static CouplingLaw log() { return CouplingLaw(CouplingKind::Log, 0.0); }

  CouplingKind kind() const { return kind_; }
  double theta() const { return theta_; }
  bool is_power() const { return kind_ == CouplingKind::Power; }

  // Growth-bound witness: s f'(s) <= kappa0 and s|f''(s)|/f'(s) <= kappa0 on
  // any bounded density range [0, s_max].
  double kappa0(double s_max = 2.0) const {
    if (kind_ == CouplingKind::Log) return 1.0;
    double grow = theta_ * std::pow(std::max(s_max, 1.0), theta_);
    return std::max(grow, std::abs(theta_ - 1.0));
  }

  double f(double s) const {
    if (kind_ == CouplingKind::Power) {
      if (s < 0.0) throw std::domain_error("coupling_f: negative density");
      return std::pow(s, theta_);
    }
    if (s <= 0.0) throw std::domain_error("coupling_f: log law needs s > 0");
    return std::log(s);
  }

  double f_prime(double s) const {
    if (kind_ == CouplingKind::Power) {
      if (s < 0.0) throw std::domain_error("coupling_f': negative density");
      return theta_ * std::pow(s, theta_ - 1.0);
    }
    if (s <= 0.0) throw std::domain_error("coupling_f': log law needs s > 0");
    return 1.0 / s;
  }

  double f_second(double s) const {
    if (kind_ == CouplingKind::Power)
      return theta_ * (theta_ - 1.0) * std::pow(s, theta_ - 2.0);
    return -1.0 / (s * s);
  }

  double f_inv(double y) const {
    if (kind_ == CouplingKind::Power) {
      if (y < 0.0) throw std::domain_error("coupling_f_inv: negative value for power law");
      return std::pow(y, 1.0 / theta_);
    }
    return std::exp(y);
  }

  // F(s) = int_0^s f.  Power: s^(1+theta)/(1+theta).  Log: s log s - s,
  // extended by continuity with F(0) = 0.
  double F(double s) const {
    if (kind_ == CouplingKind::Power) {
      if (s < 0.0) throw std::domain_error("coupling_F: negative density");
      return std::pow(s, theta_ + 1.0) / (theta_ + 1.0);
    }
    if (s < 0.0) throw std::domain_error("coupling_F: negative density");
    return s > 0.0 ? s * std::log(s) - s : 0.0;
  }

  // m f'(m), the diffusivity coefficient of the elliptic u-equation. For the
  // power law this equals theta * f(m), for log it is identically 1.
  double mobility_of_f(double f_value) const {
    if (kind_ == CouplingKind::Power) return theta_ * f_value;
    return 1.0;
  }

  // d/dy of mobility_of_f.
  double mobility_slope() const {
    return kind_ == CouplingKind::Power ? theta_ : 0.0;
  }

  std::string name() const {
    if (kind_ == CouplingKind::Log) return "log";
    return "power:" + std::to_string(theta_);
  }

 private:
  CouplingLaw(CouplingKind kind, double theta) : kind_(kind), theta_(theta) {}
  CouplingKind kind_;
  double theta_;
};

}  // namespace mfg
