#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "maxwave/geometry.hpp"

namespace maxwave {

/// Relative permittivity model. Either identically one, or the separable
/// sine bump 1 + sin^m(pi(2x - 1/2)) sin^m(pi(2y - 1/2)) supported on the
/// inner box; the bump vanishes with its gradient on the inner-box boundary,
/// so the coefficient is continuous (C^1) across the subdomain interface.
struct EpsModel {
  enum class Kind { ConstantOne, Sine };

  Kind kind = Kind::Sine;
  int exponent = 2;  ///< m, even and >= 2; unused for ConstantOne

  static EpsModel constant_one() { return {Kind::ConstantOne, 0}; }
  static EpsModel sine(int m) {
    EpsModel e{Kind::Sine, m};
    e.validate();
    return e;
  }

  void validate() const {
    if (kind == Kind::Sine && (exponent < 2 || exponent % 2 != 0)) {
      throw std::invalid_argument("EpsModel: sine exponent must be even and >= 2");
    }
  }

  /// Upper bound d with values in [1, d].
  double bound() const { return kind == Kind::Sine ? 2.0 : 1.0; }
  /// max |eps - 1| over the domain, as used by the CFL bound.
  double max_deviation() const { return kind == Kind::Sine ? 1.0 : 0.0; }
};

inline bool in_fe_box(double x, double y) {
  return x >= DomainSpec::inner_min && x <= DomainSpec::inner_max &&
         y >= DomainSpec::inner_min && y <= DomainSpec::inner_max;
}

namespace detail {

inline void check_in_domain(double x, double y) {
  if (x < DomainSpec::outer_min || x > DomainSpec::outer_max || y < DomainSpec::outer_min ||
      y > DomainSpec::outer_max) {
    throw std::domain_error("point outside the computational domain");
  }
}

}  // namespace detail

inline double eps_eval(double x, double y, const EpsModel& model) {
  detail::check_in_domain(x, y);
  if (model.kind == EpsModel::Kind::ConstantOne || !in_fe_box(x, y)) return 1.0;
  const double pi = std::numbers::pi;
  const double sx = std::sin(pi * (2.0 * x - 0.5));
  const double sy = std::sin(pi * (2.0 * y - 0.5));
  return 1.0 + std::pow(sx, model.exponent) * std::pow(sy, model.exponent);
}

inline std::array<double, 2> grad_eps(double x, double y, const EpsModel& model) {
  detail::check_in_domain(x, y);
  if (model.kind == EpsModel::Kind::ConstantOne || !in_fe_box(x, y)) return {0.0, 0.0};
  const double pi = std::numbers::pi;
  const int m = model.exponent;
  const double sx = std::sin(pi * (2.0 * x - 0.5));
  const double cx = std::cos(pi * (2.0 * x - 0.5));
  const double sy = std::sin(pi * (2.0 * y - 0.5));
  const double cy = std::cos(pi * (2.0 * y - 0.5));
  const double dx = 2.0 * pi * m * std::pow(sx, m - 1) * cx * std::pow(sy, m);
  const double dy = 2.0 * pi * m * std::pow(sy, m - 1) * cy * std::pow(sx, m);
  return {dx, dy};
}

}  // namespace maxwave
