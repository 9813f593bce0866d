#pragma once

// Coefficients of the jump-extended Ait-Sahalia short-rate model
//
//   dX = (a_{-1}/X - a0 + a1 X - a2 X^gamma) dt + b X^theta dW + phi(X-) dN,
//
// plus the parameter-regime classification and the one-sided Lipschitz
// ("monotonicity") constant used to bound the backward Euler stepsize.
//
// Everything is templated on the scalar type so that test oracles can run the
// same formulas in extended precision.

#include <cmath>
#include <sstream>
#include <string>

#include "aitsahalia/errors.hpp"

namespace aitsahalia {

template <typename Scalar>
struct ModelParams {
  Scalar a_neg1{};
  Scalar a0{};
  Scalar a1{};
  Scalar a2{};
  Scalar b{};
  Scalar gamma{};
  Scalar theta{};
  Scalar lambda{};
  Scalar x0{};

  bool operator==(const ModelParams&) const = default;

  template <typename Other>
  ModelParams<Other> cast() const {
    return {Other(a_neg1), Other(a0), Other(a1), Other(a2), Other(b),
            Other(gamma), Other(theta), Other(lambda), Other(x0)};
  }
};

using Params = ModelParams<double>;

/// Name of the first field that violates the parameter invariants, or empty.
template <typename Scalar>
std::string first_invalid_field(const ModelParams<Scalar>& p) {
  auto bad = [](Scalar v) { return !(v > Scalar(0)) || !std::isfinite(double(v)); };
  if (bad(p.a_neg1)) return "a_neg1";
  if (bad(p.a0)) return "a0";
  if (bad(p.a1)) return "a1";
  if (bad(p.a2)) return "a2";
  if (bad(p.b)) return "b";
  if (!(p.gamma > Scalar(1)) || !std::isfinite(double(p.gamma))) return "gamma";
  if (!(p.theta > Scalar(1)) || !std::isfinite(double(p.theta))) return "theta";
  if (bad(p.lambda)) return "lambda";
  if (bad(p.x0)) return "x0";
  return {};
}

template <typename Scalar>
void validate(const ModelParams<Scalar>& p) {
  const std::string field = first_invalid_field(p);
  if (!field.empty()) {
    throw PreconditionError("invalid model parameter: " + field +
                            (field == "gamma" || field == "theta" ? " must be > 1"
                                                                  : " must be > 0"));
  }
}

/// Strict regime (gamma + 1 > 2 theta) used in the numerical experiments.
inline Params case1_params() { return {2.0, 1.0, 1.5, 5.0, 1.0, 3.5, 2.0, 1.0, 1.0}; }

/// Critical regime (gamma + 1 = 2 theta) used in the numerical experiments.
inline Params case2_params() { return {2.0, 1.0, 1.5, 5.0, 1.0, 3.0, 2.0, 1.0, 1.0}; }

namespace detail {

template <typename Scalar>
void require_positive(Scalar x, const char* op) {
  if (!(x > Scalar(0))) {
    std::ostringstream os;
    os << op << ": state must be > 0, got " << double(x);
    throw DomainError(os.str());
  }
}

}  // namespace detail

template <typename Scalar>
Scalar drift(const ModelParams<Scalar>& p, Scalar x) {
  using std::pow;
  detail::require_positive(x, "drift");
  return p.a_neg1 / x - p.a0 + p.a1 * x - p.a2 * pow(x, p.gamma);
}

template <typename Scalar>
Scalar diffusion(const ModelParams<Scalar>& p, Scalar x) {
  using std::pow;
  detail::require_positive(x, "diffusion");
  return p.b * pow(x, p.theta);
}

// ---------------------------------------------------------------------------
// Jump coefficient

enum class JumpKind { LinearScale, Identity, Sine };

/// Jump coefficient phi together with its Lipschitz constant M and the
/// constant eps0 of the lower bound x + phi(x) > eps0 * min(1, x).
template <typename Scalar>
struct JumpSpec {
  JumpKind kind = JumpKind::LinearScale;
  Scalar scale{};  // only meaningful for LinearScale
  Scalar lipschitz_M{};
  Scalar lower_eps0{};

  bool operator==(const JumpSpec&) const = default;

  /// phi(x) = c x. Requires c > -1 so that x + phi(x) stays positive.
  static JumpSpec linear_scale(Scalar c) {
    using std::abs;
    if (!(c > Scalar(-1)) || !std::isfinite(double(c))) {
      throw PreconditionError("LinearScale jump requires c > -1");
    }
    return {JumpKind::LinearScale, c, abs(c), Scalar(0.95) * (Scalar(1) + c)};
  }
  static JumpSpec identity() { return {JumpKind::Identity, Scalar(1), Scalar(1), Scalar(1.9)}; }
  static JumpSpec sine() { return {JumpKind::Sine, Scalar(0), Scalar(1), Scalar(0.99)}; }

  template <typename Other>
  JumpSpec<Other> cast() const {
    return {kind, Other(scale), Other(lipschitz_M), Other(lower_eps0)};
  }
};

using Jump = JumpSpec<double>;

template <typename Scalar>
Scalar jump_phi(const JumpSpec<Scalar>& j, Scalar x) {
  using std::sin;
  detail::require_positive(x, "jump_phi");
  switch (j.kind) {
    case JumpKind::LinearScale:
      return j.scale * x;
    case JumpKind::Identity:
      return x;
    case JumpKind::Sine:
      return sin(x);
  }
  return Scalar(0);
}

/// Short label used in output files: "-0.2x", "x", "sin(x)".
std::string jump_label(const Jump& j);

// ---------------------------------------------------------------------------
// Regimes and stepsize bounds

enum class RegimeCase { Strict, Critical, Unsupported };

struct Regime {
  RegimeCase kind = RegimeCase::Unsupported;
  bool critical_ok = false;

  bool operator==(const Regime&) const = default;
};

/// |gamma + 1 - 2 theta| below this is treated as the critical case.
inline constexpr double kRegimeTolerance = 1e-12;

template <typename Scalar>
Regime classify_regime(const ModelParams<Scalar>& p) {
  const double gap = double(p.gamma + Scalar(1) - Scalar(2) * p.theta);
  if (gap > kRegimeTolerance) return {RegimeCase::Strict, false};
  if (gap < -kRegimeTolerance) return {RegimeCase::Unsupported, false};
  const bool ok = p.a2 / (p.b * p.b) > Scalar(2) * p.gamma - Scalar(1.5);
  return {RegimeCase::Critical, ok};
}

inline constexpr double kDefaultQ = 3.0;

/// Closed form of a1 + sup_{x>0} ((q-1)/2 b^2 theta^2 x^(2theta-2) - a2 gamma x^(gamma-1)).
/// Only defined in the strict regime and for q > 2.
template <typename Scalar>
Scalar monotonicity_constant(const ModelParams<Scalar>& p, Scalar q = Scalar(kDefaultQ)) {
  using std::pow;
  if (classify_regime(p).kind != RegimeCase::Strict) {
    throw PreconditionError("monotonicity_constant requires gamma + 1 > 2 theta");
  }
  if (!(q > Scalar(2))) throw PreconditionError("monotonicity_constant requires q > 2");

  const Scalar qb2t2 = (q - Scalar(1)) * p.b * p.b * p.theta * p.theta;
  const Scalar gap = p.gamma + Scalar(1) - Scalar(2) * p.theta;
  const Scalar base = qb2t2 * (p.theta - Scalar(1)) / (p.a2 * p.gamma * (p.gamma - Scalar(1)));
  const Scalar exponent = (Scalar(2) * p.theta - Scalar(2)) / gap;
  return p.a1 + qb2t2 * gap / (Scalar(2) * (p.gamma - Scalar(1))) * pow(base, exponent);
}

/// Largest admissible BEM stepsize for the mean-square rate result:
/// 1/(2L) in the strict regime, 1/(2 a1) in the admissible critical regime.
template <typename Scalar>
Scalar rate_step_bound(const ModelParams<Scalar>& p, Scalar q = Scalar(kDefaultQ)) {
  const Regime r = classify_regime(p);
  if (r.kind == RegimeCase::Strict) return Scalar(1) / (Scalar(2) * monotonicity_constant(p, q));
  if (r.kind == RegimeCase::Critical && r.critical_ok) return Scalar(1) / (Scalar(2) * p.a1);
  throw PreconditionError("no convergence-rate step bound: regime unsupported");
}

template <typename Scalar>
Scalar critical_step_bound(const ModelParams<Scalar>& p) {
  const Regime r = classify_regime(p);
  if (r.kind != RegimeCase::Critical || !r.critical_ok) {
    throw PreconditionError(
        "critical_step_bound requires gamma + 1 = 2 theta and a2/b^2 > 2 gamma - 3/2");
  }
  return Scalar(1) / (Scalar(2) * p.a1);
}

}  // namespace aitsahalia
