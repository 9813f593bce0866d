#pragma once

// Scalar solver for the backward Euler implicit relation
//
//   F(y) = y - h (a_{-1}/y - a0 + a1 y - a2 y^gamma) - rhs = 0,   y > 0.
//
// For h a1 < 1, F is strictly increasing on (0, inf) with F(0+) = -inf and
// F(inf) = +inf, so there is exactly one positive root for any finite rhs.

#include <cmath>
#include <limits>
#include <sstream>

#include "aitsahalia/errors.hpp"
#include "aitsahalia/model.hpp"

namespace aitsahalia {

template <typename Scalar>
struct ImplicitStepProblem {
  Scalar h{};
  ModelParams<Scalar> params{};
  Scalar rhs{};

  Scalar residual(Scalar y) const {
    using std::pow;
    const auto& p = params;
    return y - h * (p.a_neg1 / y - p.a0 + p.a1 * y - p.a2 * pow(y, p.gamma)) - rhs;
  }

  Scalar derivative(Scalar y) const {
    using std::pow;
    const auto& p = params;
    return Scalar(1) - h * p.a1 + h * p.a_neg1 / (y * y) +
           h * p.a2 * p.gamma * pow(y, p.gamma - Scalar(1));
  }
};

struct SolverTolerances {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
};

inline constexpr int kMaxSolverIterations = 200;

template <typename Scalar>
struct ImplicitStepSolution {
  Scalar root{};
  int iterations = 0;
  // Initial bracket, F(lo) < 0 < F(hi).
  Scalar bracket_lo{};
  Scalar bracket_hi{};
};

template <typename Scalar>
ImplicitStepSolution<Scalar> solve_detailed(const ImplicitStepProblem<Scalar>& prob,
                                            SolverTolerances tol = {}) {
  using std::abs;
  using std::isfinite;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  if (!(prob.h > Scalar(0))) throw PreconditionError("implicit step: h must be > 0");
  if (!(prob.h * prob.params.a1 < Scalar(1))) {
    throw PreconditionError("implicit step: requires h * a1 < 1");
  }
  if (!isfinite(prob.rhs)) throw PreconditionError("implicit step: rhs must be finite");
  if (!(tol.rel_tol > 0.0) || !(tol.abs_tol > 0.0)) {
    throw PreconditionError("implicit step: tolerances must be > 0");
  }

  auto F = [&](Scalar y) { return prob.residual(y); };
  auto accept = [&](Scalar y, Scalar f) {
    return abs(f) <= Scalar(tol.abs_tol) + Scalar(tol.rel_tol) * (abs(y) + abs(prob.rhs));
  };

  // Bracket: lo halves towards 0+, hi doubles towards +inf.
  Scalar lo = Scalar(0.5);
  Scalar f_lo = F(lo);
  while (!(f_lo < Scalar(0))) {
    lo /= Scalar(2);
    if (!(lo > Scalar(0))) throw SolverError("implicit step: lower bracket underflow", 0.0, 0.5);
    f_lo = F(lo);
  }
  Scalar hi = prob.rhs + Scalar(1) > Scalar(1) ? prob.rhs + Scalar(1) : Scalar(1);
  if (hi < lo) hi = Scalar(2) * lo;
  Scalar f_hi = F(hi);
  while (!(f_hi > Scalar(0))) {
    if (f_hi == Scalar(0)) return {hi, 0, lo, hi};
    lo = hi;
    f_lo = f_hi;
    hi *= Scalar(2);
    f_hi = F(hi);
  }
  // y^gamma overflow: pull hi down until F(hi) is finite, keeping F(hi) > 0.
  while (!isfinite(f_hi)) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    const Scalar f_mid = F(mid);
    if (f_mid < Scalar(0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  if (!(f_lo < Scalar(0) && f_hi > Scalar(0))) {
    throw SolverError("implicit step: invalid initial bracket", double(lo), double(hi));
  }

  ImplicitStepSolution<Scalar> out;
  out.bracket_lo = lo;
  out.bracket_hi = hi;

  Scalar y = lo + (hi - lo) / Scalar(2);
  for (int it = 1; it <= kMaxSolverIterations; ++it) {
    out.iterations = it;
    const Scalar f = F(y);
    if (f == Scalar(0)) {
      out.root = y;
      return out;
    }
    if (f < Scalar(0)) {
      lo = y;
    } else {
      hi = y;
    }

    const Scalar df = prob.derivative(y);
    const Scalar step = f / df;
    if (isfinite(step) && abs(step) <= Scalar(tol.rel_tol) * abs(y) + Scalar(tol.abs_tol)) {
      const Scalar polished = y - step;
      if (polished > Scalar(0) && accept(polished, F(polished))) {
        out.root = polished;
        return out;
      }
      if (accept(y, f)) {
        out.root = y;
        return out;
      }
    }
    Scalar next = y - step;
    if (!(isfinite(next) && next > lo && next < hi)) next = lo + (hi - lo) / Scalar(2);

    if (hi - lo <= Scalar(4) * eps * hi) {
      // Bracket collapsed to adjacent floating-point values.
      const Scalar f_l = F(lo);
      const Scalar f_h = F(hi);
      out.root = abs(f_l) < abs(f_h) ? lo : hi;
      return out;
    }
    y = next;
  }

  std::ostringstream os;
  os << "implicit step: no convergence after " << kMaxSolverIterations
     << " iterations, bracket [" << double(lo) << ", " << double(hi) << "]";
  throw SolverError(os.str(), double(lo), double(hi));
}

/// Unique positive root of the implicit relation.
template <typename Scalar>
Scalar solve(const ImplicitStepProblem<Scalar>& prob, SolverTolerances tol = {}) {
  return solve_detailed(prob, tol).root;
}

}  // namespace aitsahalia
