#include "aitsahalia/scheme.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "aitsahalia/errors.hpp"

namespace aitsahalia {

const char* scheme_name(SchemeKind kind) { return kind == SchemeKind::BEM ? "BEM" : "EM"; }

double bem_step(const Params& p, const Jump& j, double h, double y_prev, double dW, int dN,
                SolverTolerances tol) {
  detail::require_positive(y_prev, "bem_step");
  const double rhs = y_prev + diffusion(p, y_prev) * dW + jump_phi(j, y_prev) * dN;
  return solve(ImplicitStepProblem<double>{h, p, rhs}, tol);
}

double em_step(const Params& p, const Jump& j, double h, double y_prev, double dW, int dN) {
  if (!std::isfinite(y_prev)) throw PreconditionError("em_step: y_prev must be finite");
  if (y_prev <= 0.0) return y_prev;
  return y_prev + h * drift(p, y_prev) + diffusion(p, y_prev) * dW + jump_phi(j, y_prev) * dN;
}

PathResult simulate_increments(const Params& p, const Jump& j, SchemeKind kind, double h,
                               std::span<const double> dW, std::span<const int> dN,
                               bool keep_trajectory) {
  if (dW.size() != dN.size()) throw PreconditionError("simulate: increment arrays differ in length");
  if (!(h > 0.0)) throw PreconditionError("simulate: h must be > 0");
  if (kind == SchemeKind::BEM && !(h * p.a1 < 1.0)) {
    throw PreconditionError("simulate: BEM requires h * a1 < 1");
  }

  PathResult out;
  if (keep_trajectory) {
    out.trajectory.emplace();
    out.trajectory->reserve(dW.size() + 1);
    out.trajectory->push_back(p.x0);
  }

  double y = p.x0;
  for (std::size_t n = 0; n < dW.size(); ++n) {
    if (!out.absorbed) {
      if (kind == SchemeKind::BEM) {
        try {
          y = bem_step(p, j, h, y, dW[n], dN[n]);
        } catch (const SolverError& e) {
          std::ostringstream os;
          os << "BEM path aborted at step " << (n + 1) << ": " << e.what();
          throw SimulationAbort(os.str());
        }
      } else {
        y = em_step(p, j, h, y, dW[n], dN[n]);
      }

      const int step = static_cast<int>(n + 1);
      if (!std::isfinite(y) || std::abs(y) > kDivergenceThreshold) {
        out.diverged = true;
        out.absorbed = true;
        out.positive = false;
      } else if (y <= 0.0) {
        // A non-positive implicit value would be a solver defect.
        if (kind == SchemeKind::BEM) {
          throw SimulationAbort("BEM produced a non-positive value at step " +
                                std::to_string(step));
        }
        out.positive = false;
        out.first_negative_step = step;
        out.absorbed = true;
      }
    }
    if (keep_trajectory) out.trajectory->push_back(y);
  }
  out.terminal = y;
  return out;
}

PathResult simulate_path(const Params& p, const Jump& j, SchemeKind kind, const NoiseGrid& g,
                         int level, bool keep_trajectory) {
  const CoarseIncrements inc = coarsen(g, level);
  const double h = step_size(g.T, level);
  return simulate_increments(p, j, kind, h, std::span<const double>(inc.dW.data(), inc.dW.size()),
                             std::span<const int>(inc.dN.data(), inc.dN.size()),
                             keep_trajectory);
}

}  // namespace aitsahalia
