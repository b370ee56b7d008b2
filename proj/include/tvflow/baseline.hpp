#pragma once

#include <tvflow/types.hpp>

#include <functional>

namespace tvflow::baseline {

// Iterative reference solvers.  Everything here is deliberately naive: dense
// backward-Euler time stepping with an inner dual projection computing the
// proximal map.  The event-driven engines are validated against these, and
// the benchmark measures how much slower they are.

struct ProxOptions {
  // A sweep that moves the primal iterate by less than tol * max(1, |f|_inf)
  // ends the iteration.
  double tol = 1e-12;
  long max_iters = 500000;
};

// argmin_u 1/2 ||u - f||^2 + weight * TV(u), Neumann boundaries.  Projected
// gradient on the dual box constraint, step 1/4 (1D) resp. 1/8 (2D).
// Throws NumericalError if max_iters sweeps do not reach tol.
Signal tv_prox(const Signal& f, double weight, const ProxOptions& opt = {});
Image aniso_prox(const Image& f, double weight, const ProxOptions& opt = {});

struct ImplicitOptions {
  double dt = 1e-3;
  double t_end = 0;          // > 0: stop at t_end (last step shortened to land on it)
  double stop_ratio = 1e-8;  // stop once TV <= stop_ratio * initial TV
  long max_steps = 10000000;
  ProxOptions prox;
};

struct ImplicitSummary {
  double t = 0;  // time reached
  long steps = 0;
  long prox_iters = 0;  // inner sweeps across all steps
  double final_energy = 0;
};

// Backward Euler psi_{k+1} = prox_{dt TV}(psi_k) with the dual variable
// warm-started across steps.  observe(t, state), when given, runs after every
// accepted step; no trajectory is stored.
ImplicitSummary implicit_flow(const Signal& f, const ImplicitOptions& opt = {},
                              const std::function<void(double, const Signal&)>& observe = {});
ImplicitSummary implicit_flow(const Image& f, const ImplicitOptions& opt = {},
                              const std::function<void(double, const Image&)>& observe = {});

}  // namespace tvflow::baseline
