#pragma once

#include <vector>

#include "tvflow/types.hpp"

namespace tvflow::kmd {

// Dictionary of decay profiles d_lambda(t) = max(0, 1 + lambda t), one row per
// rate, sampled on a shared clock. The constant profile (lambda = 0) is always
// included; it carries the stationary part of a trajectory.
struct ProfileDictionary {
  std::vector<double> lambdas;  // ascending; last entry is 0
  std::vector<double> times;
  Image rows;  // lambdas.size() x times.size()

  // lambdas: candidate rates, all <= 0 (0 is added if missing, exact
  // duplicates are dropped). times: strictly increasing, nonnegative.
  static ProfileDictionary build(std::vector<double> lambdas, std::vector<double> times);
};

struct FitOptions {
  int sparsity = 8;         // greedy selection budget
  double threshold = 1e-6;  // drop modes with norm below threshold * ||snapshots||_F
};

// Sparse fit of snapshot columns psi(t_j) by sum_k v_k d_{lambda_k}(t_j).
// Greedy: pick the profile soaking up the most residual energy, then refit all
// selected modes jointly by least squares. Selection stops at the budget, at an
// exact fit, or when adding a profile makes the active set numerically rank
// deficient (degenerate flag; the offending profile is not kept). Modes below
// the norm threshold are pruned afterwards and the survivors refit, so the
// reported residual is the honest one.
struct FitResult {
  std::vector<double> lambdas;  // kept modes, in selection order
  std::vector<Signal> modes;
  double residual = 1.0;                 // ||snapshots - fit||_F / ||snapshots||_F
  std::vector<double> residual_history;  // after each greedy refit, before pruning
  bool degenerate = false;
};

FitResult fit(const Image& snapshots, const ProfileDictionary& dict, const FitOptions& opt = {});

// Koopman eigenfunction value g(psi) = e^{t(psi)} per fitted mode, where t is
// read off the mode's least-squares coefficient rho = 1 + lambda t in psi.
// Along the flow each alive mode reports the same t and g evolves as e^t.
enum class KefStatus {
  kOk,
  kStationary,  // lambda = 0: no clock attached to the constant profile
  kOutOfRange,  // rho outside (0, 1]: mode extinct in psi, or psi off-trajectory
};

struct KefValue {
  double lambda = 0.0;
  double coeff = 0.0;  // least-squares coefficient of the mode in psi
  double time = 0.0;   // (coeff - 1) / lambda, valid when status == kOk
  double kef = 0.0;    // e^time, valid when status == kOk
  KefStatus status = KefStatus::kOutOfRange;
};

std::vector<KefValue> koopman_eigenfunction(const FitResult& fit, const Signal& psi);

}  // namespace tvflow::kmd
