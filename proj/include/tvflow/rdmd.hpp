#pragma once

// Time-rescaled TV flow and its dynamic-mode decomposition.  Substituting
// t(tau) = a_k e^{-tau} - c_k straightens each inter-event segment of the
// flow into a constant profile plus one exponentially decaying mode, so exact
// DMD of rank 2 (rank 1 on the final segment, whose constant part vanishes
// once the mean is removed) reproduces the rescaled dynamics and the TV
// spectral components can be recovered from the decaying modes alone.

#include <vector>

#include "tvflow/spectral.hpp"
#include "tvflow/types.hpp"

namespace tvflow::rdmd {

struct Reparametrization {
  std::vector<double> a;    // per segment: t(tau) = a_k e^{-tau} - c_k
  std::vector<double> c;
  std::vector<double> tau;  // tau[k] = rescaled start of segment k (tau[0] = 0)
  std::vector<double> T;    // merge time ending segment k; T.back() = extinction

  int segments() const { return static_cast<int>(a.size()); }
  int segment_of(double tau_query) const;
  double t_of_tau(double tau_query) const;
};

// Needs at least one component.  Segment k carries the components i >= k;
// c_k is chosen so that the constant and decaying parts are orthogonal.
Reparametrization reparametrize(const spectral::SpectralSet& set);

// Exact state of the rescaled flow at tau (mean included); equals
// tv1d::sample at t_of_tau(tau).
Signal rescaled_flow_sample(const spectral::SpectralSet& set, const Reparametrization& rep,
                            double tau);

// Explicit Euler integration of the rescaled-flow ODE
//   psi_tau = -(<p,psi>/||p||^2) p,  p = subgradient(psi).
// Tracks the plateau partition across steps (plateaus only ever merge), so a
// step overshooting a merge coalesces instead of chattering. merge_tol is the
// initial plateau-detection tolerance and the gap width treated as closed.
// Validation helper only: O(dtau) accurate, never used by the solvers.
Signal rescaled_flow_integrate(const Signal& f, double tau_end, double dtau,
                               double merge_tol = 1e-9);

struct DmdResult {
  Eigen::MatrixXcd modes;        // unit columns
  Eigen::VectorXcd eigenvalues;  // per-step multipliers, |mu| descending
  Eigen::VectorXcd amplitudes;   // least-squares fit of the first snapshot
  int rank = 0;
  bool rank_deficient = false;   // numerical rank fell below the request
  double recon_rel_error = 0.0;  // Frobenius, against the given snapshots
};

// Standard exact DMD of uniformly spaced snapshot columns, truncated to
// min(rank, numerical rank).
DmdResult exact_dmd(const Image& snapshots, int rank);

struct SegmentModes {
  double tau_lo = 0.0;
  double tau_hi = 0.0;  // sampling horizon; the final segment is truncated
  double dt = 0.0;      // rescaled sampling step
  Signal xi1, xi2;      // psi(tau) = mean + xi1 + e^{-tau} xi2 on the segment
  Eigen::VectorXd eigenvalues;   // {1, e^{-dt}} (interior), {e^{-dt}} (final)
  Eigen::VectorXd coefficients;  // norms of xi1, xi2
  Eigen::MatrixXd modes;         // unit columns, first nonzero entry positive
  double recon_rel_error = 0.0;
};

// Per-segment DMD of the rescaled flow of f.  dt <= 0 picks span/64 for each
// segment; an explicit dt must leave every segment at least 3 samples.
// Constant signals produce no segments.
std::vector<SegmentModes> rdmd(const Signal& f, double dt = 0.0, double tol = 0.0);

// Spectral components from the decaying modes: project out the next segment's
// decaying direction, then rescale by the known a_k lambda_k.  The returned
// set is zero-mean (the mean is not represented in the segment modes).
spectral::SpectralSet recover_components(const std::vector<SegmentModes>& segments,
                                         const Reparametrization& rep);

}  // namespace tvflow::rdmd
