#pragma once

// Exact semi-discrete 1D TV flow with Neumann boundaries.  The solution is
// piecewise linear in time: evolve() returns the merge times T_1 < ... < T_L
// together with the negative subgradient active before each merge, and
// sample() evaluates the trajectory anywhere from that data.

#include <optional>
#include <vector>

#include "tvflow/types.hpp"

namespace tvflow::tv1d {

enum class ClusterKind { kMax, kMin, kMonotone };

struct Cluster {
  int begin = 0;  // first pixel index
  int size = 0;
  double value = 0.0;
  ClusterKind kind = ClusterKind::kMonotone;
};

struct PlateauPartition {
  std::vector<Cluster> clusters;
};

// Maximal runs of adjacent values equal within tol.  Equality is decided here,
// once; evolution never re-detects plateaus by value comparison.
PlateauPartition detect_plateaus(const Signal& f, double tol = 0.0);

// Minimal-norm negative TV subgradient: on an extremum cluster of m pixels the
// value is -a/m with a = +-1 at the domain boundary and +-2 inside (positive
// for maxima), zero on monotone interior runs.  Always has zero mean.
NegSubgradient subgradient(const Signal& f, double tol = 0.0);

// First time after t_now at which two clusters of psi meet when moving along
// p; std::nullopt when no gap is closing (steady state).
std::optional<double> next_merge_time(const Signal& psi, const NegSubgradient& p,
                                      double t_now = 0.0);

struct PiecewiseFlow {
  Signal initial;
  std::vector<double> times;               // T_1 < ... < T_L, extinction at T_L
  std::vector<NegSubgradient> subgradients;  // subgradients[i] active on [T_{i-1}, T_i)

  int events() const { return static_cast<int>(times.size()); }
  double extinction_time() const { return times.empty() ? 0.0 : times.back(); }
};

// Runs the flow to extinction.  Constant (or length-1) signals are already
// extinct and produce no events.
PiecewiseFlow evolve(const Signal& f, double tol = 0.0);

// Exact piecewise-linear evaluation; t >= T_L returns the steady state
// (the spatial mean of the initial signal).  Negative t is an error.
Signal sample(const PiecewiseFlow& flow, double t);

}  // namespace tvflow::tv1d
