#pragma once

#include <utility>
#include <vector>

#include "tvflow/types.hpp"

namespace tvflow::tv2d {

// Anisotropic splitting: px holds the 1D subgradient of every row, py of
// every column. The parallel version distributes rows/columns over OpenMP
// threads (capped by TVFLOW_THREADS) and is bitwise identical to the serial
// reference.
std::pair<Image, Image> aniso_subgradients(const Image& psi);
std::pair<Image, Image> aniso_subgradients_serial(const Image& psi);

// sum of absolute forward differences along rows and columns
double aniso_tv(const Image& psi);

struct StepStats {
  double t = 0;            // clock after the step
  double dt = 0;
  double energy = 0;       // aniso_tv after the step
  double slope_norm2 = 0;  // ||px + py||_F^2 before the step
  double identity_gap = 0; // relative defect of the norm-decrease identity
};

struct AnisoFlowOptions {
  double delta = 1.0;        // step aggressiveness, in (0, 2)
  double stop_ratio = 1e-6;  // stop once energy <= stop_ratio * initial energy
  int max_steps = 200000;
  double thinning = 1.05;    // geometric spacing of recorded snapshots (1 = keep every step)
};

// Adaptive-step evolution psi_{k+1} = psi_k + dt_k (px + py) with
// dt_k = delta * J_k / ||px + py||_F^2. On single-line inputs, where the
// flow coincides with the exact 1D one and merges are permanent, the step is
// shortened to land plateau collisions exactly instead of oscillating around
// them; in genuine 2D merges may re-split, so steps overshoot and relax.
// Each step is validated against the exact norm-decrease
// identity
//   ||psi_{k+1}||^2 = ||psi_k||^2 - dt_k (2 J_k - dt_k ||px + py||_F^2)
// and aborts with NumericalError if the defect exceeds 1e-10 of the norm.
// Snapshots are recorded on a geometrically thinned clock; the final state is
// always recorded. Step sizes shrink geometrically near extinction, so the
// flow stops on the energy ratio rather than on reaching extinction exactly.
struct AnisoFlow {
  std::vector<double> times;  // recorded snapshot clock, times.front() == 0
  std::vector<Image> states;
  std::vector<StepStats> steps;  // every step, not thinned
  double initial_energy = 0;
  double final_energy = 0;
  bool reached_stop = false;  // false when max_steps ran out first
};

AnisoFlow aniso_flow(const Image& f, const AnisoFlowOptions& opt = {});

// Spectral bands of the recorded trajectory: the content of [lo, hi) is the
// quadrature of t * d^2psi/dt^2 over the band, evaluated on the recorded
// snapshots (slope changes between consecutive records, weighted by time).
// residual collects everything not yet extinct when the flow stopped
// (endpoint terms of the integration by parts), so for any family of bands
// partitioning [0, end]:  mean + sum of bands + residual == initial state,
// up to roundoff. A component extinguishing at time T lands in its band with
// position accuracy (thinning - 1) * T, so record densely for sharp bands.
struct Bands2d {
  std::vector<Image> bands;
  Image residual;
  double mean = 0;
};

Bands2d spectral_bands_2d(const AnisoFlow& flow,
                          const std::vector<std::pair<double, double>>& bands);

}  // namespace tvflow::tv2d
