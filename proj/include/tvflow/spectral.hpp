#pragma once

// TV spectral decomposition of a 1D signal from its piecewise-linear flow:
// each merge event T_i contributes one component phi_i = T_i (p_{i+1} - p_i)
// at eigenvalue lambda_i = -1/T_i.  The components have zero mean, are
// pairwise orthogonal, and together with the mean reconstruct the signal
// exactly.

#include <vector>

#include "tvflow/tv1d.hpp"
#include "tvflow/types.hpp"

namespace tvflow::spectral {

struct SpectralSet {
  int length = 0;  // pixels in the decomposed signal
  double mean = 0.0;
  std::vector<double> lambdas;  // increasing in time: lambda_i = -1/T_i
  std::vector<Signal> phis;

  int size() const { return static_cast<int>(lambdas.size()); }
};

SpectralSet decompose(const tv1d::PiecewiseFlow& flow);

// Atom of the TV spectrum: scalar mass |lambda_i| * ||phi_i|| placed at the
// component's extinction time t_i = -1/lambda_i.
struct SpectrumAtom {
  double t = 0.0;
  double mass = 0.0;
};

std::vector<SpectrumAtom> spectrum(const SpectralSet& set);

// Sum of the components whose extinction time falls in [t_lo, t_hi), plus the
// mean when include_mean is set.
Signal filter_band(const SpectralSet& set, double t_lo, double t_hi,
                   bool include_mean = false);

// mean + sum of all components; equals the decomposed signal.
Signal reconstruct(const SpectralSet& set);

}  // namespace tvflow::spectral
