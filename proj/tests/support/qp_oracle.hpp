#pragma once

// Independent oracle for the minimal-norm negative TV subgradient.  The
// subdifferential of 1D TV at f is parametrized by a dual vector z on the
// edges: z_j is pinned to sign(f_{j+1} - f_j) across jumps and free in [-1,1]
// across flat edges; the subgradient is the discrete divergence of z.  The
// flow's right-hand side is the element of minimal Euclidean norm, found here
// by projected gradient descent on the free coordinates.  Deliberately knows
// nothing about plateaus, extrema, or the event engine.

#include <cmath>
#include <vector>

#include "tvflow/types.hpp"

namespace testsupport {

inline tvflow::Signal qp_min_norm_subgradient(const tvflow::Signal& f,
                                              int iters = 400000) {
  const int m = static_cast<int>(f.size());
  if (m <= 1) return tvflow::Signal::Zero(m);
  const int ne = m - 1;
  std::vector<double> z(ne, 0.0), lo(ne), hi(ne);
  for (int j = 0; j < ne; ++j) {
    const double d = f[j + 1] - f[j];
    if (d > 0.0) {
      lo[j] = hi[j] = 1.0;
    } else if (d < 0.0) {
      lo[j] = hi[j] = -1.0;
    } else {
      lo[j] = -1.0;
      hi[j] = 1.0;
    }
    z[j] = (lo[j] + hi[j]) / 2.0;
  }

  // p_i = z_i - z_{i-1} (z = 0 outside the edge range); objective 0.5*||p||^2,
  // gradient w.r.t. z_j is p_j - p_{j+1}, Lipschitz constant <= 4.
  std::vector<double> p(m);
  const double step = 0.25;
  for (int it = 0; it < iters; ++it) {
    p[0] = z[0];
    for (int i = 1; i < ne; ++i) p[i] = z[i] - z[i - 1];
    p[m - 1] = -z[ne - 1];
    double shift = 0.0;
    for (int j = 0; j < ne; ++j) {
      const double g = p[j] - p[j + 1];
      double zj = z[j] - step * g;
      zj = std::min(hi[j], std::max(lo[j], zj));
      shift = std::max(shift, std::abs(zj - z[j]));
      z[j] = zj;
    }
    if (shift < 1e-15) break;
  }

  tvflow::Signal out(m);
  out[0] = z[0];
  for (int i = 1; i < ne; ++i) out[i] = z[i] - z[i - 1];
  out[m - 1] = -z[ne - 1];
  return out;
}

}  // namespace testsupport
