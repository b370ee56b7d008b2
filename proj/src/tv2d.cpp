#include "tvflow/tv2d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tvflow/tv1d.hpp"

namespace tvflow::tv2d {

namespace {

void check_nonempty(const Image& psi, const char* who) {
  if (psi.size() == 0) throw std::invalid_argument(std::string(who) + ": empty image");
}

// Plateaus produced by earlier steps are only equal up to roundoff, so the
// per-line subgradients snap values within this relative tolerance back into
// one plateau. Without it the structure fractures at ulp scale and the step
// sizes chatter.
constexpr double kTieRel = 1e-12;

template <bool Parallel>
std::pair<Image, Image> subgradients_impl(const Image& psi) {
  check_nonempty(psi, "aniso_subgradients");
  const Eigen::Index rows = psi.rows(), cols = psi.cols();
  Image px(rows, cols), py(rows, cols);

#pragma omp parallel for schedule(static) num_threads(thread_cap()) if (Parallel)
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Signal line = psi.row(i).transpose();
    px.row(i) = tv1d::subgradient(line, kTieRel * line.cwiseAbs().maxCoeff()).transpose();
  }

#pragma omp parallel for schedule(static) num_threads(thread_cap()) if (Parallel)
  for (Eigen::Index j = 0; j < cols; ++j)
    py.col(j) = tv1d::subgradient(psi.col(j), kTieRel * psi.col(j).cwiseAbs().maxCoeff());

  return {std::move(px), std::move(py)};
}

}  // namespace

std::pair<Image, Image> aniso_subgradients(const Image& psi) {
  return subgradients_impl<true>(psi);
}

std::pair<Image, Image> aniso_subgradients_serial(const Image& psi) {
  return subgradients_impl<false>(psi);
}

double aniso_tv(const Image& psi) {
  check_nonempty(psi, "aniso_tv");
  double j = 0.0;
  for (Eigen::Index c = 0; c + 1 < psi.cols(); ++c)
    j += (psi.col(c + 1) - psi.col(c)).cwiseAbs().sum();
  for (Eigen::Index r = 0; r + 1 < psi.rows(); ++r)
    j += (psi.row(r + 1) - psi.row(r)).cwiseAbs().sum();
  return j;
}

AnisoFlow aniso_flow(const Image& f, const AnisoFlowOptions& opt) {
  check_nonempty(f, "aniso_flow");
  if (!(opt.delta > 0.0) || !(opt.delta < 2.0))
    throw std::invalid_argument("aniso_flow: delta must lie in (0, 2)");
  if (!(opt.stop_ratio >= 0.0) || opt.stop_ratio >= 1.0)
    throw std::invalid_argument("aniso_flow: stop_ratio must lie in [0, 1)");
  if (opt.max_steps < 1) throw std::invalid_argument("aniso_flow: max_steps must be >= 1");
  if (!(opt.thinning >= 1.0)) throw std::invalid_argument("aniso_flow: thinning must be >= 1");

  AnisoFlow flow;
  flow.initial_energy = aniso_tv(f);
  flow.times.push_back(0.0);
  flow.states.push_back(f);

  Image psi = f;
  double t = 0.0;
  double energy = flow.initial_energy;
  const double stop_energy = opt.stop_ratio * flow.initial_energy;
  flow.reached_stop = energy <= stop_energy;

  while (!flow.reached_stop && static_cast<int>(flow.steps.size()) < opt.max_steps) {
    const auto [px, py] = aniso_subgradients(psi);
    const Image slope = px + py;
    const double slope_norm2 = slope.squaredNorm();
    if (slope_norm2 == 0.0) {
      flow.reached_stop = true;  // nothing moves: flat in both directions
      break;
    }
    double dt = opt.delta * energy / slope_norm2;

    // On a single line the flow is the exact 1D one: plateau merges are
    // permanent, so the step is shortened to land the first equalization
    // exactly. Overshooting such a merge makes the edge sign chatter around
    // the merged state forever, which wrecks recorded trajectories. In
    // genuine 2D, merged pairs can legitimately re-split (anisotropic
    // plateaus are not permanent), so collisions are left to overshoot and
    // relax; locking them instead stalls the flow in a merge/re-split
    // cascade. Gaps inside the tie-detection uncertainty band are never
    // chased: doing so drives the step size into a Zeno orbit at roundoff.
    if (psi.rows() == 1 || psi.cols() == 1) {
      const double cap_floor = 1e3 * kTieRel * psi.cwiseAbs().maxCoeff();
      const auto cap = [&](double a, double b, double pa, double pb) {
        const double g = a - b;
        if (std::abs(g) <= cap_floor) return;
        const double dp = pa - pb;
        if (dp == 0.0) return;
        const double tau = -g / dp;
        if (tau > 0.0 && tau < dt) dt = tau;
      };
      for (Eigen::Index c = 0; c < psi.cols(); ++c)
        for (Eigen::Index r = 0; r + 1 < psi.rows(); ++r)
          cap(psi(r, c), psi(r + 1, c), slope(r, c), slope(r + 1, c));
      for (Eigen::Index r = 0; r < psi.rows(); ++r)
        for (Eigen::Index c = 0; c + 1 < psi.cols(); ++c)
          cap(psi(r, c), psi(r, c + 1), slope(r, c), slope(r, c + 1));
    }

    if (!(dt > 0.0) || t + dt == t)
      throw NumericalError("aniso_flow: step size underflow before the stop energy");

    const double norm2_before = psi.squaredNorm();
    const double predicted = norm2_before - dt * (2.0 * energy - dt * slope_norm2);
    psi += dt * slope;
    t += dt;

    const double scale = std::max(1.0, norm2_before);
    const double gap = std::abs(psi.squaredNorm() - predicted) / scale;
    if (gap > 1e-10)
      throw NumericalError("aniso_flow: norm-decrease identity violated");

    energy = aniso_tv(psi);
    flow.steps.push_back({t, dt, energy, slope_norm2, gap});
    flow.reached_stop = energy <= stop_energy;

    if (flow.reached_stop || t >= flow.times.back() * opt.thinning) {
      flow.times.push_back(t);
      flow.states.push_back(psi);
    }
  }

  if (flow.times.back() != t) {
    flow.times.push_back(t);
    flow.states.push_back(psi);
  }
  flow.final_energy = energy;
  return flow;
}

Bands2d spectral_bands_2d(const AnisoFlow& flow,
                          const std::vector<std::pair<double, double>>& bands) {
  if (flow.states.size() < 2 || flow.times.back() <= 0.0)
    throw std::invalid_argument("spectral_bands_2d: flow carries no motion to decompose");
  for (const auto& [lo, hi] : bands)
    if (!(lo >= 0.0) || !(hi > lo))
      throw std::invalid_argument("spectral_bands_2d: bands need 0 <= lo < hi");

  Bands2d out;
  out.mean = flow.states.front().mean();
  out.bands.assign(bands.size(),
                   Image::Zero(flow.states.front().rows(), flow.states.front().cols()));

  // t * (jump of the slope) at every interior record; Abel summation over a
  // partition of [0, end] telescopes this back to the initial state exactly
  const std::size_t n = flow.states.size();
  Image slope_before =
      (flow.states[1] - flow.states[0]) / (flow.times[1] - flow.times[0]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const Image slope_after =
        (flow.states[k + 1] - flow.states[k]) / (flow.times[k + 1] - flow.times[k]);
    const double tk = flow.times[k];
    Image jump;  // evaluated lazily, most records fall in no requested band
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (tk < bands[b].first || tk >= bands[b].second) continue;
      if (jump.size() == 0) jump = tk * (slope_after - slope_before);
      out.bands[b] += jump;
    }
    slope_before = slope_after;
  }

  // endpoint terms of the integration by parts: whatever had not decayed by
  // the end of the flow
  out.residual = flow.states.back() - flow.times.back() * slope_before;
  out.residual.array() -= out.mean;
  return out;
}

}  // namespace tvflow::tv2d
