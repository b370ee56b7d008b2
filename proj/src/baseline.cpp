#include <tvflow/baseline.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvflow::baseline {
namespace {

double tv_1d(const Signal& f) {
  const auto n = f.size();
  if (n < 2) return 0.0;
  return (f.tail(n - 1) - f.head(n - 1)).cwiseAbs().sum();
}

double tv_2d(const Image& f) {
  double j = 0.0;
  if (f.rows() > 1) j += (f.bottomRows(f.rows() - 1) - f.topRows(f.rows() - 1)).cwiseAbs().sum();
  if (f.cols() > 1) j += (f.rightCols(f.cols() - 1) - f.leftCols(f.cols() - 1)).cwiseAbs().sum();
  return j;
}

void check_prox_options(const ProxOptions& opt) {
  if (!(opt.tol > 0.0) || opt.max_iters < 1)
    throw std::invalid_argument("prox: tol must be positive and max_iters >= 1");
}

// u = f - w D^T z for the forward-difference operator with Neumann ends
void primal_1d(const Signal& f, double w, const Signal& z, Signal& u) {
  const auto n = f.size();
  u = f;
  u.head(n - 1) += w * z;
  u.tail(n - 1) -= w * z;
}

void primal_2d(const Image& f, double w, const Image& zx, const Image& zy, Image& u) {
  const auto m = f.rows(), n = f.cols();
  u = f;
  if (n > 1) {
    u.leftCols(n - 1) += w * zx;
    u.rightCols(n - 1) -= w * zx;
  }
  if (m > 1) {
    u.topRows(m - 1) += w * zy;
    u.bottomRows(m - 1) -= w * zy;
  }
}

// Shared by the prox entry points and the warm-started implicit stepper.
// z carries the incoming dual iterate and the converged one on return;
// returns the number of sweeps.
long prox_loop(const Signal& f, double w, const ProxOptions& opt, Signal& z, Signal& u) {
  const auto n = f.size();
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  primal_1d(f, w, z, u);
  Signal next(n);
  for (long k = 1; k <= opt.max_iters; ++k) {
    z += (u.tail(n - 1) - u.head(n - 1)) / (4.0 * w);
    z = z.cwiseMax(-1.0).cwiseMin(1.0);
    primal_1d(f, w, z, next);
    const double moved = (next - u).cwiseAbs().maxCoeff();
    u.swap(next);
    if (moved <= opt.tol * scale) return k;
  }
  throw NumericalError("tv_prox: dual projection did not converge");
}

long prox_loop(const Image& f, double w, const ProxOptions& opt, Image& zx, Image& zy, Image& u) {
  const auto m = f.rows(), n = f.cols();
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  primal_2d(f, w, zx, zy, u);
  Image next(m, n);
  for (long k = 1; k <= opt.max_iters; ++k) {
    if (n > 1) {
      zx += (u.rightCols(n - 1) - u.leftCols(n - 1)) / (8.0 * w);
      zx = zx.cwiseMax(-1.0).cwiseMin(1.0);
    }
    if (m > 1) {
      zy += (u.bottomRows(m - 1) - u.topRows(m - 1)) / (8.0 * w);
      zy = zy.cwiseMax(-1.0).cwiseMin(1.0);
    }
    primal_2d(f, w, zx, zy, next);
    const double moved = (next - u).cwiseAbs().maxCoeff();
    u.swap(next);
    if (moved <= opt.tol * scale) return k;
  }
  throw NumericalError("aniso_prox: dual projection did not converge");
}

void check_weight(double weight) {
  if (!std::isfinite(weight) || weight < 0.0)
    throw std::invalid_argument("prox: weight must be finite and non-negative");
}

void check_implicit_options(const ImplicitOptions& opt) {
  check_prox_options(opt.prox);
  if (!(opt.dt > 0.0) || !std::isfinite(opt.dt))
    throw std::invalid_argument("implicit_flow: dt must be positive");
  if (opt.t_end < 0.0 || !std::isfinite(opt.t_end))
    throw std::invalid_argument("implicit_flow: t_end must be finite and non-negative");
  if (!(opt.stop_ratio >= 0.0 && opt.stop_ratio < 1.0))
    throw std::invalid_argument("implicit_flow: stop_ratio must lie in [0, 1)");
  if (opt.max_steps < 1) throw std::invalid_argument("implicit_flow: max_steps must be >= 1");
}

}  // namespace

Signal tv_prox(const Signal& f, double weight, const ProxOptions& opt) {
  if (f.size() == 0) throw std::invalid_argument("tv_prox: empty signal");
  check_weight(weight);
  check_prox_options(opt);
  if (f.size() < 2 || weight == 0.0) return f;
  Signal z = Signal::Zero(f.size() - 1), u;
  prox_loop(f, weight, opt, z, u);
  return u;
}

Image aniso_prox(const Image& f, double weight, const ProxOptions& opt) {
  if (f.size() == 0) throw std::invalid_argument("aniso_prox: empty image");
  check_weight(weight);
  check_prox_options(opt);
  if (f.size() < 2 || weight == 0.0) return f;
  Image zx = Image::Zero(f.rows(), std::max<Eigen::Index>(f.cols() - 1, 0));
  Image zy = Image::Zero(std::max<Eigen::Index>(f.rows() - 1, 0), f.cols());
  Image u;
  prox_loop(f, weight, opt, zx, zy, u);
  return u;
}

ImplicitSummary implicit_flow(const Signal& f, const ImplicitOptions& opt,
                              const std::function<void(double, const Signal&)>& observe) {
  if (f.size() == 0) throw std::invalid_argument("implicit_flow: empty signal");
  check_implicit_options(opt);
  ImplicitSummary out;
  const double j0 = tv_1d(f);
  out.final_energy = j0;
  if (j0 == 0.0) return out;

  Signal psi = f, z = Signal::Zero(f.size() - 1), u;
  while (out.steps < opt.max_steps) {
    double dt = opt.dt;
    if (opt.t_end > 0.0) dt = std::min(dt, opt.t_end - out.t);
    if (!(dt > 0.0)) break;
    out.prox_iters += prox_loop(psi, dt, opt.prox, z, u);
    psi.swap(u);
    out.t += dt;
    ++out.steps;
    out.final_energy = tv_1d(psi);
    if (observe) observe(out.t, psi);
    if (out.final_energy <= opt.stop_ratio * j0) break;
    if (opt.t_end > 0.0 && out.t >= opt.t_end) break;
  }
  return out;
}

ImplicitSummary implicit_flow(const Image& f, const ImplicitOptions& opt,
                              const std::function<void(double, const Image&)>& observe) {
  if (f.size() == 0) throw std::invalid_argument("implicit_flow: empty image");
  check_implicit_options(opt);
  ImplicitSummary out;
  const double j0 = tv_2d(f);
  out.final_energy = j0;
  if (j0 == 0.0) return out;

  Image psi = f;
  Image zx = Image::Zero(f.rows(), std::max<Eigen::Index>(f.cols() - 1, 0));
  Image zy = Image::Zero(std::max<Eigen::Index>(f.rows() - 1, 0), f.cols());
  Image u;
  while (out.steps < opt.max_steps) {
    double dt = opt.dt;
    if (opt.t_end > 0.0) dt = std::min(dt, opt.t_end - out.t);
    if (!(dt > 0.0)) break;
    out.prox_iters += prox_loop(psi, dt, opt.prox, zx, zy, u);
    psi.swap(u);
    out.t += dt;
    ++out.steps;
    out.final_energy = tv_2d(psi);
    if (observe) observe(out.t, psi);
    if (out.final_energy <= opt.stop_ratio * j0) break;
    if (opt.t_end > 0.0 && out.t >= opt.t_end) break;
  }
  return out;
}

}  // namespace tvflow::baseline
