#include "tvflow/kmd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvflow::kmd {

namespace {

constexpr double kCondLimit = 1e10;
constexpr double kCoeffFloor = 1e-12;
constexpr double kCoeffCeil = 1.0 + 1e-9;

// least-squares refit of the selected profiles; fails when the active rows are
// numerically rank deficient
bool refit(const Image& snapshots, const ProfileDictionary& dict, const std::vector<int>& active,
           Image& coeffs, Image& residual) {
  const Eigen::Index n = snapshots.cols();
  if (static_cast<Eigen::Index>(active.size()) > n) return false;  // columns must be independent
  Image basis(n, static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k)
    basis.col(static_cast<Eigen::Index>(k)) = dict.rows.row(active[k]).transpose();
  Eigen::JacobiSVD<Image> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  if (!(smin > 0.0) || sv[0] / smin > kCondLimit) return false;
  coeffs = svd.solve(snapshots.transpose()).transpose();
  residual = snapshots - coeffs * basis.transpose();
  return true;
}

}  // namespace

ProfileDictionary ProfileDictionary::build(std::vector<double> lambdas,
                                           std::vector<double> times) {
  if (lambdas.empty()) throw std::invalid_argument("ProfileDictionary: no rates given");
  if (times.empty()) throw std::invalid_argument("ProfileDictionary: no sample times given");
  for (double l : lambdas)
    if (!(l <= 0.0)) throw std::invalid_argument("ProfileDictionary: rates must be <= 0");
  for (std::size_t j = 0; j < times.size(); ++j)
    if (!(times[j] >= 0.0) || (j > 0 && !(times[j] > times[j - 1])))
      throw std::invalid_argument(
          "ProfileDictionary: times must be nonnegative and strictly increasing");

  lambdas.push_back(0.0);
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  ProfileDictionary dict;
  dict.lambdas = std::move(lambdas);
  dict.times = std::move(times);
  dict.rows.resize(static_cast<Eigen::Index>(dict.lambdas.size()),
                   static_cast<Eigen::Index>(dict.times.size()));
  for (Eigen::Index i = 0; i < dict.rows.rows(); ++i)
    for (Eigen::Index j = 0; j < dict.rows.cols(); ++j)
      dict.rows(i, j) = std::max(0.0, 1.0 + dict.lambdas[static_cast<std::size_t>(i)] *
                                                dict.times[static_cast<std::size_t>(j)]);
  return dict;
}

FitResult fit(const Image& snapshots, const ProfileDictionary& dict, const FitOptions& opt) {
  if (snapshots.size() == 0) throw std::invalid_argument("fit: empty snapshots");
  if (snapshots.cols() != static_cast<Eigen::Index>(dict.times.size()))
    throw std::invalid_argument("fit: snapshot columns must match the dictionary clock");
  if (opt.sparsity < 1) throw std::invalid_argument("fit: sparsity must be >= 1");
  if (!(opt.threshold >= 0.0)) throw std::invalid_argument("fit: threshold must be >= 0");

  FitResult out;
  const double scale = snapshots.norm();
  if (scale == 0.0) {
    out.residual = 0.0;
    return out;
  }

  const Eigen::Index nrows = dict.rows.rows();
  std::vector<char> used(static_cast<std::size_t>(nrows), 0);
  std::vector<int> active;
  Image coeffs, residual = snapshots;

  while (static_cast<int>(active.size()) < opt.sparsity) {
    int best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < nrows; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double dn2 = dict.rows.row(j).squaredNorm();
      if (dn2 == 0.0) continue;  // profile extinct on the whole clock
      const double score = (residual * dict.rows.row(j).transpose()).squaredNorm() / dn2;
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;

    active.push_back(best);
    if (!refit(snapshots, dict, active, coeffs, residual)) {
      active.pop_back();
      out.degenerate = true;
      break;
    }
    used[static_cast<std::size_t>(best)] = 1;
    out.residual_history.push_back(residual.norm() / scale);
    if (out.residual_history.back() <= 1e-14) break;
  }

  // prune negligible modes, then refit the survivors for an honest residual
  if (!active.empty()) {
    std::vector<int> kept;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (coeffs.col(static_cast<Eigen::Index>(k)).norm() >= opt.threshold * scale)
        kept.push_back(active[k]);
    if (kept.size() != active.size()) {
      active = std::move(kept);
      if (!active.empty() && !refit(snapshots, dict, active, coeffs, residual)) {
        // survivors of a well-conditioned set should stay well conditioned
        throw NumericalError("fit: pruned profile set became rank deficient");
      }
    }
  }

  if (active.empty()) {
    out.residual = 1.0;
    return out;
  }
  out.residual = residual.norm() / scale;
  out.lambdas.reserve(active.size());
  out.modes.reserve(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    out.lambdas.push_back(dict.lambdas[static_cast<std::size_t>(active[k])]);
    out.modes.push_back(coeffs.col(static_cast<Eigen::Index>(k)));
  }
  return out;
}

std::vector<KefValue> koopman_eigenfunction(const FitResult& fit, const Signal& psi) {
  if (fit.modes.empty()) return {};
  const Eigen::Index m = fit.modes.front().size();
  if (psi.size() != m)
    throw std::invalid_argument("koopman_eigenfunction: state size does not match the modes");

  Image basis(m, static_cast<Eigen::Index>(fit.modes.size()));
  for (std::size_t k = 0; k < fit.modes.size(); ++k)
    basis.col(static_cast<Eigen::Index>(k)) = fit.modes[k];
  const Signal rho = basis.colPivHouseholderQr().solve(psi);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<KefValue> values(fit.modes.size());
  for (std::size_t k = 0; k < fit.modes.size(); ++k) {
    KefValue& v = values[k];
    v.lambda = fit.lambdas[k];
    v.coeff = rho[static_cast<Eigen::Index>(k)];
    if (v.lambda == 0.0) {
      v.status = KefStatus::kStationary;
      v.time = nan;
      v.kef = nan;
    } else if (v.coeff > kCoeffFloor && v.coeff <= kCoeffCeil) {
      v.status = KefStatus::kOk;
      v.time = std::max(0.0, (v.coeff - 1.0) / v.lambda);
      v.kef = std::exp(v.time);
    } else {
      v.status = KefStatus::kOutOfRange;
      v.time = nan;
      v.kef = nan;
    }
  }
  return values;
}

}  // namespace tvflow::kmd
