#include "tvflow/tv1d.hpp"

#include <cmath>
#include <limits>

#include "tvflow/detail/flow_engine.hpp"

namespace tvflow::tv1d {

namespace {

std::vector<double> to_std(const Signal& f) {
  return std::vector<double>(f.data(), f.data() + f.size());
}

Signal to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Signal>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void require_nonempty(const Signal& f, const char* who) {
  if (f.size() == 0) throw std::invalid_argument(std::string(who) + ": empty signal");
}

}  // namespace

PlateauPartition detect_plateaus(const Signal& f, double tol) {
  require_nonempty(f, "detect_plateaus");
  if (tol < 0.0) throw std::invalid_argument("detect_plateaus: negative tol");
  const auto cs = detail::detect_clusters(to_std(f), tol);
  const auto a = detail::extremal_coeffs(cs.value);
  PlateauPartition part;
  part.clusters.resize(cs.count());
  for (int k = 0; k < cs.count(); ++k) {
    Cluster& c = part.clusters[k];
    c.begin = cs.begin[k];
    c.size = cs.size[k];
    c.value = cs.value[k];
    c.kind = a[k] > 0 ? ClusterKind::kMax : a[k] < 0 ? ClusterKind::kMin : ClusterKind::kMonotone;
  }
  if (cs.count() == 1) part.clusters[0].kind = ClusterKind::kMax;  // convention
  return part;
}

NegSubgradient subgradient(const Signal& f, double tol) {
  require_nonempty(f, "subgradient");
  if (tol < 0.0) throw std::invalid_argument("subgradient: negative tol");
  const auto cs = detail::detect_clusters(to_std(f), tol);
  return to_eigen(cs.to_pixels(detail::cluster_subgradient(cs), static_cast<int>(f.size())));
}

std::optional<double> next_merge_time(const Signal& psi, const NegSubgradient& p,
                                      double t_now) {
  if (psi.size() != p.size()) throw std::invalid_argument("next_merge_time: size mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j + 1 < psi.size(); ++j) {
    const double dpsi = psi[j + 1] - psi[j];
    const double dp = p[j + 1] - p[j];
    if (dp == 0.0) continue;
    const double ratio = -dpsi / dp;
    if (ratio > 0.0 && std::isfinite(ratio) && ratio < best) best = ratio;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return t_now + best;
}

PiecewiseFlow evolve(const Signal& f, double tol) {
  require_nonempty(f, "evolve");
  if (tol < 0.0) throw std::invalid_argument("evolve: negative tol");
  const auto res = detail::evolve_clusters(to_std(f), tol);
  PiecewiseFlow flow;
  flow.initial = f;
  flow.times.reserve(res.events.size());
  flow.subgradients.reserve(res.events.size());
  for (const auto& ev : res.events) {
    flow.times.push_back(ev.time);
    flow.subgradients.push_back(to_eigen(ev.p));
  }
  return flow;
}

Signal sample(const PiecewiseFlow& flow, double t) {
  if (t < 0.0) throw std::invalid_argument("sample: negative time");
  if (t == 0.0 || flow.times.empty()) return flow.initial;
  Signal state = flow.initial;
  double t_seg = 0.0;
  for (std::size_t i = 0; i < flow.times.size(); ++i) {
    if (t < flow.times[i]) {
      state += (t - t_seg) * flow.subgradients[i];
      return state;
    }
    state += (flow.times[i] - t_seg) * flow.subgradients[i];
    t_seg = flow.times[i];
  }
  return state;  // at or past extinction: constant steady state
}

}  // namespace tvflow::tv1d
