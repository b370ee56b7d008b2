#pragma once

// Event-driven evolution of the semi-discrete 1D TV flow on the plateau
// partition.  Between merge events the solution moves linearly along a fixed
// negative subgradient, so the whole trajectory is determined by the merge
// times and the per-segment subgradients computed here.  Scalar-generic so
// test oracles can run the same engine in exact rational arithmetic.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "tvflow/types.hpp"

namespace tvflow::detail {

template <class S>
struct scalar_traits {
  // Relative tolerance for merge-candidate ties and for the value-coincidence
  // sweep after an event.  Exact scalar types specialize this to zero.
  static S tie_rel() { return S(1e-12); }
};

template <class S>
struct ClusterSet {
  std::vector<int> begin;  // first pixel index of each cluster
  std::vector<int> size;
  std::vector<S> value;
  int count() const { return static_cast<int>(value.size()); }

  std::vector<S> to_pixels(const std::vector<S>& per_cluster, int m) const {
    std::vector<S> out(m, S(0));
    for (int k = 0; k < count(); ++k)
      for (int i = begin[k]; i < begin[k] + size[k]; ++i) out[i] = per_cluster[k];
    return out;
  }
};

// Maximal runs of adjacent values equal within tol.  The cluster value is the
// mean of its pixels, which conserves the signal mean and is exact at tol = 0.
template <class S>
ClusterSet<S> detect_clusters(const std::vector<S>& f, const S& tol) {
  ClusterSet<S> cs;
  const int m = static_cast<int>(f.size());
  if (m == 0) return cs;
  int run_begin = 0;
  S run_sum = f[0];
  for (int i = 1; i <= m; ++i) {
    const bool split =
        i == m || (f[i] > f[i - 1] ? f[i] - f[i - 1] > tol : f[i - 1] - f[i] > tol);
    if (split) {
      cs.begin.push_back(run_begin);
      cs.size.push_back(i - run_begin);
      cs.value.push_back(run_sum / S(i - run_begin));
      if (i < m) {
        run_begin = i;
        run_sum = f[i];
      }
    } else {
      run_sum = run_sum + f[i];
    }
  }
  return cs;
}

// Extremal coefficient a_k of each cluster from the signs of its edges:
// a_k = s_right - s_left with s = sign(value_left - value_right) across each
// internal edge and 0 at the domain ends.  Local maxima get a > 0, minima
// a < 0 (|a| = 1 at the boundary, 2 inside), monotone interior runs a = 0.
// Summing a over any contiguous block telescopes, which is exactly why the
// post-merge subgradient equals the size-weighted average of the old one.
template <class S>
std::vector<int> extremal_coeffs(const std::vector<S>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> s(n + 1, 0);
  for (int e = 1; e < n; ++e) s[e] = v[e - 1] > v[e] ? 1 : (v[e - 1] < v[e] ? -1 : 0);
  std::vector<int> a(n);
  for (int k = 0; k < n; ++k) a[k] = s[k + 1] - s[k];
  return a;
}

// Per-cluster negative subgradient -a_k / m_k; identically zero once a single
// cluster remains (steady state).
template <class S>
std::vector<S> cluster_subgradient(const ClusterSet<S>& cs) {
  const int n = cs.count();
  std::vector<S> p(n, S(0));
  if (n <= 1) return p;
  const auto a = extremal_coeffs(cs.value);
  for (int k = 0; k < n; ++k) p[k] = S(-a[k]) / S(cs.size[k]);
  return p;
}

template <class S>
struct EngineEvent {
  S time;            // merge instant T_i
  std::vector<S> p;  // pixel-level subgradient active on (T_{i-1}, T_i]
};

template <class S>
struct EngineResult {
  ClusterSet<S> initial_partition;
  std::vector<EngineEvent<S>> events;
  S steady_value = S(0);
};

template <class S>
EngineResult<S> evolve_clusters(const std::vector<S>& f, const S& tol) {
  EngineResult<S> out;
  ClusterSet<S> cs = detect_clusters(f, tol);
  out.initial_partition = cs;
  const int m = static_cast<int>(f.size());
  const S tie = scalar_traits<S>::tie_rel();

  // Value scale for the coincidence sweep (gaps that have numerically closed
  // count as merged in the same event).
  S scale(1);
  for (const S& x : f) {
    S ax = x < S(0) ? S(0) - x : x;
    if (ax > scale) scale = ax;
  }

  S t(0);
  std::vector<S> expected_p;  // size-weighted average predicted at the last merge
  while (cs.count() > 1) {
    const int n = cs.count();
    std::vector<S> p = cluster_subgradient(cs);

    // Cross-check: the averaging rule applied at the previous event must
    // reproduce the fresh extremal recomputation everywhere.
    if (!expected_p.empty()) {
      for (int k = 0; k < n; ++k) {
        S d = p[k] - expected_p[k];
        if (d < S(0)) d = S(0) - d;
        if (d > tie * S(4))
          throw NumericalError("tv flow: post-merge subgradient disagrees with recomputation");
      }
    }

    // Earliest gap closure: for each edge, the gap closes after
    // -(value gap)/(rate gap) if that is finite and positive.
    S best(0);
    bool found = false;
    std::vector<S> tau(n - 1, S(-1));
    std::vector<char> closing(n - 1, 0);
    for (int e = 0; e + 1 < n; ++e) {
      const S gap = cs.value[e + 1] - cs.value[e];
      const S rate = p[e + 1] - p[e];
      if (rate == S(0)) continue;
      const S cand = (S(0) - gap) / rate;
      if (cand > S(0)) {
        tau[e] = cand;
        closing[e] = 1;
        if (!found || cand < best) {
          best = cand;
          found = true;
        }
      }
    }
    if (!found) throw NumericalError("tv flow: no closing gap with multiple clusters");

    t = t + best;
    for (int k = 0; k < n; ++k) cs.value[k] = cs.value[k] + best * p[k];

    // All candidates within the tie tolerance of the minimum merge now.
    std::vector<char> merge_edge(n - 1, 0);
    for (int e = 0; e + 1 < n; ++e)
      if (closing[e] && tau[e] <= best + best * tie) merge_edge[e] = 1;
    // Coincidence sweep: gaps that are numerically closed after the advance
    // belong to the same event (covers transitive chains and exact ties).
    for (int e = 0; e + 1 < n; ++e) {
      if (merge_edge[e]) continue;
      S gap = cs.value[e + 1] - cs.value[e];
      if (gap < S(0)) gap = S(0) - gap;
      if (gap <= tie * scale) merge_edge[e] = 1;
    }

    EngineEvent<S> ev;
    ev.time = t;
    ev.p = cs.to_pixels(p, m);
    if (!out.events.empty() && !(out.events.back().time < t))
      throw NumericalError("tv flow: merge times failed to increase");
    out.events.push_back(std::move(ev));

    // Contract groups of clusters joined by merge edges; the new value is the
    // size-weighted mean (pixel mass is conserved) and the predicted new
    // subgradient is the size-weighted average of the old one.
    ClusterSet<S> next;
    expected_p.clear();
    int k = 0;
    while (k < n) {
      int k_end = k;
      while (k_end + 1 < n && merge_edge[k_end]) ++k_end;
      int sz = 0;
      S vsum(0), psum(0);
      for (int j = k; j <= k_end; ++j) {
        sz += cs.size[j];
        vsum = vsum + S(cs.size[j]) * cs.value[j];
        psum = psum + S(cs.size[j]) * p[j];
      }
      next.begin.push_back(cs.begin[k]);
      next.size.push_back(sz);
      next.value.push_back(vsum / S(sz));
      expected_p.push_back(psum / S(sz));
      k = k_end + 1;
    }
    if (next.count() == n)
      throw NumericalError("tv flow: merge event contracted no clusters");
    cs = std::move(next);
  }

  if (cs.count() == 1) out.steady_value = cs.value[0];
  return out;
}

}  // namespace tvflow::detail
