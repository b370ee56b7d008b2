#include "tvflow/rdmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "tvflow/tv1d.hpp"

namespace tvflow::rdmd {

namespace {

// Sampling horizon of the final segment: stop once the decaying part has
// shrunk by this factor.
constexpr double kTailDecay = 1e-6;

Signal realify(const Eigen::VectorXcd& v, const char* who) {
  const double scale = v.cwiseAbs().maxCoeff() + 1e-300;
  if (v.imag().cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw NumericalError(std::string(who) + ": unexpected complex output");
  return v.real();
}

void fix_mode_sign(Eigen::Ref<Eigen::VectorXd> mode, double& coeff) {
  for (Eigen::Index i = 0; i < mode.size(); ++i) {
    if (mode[i] != 0.0) {
      if (mode[i] < 0.0) {
        mode = -mode;
        coeff = -coeff;
      }
      return;
    }
  }
}

}  // namespace

int Reparametrization::segment_of(double tau_query) const {
  const int L = segments();
  for (int k = L - 1; k >= 0; --k)
    if (tau_query >= tau[k]) return k;
  return 0;
}

double Reparametrization::t_of_tau(double tau_query) const {
  const int k = segment_of(tau_query);
  return a[k] * std::exp(-tau_query) - c[k];
}

Reparametrization reparametrize(const spectral::SpectralSet& set) {
  const int L = set.size();
  if (L == 0) throw std::invalid_argument("reparametrize: no components");
  Reparametrization rep;
  rep.a.resize(L);
  rep.c.resize(L);
  rep.tau.resize(L);
  rep.T.resize(L);

  std::vector<double> norm2(L);
  for (int i = 0; i < L; ++i) {
    norm2[i] = set.phis[i].squaredNorm();
    rep.T[i] = -1.0 / set.lambdas[i];
  }
  // c_k from suffix sums over the components still alive in segment k
  double num = 0.0, den = 0.0;
  for (int k = L - 1; k >= 0; --k) {
    num += set.lambdas[k] * norm2[k];
    den += set.lambdas[k] * set.lambdas[k] * norm2[k];
    rep.c[k] = num / den;
  }
  for (int k = 0; k < L; ++k) {
    const double t_start = k == 0 ? 0.0 : rep.T[k - 1];
    if (k == 0) {
      rep.tau[0] = 0.0;
    } else {
      // segment k-1 runs out of rescaled time when t reaches T_{k-1}
      const double t_prev_start = k >= 2 ? rep.T[k - 2] : 0.0;
      rep.tau[k] = rep.tau[k - 1] + std::log((t_prev_start + rep.c[k - 1]) /
                                             (rep.T[k - 1] + rep.c[k - 1]));
    }
    rep.a[k] = (t_start + rep.c[k]) * std::exp(rep.tau[k]);
    if (!(rep.a[k] < 0.0))
      throw NumericalError("reparametrize: segment scale failed to stay negative");
  }
  return rep;
}

Signal rescaled_flow_sample(const spectral::SpectralSet& set, const Reparametrization& rep,
                            double tau) {
  if (tau < 0.0) throw std::invalid_argument("rescaled_flow_sample: negative tau");
  const int L = set.size();
  if (L == 0 || rep.segments() != L)
    throw std::invalid_argument("rescaled_flow_sample: set and reparametrization disagree");
  const int k = rep.segment_of(tau);
  Signal sum_phi = Signal::Zero(set.length);
  Signal sum_lphi = Signal::Zero(set.length);
  for (int i = k; i < L; ++i) {
    sum_phi += set.phis[i];
    sum_lphi += set.lambdas[i] * set.phis[i];
  }
  const Signal xi1 = sum_phi - rep.c[k] * sum_lphi;
  const Signal xi2 = rep.a[k] * sum_lphi;
  return (xi1 + std::exp(-tau) * xi2).array() + set.mean;
}

Signal rescaled_flow_integrate(const Signal& f, double tau_end, double dtau,
                               double merge_tol) {
  if (dtau <= 0.0) throw std::invalid_argument("rescaled_flow_integrate: dtau must be > 0");
  if (tau_end < 0.0) throw std::invalid_argument("rescaled_flow_integrate: tau_end must be >= 0");
  Signal psi = f;

  const auto init = tv1d::detect_plateaus(f, merge_tol);
  std::vector<Eigen::Index> begin, size;
  begin.reserve(init.clusters.size());
  size.reserve(init.clusters.size());
  for (const auto& c : init.clusters) {
    begin.push_back(c.begin);
    size.push_back(c.size);
  }

  Signal p(f.size());
  for (double tau = 0.0; tau < tau_end;) {
    const std::size_t K = begin.size();
    if (K <= 1) break;  // constant: nothing left to move

    std::vector<double> val(K);
    for (std::size_t k = 0; k < K; ++k) val[k] = psi.segment(begin[k], size[k]).mean();
    std::vector<int> s(K + 1, 0);
    for (std::size_t e = 1; e < K; ++e)
      s[e] = val[e - 1] > val[e] ? 1 : (val[e - 1] < val[e] ? -1 : 0);
    for (std::size_t k = 0; k < K; ++k)
      p.segment(begin[k], size[k])
          .setConstant(static_cast<double>(s[k] - s[k + 1]) / static_cast<double>(size[k]));

    const double pn2 = p.squaredNorm();
    if (pn2 == 0.0) break;
    const double h = std::min(dtau, tau_end - tau);
    psi -= h * (p.dot(psi) / pn2) * p;
    tau += h;

    // coalesce plateaus whose gap closed, crossed, or came within merge_tol;
    // each cluster carries the pre-step sign of its left edge so that chained
    // crossings within one step are still recognised on repeat sweeps
    std::vector<int> lsign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(K));
    bool changed = true;
    while (changed && begin.size() > 1) {
      changed = false;
      std::vector<Eigen::Index> nb{begin[0]}, ns{size[0]};
      std::vector<int> nl{lsign[0]};
      double prev = psi.segment(begin[0], size[0]).mean();
      for (std::size_t k = 1; k < begin.size(); ++k) {
        const double cur = psi.segment(begin[k], size[k]).mean();
        const double g = prev - cur;
        const bool crossed =
            g == 0.0 || (lsign[k] != 0 && (g > 0.0) != (lsign[k] > 0)) || std::abs(g) <= merge_tol;
        if (crossed) {
          ns.back() += size[k];
          changed = true;
        } else {
          nb.push_back(begin[k]);
          ns.push_back(size[k]);
          nl.push_back(lsign[k]);
        }
        prev = psi.segment(nb.back(), ns.back()).mean();
      }
      begin.swap(nb);
      size.swap(ns);
      lsign.swap(nl);
    }
  }
  return psi;
}

DmdResult exact_dmd(const Image& snapshots, int rank) {
  const Eigen::Index m = snapshots.rows(), n = snapshots.cols();
  if (n < 2) throw std::invalid_argument("exact_dmd: need at least 2 snapshots");
  if (rank < 1) throw std::invalid_argument("exact_dmd: rank must be >= 1");

  const Image x1 = snapshots.leftCols(n - 1);
  const Image x2 = snapshots.rightCols(n - 1);

  Eigen::JacobiSVD<Image> svd(x1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff =
      sv.size() > 0 ? sv[0] * std::max(m, n - 1) * std::numeric_limits<double>::epsilon() : 0.0;
  int r = 0;
  while (r < sv.size() && sv[r] > cutoff && sv[r] > 0.0) ++r;
  DmdResult out;
  out.rank_deficient = r < rank;
  r = std::min(r, rank);
  out.rank = r;
  if (r == 0) throw NumericalError("exact_dmd: snapshot matrix is numerically zero");

  const Image u = svd.matrixU().leftCols(r);
  const Image v = svd.matrixV().leftCols(r);
  const Eigen::VectorXd sig = sv.head(r);

  const Image atilde =
      u.transpose() * x2 * v * sig.asDiagonal().inverse();
  Eigen::EigenSolver<Image> eig(atilde);
  if (eig.info() != Eigen::Success) throw NumericalError("exact_dmd: eigensolver failed");

  Eigen::VectorXcd mu = eig.eigenvalues();
  Eigen::MatrixXcd modes =
      (x2 * v * sig.asDiagonal().inverse()).cast<std::complex<double>>() * eig.eigenvectors();

  // order by |mu| descending (ties: real part) and normalize columns
  std::vector<int> order(r);
  for (int i = 0; i < r; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const double ai = std::abs(mu[i]), aj = std::abs(mu[j]);
    return ai != aj ? ai > aj : mu[i].real() > mu[j].real();
  });
  Eigen::VectorXcd mu_s(r);
  Eigen::MatrixXcd modes_s(m, r);
  for (int i = 0; i < r; ++i) {
    mu_s[i] = mu[order[i]];
    const double nn = modes.col(order[i]).norm();
    if (nn == 0.0) throw NumericalError("exact_dmd: degenerate mode");
    modes_s.col(i) = modes.col(order[i]) / nn;
  }
  out.eigenvalues = mu_s;
  out.modes = modes_s;
  out.amplitudes = modes_s.colPivHouseholderQr().solve(
      snapshots.col(0).cast<std::complex<double>>());

  // reconstruction residual over all snapshots
  Eigen::MatrixXcd recon(m, n);
  Eigen::VectorXcd coef = out.amplitudes;
  for (Eigen::Index j = 0; j < n; ++j) {
    recon.col(j) = modes_s * coef;
    coef = coef.cwiseProduct(mu_s);
  }
  const double denom = snapshots.norm();
  out.recon_rel_error =
      denom > 0.0 ? (recon.real() - snapshots).norm() / denom : (recon.real() - snapshots).norm();
  return out;
}

std::vector<SegmentModes> rdmd(const Signal& f, double dt, double tol) {
  const auto flow = tv1d::evolve(f, tol);
  const auto set = spectral::decompose(flow);
  const int L = set.size();
  std::vector<SegmentModes> out;
  if (L == 0) return out;
  const auto rep = reparametrize(set);

  for (int k = 0; k < L; ++k) {
    const bool last = k == L - 1;
    const double span = last ? -std::log(kTailDecay) : rep.tau[k + 1] - rep.tau[k];
    const double dt_k = dt > 0.0 ? dt : span / 64.0;
    const int n = static_cast<int>(span / dt_k * (1.0 - 1e-12)) + 1;
    if (n < 3)
      throw NumericalError("rdmd: segment " + std::to_string(k) + " has only " +
                           std::to_string(n) + " samples; need dt < " + std::to_string(span / 2));

    Image snaps(f.size(), n);
    for (int j = 0; j < n; ++j)
      snaps.col(j) =
          rescaled_flow_sample(set, rep, rep.tau[k] + j * dt_k).array() - set.mean;

    const auto dmd = exact_dmd(snaps, last ? 1 : 2);
    if (dmd.rank < (last ? 1 : 2))
      throw NumericalError("rdmd: segment " + std::to_string(k) + " lost rank");

    SegmentModes seg;
    seg.tau_lo = rep.tau[k];
    seg.tau_hi = rep.tau[k] + span;
    seg.dt = dt_k;
    seg.recon_rel_error = dmd.recon_rel_error;
    seg.eigenvalues = realify(dmd.eigenvalues, "rdmd");
    const Eigen::VectorXd amps = realify(dmd.amplitudes, "rdmd");
    Eigen::MatrixXd modes(f.size(), dmd.rank);
    for (int i = 0; i < dmd.rank; ++i)
      modes.col(i) = realify(dmd.modes.col(i), "rdmd");

    // amplitudes are referenced to the first snapshot; scale the decaying
    // mode back to tau = 0 so xi2 matches the analytic normalization
    const int i2 = last ? 0 : 1;
    seg.xi2 = std::exp(rep.tau[k]) * amps[i2] * modes.col(i2);
    seg.xi1 = last ? Signal(Signal::Zero(f.size())) : Signal(amps[0] * modes.col(0));

    seg.coefficients.resize(dmd.rank);
    if (!last) {
      double c1 = amps[0];
      fix_mode_sign(modes.col(0), c1);
      seg.coefficients[0] = seg.xi1.norm();
    }
    double c2 = amps[i2];
    fix_mode_sign(modes.col(i2), c2);
    seg.coefficients[i2] = seg.xi2.norm();
    seg.modes = modes;
    out.push_back(std::move(seg));
  }
  return out;
}

spectral::SpectralSet recover_components(const std::vector<SegmentModes>& segments,
                                         const Reparametrization& rep) {
  const int L = static_cast<int>(segments.size());
  if (L == 0 || rep.segments() != L)
    throw std::invalid_argument("recover_components: segments and reparametrization disagree");
  spectral::SpectralSet set;
  set.length = static_cast<int>(segments[0].xi2.size());
  set.mean = 0.0;  // the mean is not carried by the segment modes
  set.lambdas.resize(L);
  set.phis.resize(L);
  for (int k = 0; k < L; ++k) {
    const double lambda = -1.0 / rep.T[k];
    Signal g = segments[k].xi2;
    if (k + 1 < L) {
      const Signal& next = segments[k + 1].xi2;
      const double nn = next.squaredNorm();
      if (nn == 0.0) throw NumericalError("recover_components: vanishing decaying mode");
      g -= (g.dot(next) / nn) * next;
    }
    set.lambdas[k] = lambda;
    set.phis[k] = g / (rep.a[k] * lambda);
  }
  return set;
}

}  // namespace tvflow::rdmd
