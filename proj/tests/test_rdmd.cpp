#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "tvflow/rdmd.hpp"
#include "tvflow/tv1d.hpp"

using namespace tvflow;
using testsupport::random_piecewise;
using testsupport::random_signal;

namespace {

Signal make(std::initializer_list<double> v) {
  Signal f(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) f[i++] = x;
  return f;
}

double cosine(const Signal& a, const Signal& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("reparametrize pinned: [0,2,1]") {
  const auto set = spectral::decompose(tv1d::evolve(make({0, 2, 1})));
  REQUIRE(set.size() == 2);
  CHECK(set.phis[0].squaredNorm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(set.phis[1].squaredNorm() == doctest::Approx(1.5).epsilon(1e-12));

  const auto rep = rdmd::reparametrize(set);
  REQUIRE(rep.segments() == 2);
  CHECK(rep.c[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(rep.a[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(rep.tau[0] == 0.0);
  CHECK(rep.tau[1] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(rep.c[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rep.a[1] == doctest::Approx(-2.0).epsilon(1e-12));

  // rescaled clock is consistent with the events
  CHECK(rep.t_of_tau(0.0) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK(rep.t_of_tau(rep.tau[1]) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rep.t_of_tau(40.0) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(rdmd::reparametrize(spectral::SpectralSet{}), std::invalid_argument);
}

TEST_CASE("rescaled flow equals the flow at the rescaled clock") {
  std::mt19937 rng(51);
  for (int rep_i = 0; rep_i < 20; ++rep_i) {
    const int len = 3 + static_cast<int>(rng() % 30);
    const Signal f = random_signal(rng, len, rep_i % 2 == 0 ? 8 : 0);
    const auto flow = tv1d::evolve(f);
    const auto set = spectral::decompose(flow);
    if (set.size() == 0) continue;
    const auto rp = rdmd::reparametrize(set);
    CAPTURE(rep_i);

    CHECK(testsupport::rel_err(rdmd::rescaled_flow_sample(set, rp, 0.0), f) <= 1e-10);
    const double tau_max = rp.tau.back() + 5.0;
    for (int j = 1; j <= 24; ++j) {
      const double tau = tau_max * j / 24.0;
      const Signal via_tau = rdmd::rescaled_flow_sample(set, rp, tau);
      const Signal via_t = tv1d::sample(flow, rp.t_of_tau(tau));
      CHECK((via_tau - via_t).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, f.norm()));
    }
  }
}

TEST_CASE("eigenfunction input decays in place") {
  // a box pulse is a single spectral component: psi(tau) = mean + e^-tau (f - mean)
  const Signal f = make({0, 0, 1, 1, 0, 0});
  const auto set = spectral::decompose(tv1d::evolve(f));
  const auto rp = rdmd::reparametrize(set);
  for (double tau : {0.0, 0.3, 1.0, 2.5}) {
    const Signal want =
        (std::exp(-tau) * (f.array() - set.mean) + set.mean).matrix();
    CHECK((rdmd::rescaled_flow_sample(set, rp, tau) - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("explicit Euler integration of the rescaled ODE stays on the trajectory") {
  const Signal f = make({0, 2, 1});
  const auto set = spectral::decompose(tv1d::evolve(f));
  const auto rp = rdmd::reparametrize(set);
  for (double tau_end : {0.5, 1.0, 2.0}) {
    const Signal got = rdmd::rescaled_flow_integrate(f, tau_end, 1e-4);
    const Signal want = rdmd::rescaled_flow_sample(set, rp, tau_end);
    CHECK(testsupport::rel_err(got, want) <= 1e-3);
  }
}

TEST_CASE("exact_dmd recovers a two-exponential system") {
  const int m = 12, n = 20;
  std::mt19937 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  Signal v1(m), v2(m);
  for (int i = 0; i < m; ++i) {
    v1[i] = g(rng);
    v2[i] = g(rng);
  }
  v1.normalize();
  v2 -= v1.dot(v2) * v1;
  v2.normalize();
  const double mu1 = 1.0, mu2 = 0.87;
  Image snaps(m, n);
  for (int j = 0; j < n; ++j)
    snaps.col(j) = 1.7 * std::pow(mu1, j) * v1 - 0.63 * std::pow(mu2, j) * v2;

  const auto dmd = rdmd::exact_dmd(snaps, 2);
  REQUIRE(dmd.rank == 2);
  CHECK_FALSE(dmd.rank_deficient);
  CHECK(std::abs(dmd.eigenvalues[0] - mu1) <= 1e-9);
  CHECK(std::abs(dmd.eigenvalues[1] - mu2) <= 1e-9);
  CHECK(dmd.recon_rel_error <= 1e-9);
  // modes align with the generating directions
  CHECK(std::abs(std::abs(dmd.modes.col(0).real().dot(v1)) - 1.0) <= 1e-8);
  CHECK(std::abs(std::abs(dmd.modes.col(1).real().dot(v2)) - 1.0) <= 1e-8);

  // constant-in-time snapshots: one mode at eigenvalue 1, flagged deficient
  Image flat(m, 5);
  for (int j = 0; j < 5; ++j) flat.col(j) = v1;
  const auto one = rdmd::exact_dmd(flat, 2);
  CHECK(one.rank == 1);
  CHECK(one.rank_deficient);
  CHECK(std::abs(one.eigenvalues[0] - 1.0) <= 1e-10);

  CHECK_THROWS_AS(rdmd::exact_dmd(Image::Zero(3, 1), 1), std::invalid_argument);
  CHECK_THROWS_AS(rdmd::exact_dmd(snaps, 0), std::invalid_argument);
}

TEST_CASE("rdmd pinned: [0,2,1]") {
  const auto segs = rdmd::rdmd(make({0, 2, 1}));
  REQUIRE(segs.size() == 2);

  // interior segment: constant + decaying pair
  REQUIRE(segs[0].eigenvalues.size() == 2);
  CHECK(std::abs(segs[0].eigenvalues[0] - 1.0) <= 1e-8);
  CHECK(std::abs(segs[0].eigenvalues[1] - std::exp(-segs[0].dt)) <= 1e-8);
  CHECK((segs[0].xi1 - make({-0.5, 0, 0.5})).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((segs[0].xi2 - make({-0.5, 1, -0.5})).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(segs[0].recon_rel_error <= 1e-9);

  // final segment: single decaying mode, constant part gone with the mean
  REQUIRE(segs[1].eigenvalues.size() == 1);
  CHECK(std::abs(segs[1].eigenvalues[0] - std::exp(-segs[1].dt)) <= 1e-8);
  CHECK(segs[1].xi1.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((segs[1].xi2 - make({-2, 1, 1})).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(segs[1].recon_rel_error <= 1e-9);

  // orthogonal split within each segment
  CHECK(std::abs(segs[0].xi1.dot(segs[0].xi2)) <= 1e-10);

  // psi(tau) = mean + xi1 + e^-tau xi2 reproduces the rescaled flow
  const auto set = spectral::decompose(tv1d::evolve(make({0, 2, 1})));
  const auto rp = rdmd::reparametrize(set);
  for (int k = 0; k < 2; ++k)
    for (double frac : {0.0, 0.37, 0.81}) {
      const double tau = segs[k].tau_lo + frac * (segs[k].tau_hi - segs[k].tau_lo);
      const Signal want = rdmd::rescaled_flow_sample(set, rp, tau);
      const Signal got =
          (segs[k].xi1 + std::exp(-tau) * segs[k].xi2).array() + set.mean;
      CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("recover_components pinned: [0,2,1]") {
  const auto set = spectral::decompose(tv1d::evolve(make({0, 2, 1})));
  const auto rp = rdmd::reparametrize(set);
  const auto segs = rdmd::rdmd(make({0, 2, 1}));
  const auto rec = rdmd::recover_components(segs, rp);
  REQUIRE(rec.size() == 2);
  CHECK(rec.lambdas[0] == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(rec.lambdas[1] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK((rec.phis[0] - make({0, 0.5, -0.5})).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((rec.phis[1] - make({-1, 0.5, 0.5})).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("rdmd properties on few-event random signals") {
  std::mt19937 rng(91);
  int done = 0;
  while (done < 12) {
    const Signal f = random_piecewise(rng, 16 + static_cast<int>(rng() % 17), 6);
    const auto flow = tv1d::evolve(f);
    const auto set = spectral::decompose(flow);
    if (set.size() < 2 || set.size() > 6) continue;
    ++done;
    CAPTURE(done);
    const auto rp = rdmd::reparametrize(set);
    const auto segs = rdmd::rdmd(f);
    REQUIRE(static_cast<int>(segs.size()) == set.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
      CHECK(segs[k].recon_rel_error <= 1e-6);
      const bool last = k + 1 == segs.size();
      if (!last) CHECK(std::abs(segs[k].eigenvalues[0] - 1.0) <= 1e-6);
      CHECK(std::abs(segs[k].eigenvalues[last ? 0 : 1] - std::exp(-segs[k].dt)) <= 1e-6);
      CHECK(std::abs(segs[k].xi1.dot(segs[k].xi2)) <=
            1e-8 * std::max(1.0, segs[k].xi1.norm() * segs[k].xi2.norm()));
    }
    const auto rec = rdmd::recover_components(segs, rp);
    for (int i = 0; i < set.size(); ++i) {
      CAPTURE(i);
      CHECK(cosine(rec.phis[i], set.phis[i]) >= 0.999);
      CHECK(std::abs(rec.lambdas[i] - set.lambdas[i]) <=
            1e-6 * std::abs(set.lambdas[i]));
    }
  }
}

TEST_CASE("rdmd guards") {
  CHECK(rdmd::rdmd(make({3, 3, 3})).empty());
  // a dt reaching across a whole segment cannot give 3 samples there
  CHECK_THROWS_AS(rdmd::rdmd(make({0, 2, 1}), 100.0), NumericalError);
}
