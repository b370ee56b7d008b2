#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support/generators.hpp"
#include "tvflow/spectral.hpp"
#include "tvflow/tv1d.hpp"
#include "tvflow/tv2d.hpp"

using namespace tvflow;
using testsupport::random_image;
using testsupport::random_piecewise;

TEST_CASE("anisotropic subgradients and one adaptive step, by hand") {
  Image f(2, 2);
  f << 1, 0, 0, 0;

  const auto [px, py] = tv2d::aniso_subgradients(f);
  Image want_px(2, 2), want_py(2, 2);
  want_px << -1, 1, 0, 0;
  want_py << -1, 0, 1, 0;
  CHECK((px - want_px).cwiseAbs().maxCoeff() == 0.0);
  CHECK((py - want_py).cwiseAbs().maxCoeff() == 0.0);

  CHECK(tv2d::aniso_tv(f) == 2.0);
  const Image slope = px + py;
  CHECK(slope.squaredNorm() == 6.0);
  // effective eigenvalue 6/2 = 3, so delta = 1 gives dt = 1/3

  const auto flow = tv2d::aniso_flow(f);
  REQUIRE(!flow.steps.empty());
  CHECK(flow.initial_energy == 2.0);
  CHECK(flow.steps[0].dt == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(flow.steps[0].energy == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Image psi1(2, 2);
  psi1 << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0;
  REQUIRE(flow.times.size() >= 2);
  CHECK(flow.times[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK((flow.states[1] - psi1).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(flow.states[1].squaredNorm() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // second step: J = 2/3, slope norm 6 again, dt = 1/9
  CHECK(flow.steps[1].dt == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(flow.steps[1].t == doctest::Approx(4.0 / 9.0).epsilon(1e-12));

  CHECK(flow.reached_stop);
  CHECK(flow.final_energy <= 1e-6 * flow.initial_energy);
}

TEST_CASE("subgradient structure on random images") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const Image f = random_image(rng, 5 + static_cast<int>(rng() % 20),
                                 5 + static_cast<int>(rng() % 20), rep % 2 ? 5 : 0);
    CAPTURE(rep);
    const auto [px, py] = tv2d::aniso_subgradients(f);

    // every row of px and column of py balances to zero
    CHECK(px.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(py.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);

    // the slope reproduces the energy exactly
    const double j = tv2d::aniso_tv(f);
    CHECK(std::abs((px + py).cwiseProduct(f).sum() + j) <= 1e-12 * std::max(1.0, j));

    // parallel and serial kernels agree bitwise
    const auto [sx, sy] = tv2d::aniso_subgradients_serial(f);
    CHECK((px - sx).cwiseAbs().maxCoeff() == 0.0);
    CHECK((py - sy).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("norm-decrease identity holds along the flow") {
  std::mt19937 rng(21);
  for (double delta : {0.5, 1.0, 1.9}) {
    CAPTURE(delta);
    const Image f = random_image(rng, 16, 16, 6);
    tv2d::AnisoFlowOptions opt;
    opt.delta = delta;
    const auto flow = tv2d::aniso_flow(f, opt);
    CHECK(flow.reached_stop);
    CHECK(flow.final_energy <= 1e-6 * flow.initial_energy);
    REQUIRE(!flow.steps.empty());
    double max_gap = 0.0, prev_t = 0.0;
    for (const auto& s : flow.steps) {
      max_gap = std::max(max_gap, s.identity_gap);
      CHECK(s.t > prev_t);
      prev_t = s.t;
    }
    CHECK(max_gap <= 1e-10);
    REQUIRE(flow.states.size() == flow.times.size());
    CHECK(flow.times.back() == flow.steps.back().t);
  }
}

TEST_CASE("snapshot thinning") {
  std::mt19937 rng(33);
  const Image f = random_image(rng, 12, 12, 6);

  tv2d::AnisoFlowOptions all;
  all.thinning = 1.0;
  const auto dense = tv2d::aniso_flow(f, all);
  CHECK(dense.states.size() == dense.steps.size() + 1);

  tv2d::AnisoFlowOptions sparse;
  sparse.thinning = 2.0;
  const auto thin = tv2d::aniso_flow(f, sparse);
  CHECK(thin.states.size() < dense.states.size() / 2);
  for (std::size_t k = 1; k + 2 < thin.times.size(); ++k)
    CHECK(thin.times[k + 1] >= 2.0 * thin.times[k] * (1.0 - 1e-12));
  CHECK(thin.final_energy == doctest::Approx(dense.final_energy).epsilon(1e-9));
}

TEST_CASE("a single-row image reduces to the 1D decomposition") {
  std::mt19937 rng(58);
  Signal f;
  spectral::SpectralSet set;
  // need a few well-separated scales for clean banding
  for (;;) {
    f = random_piecewise(rng, 48, 5);
    set = spectral::decompose(tv1d::evolve(f));
    if (set.size() < 2 || set.size() > 5) continue;
    bool separated = true;
    for (int i = 0; i + 1 < set.size(); ++i) {
      const double a = -1.0 / set.lambdas[i], b = -1.0 / set.lambdas[i + 1];
      if ((b - a) / b < 0.2) separated = false;
    }
    if (separated) break;
  }
  const int len = static_cast<int>(f.size());
  const int n = set.size();

  Image row(1, len);
  row.row(0) = f.transpose();
  tv2d::AnisoFlowOptions opt;
  opt.delta = 0.005;
  opt.thinning = 1.002;
  opt.stop_ratio = 1e-8;
  const auto flow = tv2d::aniso_flow(row, opt);
  REQUIRE(flow.reached_stop);

  // one band around each extinction except the last, which the adaptive flow
  // never reaches: that component belongs to the endpoint residual
  std::vector<std::pair<double, double>> bands;
  double lo = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double hi = 0.5 * (-1.0 / set.lambdas[i] - 1.0 / set.lambdas[i + 1]);
    bands.emplace_back(lo, hi);
    lo = hi;
  }
  bands.emplace_back(lo, flow.times.back() + 1.0);
  const auto decomp = tv2d::spectral_bands_2d(flow, bands);

  CHECK(decomp.mean == doctest::Approx(set.mean).epsilon(1e-12));
  for (int i = 0; i + 1 < n; ++i) {
    CAPTURE(i);
    const Signal want = spectral::filter_band(set, bands[i].first, bands[i].second, false);
    CHECK((decomp.bands[i].row(0).transpose() - want).cwiseAbs().maxCoeff() <= 1e-2);
  }
  CHECK(decomp.bands.back().cwiseAbs().maxCoeff() <= 1e-2);
  CHECK((decomp.residual.row(0).transpose() - set.phis[n - 1]).cwiseAbs().maxCoeff() <= 1e-2);

  // partition + residual + mean telescopes back to the initial state exactly
  Image recon = decomp.residual;
  recon.array() += decomp.mean;
  for (const auto& b : decomp.bands) recon += b;
  CHECK((recon - row).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("flow and band guards") {
  CHECK_THROWS_AS(tv2d::aniso_flow(Image()), std::invalid_argument);
  CHECK_THROWS_AS(tv2d::aniso_tv(Image()), std::invalid_argument);

  Image f(2, 2);
  f << 1, 0, 0, 0;
  tv2d::AnisoFlowOptions opt;
  opt.delta = 0.0;
  CHECK_THROWS_AS(tv2d::aniso_flow(f, opt), std::invalid_argument);
  opt.delta = 2.0;
  CHECK_THROWS_AS(tv2d::aniso_flow(f, opt), std::invalid_argument);
  opt = {};
  opt.thinning = 0.5;
  CHECK_THROWS_AS(tv2d::aniso_flow(f, opt), std::invalid_argument);
  opt = {};
  opt.stop_ratio = 1.0;
  CHECK_THROWS_AS(tv2d::aniso_flow(f, opt), std::invalid_argument);
  opt = {};
  opt.max_steps = 0;
  CHECK_THROWS_AS(tv2d::aniso_flow(f, opt), std::invalid_argument);

  // constant image: nothing to do
  const auto still = tv2d::aniso_flow(Image::Constant(3, 3, 0.7));
  CHECK(still.reached_stop);
  CHECK(still.steps.empty());
  CHECK(still.states.size() == 1);
  CHECK_THROWS_AS(tv2d::spectral_bands_2d(still, {{0.0, 1.0}}), std::invalid_argument);

  // step budget exhaustion is reported, not thrown
  opt = {};
  opt.max_steps = 3;
  const auto cut = tv2d::aniso_flow(f, opt);
  CHECK_FALSE(cut.reached_stop);
  CHECK(cut.steps.size() == 3);
  CHECK(cut.times.back() == cut.steps.back().t);

  const auto flow = tv2d::aniso_flow(f);
  CHECK_THROWS_AS(tv2d::spectral_bands_2d(flow, {{-1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(tv2d::spectral_bands_2d(flow, {{1.0, 1.0}}), std::invalid_argument);
}
