// Times the OpenMP per-line subgradient kernels against the serial reference
// and checks they agree bitwise.  Thread count comes from TVFLOW_THREADS.
#include <tvflow/tv2d.hpp>
#include <tvflow/types.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

using tvflow::Image;
namespace tv2d = tvflow::tv2d;

namespace {

double run_ms(const Image& img, int repeats, bool parallel) {
  std::vector<double> times;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [px, py] =
        parallel ? tv2d::aniso_subgradients(img) : tv2d::aniso_subgradients_serial(img);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (px.rows() == 0 || py.rows() < 0) std::abort();  // keep the result alive
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 9;
  std::printf("threads: %d (set TVFLOW_THREADS to change)\n", tvflow::thread_cap());
  std::printf("%10s %12s %12s %9s %9s\n", "size", "serial ms", "parallel ms", "speedup",
              "agree");
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (const auto& [rows, cols] : {std::pair{256, 256}, {1024, 512}, {2048, 2048}}) {
    Image img(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) img(r, c) = uni(rng);
    const auto [spx, spy] = tv2d::aniso_subgradients_serial(img);
    const auto [ppx, ppy] = tv2d::aniso_subgradients(img);
    const bool agree = (spx - ppx).cwiseAbs().maxCoeff() == 0.0 &&
                       (spy - ppy).cwiseAbs().maxCoeff() == 0.0;
    const double serial = run_ms(img, repeats, false);
    const double parallel = run_ms(img, repeats, true);
    char size[32];
    std::snprintf(size, sizeof size, "%dx%d", rows, cols);
    std::printf("%10s %12.3f %12.3f %8.2fx %9s\n", size, serial, parallel, serial / parallel,
                agree ? "yes" : "NO");
    if (!agree) return 1;
  }
  return 0;
}
