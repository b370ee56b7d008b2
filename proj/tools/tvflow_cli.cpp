#include <CLI11.hpp>
#include <json.hpp>
#include <tvflow/baseline.hpp>
#include <tvflow/io.hpp>
#include <tvflow/kmd.hpp>
#include <tvflow/rdmd.hpp>
#include <tvflow/spectral.hpp>
#include <tvflow/tv1d.hpp>
#include <tvflow/tv2d.hpp>
#include <tvflow/types.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

using json = nlohmann::json;
using tvflow::Image;
using tvflow::NumericalError;
using tvflow::Signal;
namespace baseline = tvflow::baseline;
namespace io = tvflow::io;
namespace kmd = tvflow::kmd;
namespace rdmd = tvflow::rdmd;
namespace spectral = tvflow::spectral;
namespace tv1d = tvflow::tv1d;
namespace tv2d = tvflow::tv2d;

namespace {

void emit(const std::string& out, std::string text) {
  if (out.empty()) {
    if (!text.empty() && text.back() != '\n') text += '\n';
    std::cout << text;
  } else {
    io::write_text(out, text);
  }
}

struct Band {
  double lo = 0.0, hi = 0.0;
};

Band parse_band(const std::string& arg) {
  const auto colon = arg.find(':');
  Band b;
  bool ok = colon != std::string::npos;
  if (ok) {
    try {
      size_t used = 0;
      b.lo = std::stod(arg.substr(0, colon), &used);
      ok = used == colon;
      const std::string hi = arg.substr(colon + 1);
      b.hi = std::stod(hi, &used);
      ok = ok && used == hi.size();
    } catch (const std::exception&) {
      ok = false;
    }
  }
  if (!ok) throw std::invalid_argument("--band: expected LO:HI, got '" + arg + "'");
  if (!(b.lo >= 0.0) || !(b.hi > b.lo))
    throw std::invalid_argument("--band: need 0 <= LO < HI in '" + arg + "'");
  return b;
}

// cross-check the event-driven flow against the iterative prox at a few times
void verify_flow(const Signal& f, const tv1d::PiecewiseFlow& flow) {
  const double ext = flow.extinction_time();
  if (ext == 0.0) return;
  const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (double frac : {0.1, 0.3, 0.55, 0.8, 0.95, 1.05}) {
    const double t = frac * ext;
    const Signal fast = tv1d::sample(flow, t);
    const Signal slow = baseline::tv_prox(f, t);
    worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff());
  }
  if (worst > 1e-6 * scale)
    throw NumericalError("verify: flow disagrees with the iterative solver by " +
                         std::to_string(worst));
  std::fprintf(stderr, "verify: ok (max deviation %.3g)\n", worst);
}

Signal piecewise_signal(std::mt19937& rng, int len, int pieces) {
  std::uniform_real_distribution<double> level(-1.0, 1.0);
  Signal f(len);
  int start = 0;
  for (int p = 0; p < pieces; ++p) {
    const int remaining = len - start;
    if (remaining <= 0) break;
    const int width = p + 1 == pieces
                          ? remaining
                          : 1 + static_cast<int>(rng() % std::max(1, remaining - (pieces - p - 1)));
    f.segment(start, width).setConstant(level(rng));
    start += width;
  }
  if (start < len) f.tail(len - start).setConstant(level(rng));
  return f;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run(int argc, char** argv) {
  CLI::App app{"Exact 1D total-variation flow, its spectral decomposition, and friends"};
  app.require_subcommand(1);
  std::string input, out;
  double tol = 0.0;
  bool verify = false;

  // ---- flow ----
  auto* flow_cmd = app.add_subcommand("flow", "event-driven 1D flow as piecewise-linear JSON");
  flow_cmd->add_option("input", input, "signal file (single row or column)")->required();
  flow_cmd->add_option("--tol", tol, "plateau detection tolerance");
  flow_cmd->add_flag("--verify", verify, "cross-check against the iterative solver");
  flow_cmd->add_option("--out", out, "output path (default: stdout)");
  flow_cmd->callback([&] {
    const Signal f = io::read_signal(input);
    const auto flow = tv1d::evolve(f, tol);
    if (verify) verify_flow(f, flow);
    emit(out, io::to_json(flow));
  });

  // ---- spectrum ----
  auto* spec_cmd = app.add_subcommand("spectrum", "spectral components and decay rates");
  spec_cmd->add_option("input", input, "signal file")->required();
  spec_cmd->add_option("--tol", tol, "plateau detection tolerance");
  spec_cmd->add_flag("--verify", verify, "cross-check against the iterative solver");
  spec_cmd->add_option("--out", out, "output path (default: stdout)");
  spec_cmd->callback([&] {
    const Signal f = io::read_signal(input);
    const auto flow = tv1d::evolve(f, tol);
    if (verify) verify_flow(f, flow);
    emit(out, io::to_json(spectral::decompose(flow)));
  });

  // ---- filter ----
  std::vector<std::string> band_args;
  bool with_mean = false;
  auto* filter_cmd = app.add_subcommand("filter", "band-filtered reconstructions");
  filter_cmd->add_option("input", input, "signal file")->required();
  filter_cmd->add_option("--band", band_args, "extinction-time band LO:HI (repeatable)")
      ->required();
  filter_cmd->add_option("--tol", tol, "plateau detection tolerance");
  filter_cmd->add_flag("--mean", with_mean, "include the mean in every band");
  filter_cmd->add_option("--out", out, "output path (default: stdout)");
  filter_cmd->callback([&] {
    const Signal f = io::read_signal(input);
    const auto set = spectral::decompose(tv1d::evolve(f, tol));
    Image cols(f.size(), band_args.size());
    for (size_t b = 0; b < band_args.size(); ++b) {
      const Band band = parse_band(band_args[b]);
      cols.col(static_cast<Eigen::Index>(b)) =
          spectral::filter_band(set, band.lo, band.hi, with_mean);
    }
    std::string text;
    for (Eigen::Index r = 0; r < cols.rows(); ++r) {
      for (Eigen::Index c = 0; c < cols.cols(); ++c) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, cols(r, c));
        text.append(buf, res.ptr);
        if (c + 1 < cols.cols()) text += ',';
      }
      text += '\n';
    }
    emit(out, text);
  });

  // ---- rdmd ----
  double dt = 0.0;
  auto* rdmd_cmd =
      app.add_subcommand("rdmd", "per-segment modes of the rescaled flow and the recovered spectrum");
  rdmd_cmd->add_option("input", input, "signal file")->required();
  rdmd_cmd->add_option("--dt", dt, "rescaled sampling step (default: span/64 per segment)");
  rdmd_cmd->add_option("--tol", tol, "plateau detection tolerance");
  rdmd_cmd->add_option("--out", out, "output path (default: stdout)");
  rdmd_cmd->callback([&] {
    const Signal f = io::read_signal(input);
    const auto segments = rdmd::rdmd(f, dt, tol);
    json j;
    j["segments"] = json::parse(io::to_json(segments));
    if (!segments.empty()) {
      const auto set = spectral::decompose(tv1d::evolve(f, tol));
      const auto rep = rdmd::reparametrize(set);
      j["spectrum"] = json::parse(io::to_json(rdmd::recover_components(segments, rep)));
    }
    emit(out, j.dump());
  });

  // ---- kmd ----
  int samples = 16, sparsity = 8;
  double t_end = 0.0, threshold = 1e-6;
  auto* kmd_cmd = app.add_subcommand("kmd", "sparse decay-profile fit of flow snapshots");
  kmd_cmd->add_option("input", input, "signal file")->required();
  kmd_cmd->add_option("--samples", samples, "snapshot count (default 16)")
      ->check(CLI::PositiveNumber);
  kmd_cmd->add_option("--t-end", t_end, "sampling horizon (default: 1.05x extinction)");
  kmd_cmd->add_option("--sparsity", sparsity, "greedy selection budget")
      ->check(CLI::PositiveNumber);
  kmd_cmd->add_option("--threshold", threshold, "mode-norm pruning threshold");
  kmd_cmd->add_option("--tol", tol, "plateau detection tolerance");
  kmd_cmd->add_option("--out", out, "output path (default: stdout)");
  kmd_cmd->callback([&] {
    const Signal f = io::read_signal(input);
    const auto flow = tv1d::evolve(f, tol);
    const auto set = spectral::decompose(flow);
    if (set.lambdas.empty()) throw NumericalError("kmd: constant signal has no decay profiles");
    double horizon = t_end > 0.0 ? t_end : 1.05 * flow.extinction_time();
    std::vector<double> times(static_cast<size_t>(samples));
    for (int k = 0; k < samples; ++k) times[static_cast<size_t>(k)] = horizon * k / samples;
    const auto dict = kmd::ProfileDictionary::build(set.lambdas, times);
    Image snaps(f.size(), samples);
    for (int k = 0; k < samples; ++k) snaps.col(k) = tv1d::sample(flow, times[static_cast<size_t>(k)]);
    kmd::FitOptions opt;
    opt.sparsity = sparsity;
    opt.threshold = threshold;
    json j;
    j["times"] = times;
    j["fit"] = json::parse(io::to_json(kmd::fit(snaps, dict, opt)));
    emit(out, j.dump());
  });

  // ---- flow2d ----
  tv2d::AnisoFlowOptions fopt;
  std::string state_out;
  auto* flow2d_cmd = app.add_subcommand("flow2d", "adaptive anisotropic 2D flow");
  flow2d_cmd->add_option("input", input, "image file (.pgm or text table)")->required();
  flow2d_cmd->add_option("--delta", fopt.delta, "step aggressiveness in (0,2), default 1");
  flow2d_cmd->add_option("--stop-ratio", fopt.stop_ratio, "energy stop ratio, default 1e-6");
  flow2d_cmd->add_option("--thinning", fopt.thinning, "snapshot thinning factor, default 1.05");
  flow2d_cmd->add_option("--max-steps", fopt.max_steps, "step budget");
  flow2d_cmd->add_option("--state-out", state_out, "write the final state here");
  flow2d_cmd->add_option("--out", out, "summary output path (default: stdout)");
  flow2d_cmd->callback([&] {
    const Image f = io::read_image(input);
    const auto flow = tv2d::aniso_flow(f, fopt);
    json j;
    j["rows"] = f.rows();
    j["cols"] = f.cols();
    j["initial_energy"] = flow.initial_energy;
    j["final_energy"] = flow.final_energy;
    j["reached_stop"] = flow.reached_stop;
    j["steps"] = flow.steps.size();
    j["t_end"] = flow.times.back();
    j["snapshots"] = flow.times.size();
    double worst_gap = 0.0;
    for (const auto& s : flow.steps) worst_gap = std::max(worst_gap, s.identity_gap);
    j["max_identity_gap"] = worst_gap;
    if (!state_out.empty()) {
      if (std::filesystem::path(state_out).extension() == ".pgm")
        io::write_pgm(state_out, flow.states.back());
      else
        io::write_matrix(state_out, flow.states.back());
    }
    emit(out, j.dump());
  });

  // ---- bands2d ----
  std::string prefix, format = "csv";
  auto* bands2d_cmd = app.add_subcommand("bands2d", "spectral bands of the 2D flow");
  bands2d_cmd->add_option("input", input, "image file (.pgm or text table)")->required();
  bands2d_cmd->add_option("--band", band_args, "extinction-time band LO:HI (repeatable)")
      ->required();
  bands2d_cmd->add_option("--delta", fopt.delta, "step aggressiveness in (0,2)");
  bands2d_cmd->add_option("--stop-ratio", fopt.stop_ratio, "energy stop ratio");
  bands2d_cmd->add_option("--thinning", fopt.thinning, "snapshot thinning factor");
  bands2d_cmd->add_option("--max-steps", fopt.max_steps, "step budget");
  bands2d_cmd->add_option("--out-prefix", prefix, "write band images to PREFIX-band<k> etc.")
      ->required();
  bands2d_cmd->add_option("--format", format, "csv (raw) or pgm (0.5 + v/2, clamped)")
      ->check(CLI::IsMember({"csv", "pgm"}));
  bands2d_cmd->add_option("--out", out, "summary output path (default: stdout)");
  bands2d_cmd->callback([&] {
    const Image f = io::read_image(input);
    std::vector<std::pair<double, double>> bands;
    for (const auto& arg : band_args) {
      const Band b = parse_band(arg);
      bands.emplace_back(b.lo, b.hi);
    }
    const auto flow = tv2d::aniso_flow(f, fopt);
    const auto decomp = tv2d::spectral_bands_2d(flow, bands);
    const auto save = [&](const std::string& tag, const Image& img) {
      const std::string path = prefix + "-" + tag + "." + format;
      if (format == "pgm") {
        const Image shifted = 0.5 + 0.5 * img.array();
        io::write_pgm(path, shifted, 65535);
      } else {
        io::write_matrix(path, img);
      }
      return path;
    };
    json j;
    j["mean"] = decomp.mean;
    j["t_end"] = flow.times.back();
    json files = json::array();
    for (size_t b = 0; b < decomp.bands.size(); ++b) {
      json entry;
      entry["band"] = {bands[b].first, bands[b].second};
      entry["norm"] = decomp.bands[b].norm();
      entry["file"] = save("band" + std::to_string(b), decomp.bands[b]);
      files.push_back(std::move(entry));
    }
    json res;
    res["norm"] = decomp.residual.norm();
    res["file"] = save("residual", decomp.residual);
    j["bands"] = std::move(files);
    j["residual"] = std::move(res);
    emit(out, j.dump());
  });

  // ---- bench ----
  int len = 700, repeats = 3, pieces = 24, bench_samples = 7;
  unsigned seed = 1;
  double bench_dt = 1e-3;
  auto* bench_cmd =
      app.add_subcommand("bench", "event-driven solver vs dense iterative baseline");
  bench_cmd->add_option("--len", len, "signal length (default 700)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", repeats, "independent signals (default 3)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--pieces", pieces, "plateaus per signal (default 24)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--dt", bench_dt, "baseline step size (default 1e-3)");
  bench_cmd->add_option("--samples", bench_samples, "trajectory comparison points per signal")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", seed, "rng seed (default 1)");
  bench_cmd->add_option("--out", out, "JSON report path (table always prints to stderr)");
  bench_cmd->callback([&] {
    using clock = std::chrono::steady_clock;
    std::mt19937 rng(seed);
    std::vector<double> fast_s, slow_s;
    double worst = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      const Signal f = piecewise_signal(rng, len, pieces);

      const auto t0 = clock::now();
      const auto flow = tv1d::evolve(f);
      const auto set = spectral::decompose(flow);
      const auto t1 = clock::now();
      fast_s.push_back(std::chrono::duration<double>(t1 - t0).count());

      std::uniform_real_distribution<double> pick(0.0, flow.extinction_time());
      std::vector<double> sample_at(static_cast<size_t>(bench_samples));
      for (auto& t : sample_at) t = pick(rng);
      std::sort(sample_at.begin(), sample_at.end());

      baseline::ImplicitOptions opt;
      opt.dt = bench_dt;
      opt.t_end = flow.extinction_time();
      size_t next = 0;
      double rep_worst = 0.0;
      const auto t2 = clock::now();
      baseline::implicit_flow(f, opt, [&](double t, const Signal& psi) {
        while (next < sample_at.size() && sample_at[next] <= t) {
          rep_worst = std::max(
              rep_worst, (psi - tv1d::sample(flow, sample_at[next])).cwiseAbs().maxCoeff());
          ++next;
        }
      });
      const auto t3 = clock::now();
      slow_s.push_back(std::chrono::duration<double>(t3 - t2).count());
      worst = std::max(worst, rep_worst);
      (void)set;
    }
    const double fast_med = median(fast_s), slow_med = median(slow_s);
    std::fprintf(stderr, "%-28s %12s\n", "solver", "median wall");
    std::fprintf(stderr, "%-28s %10.3f ms\n", "event-driven flow+spectrum", 1e3 * fast_med);
    std::fprintf(stderr, "%-28s %10.3f ms\n", "implicit prox baseline", 1e3 * slow_med);
    std::fprintf(stderr, "speedup %.0fx, max trajectory deviation %.3g (dt=%g)\n",
                 slow_med / fast_med, worst, bench_dt);
    json j;
    j["length"] = len;
    j["pieces"] = pieces;
    j["repeats"] = repeats;
    j["dt"] = bench_dt;
    j["seed"] = seed;
    j["fast_seconds"] = fast_s;
    j["baseline_seconds"] = slow_s;
    j["fast_median_seconds"] = fast_med;
    j["baseline_median_seconds"] = slow_med;
    j["speedup"] = slow_med / fast_med;
    j["max_trajectory_deviation"] = worst;
    if (!out.empty())
      io::write_text(out, j.dump());
    else
      std::cout << j.dump() << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
