#include "tvflow/spectral.hpp"

#include <cmath>

namespace tvflow::spectral {

SpectralSet decompose(const tv1d::PiecewiseFlow& flow) {
  if (flow.initial.size() == 0) throw std::invalid_argument("decompose: empty flow");
  SpectralSet set;
  set.length = static_cast<int>(flow.initial.size());
  set.mean = flow.initial.mean();
  const int L = flow.events();
  set.lambdas.reserve(L);
  set.phis.reserve(L);
  const Signal zero = Signal::Zero(flow.initial.size());
  for (int i = 0; i < L; ++i) {
    const double T = flow.times[i];
    const Signal& p_next = i + 1 < L ? flow.subgradients[i + 1] : zero;
    set.lambdas.push_back(-1.0 / T);
    set.phis.push_back(T * (p_next - flow.subgradients[i]));
  }
  return set;
}

std::vector<SpectrumAtom> spectrum(const SpectralSet& set) {
  std::vector<SpectrumAtom> atoms;
  atoms.reserve(set.size());
  for (int i = 0; i < set.size(); ++i)
    atoms.push_back({-1.0 / set.lambdas[i], std::abs(set.lambdas[i]) * set.phis[i].norm()});
  return atoms;
}

Signal filter_band(const SpectralSet& set, double t_lo, double t_hi, bool include_mean) {
  if (!(t_lo >= 0.0) || !(t_lo < t_hi))
    throw std::invalid_argument("filter_band: need 0 <= t_lo < t_hi");
  if (set.length <= 0) throw std::invalid_argument("filter_band: empty spectral set");
  Signal out = Signal::Zero(set.length);
  for (int i = 0; i < set.size(); ++i) {
    const double t = -1.0 / set.lambdas[i];
    if (t >= t_lo && t < t_hi) out += set.phis[i];
  }
  if (include_mean) out.array() += set.mean;
  return out;
}

Signal reconstruct(const SpectralSet& set) {
  if (set.length <= 0) throw std::invalid_argument("reconstruct: empty spectral set");
  Signal out = Signal::Constant(set.length, set.mean);
  for (const auto& phi : set.phis) out += phi;
  return out;
}

}  // namespace tvflow::spectral
