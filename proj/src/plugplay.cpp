#include "ddqkd/plugplay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ddqkd::plugplay {

PhaseSetting PhaseSetting::from_phi(double phi) {
  return PhaseSetting{phi, (1.0 - std::cos(phi)) / 2.0};
}

double pvac_phase(const fock::PhotonDist& dist, double phi) {
  const double t = PhaseSetting::from_phi(phi).t;
  double acc = 0.0;
  double tn = 1.0;
  for (std::size_t n = 0; n <= dist.n_max(); ++n) {
    acc += tn * dist[n];
    tn *= t;
  }
  return acc;
}

fock::PhotonDist output_stats(const fock::PhotonDist& dist, double phi) {
  // Evaluated through the (1-cos)^n (1+cos)^(m-n) / 2^m expansion rather
  // than delegating to binomial_loss; the two routes agreeing is a checked
  // consistency property.
  const double one_minus = 1.0 - std::cos(phi);
  const double one_plus = 1.0 + std::cos(phi);
  const std::size_t d = dist.n_max() + 1;
  std::vector<double> q(d, 0.0);
  for (std::size_t m = 0; m < d; ++m) {
    const double pm = dist[m];
    if (pm == 0.0) continue;
    double half_m = 1.0;
    for (std::size_t i = 0; i < m; ++i) half_m *= 0.5;
    for (std::size_t n = 0; n <= m; ++n) {
      double term = fock::binom(static_cast<unsigned>(m),
                                static_cast<unsigned>(n)) *
                    pm * half_m;
      for (std::size_t i = 0; i < n; ++i) term *= one_minus;
      for (std::size_t i = 0; i < m - n; ++i) term *= one_plus;
      q[n] += term;
    }
  }
  // 1 +- cos rounding can leave crumbs a hair above the mass cap.
  double total = 0.0;
  for (double v : q) total += v;
  if (total > 1.0) {
    const double excess = total - 1.0;
    if (excess < 1e-9) {
      for (double& v : q) v /= total;
    }
  }
  return fock::PhotonDist(std::move(q));
}

InputEstimate estimate_input_stats(const std::map<double, double>& pvac_by_phi,
                                   EstimateMethod method, double cap,
                                   std::size_t order) {
  if (pvac_by_phi.empty()) {
    throw std::invalid_argument("estimate_input_stats: no samples");
  }
  // Survival factor per phase; merge phases that alias to the same c.
  std::map<double, double> by_c;
  for (const auto& [phi, pvac] : pvac_by_phi) {
    by_c[PhaseSetting::from_phi(phi).t] = pvac;
  }

  if (method == EstimateMethod::Prop1) {
    if (by_c.size() != 3) {
      throw std::invalid_argument(
          "estimate_input_stats: prop1 needs exactly three distinct survival "
          "factors {0, c1, c2}");
    }
    auto it = by_c.begin();
    const double c0 = it->first;
    const double f0 = it->second;
    ++it;
    const double c1 = it->first;
    const double f1 = it->second;
    ++it;
    const double c2 = it->first;
    const double f2 = it->second;
    if (std::abs(c0) > 1e-9) {
      throw std::invalid_argument(
          "estimate_input_stats: prop1 needs a phi = 0 setting (c = 0)");
    }
    return est::prop1_bounds(f0, f1, f2, c1, c2, cap);
  }

  std::map<double, double> by_eta;
  for (const auto& [c, pvac] : by_c) by_eta[1.0 - c] = pvac;
  const std::size_t k =
      order > 0 ? order : std::min<std::size_t>(by_eta.size() - 1, 8);
  return est::truncated_solve(by_eta, k);
}

}  // namespace ddqkd::plugplay
