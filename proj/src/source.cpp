#include "ddqkd/source.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ddqkd::source {

double pair_probability(double lambda, std::size_t n) {
  if (lambda < 0.0) {
    throw std::invalid_argument("pair_probability: lambda < 0");
  }
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  return (static_cast<double>(n) + 1.0) *
         std::pow(lambda, static_cast<double>(n)) /
         std::pow(1.0 + lambda, static_cast<double>(n) + 2.0);
}

double tail_bound(double lambda, std::size_t n_max) {
  const double r = lambda / (1.0 + lambda);
  return (static_cast<double>(n_max) + 2.0) *
         std::pow(r, static_cast<double>(n_max) + 1.0);
}

std::size_t choose_n_max(double lambda, std::size_t cap) {
  if (lambda < 0.0) throw std::invalid_argument("choose_n_max: lambda < 0");
  for (std::size_t n = 0; n <= cap; ++n) {
    if (tail_bound(lambda, n) <= kTailPolicy) return n;
  }
  throw std::invalid_argument(
      "choose_n_max: tail policy unattainable at lambda = " +
      std::to_string(lambda) + " with n_max cap " + std::to_string(cap) +
      " (max usable lambda is " + std::to_string(max_lambda(cap)) + ")");
}

double max_lambda(std::size_t cap) {
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail_bound(mid, cap) <= kTailPolicy ? lo : hi) = mid;
  }
  return lo;
}

PdcSource::PdcSource(double lambda_) : PdcSource(lambda_, choose_n_max(lambda_)) {}

PdcSource::PdcSource(double lambda_, std::size_t n_max_)
    : lambda(lambda_), n_max(n_max_) {
  if (lambda < 0.0) throw std::invalid_argument("PdcSource: lambda < 0");
}

fock::PhotonDist pair_dist(const PdcSource& src) {
  std::vector<double> p(src.n_max + 1);
  for (std::size_t n = 0; n <= src.n_max; ++n) {
    p[n] = pair_probability(src.lambda, n);
  }
  return fock::PhotonDist(std::move(p));
}

std::vector<PairConfig> pair_state_weights(unsigned n) {
  std::vector<PairConfig> configs;
  configs.reserve(n + 1);
  const double w = 1.0 / (static_cast<double>(n) + 1.0);
  for (unsigned m = 0; m <= n; ++m) {
    configs.push_back(PairConfig{n - m, m, m, n - m, w});
  }
  return configs;
}

}  // namespace ddqkd::source
