#pragma once

#include <cstddef>
#include <vector>

#include "ddqkd/fock.hpp"

namespace ddqkd::source {

/// Truncation policy: the pair-number tail beyond n_max must stay below this.
inline constexpr double kTailPolicy = 1e-10;
/// Hard cap for the automatic truncation choice.
inline constexpr std::size_t kNMaxCap = 25;

/// p_n = (n+1) lambda^n / (1+lambda)^(n+2).
double pair_probability(double lambda, std::size_t n);

/// Upper bound (n_max+2) (lambda/(1+lambda))^(n_max+1) on the tail mass
/// sum_{n > n_max} p_n.
double tail_bound(double lambda, std::size_t n_max);

/// Smallest n_max <= cap meeting the tail policy; throws std::invalid_argument
/// when the policy is unattainable under the cap.
std::size_t choose_n_max(double lambda, std::size_t cap = kNMaxCap);

/// Largest pump parameter for which the tail policy is attainable at `cap`.
double max_lambda(std::size_t cap = kNMaxCap);

/// Type-II parametric-down-conversion source; mean pair number is 2*lambda.
struct PdcSource {
  double lambda;
  std::size_t n_max;

  explicit PdcSource(double lambda);  // picks n_max from the tail policy
  PdcSource(double lambda, std::size_t n_max);

  double mean_pairs() const { return 2.0 * lambda; }
  double tail() const { return tail_bound(lambda, n_max); }
};

fock::PhotonDist pair_dist(const PdcSource& src);

/// One classical configuration of the n-pair state: Alice holds (a_h, a_v)
/// photons in the two polarization modes, Bob the complement (b_h, b_v).
struct PairConfig {
  unsigned a_h, a_v, b_h, b_v;
  double weight;
};

/// The n-pair state decomposes over m = 0..n into configurations
/// (n-m, m; m, n-m), each of weight 1/(n+1). The relative phases never enter
/// matched-basis photon-counting statistics (see channel).
std::vector<PairConfig> pair_state_weights(unsigned n);

}  // namespace ddqkd::source
