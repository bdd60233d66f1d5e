#pragma once

#include <cstddef>
#include <vector>

namespace ddqkd::fock {

// Mass bookkeeping slack used throughout: sub-normalized distributions are
// first-class (missing mass is a truncated tail), so conservation checks
// compare against the input mass, not 1.
inline constexpr double kMassSlack = 1e-12;

/// Probability distribution over photon number n = 0..n_max.
class PhotonDist {
 public:
  /// Throws std::invalid_argument on empty input, entries below -1e-12, or
  /// total mass above 1 + 1e-12. Entries in [-1e-12, 0) are clamped to 0.
  explicit PhotonDist(std::vector<double> probs);

  static PhotonDist delta(std::size_t n, std::size_t n_max);
  /// Truncated Poisson with mean mu; the tail is dropped, not renormalized.
  static PhotonDist poisson(double mu, std::size_t n_max);

  std::size_t n_max() const { return probs_.size() - 1; }
  double operator[](std::size_t n) const { return probs_[n]; }
  double mass() const;
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Two-party photon-number distribution p(n, m); n indexes Alice, m Bob.
class JointPhotonDist {
 public:
  /// Row-major (n_max+1)^2 matrix; same validation rules as PhotonDist.
  JointPhotonDist(std::size_t n_max, std::vector<double> probs);
  static JointPhotonDist product(const PhotonDist& a, const PhotonDist& b);

  std::size_t n_max() const { return n_max_; }
  double at(std::size_t n, std::size_t m) const {
    return probs_[n * (n_max_ + 1) + m];
  }
  double mass() const;
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::size_t n_max_;
  std::vector<double> probs_;
};

/// h2(x) = -x log2 x - (1-x) log2 (1-x), with 0 log2 0 = 0.
/// Throws std::domain_error outside [0,1] beyond 1e-12 slack.
double binary_entropy(double x);

/// Binomial loss channel: q_k = sum_{n>=k} C(n,k) eta^k (1-eta)^(n-k) p_n.
/// Output truncation equals the input truncation; total mass is preserved.
PhotonDist binomial_loss(const PhotonDist& dist, double eta);

/// P(j of k photons flip), j = 0..k: the binomial row C(k,j) e^j (1-e)^(k-j).
std::vector<double> flip_split(std::size_t k, double e);

/// C(n, k): exact integer arithmetic for n <= 30, log-gamma above.
double binom(unsigned n, unsigned k);

/// C(n, k) p^k (1-p)^(n-k).
double binom_pmf(unsigned n, unsigned k, double p);

}  // namespace ddqkd::fock
