#include "ddqkd/fock.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ddqkd::fock {

namespace {

std::vector<double> checked(std::vector<double> probs, const char* what) {
  if (probs.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty distribution");
  }
  double total = 0.0;
  for (double& p : probs) {
    if (p < -1e-12) {
      throw std::invalid_argument(std::string(what) + ": negative entry " +
                                  std::to_string(p));
    }
    if (p < 0.0) p = 0.0;
    total += p;
  }
  if (total > 1.0 + kMassSlack) {
    throw std::invalid_argument(std::string(what) + ": total mass " +
                                std::to_string(total) + " exceeds 1");
  }
  return probs;
}

}  // namespace

PhotonDist::PhotonDist(std::vector<double> probs)
    : probs_(checked(std::move(probs), "PhotonDist")) {}

PhotonDist PhotonDist::delta(std::size_t n, std::size_t n_max) {
  if (n > n_max) throw std::invalid_argument("PhotonDist::delta: n > n_max");
  std::vector<double> p(n_max + 1, 0.0);
  p[n] = 1.0;
  return PhotonDist(std::move(p));
}

PhotonDist PhotonDist::poisson(double mu, std::size_t n_max) {
  if (mu < 0.0) throw std::invalid_argument("PhotonDist::poisson: mu < 0");
  std::vector<double> p(n_max + 1);
  double term = std::exp(-mu);
  for (std::size_t n = 0; n <= n_max; ++n) {
    p[n] = term;
    term *= mu / static_cast<double>(n + 1);
  }
  return PhotonDist(std::move(p));
}

double PhotonDist::mass() const {
  double total = 0.0;
  for (double p : probs_) total += p;
  return total;
}

JointPhotonDist::JointPhotonDist(std::size_t n_max, std::vector<double> probs)
    : n_max_(n_max), probs_(checked(std::move(probs), "JointPhotonDist")) {
  if (probs_.size() != (n_max + 1) * (n_max + 1)) {
    throw std::invalid_argument("JointPhotonDist: size does not match n_max");
  }
}

JointPhotonDist JointPhotonDist::product(const PhotonDist& a,
                                         const PhotonDist& b) {
  if (a.n_max() != b.n_max()) {
    throw std::invalid_argument("JointPhotonDist::product: mismatched n_max");
  }
  const std::size_t d = a.n_max() + 1;
  std::vector<double> p(d * d);
  for (std::size_t n = 0; n < d; ++n)
    for (std::size_t m = 0; m < d; ++m) p[n * d + m] = a[n] * b[m];
  return JointPhotonDist(a.n_max(), std::move(p));
}

double JointPhotonDist::mass() const {
  double total = 0.0;
  for (double p : probs_) total += p;
  return total;
}

double binary_entropy(double x) {
  if (x < -1e-12 || x > 1.0 + 1e-12) {
    throw std::domain_error("binary_entropy: argument " + std::to_string(x) +
                            " outside [0,1]");
  }
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double binom(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  if (n <= 30) {
    unsigned long long c = 1;
    for (unsigned i = 1; i <= k; ++i) {
      c = c * (n - k + i) / i;  // exact: divisor always divides the product
    }
    return static_cast<double>(c);
  }
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0));
}

double binom_pmf(unsigned n, unsigned k, double p) {
  if (k > n) return 0.0;
  // pow(0,0) = 1 conventions matter for the eta = 0 and eta = 1 edges.
  double f = binom(n, k);
  for (unsigned i = 0; i < k; ++i) f *= p;
  for (unsigned i = 0; i < n - k; ++i) f *= 1.0 - p;
  return f;
}

PhotonDist binomial_loss(const PhotonDist& dist, double eta) {
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("binomial_loss: eta outside [0,1]");
  }
  const std::size_t d = dist.n_max() + 1;
  std::vector<double> out(d, 0.0);
  for (std::size_t n = 0; n < d; ++n) {
    const double pn = dist[n];
    if (pn == 0.0) continue;
    for (std::size_t k = 0; k <= n; ++k) {
      out[k] += binom_pmf(static_cast<unsigned>(n), static_cast<unsigned>(k),
                          eta) *
                pn;
    }
  }
  return PhotonDist(std::move(out));
}

std::vector<double> flip_split(std::size_t k, double e) {
  if (e < 0.0 || e > 1.0) {
    throw std::invalid_argument("flip_split: e outside [0,1]");
  }
  std::vector<double> row(k + 1);
  for (std::size_t j = 0; j <= k; ++j) {
    row[j] = binom_pmf(static_cast<unsigned>(k), static_cast<unsigned>(j), e);
  }
  return row;
}

}  // namespace ddqkd::fock
