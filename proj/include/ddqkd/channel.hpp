#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ddqkd/fock.hpp"
#include "ddqkd/source.hpp"

namespace ddqkd::channel {

/// Channel toward each party plus receiver imperfections. Detector
/// efficiency is folded into the dB figures; downstream detectors are
/// perfect-efficiency threshold detectors with dark counts.
struct ChannelParams {
  double db_a = 0.0;    // total loss toward Alice, dB
  double db_b = 0.0;    // total loss toward Bob, dB
  double e = 0.0;       // per-photon misalignment flip probability
  double epsilon = 0.0; // dark-count probability per detector per gate
};

/// 10^(-db/10).
double transmittance_from_db(double db);

enum class Outcome : int { Vac = 0, Zero = 1, One = 2, Dbl = 3 };

/// Joint click-pattern probabilities over {vac, 0, 1, D} x {vac, 0, 1, D}.
struct OutcomeDist {
  std::array<double, 16> p{};

  double& at(Outcome a, Outcome b) {
    return p[static_cast<int>(a) * 4 + static_cast<int>(b)];
  }
  double at(Outcome a, Outcome b) const {
    return p[static_cast<int>(a) * 4 + static_cast<int>(b)];
  }
  double total() const;
};

/// Swap Bob's 0/1 labels (the anticorrelation interchange).
OutcomeDist relabel_bob(const OutcomeDist& dist);

/// Matched-basis photon-number-resolved arrival statistics q(k,l;r,s):
/// k,l are Alice's detector-basis mode counts, r,s Bob's. Raw labels; no
/// interchange applied.
class ResolvedStats {
 public:
  explicit ResolvedStats(std::size_t n_max);

  std::size_t n_max() const { return n_max_; }
  double q(std::size_t k, std::size_t l, std::size_t r, std::size_t s) const {
    return q_[index(k, l, r, s)];
  }
  void add(std::size_t k, std::size_t l, std::size_t r, std::size_t s,
           double p) {
    q_[index(k, l, r, s)] += p;
  }
  double total() const;

  /// p_{nm} with n = k+l, m = r+s.
  fock::JointPhotonDist pair_marginal() const;
  /// Alice-side marginal over total arriving photon number.
  fock::PhotonDist alice_marginal() const;

  /// Tensor with Bob's (r,s) swapped.
  ResolvedStats relabel_bob() const;

 private:
  std::size_t index(std::size_t k, std::size_t l, std::size_t r,
                    std::size_t s) const {
    const std::size_t d = n_max_ + 1;
    return ((k * d + l) * d + r) * d + s;
  }
  std::size_t n_max_;
  std::vector<double> q_;
};

/// Exact enumeration of the arrival statistics: per pair-number sector,
/// independent binomial loss toward each side followed by independent
/// per-photon misalignment flips. Misalignment commutes with threshold
/// detection, so it is folded in here.
ResolvedStats arrival_stats(const fock::PhotonDist& pair_dist,
                            const ChannelParams& ch);
/// PDC entry point; throws std::runtime_error when the source truncation
/// violates the tail policy.
ResolvedStats arrival_stats(const source::PdcSource& src,
                            const ChannelParams& ch);

/// Threshold/dark-count event algebra on raw labels: a detector clicks iff
/// a photon arrives on it or a dark count fires (independent per detector).
OutcomeDist click_pattern(const ResolvedStats& resolved, double epsilon);

struct SinglePhotonQber {
  double p11 = 0;
  double q11 = 0;
  bool defined = false;  // false when p11 = 0
};

/// p11 = mass of the four (1 photon; 1 photon) cells; q11 = raw label-equal
/// error cells q(1,0;1,0)+q(0,1;0,1) over p11 (equal to the interchanged
/// convention's q(1,0;0,1)+q(0,1;1,0)).
SinglePhotonQber single_photon_qber(const ResolvedStats& resolved);

/// Conditional QBER of the two-pair state after exactly one photon is lost
/// on one side (matched bases, perfect detectors, no misalignment); double
/// clicks randomly assigned. Evaluates to 1/6.
double wstate_loss_qber();

/// Everything the key-rate layer consumes. Dark counts are folded in and
/// Bob's outcomes carry the 0/1 interchange, so error rates downstream are
/// correlated-convention QBERs.
struct ReducedStats {
  OutcomeDist outcome;
  double p11 = 0;
  double err11 = 0;                    // q11 = err11 / p11
  std::array<double, 4> vac_a_bob{};   // P(Alice arrival vacuum, Bob outcome)
};

ReducedStats reduce(const ResolvedStats& resolved, double epsilon);

struct SimulationResult {
  ResolvedStats resolved;
  ReducedStats reduced;
  double p11 = 0;
  double q11 = 0;
  bool q11_defined = false;
};

SimulationResult simulate(const source::PdcSource& src,
                          const ChannelParams& ch);

/// Per-pair-number conditional reduced statistics. Mixing against a pair
/// distribution reproduces reduce(arrival_stats(...)) without re-enumerating
/// the channel, which makes pump-parameter optimization cheap.
class SectorModel {
 public:
  SectorModel(const ChannelParams& ch, std::size_t n_max);

  std::size_t n_max() const { return sectors_.size() - 1; }
  ReducedStats mix(const fock::PhotonDist& pair_dist) const;

 private:
  std::vector<ReducedStats> sectors_;
};

/// Event-by-event sampling oracle, independent of the enumeration path:
/// draws pair number, configuration, per-photon survival, per-photon flip
/// and dark counts per sample. Reproducible for a fixed seed.
struct McResult {
  OutcomeDist outcome;     // relabeled, like ReducedStats::outcome
  ResolvedStats resolved;  // raw arrival frequencies
  std::uint64_t samples = 0;
};

McResult monte_carlo(const fock::PhotonDist& pair_dist,
                     const ChannelParams& ch, std::uint64_t samples,
                     std::uint64_t seed);

}  // namespace ddqkd::channel
