#pragma once

#include <map>
#include <variant>

#include "ddqkd/estimation.hpp"
#include "ddqkd/fock.hpp"

namespace ddqkd::plugplay {

/// One Mach-Zehnder phase setting; t = (1 - cos phi)/2 is the fraction of
/// each photon routed to the output port.
struct PhaseSetting {
  double phi;
  double t;

  static PhaseSetting from_phi(double phi);
};

/// No-click probability of the monitoring threshold detector:
/// sum_n ((1 - cos phi)/2)^n p_n.
double pvac_phase(const fock::PhotonDist& dist, double phi);

/// Photon-number statistics of the output signals,
/// q_n = sum_{m>=n} C(m,n) (1-cos phi)^n (1+cos phi)^(m-n) p_m / 2^m,
/// i.e. binomial thinning with survival t.
fock::PhotonDist output_stats(const fock::PhotonDist& dist, double phi);

enum class EstimateMethod { Prop1, Truncated };

using InputEstimate = std::variant<est::Prop1Bounds, est::TruncatedSolve>;

/// Recover the input statistics from no-click probabilities keyed by phase.
/// Prop1 requires exactly three settings whose survival factors are
/// {0, c1, c2}; Truncated uses all settings with the given order (0 picks
/// min(settings-1, 8)).
InputEstimate estimate_input_stats(const std::map<double, double>& pvac_by_phi,
                                   EstimateMethod method, double cap = 1.0,
                                   std::size_t order = 0);

}  // namespace ddqkd::plugplay
