#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "ddqkd/fock.hpp"

namespace ddqkd::est {

/// One decoy attenuation setting. c = 1 - eta is the survival factor of the
/// no-click series p_vac = sum_n c^n p_n.
struct DecoySetting {
  double eta;
  double c;

  static DecoySetting from_eta(double eta);
  static DecoySetting from_c(double c);
};

/// Calibrated-detector parameters for the noisy no-click model.
struct DetectorModel {
  double eta_det = 1.0;
  double epsilon = 0.0;
};

/// Finite-setting bounds on the first three coefficients of
/// f(c) = sum_n c^n x_n given f at c in {0, c1, c2} and sum_n x_n <= cap.
/// The x*_lo/x*_hi fields are clamped to [0, cap]; raw_* retain the
/// unclamped evaluations (clamping can mask slow convergence).
struct Prop1Bounds {
  double x0 = 0;
  double x1_lo = 0, x1_hi = 0;
  double x2_lo = 0, x2_hi = 0;
  double raw_x1_lo = 0, raw_x1_hi = 0;
  double raw_x2_lo = 0, raw_x2_hi = 0;
  double c1 = 0, c2 = 0;
};

struct Interval {
  double lo = 0;
  double hi = 0;
  double width() const { return hi - lo; }
  bool contains(double x, double slack = 0.0) const {
    return x >= lo - slack && x <= hi + slack;
  }
};

/// No-click probability of an ideal threshold detector behind a beam
/// splitter of transmittance eta: sum_n (1-eta)^n p_n.
double pvac_ideal(const fock::PhotonDist& dist, double eta);

/// Same with finite detection efficiency and dark counts:
/// (1-epsilon) sum_n (1 - eta*eta_det)^n p_n.
double pvac_noisy(const fock::PhotonDist& dist, double eta,
                  const DetectorModel& det);

/// Three-setting bounds; requires 0 < c1 < c2 < 1 (throws
/// std::invalid_argument otherwise) and f values in [0, cap].
Prop1Bounds prop1_bounds(double f0, double f_c1, double f_c2, double c1,
                         double c2, double cap);

/// For each delta, evaluates the forward model at c in {0, delta,
/// sqrt(delta)} and bounds x1, x2. The convergence-regime pairing.
std::vector<Prop1Bounds> convergence_sweep(const fock::PhotonDist& dist,
                                           const std::vector<double>& deltas,
                                           double cap);

/// Joint no-click probability with a splitter per side and four noisy
/// detectors: (1-epsilon)^4 sum_{nm} (1-eta_a)^n (1-eta_b)^m p_nm.
double pvac_joint(const fock::JointPhotonDist& joint, double eta_a,
                  double eta_b, double epsilon);

using JointSamples = std::map<std::pair<double, double>, double>;

/// The nine (eta_a, eta_b) settings required by joint_p11_bounds:
/// eta in {1, 1-delta, 1-sqrt(delta)} on each side.
std::vector<std::pair<double, double>> joint_setting_etas(double delta);

/// Two-stage finite-setting bounds on p_11 from the nine-setting grid.
/// Divides out (1-epsilon)^4, forms the upper difference-quotient series in
/// the Alice index, bounds its first Bob coefficient, and intersects over
/// the step choices {delta, sqrt(delta)} on each index. Throws
/// std::runtime_error on a missing setting or when a recovered value falls
/// outside [0, cap + 1e-9] (wrong epsilon or corrupted samples).
Interval joint_p11_bounds(const JointSamples& pvac_samples, double epsilon,
                          double delta, double cap);

struct TruncatedSolve {
  fock::PhotonDist dist;
  double condition = 0;
  bool ill_conditioned = false;  // condition estimate above 1e10
};

/// Least-squares solve of p_vac(eta_i) = sum_{n<=order} (1-eta_i)^n p_n.
/// Requires order+1 <= number of distinct settings. Entries are clamped to
/// [0,1] (and rescaled if clamping leaves mass above 1).
TruncatedSolve truncated_solve(const std::map<double, double>& pvac_samples,
                               std::size_t order);

/// Samples file: one `eta p_vac` pair per line, `#` starts a comment.
/// Throws std::runtime_error naming the offending line.
std::vector<std::pair<double, double>> parse_samples(std::istream& in);

/// Joint variant: `eta_a eta_b p_vac` per line.
std::vector<std::tuple<double, double, double>> parse_joint_samples(
    std::istream& in);

}  // namespace ddqkd::est
