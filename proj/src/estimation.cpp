#include "ddqkd/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ddqkd::est {

namespace {

double clamp(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

// sum_n c^n p_n with pow by repeated multiplication (c^0 = 1 even at c = 0).
double survival_series(const fock::PhotonDist& dist, double c) {
  double acc = 0.0;
  double cn = 1.0;
  for (std::size_t n = 0; n <= dist.n_max(); ++n) {
    acc += cn * dist[n];
    cn *= c;
  }
  return acc;
}

}  // namespace

DecoySetting DecoySetting::from_eta(double eta) {
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("DecoySetting: eta outside [0,1]");
  }
  return DecoySetting{eta, 1.0 - eta};
}

DecoySetting DecoySetting::from_c(double c) {
  if (c < 0.0 || c > 1.0) {
    throw std::invalid_argument("DecoySetting: c outside [0,1]");
  }
  return DecoySetting{1.0 - c, c};
}

double pvac_ideal(const fock::PhotonDist& dist, double eta) {
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("pvac_ideal: eta outside [0,1]");
  }
  return survival_series(dist, 1.0 - eta);
}

double pvac_noisy(const fock::PhotonDist& dist, double eta,
                  const DetectorModel& det) {
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("pvac_noisy: eta outside [0,1]");
  }
  if (det.eta_det < 0.0 || det.eta_det > 1.0 || det.epsilon < 0.0 ||
      det.epsilon > 1.0) {
    throw std::invalid_argument("pvac_noisy: detector model outside [0,1]");
  }
  return (1.0 - det.epsilon) * survival_series(dist, 1.0 - eta * det.eta_det);
}

Prop1Bounds prop1_bounds(double f0, double f_c1, double f_c2, double c1,
                         double c2, double cap) {
  if (!(c1 > 0.0) || !(c1 < 1.0) || !(c2 > 0.0) || !(c2 < 1.0)) {
    throw std::invalid_argument(
        "prop1_bounds: settings must satisfy 0 < c < 1 (denominators vanish "
        "at 0 and 1)");
  }
  if (!(c1 < c2)) {
    throw std::invalid_argument("prop1_bounds: requires c1 < c2");
  }
  if (!(cap > 0.0)) {
    throw std::invalid_argument("prop1_bounds: cap must be positive");
  }
  for (double f : {f0, f_c1, f_c2}) {
    if (f < -1e-9 || f > cap + 1e-9) {
      throw std::invalid_argument("prop1_bounds: f value outside [0, cap]");
    }
  }

  Prop1Bounds b;
  b.c1 = c1;
  b.c2 = c2;
  b.x0 = clamp(f0, 0.0, cap);

  b.raw_x1_hi = (f_c1 - f0) / c1;
  b.raw_x1_lo = (f_c1 - f0 * (1.0 - c1 * c1) - c1 * c1 * cap) / (c1 - c1 * c1);
  b.raw_x2_hi = (f_c2 - f0 - c2 * b.raw_x1_lo) / (c2 * c2);
  b.raw_x2_lo = (f_c2 - f0 * (1.0 - c2 * c2 * c2) -
                 b.raw_x1_hi * (c2 - c2 * c2 * c2) - c2 * c2 * c2 * cap) /
                (c2 * c2 - c2 * c2 * c2);

  b.x1_lo = clamp(b.raw_x1_lo, 0.0, cap);
  b.x1_hi = clamp(b.raw_x1_hi, 0.0, cap);
  b.x2_lo = clamp(b.raw_x2_lo, 0.0, cap);
  b.x2_hi = clamp(b.raw_x2_hi, 0.0, cap);
  return b;
}

std::vector<Prop1Bounds> convergence_sweep(const fock::PhotonDist& dist,
                                           const std::vector<double>& deltas,
                                           double cap) {
  std::vector<Prop1Bounds> out;
  out.reserve(deltas.size());
  for (double delta : deltas) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
      throw std::invalid_argument("convergence_sweep: delta outside (0,1)");
    }
    const double c1 = delta;
    const double c2 = std::sqrt(delta);
    const double f0 = pvac_ideal(dist, 1.0);
    const double f1 = pvac_ideal(dist, 1.0 - c1);
    const double f2 = pvac_ideal(dist, 1.0 - c2);
    out.push_back(prop1_bounds(f0, f1, f2, c1, c2, cap));
  }
  return out;
}

double pvac_joint(const fock::JointPhotonDist& joint, double eta_a,
                  double eta_b, double epsilon) {
  if (eta_a < 0.0 || eta_a > 1.0 || eta_b < 0.0 || eta_b > 1.0) {
    throw std::invalid_argument("pvac_joint: transmittance outside [0,1]");
  }
  const double ca = 1.0 - eta_a;
  const double cb = 1.0 - eta_b;
  const std::size_t d = joint.n_max() + 1;
  double acc = 0.0;
  double can = 1.0;
  for (std::size_t n = 0; n < d; ++n) {
    double cbm = 1.0;
    double row = 0.0;
    for (std::size_t m = 0; m < d; ++m) {
      row += cbm * joint.at(n, m);
      cbm *= cb;
    }
    acc += can * row;
    can *= ca;
  }
  const double dark = (1.0 - epsilon) * (1.0 - epsilon);
  return dark * dark * acc;
}

std::vector<std::pair<double, double>> joint_setting_etas(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("joint_setting_etas: delta outside (0,1)");
  }
  const double etas[3] = {1.0, 1.0 - delta, 1.0 - std::sqrt(delta)};
  std::vector<std::pair<double, double>> out;
  for (double a : etas)
    for (double b : etas) out.emplace_back(a, b);
  return out;
}

Interval joint_p11_bounds(const JointSamples& pvac_samples, double epsilon,
                          double delta, double cap) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("joint_p11_bounds: delta outside (0,1)");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument("joint_p11_bounds: epsilon outside [0,1)");
  }
  const double cs[3] = {0.0, delta, std::sqrt(delta)};

  // g[a][b] = sum_{nm} cs[a]^n cs[b]^m p_nm, recovered from the samples.
  double g[3][3];
  const double dark = (1.0 - epsilon) * (1.0 - epsilon);
  const double divisor = dark * dark;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double eta_a = 1.0 - cs[a];
      const double eta_b = 1.0 - cs[b];
      const double* found = nullptr;
      for (const auto& [key, value] : pvac_samples) {
        if (std::abs(key.first - eta_a) <= 1e-12 &&
            std::abs(key.second - eta_b) <= 1e-12) {
          found = &value;
          break;
        }
      }
      if (found == nullptr) {
        throw std::runtime_error(
            "joint_p11_bounds: missing setting (eta_a=" +
            std::to_string(eta_a) + ", eta_b=" + std::to_string(eta_b) + ")");
      }
      const double recovered = *found / divisor;
      if (recovered < -1e-9 || recovered > cap + 1e-9) {
        throw std::runtime_error(
            "joint_p11_bounds: recovered no-click value " +
            std::to_string(recovered) +
            " outside [0, cap]; epsilon or samples are inconsistent");
      }
      g[a][b] = recovered;
    }
  }

  // Alice-index upper difference quotient U_s(c_b) = [g(s,c_b) - g(0,c_b)]/s
  // is itself a series sum_m c_b^m y_m with y_m >= 0, sum y_m <= cap and
  // y_1 in [p11, p11 + s*cap]; bounding y_1 in the Bob index at step t and
  // correcting by s*cap sandwiches p11. Intersect over the step choices.
  double lo = 0.0;
  double hi = cap;
  for (int a : {1, 2}) {
    const double s = cs[a];
    double u[3];
    for (int b = 0; b < 3; ++b) u[b] = (g[a][b] - g[0][b]) / s;
    for (int bi : {1, 2}) {
      const double t = cs[bi];
      const double upper = (u[bi] - u[0]) / t;
      const double lower =
          (u[bi] - u[0] * (1.0 - t * t) - t * t * cap) / (t - t * t) - s * cap;
      hi = std::min(hi, upper);
      lo = std::max(lo, lower);
    }
  }
  return Interval{clamp(lo, 0.0, cap), clamp(hi, 0.0, cap)};
}

TruncatedSolve truncated_solve(const std::map<double, double>& pvac_samples,
                               std::size_t order) {
  const std::size_t rows = pvac_samples.size();
  const std::size_t cols = order + 1;
  if (cols > rows) {
    throw std::invalid_argument(
        "truncated_solve: needs at least order+1 distinct settings");
  }
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  std::size_t i = 0;
  for (const auto& [eta, pvac] : pvac_samples) {
    if (eta < 0.0 || eta > 1.0) {
      throw std::invalid_argument("truncated_solve: eta outside [0,1]");
    }
    const double c = 1.0 - eta;
    double cn = 1.0;
    for (std::size_t n = 0; n < cols; ++n) {
      a(i, n) = cn;
      cn *= c;
    }
    b(i) = pvac;
    ++i;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double condition =
      smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  Eigen::VectorXd x = svd.solve(b);

  std::vector<double> p(cols);
  double total = 0.0;
  for (std::size_t n = 0; n < cols; ++n) {
    p[n] = clamp(x(n), 0.0, 1.0);
    total += p[n];
  }
  if (total > 1.0) {
    for (double& v : p) v /= total;
  }
  return TruncatedSolve{fock::PhotonDist(std::move(p)), condition,
                        condition > 1e10};
}

std::vector<std::pair<double, double>> parse_samples(std::istream& in) {
  std::vector<std::pair<double, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double eta, pvac;
    if (!(ls >> eta)) continue;  // blank or comment-only line
    if (!(ls >> pvac)) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected `eta p_vac`");
    }
    std::string rest;
    if (ls >> rest) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": trailing data `" + rest + "`");
    }
    if (eta < 0.0 || eta > 1.0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": eta outside [0,1]");
    }
    if (pvac < 0.0 || pvac > 1.0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": p_vac outside [0,1]");
    }
    out.emplace_back(eta, pvac);
  }
  if (out.empty()) {
    throw std::runtime_error("samples file contains no data lines");
  }
  return out;
}

std::vector<std::tuple<double, double, double>> parse_joint_samples(
    std::istream& in) {
  std::vector<std::tuple<double, double, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double eta_a, eta_b, pvac;
    if (!(ls >> eta_a)) continue;
    if (!(ls >> eta_b >> pvac)) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected `eta_a eta_b p_vac`");
    }
    if (eta_a < 0.0 || eta_a > 1.0 || eta_b < 0.0 || eta_b > 1.0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": eta outside [0,1]");
    }
    if (pvac < 0.0 || pvac > 1.0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": p_vac outside [0,1]");
    }
    out.emplace_back(eta_a, eta_b, pvac);
  }
  if (out.empty()) {
    throw std::runtime_error("samples file contains no data lines");
  }
  return out;
}

}  // namespace ddqkd::est
