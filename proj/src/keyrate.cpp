#include "ddqkd/keyrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ddqkd/source.hpp"

namespace ddqkd::keyrate {

namespace {

using channel::Outcome;

constexpr double kGolden = 0.6180339887498949;  // (sqrt(5)-1)/2

double clamp01(double x, double hi) { return std::min(std::max(x, 0.0), hi); }

struct GainQber {
  double g = 0;
  double q = 0;
};

// Conclusive gain and QBER for a conclusive set; double clicks contribute
// 1/2 to the error rate when kept.
GainQber gain_qber(const channel::OutcomeDist& out, bool keep_double) {
  const int lo = 1;
  const int hi = keep_double ? 3 : 2;
  double g = 0.0, err = 0.0;
  for (int a = lo; a <= hi; ++a) {
    for (int b = lo; b <= hi; ++b) {
      const double p = out.p[a * 4 + b];
      g += p;
      if (a == 3 || b == 3) {
        err += 0.5 * p;
      } else if (a != b) {
        err += p;
      }
    }
  }
  return GainQber{g, g > 0.0 ? err / g : 0.0};
}

}  // namespace

const char* protocol_name(Protocol p) {
  return p == Protocol::Bb84 ? "bb84" : "6state";
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Double: return "double";
    case Scenario::DoubleBound: return "double-bound";
    case Scenario::Single: return "single";
    case Scenario::SingleBound: return "single-bound";
    case Scenario::UpdatedSquash: return "updated-squash";
    case Scenario::Pnr: return "pnr";
  }
  return "?";
}

bool pairing_valid(Protocol p, Scenario s) {
  return !(p == Protocol::SixState && s == Scenario::UpdatedSquash);
}

void require_pairing(Protocol p, Scenario s) {
  if (!pairing_valid(p, s)) {
    throw std::invalid_argument(
        "no squash model exists for the active 6-state protocol");
  }
}

double privacy_fn(Protocol p, double x) {
  const double limit = p == Protocol::Bb84 ? 0.5 : 2.0 / 3.0;
  if (x < -1e-12 || x > limit + 1e-12) {
    throw std::domain_error("privacy_fn: argument outside protocol domain");
  }
  x = clamp01(x, limit);
  if (p == Protocol::Bb84) {
    return 1.0 - fock::binary_entropy(x);
  }
  return 1.0 + fock::binary_entropy(x) - fock::binary_entropy(1.5 * x) -
         1.5 * x * std::log2(3.0);
}

ScenarioInputs scenario_inputs(const channel::ReducedStats& stats,
                               double epsilon, Scenario sc) {
  const double q11_exact = stats.p11 > 0.0 ? stats.err11 / stats.p11 : 0.0;
  const double p0d =
      stats.vac_a_bob[1] + stats.vac_a_bob[2] + stats.vac_a_bob[3];
  const double p0s = stats.vac_a_bob[1] + stats.vac_a_bob[2];
  const double dark_any = 1.0 - (1.0 - epsilon) * (1.0 - epsilon);
  const double dark_one = 2.0 * epsilon * (1.0 - epsilon);

  const GainQber d = gain_qber(stats.outcome, true);
  const GainQber s = gain_qber(stats.outcome, false);

  ScenarioInputs in;
  in.p11 = stats.p11;
  switch (sc) {
    case Scenario::Double:
    case Scenario::DoubleBound: {
      in.g = d.g;
      in.q = d.q;
      in.g0 = dark_any * p0d;
      in.g11 = stats.p11;
      in.q11 = q11_exact;
      if (sc == Scenario::DoubleBound) {
        in.q11 = in.g11 > 0.0
                     ? clamp01((d.q * d.g - in.g0 / 2.0) / in.g11, 0.5)
                     : 0.0;
      }
      break;
    }
    case Scenario::Single:
    case Scenario::SingleBound: {
      in.g = s.g;
      in.q = s.q;
      in.g0 = dark_one * p0s;
      in.g11 = (1.0 - epsilon) * (1.0 - epsilon) * stats.p11;
      in.q11 = q11_exact;
      if (sc == Scenario::SingleBound) {
        in.q11 = in.g11 > 0.0
                     ? clamp01((s.q * s.g - in.g0 / 2.0) / in.g11, 0.5)
                     : 0.0;
      }
      break;
    }
    case Scenario::UpdatedSquash: {
      in.g = d.g;
      in.q = d.q;
      in.g0 = dark_any * p0d;
      in.g11 = d.g - in.g0;
      in.q11 = in.g11 > 0.0
                   ? clamp01((d.q * d.g - in.g0 / 2.0) / in.g11, 0.5)
                   : 0.0;
      break;
    }
    case Scenario::Pnr: {
      in.q11 = q11_exact;
      break;
    }
  }
  return in;
}

ScenarioInputs scenario_inputs(const channel::SimulationResult& sim,
                               const channel::ChannelParams& ch, Scenario sc) {
  return scenario_inputs(sim.reduced, ch.epsilon, sc);
}

double rate_lower_bound(const ScenarioInputs& in, Protocol p, Scenario sc,
                        double f_ec) {
  require_pairing(p, sc);
  if (f_ec < 1.0) {
    throw std::invalid_argument("rate_lower_bound: f_ec must be >= 1");
  }
  switch (sc) {
    case Scenario::Pnr:
      if (in.p11 <= 0.0) return 0.0;
      return in.p11 *
             (privacy_fn(p, in.q11) - f_ec * fock::binary_entropy(in.q11));
    case Scenario::UpdatedSquash:
      if (in.g11 <= 0.0) return 0.0;
      return in.g0 + in.g11 * (1.0 - fock::binary_entropy(in.q11)) -
             in.g * f_ec * fock::binary_entropy(in.q);
    default:
      if (in.g11 <= 0.0) return 0.0;
      return in.g0 + in.g11 * privacy_fn(p, in.q11) -
             in.g * f_ec * fock::binary_entropy(in.q);
  }
}

LambdaOpt optimize_lambda(const channel::SectorModel& model, double epsilon,
                          Protocol p, Scenario sc, double lambda_lo,
                          double lambda_hi) {
  require_pairing(p, sc);
  if (!(lambda_lo > 0.0) || !(lambda_lo <= lambda_hi) || lambda_hi > 2.0) {
    throw std::invalid_argument(
        "optimize_lambda: range must satisfy 0 < lo <= hi <= 2");
  }
  const std::size_t n_max = model.n_max();

  auto rate_at = [&](double lambda) {
    const source::PdcSource src(lambda, n_max);
    const auto reduced = model.mix(pair_dist(src));
    return rate_lower_bound(scenario_inputs(reduced, epsilon, sc), p, sc);
  };

  constexpr int kGridPoints = 40;
  double best_lambda = lambda_lo;
  double best_rate = -std::numeric_limits<double>::infinity();
  std::vector<double> grid(kGridPoints);
  const double log_lo = std::log(lambda_lo);
  const double log_hi = std::log(lambda_hi);
  int best_index = 0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double t = kGridPoints == 1
                         ? 0.0
                         : static_cast<double>(i) / (kGridPoints - 1);
    grid[i] = std::exp(log_lo + t * (log_hi - log_lo));
    const double r = rate_at(grid[i]);
    if (r > best_rate) {
      best_rate = r;
      best_lambda = grid[i];
      best_index = i;
    }
  }
  if (best_rate <= 0.0) return LambdaOpt{lambda_lo, 0.0};

  double a = grid[std::max(best_index - 1, 0)];
  double b = grid[std::min(best_index + 1, kGridPoints - 1)];
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = rate_at(c);
  double fd = rate_at(d);
  while (b - a > 1e-4 * b) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = rate_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = rate_at(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double rmid = rate_at(mid);
  if (rmid >= best_rate) return LambdaOpt{mid, rmid};
  return LambdaOpt{best_lambda, best_rate};
}

LambdaOpt optimize_lambda(const channel::ChannelParams& ch, Protocol p,
                          Scenario sc, double lambda_lo, double lambda_hi) {
  const std::size_t n_max = source::choose_n_max(lambda_hi);
  const channel::SectorModel model(ch, n_max);
  return optimize_lambda(model, ch.epsilon, p, sc, lambda_lo, lambda_hi);
}

std::vector<SweepRow> distance_sweep(double db_b,
                                     const std::vector<double>& db_a_list,
                                     const channel::ChannelParams& base,
                                     Protocol p,
                                     const std::vector<Scenario>& scenarios,
                                     double lambda_lo, double lambda_hi,
                                     unsigned threads, std::size_t n_max) {
  for (Scenario sc : scenarios) require_pairing(p, sc);
  if (n_max == 0) n_max = source::choose_n_max(lambda_hi);
  const std::size_t n_points = db_a_list.size();
  const std::size_t n_sc = scenarios.size();
  std::vector<SweepRow> rows(n_points * n_sc);

  auto run_point = [&](std::size_t i) {
    channel::ChannelParams ch = base;
    ch.db_a = db_a_list[i];
    ch.db_b = db_b;
    const channel::SectorModel model(ch, n_max);
    for (std::size_t j = 0; j < n_sc; ++j) {
      const LambdaOpt opt = optimize_lambda(model, ch.epsilon, p, scenarios[j],
                                            lambda_lo, lambda_hi);
      rows[i * n_sc + j] =
          SweepRow{db_a_list[i], scenarios[j], opt.lambda_opt, opt.rate_opt};
    }
  };

  unsigned n_threads = threads == 0 ? std::thread::hardware_concurrency()
                                    : threads;
  n_threads = std::max(1u, std::min<unsigned>(n_threads, n_points));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < n_points; ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_points;
             i = next.fetch_add(1)) {
          run_point(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace ddqkd::keyrate
