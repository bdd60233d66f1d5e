#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ddqkd/channel.hpp"

namespace ddqkd::keyrate {

enum class Protocol { Bb84, SixState };

/// How the raw click data is turned into a key-rate lower bound. The
/// *Bound variants replace the exact single-photon QBER with the worst-case
/// bound available from the one-splitter setup; UpdatedSquash is the
/// squash-model benchmark (BB84 only); Pnr assumes photon-number-resolving
/// detectors.
enum class Scenario { Double, DoubleBound, Single, SingleBound, UpdatedSquash, Pnr };

const char* protocol_name(Protocol p);
const char* scenario_name(Scenario s);
bool pairing_valid(Protocol p, Scenario s);
/// Throws std::invalid_argument on an invalid pairing (no squash model
/// exists for the active 6-state measurement).
void require_pairing(Protocol p, Scenario s);

/// Per-single-photon secret fraction. BB84: 1 - h2(x), x in [0, 1/2].
/// 6-state: 1 + h2(x) - h2(3x/2) - (3x/2) log2 3, x in [0, 2/3].
double privacy_fn(Protocol p, double x);

struct ScenarioInputs {
  double g = 0;     // overall conclusive gain
  double q = 0;     // overall QBER
  double g0 = 0;    // vacuum gain
  double g11 = 0;   // single-photon gain
  double q11 = 0;   // single-photon QBER (exact or bound, per scenario)
  double p11 = 0;   // single-photon-pair arrival probability
};

ScenarioInputs scenario_inputs(const channel::ReducedStats& stats,
                               double epsilon, Scenario sc);
ScenarioInputs scenario_inputs(const channel::SimulationResult& sim,
                               const channel::ChannelParams& ch, Scenario sc);

/// Secret bits per pulse; negative values are preserved (zero-crossing
/// searches need them), presentation clamps at 0. f_ec > 1 scales the error
/// correction term away from the Shannon limit.
double rate_lower_bound(const ScenarioInputs& in, Protocol p, Scenario sc,
                        double f_ec = 1.0);

struct LambdaOpt {
  double lambda_opt = 0;
  double rate_opt = 0;
};

/// Coarse 40-point logarithmic grid over [lambda_lo, lambda_hi] followed by
/// golden-section refinement to relative tolerance 1e-4 on lambda.
/// Deterministic; returns (lambda_lo, 0) when no grid point is positive.
LambdaOpt optimize_lambda(const channel::ChannelParams& ch, Protocol p,
                          Scenario sc, double lambda_lo, double lambda_hi);
LambdaOpt optimize_lambda(const channel::SectorModel& model, double epsilon,
                          Protocol p, Scenario sc, double lambda_lo,
                          double lambda_hi);

struct SweepRow {
  double db_a = 0;
  Scenario scenario = Scenario::Double;
  double lambda_opt = 0;
  double rate = 0;
};

/// Distance sweep at fixed db_b: one optimized row per (db_a, scenario).
/// Points are evaluated concurrently (threads = 0 picks the hardware
/// parallelism) and merged in input order. n_max = 0 derives the truncation
/// from the tail policy at lambda_hi.
std::vector<SweepRow> distance_sweep(double db_b,
                                     const std::vector<double>& db_a_list,
                                     const channel::ChannelParams& base,
                                     Protocol p,
                                     const std::vector<Scenario>& scenarios,
                                     double lambda_lo, double lambda_hi,
                                     unsigned threads = 0,
                                     std::size_t n_max = 0);

}  // namespace ddqkd::keyrate
