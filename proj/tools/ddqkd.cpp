#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ddqkd/channel.hpp"
#include "ddqkd/estimation.hpp"
#include "ddqkd/keyrate.hpp"
#include "ddqkd/plugplay.hpp"
#include "ddqkd/source.hpp"

namespace {

using namespace ddqkd;

std::string fmt(double v) {
  std::array<char, 40> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 10);
  return std::string(buf.data(), res.ptr);
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() == 1) return {parts[0]};
  if (parts.size() != 3) {
    throw std::invalid_argument("range must be `value` or `start:end:step`");
  }
  const double start = parts[0], end = parts[1], step = parts[2];
  if (step <= 0.0) throw std::invalid_argument("range step must be positive");
  if (start > end) throw std::invalid_argument("range start exceeds end");
  std::vector<double> out;
  for (double v = start; v <= end + 1e-9; v += step) out.push_back(v);
  return out;
}

std::pair<double, double> parse_interval(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("interval must be `lo:hi`");
  }
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

keyrate::Protocol parse_protocol(const std::string& name) {
  if (name == "bb84") return keyrate::Protocol::Bb84;
  if (name == "6state") return keyrate::Protocol::SixState;
  throw std::invalid_argument("unknown protocol `" + name +
                              "` (expected bb84 or 6state)");
}

keyrate::Scenario parse_scenario(const std::string& name) {
  using keyrate::Scenario;
  for (Scenario s : {Scenario::Double, Scenario::DoubleBound, Scenario::Single,
                     Scenario::SingleBound, Scenario::UpdatedSquash,
                     Scenario::Pnr}) {
    if (name == keyrate::scenario_name(s)) return s;
  }
  throw std::invalid_argument("unknown scenario `" + name + "`");
}

std::vector<keyrate::Scenario> default_scenarios(keyrate::Protocol p) {
  using keyrate::Scenario;
  std::vector<Scenario> all = {Scenario::Double,      Scenario::DoubleBound,
                               Scenario::Single,      Scenario::SingleBound,
                               Scenario::UpdatedSquash, Scenario::Pnr};
  std::vector<Scenario> out;
  for (Scenario s : all) {
    if (keyrate::pairing_valid(p, s)) out.push_back(s);
  }
  return out;
}

struct SimulateArgs {
  std::string protocol = "bb84";
  std::vector<std::string> scenarios;
  double db_b = 3.0;
  std::string db_a = "0:30:1";
  double e = 0.03;
  double epsilon = 1e-6;
  std::size_t n_max = 0;  // 0 = policy cap
  std::string lambda_range = "0.001:0.5";
  std::string out_path;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::uint64_t mc_check = 0;
};

int run_simulate(const SimulateArgs& args) {
  std::vector<std::string> errors;
  keyrate::Protocol protocol = keyrate::Protocol::Bb84;
  std::vector<keyrate::Scenario> scenarios;
  std::vector<double> db_a_list;
  double lambda_lo = 0.0, lambda_hi = 0.0;

  try {
    protocol = parse_protocol(args.protocol);
  } catch (const std::exception& ex) {
    errors.emplace_back(ex.what());
  }
  if (args.scenarios.empty()) {
    scenarios = default_scenarios(protocol);
  } else {
    for (const auto& name : args.scenarios) {
      try {
        const auto sc = parse_scenario(name);
        keyrate::require_pairing(protocol, sc);
        scenarios.push_back(sc);
      } catch (const std::exception& ex) {
        errors.emplace_back(ex.what());
      }
    }
  }
  try {
    db_a_list = parse_range(args.db_a);
    for (double db : db_a_list) {
      if (db < 0.0) {
        errors.emplace_back("--db-a: values must be >= 0");
        break;
      }
    }
  } catch (const std::exception& ex) {
    errors.emplace_back(std::string("--db-a: ") + ex.what());
  }
  std::size_t n_max = 0;
  try {
    std::tie(lambda_lo, lambda_hi) = parse_interval(args.lambda_range);
    if (!(lambda_lo > 0.0) || lambda_lo > lambda_hi || lambda_hi > 2.0) {
      errors.emplace_back("--lambda-range: need 0 < lo <= hi <= 2");
    } else {
      const std::size_t cap = args.n_max > 0 ? args.n_max : source::kNMaxCap;
      try {
        n_max = source::choose_n_max(lambda_hi, cap);
      } catch (const std::exception& ex) {
        errors.emplace_back(std::string("--lambda-range: ") + ex.what());
      }
    }
  } catch (const std::exception& ex) {
    errors.emplace_back(std::string("--lambda-range: ") + ex.what());
  }
  if (args.db_b < 0.0) errors.emplace_back("--db-b: must be >= 0");
  if (args.e < 0.0 || args.e > 1.0) errors.emplace_back("--e: outside [0,1]");
  if (args.epsilon < 0.0 || args.epsilon >= 1.0) {
    errors.emplace_back("--epsilon: outside [0,1)");
  }
  if (args.out_path.empty()) errors.emplace_back("--out: required");

  if (!errors.empty()) {
    for (const auto& err : errors) std::cerr << "error: " << err << "\n";
    return 1;
  }

  channel::ChannelParams base;
  base.db_b = args.db_b;
  base.e = args.e;
  base.epsilon = args.epsilon;

  const auto rows =
      keyrate::distance_sweep(args.db_b, db_a_list, base, protocol, scenarios,
                              lambda_lo, lambda_hi, args.threads, n_max);

  std::string csv = "db_tot,db_a,db_b,protocol,scenario,lambda_opt,rate\n";
  for (const auto& row : rows) {
    csv += fmt(row.db_a + args.db_b);
    csv += ',';
    csv += fmt(row.db_a);
    csv += ',';
    csv += fmt(args.db_b);
    csv += ',';
    csv += keyrate::protocol_name(protocol);
    csv += ',';
    csv += keyrate::scenario_name(row.scenario);
    csv += ',';
    csv += fmt(row.lambda_opt);
    csv += ',';
    csv += fmt(std::max(row.rate, 0.0));
    csv += '\n';
  }

  if (args.mc_check > 0) {
    // Cross-check the enumerator against the event sampler at the first
    // sweep point, using the optimized pump there.
    channel::ChannelParams ch = base;
    ch.db_a = db_a_list.front();
    const double lambda = std::max(rows.front().lambda_opt, lambda_lo);
    const source::PdcSource src(lambda);
    const auto sim = channel::simulate(src, ch);
    const auto mc =
        channel::monte_carlo(pair_dist(src), ch, args.mc_check, args.seed);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      const double p = sim.reduced.outcome.p[i];
      const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-300) /
                                     static_cast<double>(args.mc_check));
      worst = std::max(worst, std::abs(mc.outcome.p[i] - p) / sigma);
    }
    std::cerr << "mc-check: db_a=" << fmt(ch.db_a) << " lambda=" << fmt(lambda)
              << " max cell deviation " << fmt(worst) << " sigma ("
              << args.mc_check << " samples, seed " << args.seed << ")\n";
  }

  std::ofstream out(args.out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open output file " << args.out_path << "\n";
    return 1;
  }
  out << csv;
  out.close();
  if (!out) {
    std::cerr << "error: write failed for " << args.out_path << "\n";
    std::error_code ec;
    std::filesystem::remove(args.out_path, ec);
    return 1;
  }
  return 0;
}

struct EstimateArgs {
  std::string samples_path;
  std::string mode = "prop1";
  double cap = 1.0;
  std::size_t order = 2;
  double epsilon = 0.0;
  double delta = 0.0;
};

int run_estimate(const EstimateArgs& args) {
  std::ifstream in(args.samples_path);
  if (!in) {
    std::cerr << "error: cannot open samples file " << args.samples_path
              << "\n";
    return 1;
  }

  if (args.mode == "prop1") {
    const auto samples = est::parse_samples(in);
    if (samples.size() != 3) {
      std::cerr << "error: prop1 mode needs exactly 3 settings, got "
                << samples.size() << "\n";
      return 1;
    }
    std::map<double, double> by_c;
    for (const auto& [eta, pvac] : samples) by_c[1.0 - eta] = pvac;
    auto it = by_c.begin();
    if (std::abs(it->first) > 1e-9) {
      std::cerr << "error: prop1 mode needs an eta = 1 setting\n";
      return 1;
    }
    const double f0 = it->second;
    ++it;
    const double c1 = it->first, f1 = it->second;
    ++it;
    const double c2 = it->first, f2 = it->second;
    const auto b = est::prop1_bounds(f0, f1, f2, c1, c2, args.cap);
    std::cout << "x0=" << fmt(b.x0) << "\n"
              << "x1_in=[" << fmt(b.x1_lo) << "," << fmt(b.x1_hi) << "]\n"
              << "x2_in=[" << fmt(b.x2_lo) << "," << fmt(b.x2_hi) << "]\n";
    return 0;
  }

  if (args.mode == "truncated") {
    const auto samples = est::parse_samples(in);
    std::map<double, double> by_eta(samples.begin(), samples.end());
    const auto solved = est::truncated_solve(by_eta, args.order);
    if (solved.ill_conditioned) {
      std::cerr << "warning: system condition estimate " << fmt(solved.condition)
                << " exceeds 1e10; results may be unreliable\n";
    }
    for (std::size_t n = 0; n <= solved.dist.n_max(); ++n) {
      std::cout << "p" << n << "=" << fmt(solved.dist[n]) << "\n";
    }
    std::cout << "condition=" << fmt(solved.condition) << "\n";
    return 0;
  }

  if (args.mode == "joint") {
    if (!(args.delta > 0.0)) {
      std::cerr << "error: --delta is required for joint mode\n";
      return 1;
    }
    const auto samples = est::parse_joint_samples(in);
    est::JointSamples map;
    for (const auto& [ea, eb, pvac] : samples) map[{ea, eb}] = pvac;
    const auto interval =
        est::joint_p11_bounds(map, args.epsilon, args.delta, args.cap);
    std::cout << "p11_in=[" << fmt(interval.lo) << "," << fmt(interval.hi)
              << "]\n";
    return 0;
  }

  std::cerr << "error: unknown mode `" << args.mode
            << "` (expected prop1, truncated or joint)\n";
  return 1;
}

struct PlugplayArgs {
  std::string dist_path;
  std::vector<double> phases;
  std::string method = "truncated";
  double cap = 1.0;
  std::size_t order = 0;
};

fock::PhotonDist read_dist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open distribution file " + path);
  }
  std::vector<double> probs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double p;
    if (!(ls >> p)) continue;
    if (p < 0.0 || p > 1.0) {
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": probability outside [0,1]");
    }
    probs.push_back(p);
  }
  if (probs.empty()) {
    throw std::runtime_error("distribution file contains no data lines");
  }
  return fock::PhotonDist(std::move(probs));
}

int run_plugplay(const PlugplayArgs& args) {
  if (args.phases.empty()) {
    std::cerr << "error: --phases is required\n";
    return 1;
  }
  const auto dist = read_dist_file(args.dist_path);

  std::map<double, double> samples;
  std::cout << "# pvac\nphi,p_vac\n";
  for (double phi : args.phases) {
    const double pvac = plugplay::pvac_phase(dist, phi);
    samples[phi] = pvac;
    std::cout << fmt(phi) << "," << fmt(pvac) << "\n";
  }

  std::cout << "\n# input_estimate\n";
  const auto method = args.method == "prop1" ? plugplay::EstimateMethod::Prop1
                                             : plugplay::EstimateMethod::Truncated;
  if (args.method != "prop1" && args.method != "truncated") {
    std::cerr << "error: unknown method `" << args.method << "`\n";
    return 1;
  }
  const auto estimate =
      plugplay::estimate_input_stats(samples, method, args.cap, args.order);
  if (const auto* bounds = std::get_if<est::Prop1Bounds>(&estimate)) {
    std::cout << "x0=" << fmt(bounds->x0) << "\n"
              << "x1_in=[" << fmt(bounds->x1_lo) << "," << fmt(bounds->x1_hi)
              << "]\n"
              << "x2_in=[" << fmt(bounds->x2_lo) << "," << fmt(bounds->x2_hi)
              << "]\n";
  } else {
    const auto& solved = std::get<est::TruncatedSolve>(estimate);
    if (solved.ill_conditioned) {
      std::cerr << "warning: system condition estimate "
                << fmt(solved.condition) << " exceeds 1e10\n";
    }
    std::cout << "n,p_n\n";
    for (std::size_t n = 0; n <= solved.dist.n_max(); ++n) {
      std::cout << n << "," << fmt(solved.dist[n]) << "\n";
    }
  }

  std::cout << "\n# output_stats\nphi,n,q_n\n";
  for (double phi : args.phases) {
    const auto q = plugplay::output_stats(dist, phi);
    for (std::size_t n = 0; n <= q.n_max(); ++n) {
      std::cout << fmt(phi) << "," << n << "," << fmt(q[n]) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detector-decoy photon-number estimation and QKD key rates"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Distance sweep of secret-key-rate lower bounds (CSV)");
  simulate->set_config("--config");
  simulate->add_option("--protocol", sim.protocol, "bb84 or 6state")
      ->capture_default_str();
  simulate
      ->add_option("--scenario", sim.scenarios,
                   "Scenario name, repeatable (default: all applicable)")
      ->delimiter(',');
  simulate->add_option("--db-b", sim.db_b, "Loss toward Bob, dB")
      ->capture_default_str();
  simulate->add_option("--db-a", sim.db_a, "Loss toward Alice: start:end:step")
      ->capture_default_str();
  simulate->add_option("--e", sim.e, "Misalignment flip probability")
      ->capture_default_str();
  simulate->add_option("--epsilon", sim.epsilon, "Dark-count probability")
      ->capture_default_str();
  simulate->add_option("--nmax", sim.n_max,
                       "Truncation cap override (0 = policy cap)")
      ->envname("DDQKD_NMAX");
  simulate->add_option("--lambda-range", sim.lambda_range,
                       "Pump optimization range lo:hi")
      ->capture_default_str();
  simulate->add_option("--out", sim.out_path, "Output CSV path");
  simulate->add_option("--seed", sim.seed, "Seed for the sampling cross-check")
      ->capture_default_str();
  simulate->add_option("--threads", sim.threads,
                       "Worker cap (0 = hardware parallelism)");
  simulate->add_option("--mc-check", sim.mc_check,
                       "Sample count for an event-sampler cross-check "
                       "(0 = off; diagnostic on stderr)");

  EstimateArgs est_args;
  auto* estimate = app.add_subcommand(
      "estimate", "Photon-number statistics from no-click samples");
  estimate->set_config("--config");
  estimate->add_option("--samples", est_args.samples_path,
                       "Samples file (`eta p_vac` per line; joint mode: "
                       "`eta_a eta_b p_vac`)")
      ->required();
  estimate->add_option("--mode", est_args.mode, "prop1, truncated or joint")
      ->capture_default_str();
  estimate->add_option("--cap", est_args.cap, "Total-mass bound C")
      ->capture_default_str();
  estimate->add_option("--order", est_args.order,
                       "Truncation order K (truncated mode)")
      ->capture_default_str();
  estimate->add_option("--epsilon", est_args.epsilon,
                       "Dark-count probability (joint mode)")
      ->capture_default_str();
  estimate->add_option("--delta", est_args.delta,
                       "Setting scale (joint mode)");

  PlugplayArgs pp;
  auto* plugplay_cmd = app.add_subcommand(
      "plugplay", "Phase-decoy estimation for the Plug & Play setup");
  plugplay_cmd->set_config("--config");
  plugplay_cmd
      ->add_option("--dist", pp.dist_path,
                   "Input distribution file (one probability per line)")
      ->required();
  plugplay_cmd->add_option("--phases", pp.phases, "Phases in radians")
      ->required()
      ->delimiter(',');
  plugplay_cmd->add_option("--method", pp.method, "prop1 or truncated")
      ->capture_default_str();
  plugplay_cmd->add_option("--cap", pp.cap, "Total-mass bound C")
      ->capture_default_str();
  plugplay_cmd->add_option("--order", pp.order,
                           "Truncation order (0 = automatic)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (estimate->parsed()) return run_estimate(est_args);
    if (plugplay_cmd->parsed()) return run_plugplay(pp);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
