#include "ddqkd/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ddqkd::channel {

namespace {

// Distribution over final (k, l) mode counts on one side, given the
// configuration counts (n_h, n_v), transmittance eta and flip probability e.
// Loss first, then flips, matching the physical ordering.
struct SideDist {
  std::size_t n;                // k + l <= n
  std::vector<double> p;        // (n+1)^2, row-major over (k, l)

  double at(std::size_t k, std::size_t l) const { return p[k * (n + 1) + l]; }
};

SideDist side_dist(unsigned n_h, unsigned n_v, double eta, double e) {
  const std::size_t n = n_h + n_v;
  SideDist out{n, std::vector<double>((n + 1) * (n + 1), 0.0)};
  for (unsigned i = 0; i <= n_h; ++i) {
    const double pi = fock::binom_pmf(n_h, i, eta);
    if (pi == 0.0) continue;
    const std::vector<double> flips_h = fock::flip_split(i, e);
    for (unsigned j = 0; j <= n_v; ++j) {
      const double pj = fock::binom_pmf(n_v, j, eta);
      if (pj == 0.0) continue;
      const std::vector<double> flips_v = fock::flip_split(j, e);
      for (unsigned fh = 0; fh <= i; ++fh) {
        for (unsigned fv = 0; fv <= j; ++fv) {
          const std::size_t k = i - fh + fv;
          const std::size_t l = j - fv + fh;
          out.p[k * (n + 1) + l] += pi * pj * flips_h[fh] * flips_v[fv];
        }
      }
    }
  }
  return out;
}

// Click outcome probabilities for one side given arrival counts (k, l):
// index 0 = vac, 1 = only H, 2 = only V, 3 = both.
std::array<double, 4> click4(bool h_hit, bool v_hit, double epsilon) {
  const double h_silent = h_hit ? 0.0 : 1.0 - epsilon;
  const double v_silent = v_hit ? 0.0 : 1.0 - epsilon;
  return {h_silent * v_silent, (1.0 - h_silent) * v_silent,
          h_silent * (1.0 - v_silent), (1.0 - h_silent) * (1.0 - v_silent)};
}

std::array<double, 4> relabel4(const std::array<double, 4>& v) {
  return {v[0], v[2], v[1], v[3]};
}

// Reduced statistics of one side-pair of distributions.
void accumulate_reduced(ReducedStats& acc, const SideDist& a,
                        const SideDist& b, double weight, double epsilon) {
  const std::size_t na = a.n, nb = b.n;
  std::array<double, 4> a4{}, b4{};
  double a_single[2] = {0.0, 0.0};  // mass of (1,0) and (0,1)
  double b_single[2] = {0.0, 0.0};
  for (std::size_t k = 0; k <= na; ++k) {
    for (std::size_t l = 0; l <= na; ++l) {
      const double p = a.at(k, l);
      if (p == 0.0) continue;
      const auto c = click4(k > 0, l > 0, epsilon);
      for (int o = 0; o < 4; ++o) a4[o] += p * c[o];
    }
  }
  for (std::size_t r = 0; r <= nb; ++r) {
    for (std::size_t s = 0; s <= nb; ++s) {
      const double p = b.at(r, s);
      if (p == 0.0) continue;
      const auto c = click4(r > 0, s > 0, epsilon);
      for (int o = 0; o < 4; ++o) b4[o] += p * c[o];
    }
  }
  if (na >= 1) {
    a_single[0] = a.at(1, 0);
    a_single[1] = a.at(0, 1);
  }
  if (nb >= 1) {
    b_single[0] = b.at(1, 0);
    b_single[1] = b.at(0, 1);
  }

  const auto b4r = relabel4(b4);
  for (int oa = 0; oa < 4; ++oa)
    for (int ob = 0; ob < 4; ++ob)
      acc.outcome.p[oa * 4 + ob] += weight * a4[oa] * b4r[ob];

  const double a1 = a_single[0] + a_single[1];
  const double b1 = b_single[0] + b_single[1];
  acc.p11 += weight * a1 * b1;
  acc.err11 += weight * (a_single[0] * b_single[0] + a_single[1] * b_single[1]);

  const double a_vac = a.at(0, 0);
  for (int ob = 0; ob < 4; ++ob)
    acc.vac_a_bob[ob] += weight * a_vac * b4r[ob];
}

ReducedStats sector_reduced(unsigned n, const ChannelParams& ch) {
  const double eta_a = transmittance_from_db(ch.db_a);
  const double eta_b = transmittance_from_db(ch.db_b);
  ReducedStats acc;
  for (const auto& cfg : source::pair_state_weights(n)) {
    const SideDist a = side_dist(cfg.a_h, cfg.a_v, eta_a, ch.e);
    const SideDist b = side_dist(cfg.b_h, cfg.b_v, eta_b, ch.e);
    accumulate_reduced(acc, a, b, cfg.weight, ch.epsilon);
  }
  return acc;
}

}  // namespace

double transmittance_from_db(double db) {
  if (db < 0.0) throw std::invalid_argument("transmittance_from_db: db < 0");
  return std::pow(10.0, -db / 10.0);
}

double OutcomeDist::total() const {
  double t = 0.0;
  for (double v : p) t += v;
  return t;
}

OutcomeDist relabel_bob(const OutcomeDist& dist) {
  OutcomeDist out;
  const int swap[4] = {0, 2, 1, 3};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) out.p[a * 4 + swap[b]] = dist.p[a * 4 + b];
  return out;
}

ResolvedStats::ResolvedStats(std::size_t n_max)
    : n_max_(n_max),
      q_((n_max + 1) * (n_max + 1) * (n_max + 1) * (n_max + 1), 0.0) {}

double ResolvedStats::total() const {
  double t = 0.0;
  for (double v : q_) t += v;
  return t;
}

fock::JointPhotonDist ResolvedStats::pair_marginal() const {
  const std::size_t d = n_max_ + 1;
  std::vector<double> p(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) {
          const double v = q(k, l, r, s);
          if (v == 0.0) continue;
          const std::size_t n = k + l, m = r + s;
          if (n < d && m < d) p[n * d + m] += v;
        }
  return fock::JointPhotonDist(n_max_, std::move(p));
}

fock::PhotonDist ResolvedStats::alice_marginal() const {
  const std::size_t d = n_max_ + 1;
  std::vector<double> p(d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) {
          const double v = q(k, l, r, s);
          if (v != 0.0 && k + l < d) p[k + l] += v;
        }
  return fock::PhotonDist(std::move(p));
}

ResolvedStats ResolvedStats::relabel_bob() const {
  ResolvedStats out(n_max_);
  const std::size_t d = n_max_ + 1;
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) out.add(k, l, s, r, q(k, l, r, s));
  return out;
}

ResolvedStats arrival_stats(const fock::PhotonDist& pair_dist,
                            const ChannelParams& ch) {
  const double eta_a = transmittance_from_db(ch.db_a);
  const double eta_b = transmittance_from_db(ch.db_b);
  const std::size_t n_max = pair_dist.n_max();
  ResolvedStats out(n_max);
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double pn = pair_dist[n];
    if (pn == 0.0) continue;
    for (const auto& cfg : source::pair_state_weights(static_cast<unsigned>(n))) {
      const SideDist a = side_dist(cfg.a_h, cfg.a_v, eta_a, ch.e);
      const SideDist b = side_dist(cfg.b_h, cfg.b_v, eta_b, ch.e);
      const double w = pn * cfg.weight;
      for (std::size_t k = 0; k <= n; ++k)
        for (std::size_t l = 0; k + l <= n; ++l) {
          const double pa = a.at(k, l);
          if (pa == 0.0) continue;
          for (std::size_t r = 0; r <= n; ++r)
            for (std::size_t s = 0; r + s <= n; ++s) {
              const double pb = b.at(r, s);
              if (pb != 0.0) out.add(k, l, r, s, w * pa * pb);
            }
        }
    }
  }
  return out;
}

ResolvedStats arrival_stats(const source::PdcSource& src,
                            const ChannelParams& ch) {
  if (src.tail() > source::kTailPolicy) {
    throw std::runtime_error(
        "arrival_stats: source truncation tail " + std::to_string(src.tail()) +
        " exceeds the 1e-10 policy (lambda too large for n_max " +
        std::to_string(src.n_max) + ")");
  }
  return arrival_stats(pair_dist(src), ch);
}

OutcomeDist click_pattern(const ResolvedStats& resolved, double epsilon) {
  OutcomeDist out;
  const std::size_t d = resolved.n_max() + 1;
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l) {
      const auto a4 = click4(k > 0, l > 0, epsilon);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) {
          const double p = resolved.q(k, l, r, s);
          if (p == 0.0) continue;
          const auto b4 = click4(r > 0, s > 0, epsilon);
          for (int oa = 0; oa < 4; ++oa)
            for (int ob = 0; ob < 4; ++ob)
              out.p[oa * 4 + ob] += p * a4[oa] * b4[ob];
        }
    }
  return out;
}

SinglePhotonQber single_photon_qber(const ResolvedStats& resolved) {
  if (resolved.n_max() < 1) return SinglePhotonQber{0.0, 0.0, false};
  const double p11 = resolved.q(1, 0, 1, 0) + resolved.q(1, 0, 0, 1) +
                     resolved.q(0, 1, 1, 0) + resolved.q(0, 1, 0, 1);
  if (p11 <= 0.0) return SinglePhotonQber{0.0, 0.0, false};
  const double err = resolved.q(1, 0, 1, 0) + resolved.q(0, 1, 0, 1);
  return SinglePhotonQber{p11, err / p11, true};
}

double wstate_loss_qber() {
  // Two-pair state; Alice side lossy (any eta in (0,1) works), Bob lossless.
  ChannelParams ch;
  ch.db_a = 10.0 * std::log10(2.0);  // eta_a = 1/2
  ch.db_b = 0.0;
  ch.e = 0.0;
  ch.epsilon = 0.0;
  const auto pair2 = fock::PhotonDist::delta(2, 2);
  const ResolvedStats q = arrival_stats(pair2, ch);

  // Condition on (1 photon at Alice, 2 at Bob). Bob double clicks are
  // randomly assigned; correct events are the raw anticorrelated cells.
  double total = 0.0, err = 0.0;
  const std::size_t alice[2][2] = {{1, 0}, {0, 1}};
  for (const auto& a : alice) {
    for (std::size_t r = 0; r <= 2; ++r) {
      const std::size_t s = 2 - r;
      const double p = q.q(a[0], a[1], r, s);
      total += p;
      if (r == 1 && s == 1) {
        err += 0.5 * p;
      } else if (a[0] == 1 && r == 2) {  // Alice H vs Bob H,H: relabeled mismatch
        err += p;
      } else if (a[1] == 1 && s == 2) {  // Alice V vs Bob V,V
        err += p;
      }
    }
  }
  if (total <= 0.0) throw std::runtime_error("wstate_loss_qber: empty sector");
  return err / total;
}

ReducedStats reduce(const ResolvedStats& resolved, double epsilon) {
  ReducedStats out;
  out.outcome = relabel_bob(click_pattern(resolved, epsilon));
  const auto sp = single_photon_qber(resolved);
  out.p11 = sp.p11;
  out.err11 = sp.p11 * sp.q11;
  const std::size_t d = resolved.n_max() + 1;
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t s = 0; s < d; ++s) {
      const double p = resolved.q(0, 0, r, s);
      if (p == 0.0) continue;
      const auto b4 = relabel4(click4(r > 0, s > 0, epsilon));
      for (int ob = 0; ob < 4; ++ob) out.vac_a_bob[ob] += p * b4[ob];
    }
  return out;
}

SimulationResult simulate(const source::PdcSource& src,
                          const ChannelParams& ch) {
  ResolvedStats resolved = arrival_stats(src, ch);
  ReducedStats reduced = reduce(resolved, ch.epsilon);
  const auto sp = single_photon_qber(resolved);
  return SimulationResult{std::move(resolved), std::move(reduced), sp.p11,
                          sp.q11, sp.defined};
}

SectorModel::SectorModel(const ChannelParams& ch, std::size_t n_max) {
  sectors_.reserve(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    sectors_.push_back(sector_reduced(static_cast<unsigned>(n), ch));
  }
}

ReducedStats SectorModel::mix(const fock::PhotonDist& pair_dist) const {
  if (pair_dist.n_max() > n_max()) {
    throw std::invalid_argument("SectorModel::mix: pair distribution exceeds "
                                "the prepared sector range");
  }
  ReducedStats out;
  for (std::size_t n = 0; n <= pair_dist.n_max(); ++n) {
    const double pn = pair_dist[n];
    if (pn == 0.0) continue;
    const ReducedStats& s = sectors_[n];
    for (int i = 0; i < 16; ++i) out.outcome.p[i] += pn * s.outcome.p[i];
    out.p11 += pn * s.p11;
    out.err11 += pn * s.err11;
    for (int i = 0; i < 4; ++i) out.vac_a_bob[i] += pn * s.vac_a_bob[i];
  }
  return out;
}

McResult monte_carlo(const fock::PhotonDist& pair_dist,
                     const ChannelParams& ch, std::uint64_t samples,
                     std::uint64_t seed) {
  const double eta_a = transmittance_from_db(ch.db_a);
  const double eta_b = transmittance_from_db(ch.db_b);
  const std::size_t n_max = pair_dist.n_max();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> cum(n_max + 1);
  double acc = 0.0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    acc += pair_dist[n];
    cum[n] = acc;
  }

  McResult result{OutcomeDist{}, ResolvedStats(n_max), samples};
  std::vector<std::uint64_t> outcome_counts(16, 0);
  std::vector<std::uint64_t> resolved_counts(
      (n_max + 1) * (n_max + 1) * (n_max + 1) * (n_max + 1), 0);
  const std::size_t d = n_max + 1;

  for (std::uint64_t it = 0; it < samples; ++it) {
    const double u = unit(rng);
    std::size_t n = n_max;
    for (std::size_t i = 0; i <= n_max; ++i) {
      if (u < cum[i]) {
        n = i;
        break;
      }
    }
    const std::size_t m =
        n == 0 ? 0
               : std::uniform_int_distribution<std::size_t>(0, n)(rng);

    // Per-photon survival then per-photon flip, per mode and side.
    auto transmit = [&](std::size_t in_h, std::size_t in_v, double eta,
                        std::size_t& out_h, std::size_t& out_v) {
      std::size_t kh = 0, kv = 0;
      for (std::size_t i = 0; i < in_h; ++i)
        if (unit(rng) < eta) ++kh;
      for (std::size_t i = 0; i < in_v; ++i)
        if (unit(rng) < eta) ++kv;
      out_h = 0;
      out_v = 0;
      for (std::size_t i = 0; i < kh; ++i) {
        if (unit(rng) < ch.e) ++out_v; else ++out_h;
      }
      for (std::size_t i = 0; i < kv; ++i) {
        if (unit(rng) < ch.e) ++out_h; else ++out_v;
      }
    };

    std::size_t k, l, r, s;
    transmit(n - m, m, eta_a, k, l);
    transmit(m, n - m, eta_b, r, s);
    ++resolved_counts[((k * d + l) * d + r) * d + s];

    auto outcome = [&](std::size_t h, std::size_t v) {
      const bool h_click = h > 0 || unit(rng) < ch.epsilon;
      const bool v_click = v > 0 || unit(rng) < ch.epsilon;
      if (h_click && v_click) return 3;
      if (h_click) return 1;
      if (v_click) return 2;
      return 0;
    };
    const int oa = outcome(k, l);
    int ob = outcome(r, s);
    if (ob == 1) ob = 2; else if (ob == 2) ob = 1;  // Bob interchanges 0/1
    ++outcome_counts[oa * 4 + ob];
  }

  const double inv = 1.0 / static_cast<double>(samples);
  for (int i = 0; i < 16; ++i)
    result.outcome.p[i] = static_cast<double>(outcome_counts[i]) * inv;
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) {
          const auto c = resolved_counts[((k * d + l) * d + r) * d + s];
          if (c != 0)
            result.resolved.add(k, l, r, s, static_cast<double>(c) * inv);
        }
  return result;
}

}  // namespace ddqkd::channel
