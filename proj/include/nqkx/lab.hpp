#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "nqkx/bitmatrix.hpp"
#include "nqkx/nat.hpp"
#include "nqkx/params.hpp"
#include "nqkx/protocols.hpp"
#include "nqkx/rng.hpp"

namespace nqkx {

// ---------------------------------------------------------------------------
// Samples for the two decisional assumptions

// Adversary-visible tuple plus the hidden challenge bit. The generating
// trace (M, exponents) stays alongside for oracle cross-checks in tests;
// run_distinguisher exposes only the view.
struct DhweSample {
  BitMatrix A, B, S, Y;
  BitVector v;
  bool hidden_bit = false;

  // generation trace, never shown to strategies
  Instance instance;
  Nat alpha, beta, delta;
};

struct RsarSample {
  BitMatrix A, B;
  Nat e;
  BitMatrix Y;
  BitVector v;
  std::size_t j = 0;
  bool hidden_bit = false;

  Instance instance;
  Nat d, beta, delta;
};

inline DhweSample gen_dhwe_sample(const SystemParams& params, bool b, Rng& rng,
                                  std::size_t budget = kDefaultResampleBudget) {
  DhweSample smp;
  smp.instance = generate(params, rng, budget);
  const SecretParams& sp = smp.instance.secret;
  const std::size_t n = params.n;
  const std::size_t j = smp.instance.params.j;

  smp.alpha = nat_below(rng, sp.phi);
  smp.beta = nat_below(rng, sp.phi);
  const Nat ab = smp.alpha * smp.beta % sp.phi;
  if (b) {
    smp.delta = ab;
  } else {
    Nat gamma;
    std::size_t t = 0;
    do {
      if (t++ >= budget)
        throw ResampleBudgetExceeded("gen_dhwe_sample: gamma resampling");
      gamma = nat_below(rng, sp.phi);
    } while (gamma == ab);
    smp.delta = gamma;
  }

  smp.A = add(sp.M, mul(BitMatrix::random(n, rng), sp.Q));
  smp.B = add(pow(sp.M, smp.alpha), mul(BitMatrix::random(n, rng), sp.Q));
  smp.Y = add(pow(sp.M, smp.beta), mul(BitMatrix::random(n, rng), sp.Q));
  smp.S = mul(BitMatrix::random(n, rng), sp.Q);
  smp.v = pow(sp.M, smp.delta).column(j);
  smp.hidden_bit = b;
  return smp;
}

inline RsarSample gen_rsar_sample(const SystemParams& params, bool b, Rng& rng,
                                  std::size_t budget = kDefaultResampleBudget) {
  RsarSample smp;
  smp.instance = generate(params, rng, budget);
  const SecretParams& sp = smp.instance.secret;
  const std::size_t n = params.n;
  smp.j = smp.instance.params.j;

  // e from the unit group of Z_phi
  std::size_t t = 0;
  do {
    if (t++ >= budget) throw ResampleBudgetExceeded("gen_rsar_sample: e");
    smp.e = nat_between(rng, Nat(3), sp.phi - 1);
  } while (!bit_of(smp.e, 0) || boost::multiprecision::gcd(smp.e, sp.phi) != 1);
  smp.d = mod_inverse(smp.e, sp.phi);

  const Nat alpha = nat_below(rng, sp.phi);
  smp.beta = nat_below(rng, sp.phi);
  const Nat db = smp.d * smp.beta % sp.phi;
  if (b) {
    smp.delta = db;
  } else {
    Nat gamma;
    t = 0;
    do {
      if (t++ >= budget)
        throw ResampleBudgetExceeded("gen_rsar_sample: gamma resampling");
      gamma = nat_below(rng, sp.phi);
    } while (gamma == db);
    smp.delta = gamma;
  }

  smp.A = add(sp.M, mul(BitMatrix::random(n, rng), sp.Q));
  smp.B = add(pow(sp.M, alpha), mul(BitMatrix::random(n, rng), sp.Q));
  smp.Y = add(pow(sp.M, smp.beta), mul(BitMatrix::random(n, rng), sp.Q));
  smp.v = pow(sp.M, smp.delta).column(smp.j);
  smp.hidden_bit = b;
  return smp;
}

// ---------------------------------------------------------------------------
// Distinguisher experiments

struct WilsonInterval {
  double center = 0;
  double half_width = 0;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.959963985) {
  if (trials == 0) return {};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {center, half};
}

struct ExperimentReport {
  std::size_t trials = 0;
  std::size_t successes = 0;  // b' = b
  double advantage = 0;       // |1 - 2 * successes/trials|
  double conf_half_width = 0; // Wilson 95% half-width on P[b' = b]
};

inline ExperimentReport make_report(std::size_t successes, std::size_t trials) {
  ExperimentReport rep;
  rep.trials = trials;
  rep.successes = successes;
  rep.advantage =
      std::abs(1.0 - 2.0 * static_cast<double>(successes) /
                         static_cast<double>(trials));
  rep.conf_half_width = wilson_interval(successes, trials).half_width;
  return rep;
}

// What a strategy gets to see. SystemParams count as public here: the
// shape (n, l, j, polynomial list) is not treated as secret.
struct DhweView {
  const BitMatrix& A;
  const BitMatrix& B;
  const BitMatrix& S;
  const BitMatrix& Y;
  const BitVector& v;
  const SystemParams& params;
};

struct RsarView {
  const BitMatrix& A;
  const BitMatrix& B;
  const Nat& e;
  const BitMatrix& Y;
  const BitVector& v;
  std::size_t j;
  const SystemParams& params;
};

using DhweStrategy = std::function<bool(const DhweView&)>;
using RsarStrategy = std::function<bool(const RsarView&)>;

inline ExperimentReport run_distinguisher(const DhweStrategy& strategy,
                                          std::size_t trials,
                                          const SystemParams& params,
                                          Rng& rng) {
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng trial_rng = rng.split(t);
    const bool b = trial_rng.bit();
    DhweSample smp = gen_dhwe_sample(params, b, trial_rng);
    const bool guess =
        strategy({smp.A, smp.B, smp.S, smp.Y, smp.v, params});
    if (guess == b) ++successes;
  }
  return make_report(successes, trials);
}

inline ExperimentReport run_distinguisher(const RsarStrategy& strategy,
                                          std::size_t trials,
                                          const SystemParams& params,
                                          Rng& rng) {
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng trial_rng = rng.split(t);
    const bool b = trial_rng.bit();
    RsarSample smp = gen_rsar_sample(params, b, trial_rng);
    const bool guess =
        strategy({smp.A, smp.B, smp.e, smp.Y, smp.v, smp.j, params});
    if (guess == b) ++successes;
  }
  return make_report(successes, trials);
}

// ---------------------------------------------------------------------------
// Desk-scale attacks

// Least k <= cap with base^k = target, by walking the power sequence.
inline std::optional<std::uint64_t> bruteforce_matrix_dlp(
    const BitMatrix& base, const BitMatrix& target, std::uint64_t cap) {
  BitMatrix p = BitMatrix::identity(base.n_rows());
  if (p == target) return 0;
  for (std::uint64_t k = 1; k <= cap; ++k) {
    p = mul(p, base);
    if (p == target) return k;
  }
  return std::nullopt;
}

// Smallest s <= cap with X^s = X^t for some 0 < t < s. Convention: powers
// are indexed from 1, so a nonsingular X of order w yields (w+1, 1); the
// match against X^0 = I is excluded.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> tail_pair(
    const BitMatrix& x, std::uint64_t cap) {
  auto hash = [](const BitMatrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t r = 0; r < m.n_rows(); ++r)
      for (auto w : m.row(r)) {
        h ^= w;
        h *= 1099511628211ull;
      }
    return h;
  };
  std::vector<BitMatrix> powers;  // powers[i] = X^(i+1)
  std::map<std::uint64_t, std::vector<std::uint64_t>> seen;
  BitMatrix p = x;
  for (std::uint64_t s = 1; s <= cap; ++s) {
    const std::uint64_t h = hash(p);
    if (auto it = seen.find(h); it != seen.end()) {
      for (std::uint64_t t : it->second)
        if (powers[t - 1] == p) return std::make_pair(s, t);
    }
    seen[h].push_back(s);
    powers.push_back(p);
    p = mul(p, x);
  }
  return std::nullopt;
}

// Exponent-space key search against a public tuple: recover alpha' as the
// matrix DLP (A, B), then read the key off Y. Succeeds only when the
// power relation actually holds, i.e. on noiseless tuples.
struct KeySearchResult {
  std::optional<BitVector> key;
  std::uint64_t work = 0;  // multiplications spent
};

inline KeySearchResult bruteforce_key_search(const BitMatrix& a,
                                             const BitMatrix& b,
                                             const BitMatrix& y, std::size_t j,
                                             std::uint64_t exponent_cap) {
  KeySearchResult res;
  BitMatrix p = BitMatrix::identity(a.n_rows());
  for (std::uint64_t k = 0; k <= exponent_cap; ++k) {
    if (k > 0) {
      p = mul(p, a);
      ++res.work;
    }
    if (p == b) {
      res.key = pow(y, Nat(k)).column(j);
      return res;
    }
  }
  return res;
}

inline KeySearchResult bruteforce_key_search(const DhweSample& smp,
                                             std::uint64_t exponent_cap) {
  auto j = detail::unique_zero_column(smp.S);
  if (!j) return {};
  return bruteforce_key_search(smp.A, smp.B, smp.Y, *j, exponent_cap);
}

inline KeySearchResult bruteforce_key_search(const RsarSample& smp,
                                             std::uint64_t exponent_cap) {
  return bruteforce_key_search(smp.A, smp.B, smp.Y, smp.j, exponent_cap);
}

// ---------------------------------------------------------------------------
// d'-existence experiment for the one-wayness of Y = X^e

struct DprimeReport {
  std::size_t singular_trials = 0;
  std::size_t singular_found = 0;  // trials where some d' <= cap had Y^d' = X
  WilsonInterval singular_freq;
  std::size_t control_trials = 0;
  std::size_t control_found = 0;
  WilsonInterval control_freq;
  std::uint64_t dprime_cap = 0;
};

// Does some d' in [1, cap] satisfy (x^e)^d' = x?
inline bool dprime_exists(const BitMatrix& x, std::uint64_t e,
                          std::uint64_t cap) {
  const BitMatrix y = pow(x, Nat(e));
  BitMatrix p = y;
  for (std::uint64_t d = 1; d <= cap; ++d) {
    if (p == x) return true;
    p = mul(p, y);
  }
  return false;
}

// Main arm: X = A^theta * B^vartheta with singular B, so X is singular and
// has no multiplicative order. Control arm: nonsingular X = M^theta with e
// restricted to units modulo the order of X, where d' = e^-1 always works.
inline DprimeReport dprime_experiment(const SystemParams& params,
                                          std::size_t trials,
                                          std::uint64_t e_min,
                                          std::uint64_t e_max,
                                          std::uint64_t dprime_cap, Rng& rng) {
  DprimeReport rep;
  rep.dprime_cap = dprime_cap;

  Instance inst = generate(params, rng);
  for (std::size_t t = 0; t < trials; ++t) {
    if (t % 100 == 0 && t > 0) inst = generate(params, rng);
    const SecretParams& sp = inst.secret;
    Rng trial_rng = rng.split(t);

    std::uint64_t e = e_min + trial_rng.below(e_max - e_min + 1);
    if (e % 2 == 0) e = (e + 1 <= e_max) ? e + 1 : e - 1;
    if (e <= 1) continue;

    // singular arm: B singular forces X singular for vartheta >= 1
    const std::size_t n = params.n;
    const Nat alpha = nat_between(trial_rng, Nat(2), sp.r - 1);
    const BitMatrix a =
        add(sp.M, mul(BitMatrix::random(n, trial_rng), sp.Q));
    const BitMatrix m_alpha = pow(sp.M, alpha);
    BitMatrix b(n, n);
    bool b_ok = false;
    for (std::size_t tries = 0; tries < kDefaultResampleBudget && !b_ok;
         ++tries) {
      b = add(m_alpha, mul(BitMatrix::random(n, trial_rng), sp.Q));
      b_ok = !is_nonsingular(b);
    }
    if (!b_ok) continue;
    const Nat theta = nat_below(trial_rng, Nat(64));
    const Nat vartheta = Nat(1 + trial_rng.below(8));
    BitMatrix x = mul(pow(a, theta), pow(b, vartheta));
    ++rep.singular_trials;
    if (dprime_exists(x, e, dprime_cap)) ++rep.singular_found;

    // control arm: nonsingular X, e a unit modulo the order of X
    const Nat theta_c = nat_between(trial_rng, Nat(1), sp.phi - 1);
    const Nat order_x = sp.phi / boost::multiprecision::gcd(theta_c, sp.phi);
    if (boost::multiprecision::gcd(Nat(e), order_x) == 1 &&
        order_x <= dprime_cap) {
      BitMatrix xc = pow(sp.M, theta_c);
      ++rep.control_trials;
      if (dprime_exists(xc, e, dprime_cap)) ++rep.control_found;
    }
  }
  rep.singular_freq = wilson_interval(rep.singular_found, rep.singular_trials);
  rep.control_freq = wilson_interval(rep.control_found, rep.control_trials);
  return rep;
}

}  // namespace nqkx
