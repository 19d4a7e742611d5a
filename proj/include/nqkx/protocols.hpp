#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "nqkx/bitmatrix.hpp"
#include "nqkx/nat.hpp"
#include "nqkx/params.hpp"
#include "nqkx/rng.hpp"

namespace nqkx {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wrong-phase use of a session state.
struct PhaseViolation : ProtocolError {
  using ProtocolError::ProtocolError;
};

// Extended Euclid. phi is even in this scheme, so any even e is rejected
// here via the gcd condition.
inline Nat mod_inverse(const Nat& e, const Nat& phi) {
  if (e <= 0 || phi <= 1) throw std::invalid_argument("mod_inverse: bad inputs");
  Nat old_r = e % phi, r = phi;
  Nat old_s = 1, s = 0;
  while (r != 0) {
    const Nat q = old_r / r;
    Nat tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) throw ProtocolError("mod_inverse: inputs are not coprime");
  Nat d = old_s % phi;
  if (d < 0) d += phi;
  return d;
}

struct SharedKey {
  BitVector key;  // length n

  friend bool operator==(const SharedKey&, const SharedKey&) = default;
};

// ---------------------------------------------------------------------------
// DH-WE

struct DhweInitMsg {
  BitMatrix A, B, S;
};

struct DhweReplyMsg {
  BitMatrix Y;
};

enum class Phase { created, sent, received, keyed };

// Exponent overrides for boundary tests (alpha = 1 and friends). The
// production entry points never set them.
struct TestOverrides {
  std::optional<Nat> alpha;
  std::optional<Nat> beta;
  std::optional<Nat> e;
  std::optional<Nat> theta;
  std::optional<Nat> vartheta;
};

class AliceDhweState {
 public:
  Phase phase() const { return phase_; }
  const Nat& alpha() const { return alpha_; }

  friend struct DhweAlice;
  friend SharedKey dhwe_alice_finish(AliceDhweState&, const DhweReplyMsg&);

 private:
  std::size_t n_ = 0;
  std::size_t j_ = 0;
  Nat alpha_;
  Phase phase_ = Phase::created;
};

class BobDhweState {
 public:
  Phase phase() const { return phase_; }
  const Nat& beta() const { return beta_; }
  std::size_t derived_j() const { return j_; }

  friend struct DhweBob;

 private:
  Nat beta_;
  std::size_t j_ = 0;
  Phase phase_ = Phase::created;
};

namespace detail {

// Unique zero column of S, or nullopt if there is none or several.
inline std::optional<std::size_t> unique_zero_column(const BitMatrix& s) {
  std::optional<std::size_t> found;
  for (std::size_t c = 0; c < s.n_cols(); ++c) {
    if (s.column_is_zero(c)) {
      if (found) return std::nullopt;
      found = c;
    }
  }
  return found;
}

}  // namespace detail

struct DhweAlice {
  static std::pair<AliceDhweState, DhweInitMsg> init(
      const SecretParams& sp, const SystemParams& params, Rng& rng,
      std::size_t budget = kDefaultResampleBudget,
      const TestOverrides& tov = {}) {
    const std::size_t n = params.n;
    const Nat alpha =
        tov.alpha ? *tov.alpha : nat_between(rng, Nat(2), sp.r - 1);

    // A = M + R0*Q, resampled with fresh R0 until nonsingular.
    BitMatrix a(n, n);
    bool a_ok = false;
    for (std::size_t t = 0; t < budget && !a_ok; ++t) {
      a = add(sp.M, mul(BitMatrix::random(n, rng), sp.Q));
      a_ok = is_nonsingular(a);
    }
    if (!a_ok) throw ResampleBudgetExceeded("dhwe init: singular A persists");

    BitMatrix b = add(pow(sp.M, alpha), mul(BitMatrix::random(n, rng), sp.Q));

    // S = R*Q, resampled until its only zero column is j.
    BitMatrix s(n, n);
    bool s_ok = false;
    for (std::size_t t = 0; t < budget && !s_ok; ++t) {
      s = mul(BitMatrix::random(n, rng), sp.Q);
      auto z = detail::unique_zero_column(s);
      s_ok = z && *z == params.j;
    }
    if (!s_ok) throw ResampleBudgetExceeded("dhwe init: ambiguous S persists");

    AliceDhweState st;
    st.n_ = n;
    st.j_ = params.j;
    st.alpha_ = alpha;
    st.phase_ = Phase::sent;
    return {std::move(st), DhweInitMsg{std::move(a), std::move(b), std::move(s)}};
  }

  // Rebuild a state in phase 'sent' from persisted secrets (CLI resume).
  static AliceDhweState resume(Nat alpha, std::size_t j, std::size_t n) {
    AliceDhweState st;
    st.n_ = n;
    st.j_ = j;
    st.alpha_ = std::move(alpha);
    st.phase_ = Phase::sent;
    return st;
  }
};

struct DhweBob {
  // Bob reads j off S (the position of its zero column), derives his key
  // immediately, and answers with Y = A^beta + R2*S.
  static std::tuple<BobDhweState, DhweReplyMsg, SharedKey> respond(
      const DhweInitMsg& msg, Rng& rng, const TestOverrides& tov = {}) {
    const std::size_t n = msg.A.n_rows();
    if (!msg.A.is_square() || !msg.B.is_square() || !msg.S.is_square() ||
        msg.B.n_rows() != n || msg.S.n_rows() != n)
      throw ProtocolError("dhwe respond: malformed message dimensions");

    auto j = detail::unique_zero_column(msg.S);
    if (!j)
      throw ProtocolError("dhwe respond: S lacks a unique zero column");

    const Nat two_n_minus_1 = (Nat(1) << static_cast<unsigned>(n)) - 1;
    const Nat beta =
        tov.beta ? *tov.beta : nat_between(rng, Nat(2), two_n_minus_1 - 1);

    SharedKey key{pow(msg.B, beta).column(*j)};
    BitMatrix y = add(pow(msg.A, beta), mul(BitMatrix::random(n, rng), msg.S));

    BobDhweState st;
    st.beta_ = beta;
    st.j_ = *j;
    st.phase_ = Phase::keyed;
    return {std::move(st), DhweReplyMsg{std::move(y)}, std::move(key)};
  }
};

inline SharedKey dhwe_alice_finish(AliceDhweState& st, const DhweReplyMsg& msg) {
  if (st.phase_ != Phase::sent)
    throw PhaseViolation("dhwe finish: state not in phase 'sent'");
  const std::size_t n = st.n_;
  if (!msg.Y.is_square() || msg.Y.n_rows() != n)
    throw ProtocolError("dhwe finish: malformed Y dimensions");
  st.phase_ = Phase::keyed;
  return SharedKey{pow(msg.Y, st.alpha_).column(st.j_)};
}

// ---------------------------------------------------------------------------
// RSA-Resemble

struct RsarInitMsg {
  BitMatrix A, B;
  Nat e;
  std::size_t j;
};

struct RsarReplyMsg {
  BitMatrix Y;
};

class AliceRsarState {
 public:
  Phase phase() const { return phase_; }
  const Nat& e() const { return e_; }
  const Nat& d() const { return d_; }

  friend struct RsarAlice;
  friend SharedKey rsar_alice_finish(AliceRsarState&, const RsarReplyMsg&);

 private:
  Nat e_, d_;
  std::size_t j_ = 0;
  std::size_t n_ = 0;
  Phase phase_ = Phase::created;
};

class BobRsarState {
 public:
  Phase phase() const { return phase_; }
  const Nat& theta() const { return theta_; }
  const Nat& vartheta() const { return vartheta_; }
  const BitMatrix& X() const { return x_; }

  friend struct RsarBob;

 private:
  Nat theta_, vartheta_;
  BitMatrix x_;
  Phase phase_ = Phase::created;
};

struct RsarAlice {
  static std::pair<AliceRsarState, RsarInitMsg> init(
      const SecretParams& sp, const SystemParams& params, Rng& rng,
      std::size_t budget = kDefaultResampleBudget,
      const TestOverrides& tov = {}) {
    const std::size_t n = params.n;

    // e uniform odd in [3, phi) with gcd(e, phi) = 1. phi = 2r, so odd is
    // necessary; coprimality with r is checked too.
    Nat e;
    if (tov.e) {
      e = *tov.e;
    } else {
      bool found = false;
      for (std::size_t t = 0; t < budget && !found; ++t) {
        e = nat_between(rng, Nat(3), sp.phi - 1);
        if (bit_of(e, 0) && boost::multiprecision::gcd(e, sp.phi) == 1)
          found = true;
      }
      if (!found) throw ResampleBudgetExceeded("rsar init: no unit e found");
    }
    const Nat d = mod_inverse(e, sp.phi);

    const Nat alpha = tov.alpha ? *tov.alpha : nat_between(rng, Nat(2), sp.r - 1);

    BitMatrix a = add(sp.M, mul(BitMatrix::random(n, rng), sp.Q));

    // B = M^alpha + R1*Q, resampled with fresh R1 until singular.
    const BitMatrix m_alpha = pow(sp.M, alpha);
    BitMatrix b(n, n);
    bool b_ok = false;
    for (std::size_t t = 0; t < budget && !b_ok; ++t) {
      b = add(m_alpha, mul(BitMatrix::random(n, rng), sp.Q));
      b_ok = !is_nonsingular(b);
    }
    if (!b_ok) throw ResampleBudgetExceeded("rsar init: nonsingular B persists");

    AliceRsarState st;
    st.e_ = e;
    st.d_ = d;
    st.j_ = params.j;
    st.n_ = n;
    st.phase_ = Phase::sent;
    return {std::move(st),
            RsarInitMsg{std::move(a), std::move(b), e, params.j}};
  }

  static AliceRsarState resume(Nat d, std::size_t j, std::size_t n) {
    AliceRsarState st;
    st.d_ = std::move(d);
    st.j_ = j;
    st.n_ = n;
    st.phase_ = Phase::sent;
    return st;
  }
};

struct RsarBob {
  static std::tuple<BobRsarState, RsarReplyMsg, SharedKey> respond(
      const RsarInitMsg& msg, Rng& rng, const TestOverrides& tov = {}) {
    const std::size_t n = msg.A.n_rows();
    if (!msg.A.is_square() || !msg.B.is_square() || msg.B.n_rows() != n)
      throw ProtocolError("rsar respond: malformed message dimensions");
    if (msg.j >= n) throw ProtocolError("rsar respond: j out of range");
    if (!bit_of(msg.e, 0) || msg.e < 3)
      throw ProtocolError("rsar respond: e must be odd and >= 3");

    const Nat half_cap = Nat(1) << static_cast<unsigned>(n / 2);
    const Nat theta = tov.theta ? *tov.theta : nat_between(rng, Nat(0), half_cap);
    const Nat vartheta =
        tov.vartheta ? *tov.vartheta : nat_between(rng, Nat(0), half_cap);

    BitMatrix x = mul(pow(msg.A, theta), pow(msg.B, vartheta));
    SharedKey key{x.column(msg.j)};
    BitMatrix y = pow(x, msg.e);

    BobRsarState st;
    st.theta_ = theta;
    st.vartheta_ = vartheta;
    st.x_ = std::move(x);
    st.phase_ = Phase::keyed;
    return {std::move(st), RsarReplyMsg{std::move(y)}, std::move(key)};
  }
};

inline SharedKey rsar_alice_finish(AliceRsarState& st, const RsarReplyMsg& msg) {
  if (st.phase_ != Phase::sent)
    throw PhaseViolation("rsar finish: state not in phase 'sent'");
  if (!msg.Y.is_square() || msg.Y.n_rows() != st.n_)
    throw ProtocolError("rsar finish: malformed Y dimensions");
  st.phase_ = Phase::keyed;
  return SharedKey{pow(msg.Y, st.d_).column(st.j_)};
}

}  // namespace nqkx
