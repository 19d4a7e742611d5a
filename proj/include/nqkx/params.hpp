#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nqkx/bitmatrix.hpp"
#include "nqkx/gf2poly.hpp"
#include "nqkx/nat.hpp"
#include "nqkx/rng.hpp"

namespace nqkx {

struct ResampleBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Monic irreducible polynomial over GF(2), bit i = coefficient of x^i.
// Constant term must be 1 (excludes x, which keeps the order odd).
struct PolySpec {
  gf2poly::Poly coeffs;
  std::optional<std::uint64_t> known_order;

  int degree() const { return gf2poly::degree(coeffs); }

  void check() const {
    if (degree() < 1) throw InvalidParams("PolySpec: degree must be >= 1");
    if (!bit_of(coeffs, 0))
      throw InvalidParams("PolySpec: constant term must be 1");
    if (!gf2poly::is_irreducible(coeffs))
      throw InvalidParams("PolySpec: polynomial is reducible");
  }
};

inline Nat poly_order(const PolySpec& p) {
  p.check();
  if (p.known_order) return Nat(*p.known_order);
  return Nat(gf2poly::order_of_x(p.coeffs));
}

// Public shape data. j is the zero-column index; it is chosen during
// generation, so a freshly described parameter set carries j = 0 until
// generate() fills it in.
struct SystemParams {
  std::size_t n = 0;
  std::size_t l = 0;  // dimension of the involution block, must be even
  std::size_t m = 0;  // dimension of the odd-order block, n = l + m
  std::size_t j = 0;
  std::vector<PolySpec> polys;

  void check() const {
    if (n == 0 || n != l + m) throw InvalidParams("SystemParams: need n = l + m");
    if (l < 2 || l % 2 != 0)
      throw InvalidParams("SystemParams: l must be even and >= 2");
    if (j >= n) throw InvalidParams("SystemParams: j out of range");
    std::size_t deg_sum = 0;
    for (const auto& p : polys) {
      p.check();
      deg_sum += static_cast<std::size_t>(p.degree());
    }
    if (deg_sum != m)
      throw InvalidParams("SystemParams: polynomial degrees must sum to m");
  }
};

// Alice's private material.
struct SecretParams {
  BitMatrix F, F_inv, G, M, Q;
  Nat r;    // odd; lcm of the block orders
  Nat phi;  // exact multiplicative order of M, = 2r
};

struct Instance {
  SystemParams params;  // with j filled in
  SecretParams secret;
};

inline constexpr std::size_t kDefaultResampleBudget = 10'000;

// Standard companion matrix: subdiagonal of ones, last column = low
// coefficients of p.
inline BitMatrix companion(const PolySpec& p) {
  p.check();
  const std::size_t m = static_cast<std::size_t>(p.degree());
  BitMatrix c(m, m);
  for (std::size_t i = 1; i < m; ++i) c.set(i, i - 1, true);
  for (std::size_t i = 0; i < m; ++i)
    c.set(i, m - 1, bit_of(p.coeffs, i));
  return c;
}

struct Blocks {
  BitMatrix d_block;  // l x l, order 2
  BitMatrix c_block;  // m x m, odd order r
  BitMatrix g;        // diag(D, C), order 2r
  Nat r;
};

inline Blocks build_blocks(const SystemParams& params) {
  params.check();
  const std::size_t l = params.l;
  const std::size_t m = params.m;

  // D = block-diagonal copies of d = [1 1; 0 1].
  BitMatrix d_block(l, l);
  for (std::size_t i = 0; i < l; ++i) d_block.set(i, i, true);
  for (std::size_t i = 0; i + 1 < l; i += 2) d_block.set(i, i + 1, true);

  BitMatrix c_block(m, m);
  Nat r = 1;
  std::size_t off = 0;
  for (const auto& p : params.polys) {
    const BitMatrix ci = companion(p);
    for (std::size_t a = 0; a < ci.n_rows(); ++a)
      for (std::size_t b = 0; b < ci.n_cols(); ++b)
        if (ci.get(a, b)) c_block.set(off + a, off + b, true);
    off += ci.n_rows();
    const Nat ri = poly_order(p);
    r = r / boost::multiprecision::gcd(r, ri) * ri;
  }

  BitMatrix g(params.n, params.n);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b)
      if (d_block.get(a, b)) g.set(a, b, true);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (c_block.get(a, b)) g.set(l + a, l + b, true);

  return {std::move(d_block), std::move(c_block), std::move(g), std::move(r)};
}

struct ConjugatorResult {
  BitMatrix f;
  BitMatrix f_inv;
  std::size_t j;
};

// Sample nonsingular F, find a column with at least l zeros, and permute
// rows so those zeros sit on top.
inline ConjugatorResult build_F(const SystemParams& params, Rng& rng,
                                std::size_t budget = kDefaultResampleBudget) {
  const std::size_t n = params.n;
  const std::size_t l = params.l;
  for (std::size_t attempt = 0; attempt < budget; ++attempt) {
    BitMatrix f = BitMatrix::random(n, rng);
    auto elim = gaussian_elim(f);
    if (!elim.det) continue;

    std::optional<std::size_t> chosen;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t zeros = 0;
      for (std::size_t r2 = 0; r2 < n; ++r2)
        if (!f.get(r2, c)) ++zeros;
      if (zeros >= l) {
        chosen = c;
        break;
      }
    }
    if (!chosen) continue;
    const std::size_t j = *chosen;

    // Stable partition of row indices: zero-in-column-j rows first.
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t r2 = 0; r2 < n; ++r2)
      if (!f.get(r2, j)) order.push_back(r2);
    for (std::size_t r2 = 0; r2 < n; ++r2)
      if (f.get(r2, j)) order.push_back(r2);

    BitMatrix sorted(n, n);
    for (std::size_t r2 = 0; r2 < n; ++r2) {
      auto dst = sorted.row_mut(r2);
      auto src = f.row(order[r2]);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    auto sorted_elim = gaussian_elim(sorted);
    // Row permutation preserves nonsingularity.
    return {std::move(sorted), std::move(*sorted_elim.inverse), j};
  }
  throw ResampleBudgetExceeded("build_F: no suitable F within budget");
}

// Full key material: M = F^-1 G F and Q = I + M^r, resampling F until Q
// has exactly one zero column. A spurious second zero column would leave
// the responder unable to read j off S.
inline Instance generate(const SystemParams& params, Rng& rng,
                         std::size_t budget = kDefaultResampleBudget) {
  params.check();
  const Blocks blocks = build_blocks(params);
  const BitMatrix ident = BitMatrix::identity(params.n);
  for (std::size_t attempt = 0; attempt < budget; ++attempt) {
    ConjugatorResult fr = build_F(params, rng, budget);
    BitMatrix m_mat = mul(fr.f_inv, mul(blocks.g, fr.f));
    BitMatrix q = add(ident, pow(m_mat, blocks.r));

    std::size_t zero_cols = 0;
    for (std::size_t c = 0; c < params.n; ++c)
      if (q.column_is_zero(c)) ++zero_cols;
    if (zero_cols != 1 || !q.column_is_zero(fr.j)) continue;

    Instance inst;
    inst.params = params;
    inst.params.j = fr.j;
    inst.secret = SecretParams{std::move(fr.f),    std::move(fr.f_inv),
                               blocks.g,           std::move(m_mat),
                               std::move(q),       blocks.r,
                               Nat(2) * blocks.r};
    return inst;
  }
  throw ResampleBudgetExceeded("generate: no clean Q within budget");
}

struct ValidationCheck {
  std::string name;
  bool pass;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline ValidationReport validate(const SecretParams& sp,
                                 const SystemParams& params) {
  const std::size_t n = params.n;
  const BitMatrix ident = BitMatrix::identity(n);
  ValidationReport rep;
  auto add_check = [&](std::string name, bool pass) {
    rep.checks.push_back({std::move(name), pass});
  };

  add_check("F_inv * F = I", mul(sp.F_inv, sp.F) == ident);
  add_check("M = F_inv * G * F",
            sp.M == mul(sp.F_inv, mul(sp.G, sp.F)));
  const BitMatrix m_r = pow(sp.M, sp.r);
  add_check("M^r != I", m_r != ident);
  add_check("M^phi = I", pow(sp.M, sp.phi) == ident);
  add_check("M^2 != I", pow(sp.M, Nat(2)) != ident);
  add_check("r odd", bit_of(sp.r, 0));
  add_check("phi = 2r", sp.phi == Nat(2) * sp.r);
  add_check("Q = I + M^r", sp.Q == add(ident, m_r));
  add_check("column j of Q zero", sp.Q.column_is_zero(params.j));
  std::size_t zero_cols = 0;
  for (std::size_t c = 0; c < n; ++c)
    if (sp.Q.column_is_zero(c)) ++zero_cols;
  add_check("Q has exactly one zero column", zero_cols == 1);
  add_check("Q*M = Q", mul(sp.Q, sp.M) == sp.Q);
  add_check("M*Q = Q", mul(sp.M, sp.Q) == sp.Q);
  add_check("Q*Q = 0", mul(sp.Q, sp.Q).is_zero());
  return rep;
}

// Named parameter presets. Every preset keeps l large relative to n so
// that a unique zero column of Q is the common case rather than the
// exception.
inline SystemParams preset(const std::string& name) {
  auto make = [](std::size_t n, std::size_t l,
                 std::vector<int> degrees) {
    SystemParams p;
    p.n = n;
    p.l = l;
    p.m = n - l;
    for (int d : degrees)
      p.polys.push_back({gf2poly::smallest_irreducible(d), std::nullopt});
    p.check();
    return p;
  };
  if (name == "toy-6") return make(6, 2, {4});
  if (name == "toy-8") return make(8, 4, {4});
  if (name == "toy-16") return make(16, 8, {8});
  if (name == "toy-32") return make(32, 12, {20});
  if (name == "toy-64") return make(64, 16, {23, 25});
  if (name == "paper-128") return make(128, 20, {17, 23, 31, 37});
  throw InvalidParams("unknown preset: " + name);
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "toy-6", "toy-8", "toy-16", "toy-32", "toy-64", "paper-128"};
  return names;
}

}  // namespace nqkx
