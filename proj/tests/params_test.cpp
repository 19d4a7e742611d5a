#include "nqkx/params.hpp"

#include <gtest/gtest.h>

#include "test_oracles.hpp"

namespace nqkx {
namespace {

PolySpec spec_of(std::uint64_t bits) { return {gf2poly::Poly(bits), std::nullopt}; }

TEST(Companion, DegreeOne) {
  const BitMatrix c = companion(spec_of(0b11));  // x + 1
  EXPECT_EQ(c.n_rows(), 1u);
  EXPECT_TRUE(c.get(0, 0));
}

TEST(Companion, OrderByBruteForce) {
  EXPECT_EQ(oracle::brute_order(companion(spec_of(0b111)), 16), 3u);     // x^2+x+1
  EXPECT_EQ(oracle::brute_order(companion(spec_of(0b1011)), 16), 7u);    // x^3+x+1
  EXPECT_EQ(oracle::brute_order(companion(spec_of(0b11111)), 16), 5u);   // x^4+..+1
}

TEST(Companion, ReduciblePolynomialRejected) {
  EXPECT_THROW(companion(spec_of(0b101)), InvalidParams);  // x^2 + 1
  EXPECT_THROW(companion(spec_of(0b110)), InvalidParams);  // constant term 0
}

TEST(PolyOrder, MatchesCompanionOrder) {
  for (std::uint64_t bits : {0b111ull, 0b1011ull, 0b10011ull, 0b11111ull}) {
    const PolySpec p = spec_of(bits);
    EXPECT_EQ(poly_order(p),
              Nat(oracle::brute_order(companion(p), 1u << 16)));
  }
}

TEST(PolyOrder, KnownOrderShortCircuit) {
  PolySpec p = spec_of(0b111);
  p.known_order = 3;
  EXPECT_EQ(poly_order(p), Nat(3));
}

SystemParams small_params(std::size_t l, std::vector<std::uint64_t> polys) {
  SystemParams p;
  p.l = l;
  p.m = 0;
  for (auto bits : polys) {
    p.polys.push_back(spec_of(bits));
    p.m += static_cast<std::size_t>(p.polys.back().degree());
  }
  p.n = p.l + p.m;
  return p;
}

TEST(BuildBlocks, SingleQuadraticPoly) {
  const SystemParams p = small_params(2, {0b111});
  const Blocks b = build_blocks(p);
  EXPECT_EQ(b.r, Nat(3));
  EXPECT_EQ(pow(b.d_block, Nat(2)), BitMatrix::identity(2));
  EXPECT_EQ(pow(b.c_block, b.r), BitMatrix::identity(2));
  // phi = 6: brute force on G
  EXPECT_EQ(oracle::brute_order(b.g, 16), 6u);
}

TEST(BuildBlocks, LcmOfOrders) {
  const SystemParams p = small_params(2, {0b111, 0b1011});
  const Blocks b = build_blocks(p);
  EXPECT_EQ(b.r, Nat(21));  // lcm(3, 7)
  EXPECT_EQ(pow(b.g, Nat(42)), BitMatrix::identity(p.n));
  EXPECT_NE(pow(b.g, Nat(21)), BitMatrix::identity(p.n));
}

TEST(BuildBlocks, OddLRejected) {
  SystemParams p = small_params(2, {0b111});
  p.l = 3;
  p.n = p.l + p.m;
  EXPECT_THROW(build_blocks(p), InvalidParams);
}

TEST(BuildBlocks, DegreeSumMismatchRejected) {
  SystemParams p = small_params(2, {0b111});
  p.m += 1;
  p.n += 1;
  EXPECT_THROW(build_blocks(p), InvalidParams);
}

TEST(BuildF, ContractHolds) {
  const SystemParams p = preset("toy-16");
  Rng rng(21);
  for (int i = 0; i < 25; ++i) {
    const ConjugatorResult fr = build_F(p, rng);
    EXPECT_EQ(mul(fr.f_inv, fr.f), BitMatrix::identity(p.n));
    for (std::size_t row = 0; row < p.l; ++row)
      EXPECT_FALSE(fr.f.get(row, fr.j));
  }
}

TEST(Generate, StructuralInvariants) {
  Rng rng(22);
  const Instance inst = generate(preset("toy-16"), rng);
  const SecretParams& sp = inst.secret;
  const std::size_t j = inst.params.j;

  EXPECT_TRUE(sp.Q.column(j).is_zero());
  EXPECT_EQ(mul(sp.Q, sp.M), sp.Q);
  EXPECT_EQ(mul(sp.M, sp.Q), sp.Q);
  EXPECT_TRUE(mul(sp.Q, sp.Q).is_zero());
  EXPECT_TRUE(bit_of(sp.r, 0));
  EXPECT_EQ(pow(sp.M, sp.phi), BitMatrix::identity(inst.params.n));
  EXPECT_NE(pow(sp.M, sp.r), BitMatrix::identity(inst.params.n));
}

TEST(Generate, ValidateAllPass) {
  Rng rng(23);
  for (int i = 0; i < 5; ++i) {
    const Instance inst = generate(preset("toy-16"), rng);
    const ValidationReport rep = validate(inst.secret, inst.params);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name;
  }
}

TEST(Validate, DetectsCorruptedQ) {
  Rng rng(24);
  Instance inst = generate(preset("toy-16"), rng);
  // flip one bit of Q outside column j
  const std::size_t c = (inst.params.j + 1) % inst.params.n;
  inst.secret.Q.set(0, c, !inst.secret.Q.get(0, c));
  EXPECT_FALSE(validate(inst.secret, inst.params).all_pass());
}

TEST(Validate, DetectsRandomM) {
  Rng rng(25);
  Instance inst = generate(preset("toy-16"), rng);
  inst.secret.M = BitMatrix::random(inst.params.n, rng);
  EXPECT_FALSE(validate(inst.secret, inst.params).all_pass());
}

TEST(NoiseAnnihilation, AnnihilationExact) {
  Rng rng(26);
  const Instance inst = generate(preset("toy-16"), rng);
  const SecretParams& sp = inst.secret;
  for (int i = 0; i < 100; ++i) {
    const Nat theta(rng.below(1u << 16));
    const BitMatrix mt = pow(sp.M, theta);
    EXPECT_EQ(mul(mt, sp.Q), sp.Q);
    EXPECT_EQ(mul(sp.Q, mt), sp.Q);
  }
}

TEST(NoiseAnnihilation, NoisyPowerColumnJ) {
  // column j of (M^a + RQ)^t equals column j of M^(a t)
  Rng rng(27);
  const Instance inst = generate(preset("toy-16"), rng);
  const SecretParams& sp = inst.secret;
  const std::size_t j = inst.params.j;
  for (int i = 0; i < 20; ++i) {
    const Nat a(1 + rng.below(1u << 8));
    const Nat t(1 + rng.below(1u << 8));
    const BitMatrix r = BitMatrix::random(inst.params.n, rng);
    const BitMatrix noisy = add(pow(sp.M, a), mul(r, sp.Q));
    EXPECT_EQ(pow(noisy, t).column(j), pow(sp.M, a * t).column(j));
  }
}

TEST(NoiseAnnihilation, ResidualInRowSpaceOfQ) {
  // (M^a + RQ)^t + M^(a t) is of the form Sigma*Q
  Rng rng(28);
  const Instance inst = generate(preset("toy-16"), rng);
  const SecretParams& sp = inst.secret;
  for (int i = 0; i < 20; ++i) {
    const Nat a(1 + rng.below(1u << 8));
    const Nat t(1 + rng.below(1u << 8));
    const BitMatrix r = BitMatrix::random(inst.params.n, rng);
    const BitMatrix noisy = add(pow(sp.M, a), mul(r, sp.Q));
    const BitMatrix residual = add(pow(noisy, t), pow(sp.M, a * t));
    EXPECT_TRUE(rows_in_span(residual, sp.Q));
  }
}

TEST(NoiseAnnihilation, ProductResidualInRowSpaceOfQ) {
  // (M^t + S1 Q)(M^v + S2 Q) + M^(t+v) is of the form Sigma*Q
  Rng rng(29);
  const Instance inst = generate(preset("toy-16"), rng);
  const SecretParams& sp = inst.secret;
  for (int i = 0; i < 20; ++i) {
    const Nat t(rng.below(1u << 16));
    const Nat v(rng.below(1u << 16));
    const BitMatrix s1 = BitMatrix::random(inst.params.n, rng);
    const BitMatrix s2 = BitMatrix::random(inst.params.n, rng);
    const BitMatrix lhs = mul(add(pow(sp.M, t), mul(s1, sp.Q)),
                              add(pow(sp.M, v), mul(s2, sp.Q)));
    const BitMatrix residual = add(lhs, pow(sp.M, t + v));
    EXPECT_TRUE(rows_in_span(residual, sp.Q));
  }
}

TEST(Presets, AllGenerateAndValidate) {
  Rng rng(30);
  for (const auto& name : preset_names()) {
    const Instance inst = generate(preset(name), rng);
    EXPECT_TRUE(validate(inst.secret, inst.params).all_pass()) << name;
  }
}

TEST(Presets, UnknownNameRejected) {
  EXPECT_THROW(preset("nope"), InvalidParams);
}

TEST(SystemParams, ChecksRejectBadShapes) {
  SystemParams p = preset("toy-16");
  p.l = 7;  // odd
  EXPECT_THROW(p.check(), InvalidParams);
  p = preset("toy-16");
  p.j = p.n;
  EXPECT_THROW(p.check(), InvalidParams);
}

}  // namespace
}  // namespace nqkx
