#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqkx/nat.hpp"
#include "nqkx/rng.hpp"

namespace nqkx {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bit-packed vector over GF(2). LSB-first within each 64-bit word;
// padding bits past length() are kept zero.
class BitVector {
 public:
  BitVector() = default;

  explicit BitVector(std::size_t length)
      : length_(length), words_((length + 63) / 64, 0) {}

  std::size_t length() const { return length_; }

  bool get(std::size_t i) const {
    check_index(i);
    return (words_[i / 64] >> (i % 64)) & 1u;
  }

  void set(std::size_t i, bool v) {
    check_index(i);
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (v)
      words_[i / 64] |= mask;
    else
      words_[i / 64] &= ~mask;
  }

  bool is_zero() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }

  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    const std::size_t nbytes = (length_ + 7) / 8;
    for (std::size_t b = 0; b < nbytes; ++b) {
      const std::uint8_t byte =
          static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)));
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xf]);
    }
    return out;
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= length_) throw std::out_of_range("BitVector index out of range");
  }

  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

// Dense matrix over GF(2), rows bit-packed into 64-bit words, LSB-first.
// Entry (r, c) is bit c%64 of word r*words_per_row + c/64. All values are
// immutable in practice: operations return fresh matrices.
class BitMatrix {
 public:
  BitMatrix() = default;

  BitMatrix(std::size_t n_rows, std::size_t n_cols)
      : rows_(n_rows),
        cols_(n_cols),
        wpr_((n_cols + 63) / 64),
        words_(n_rows * wpr_, 0) {
    if (n_rows == 0 || n_cols == 0)
      throw std::invalid_argument("BitMatrix dimensions must be positive");
  }

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }

  static BitMatrix random(std::size_t n_rows, std::size_t n_cols, Rng& rng) {
    BitMatrix m(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto row = m.row_mut(r);
      for (auto& w : row) w = rng.word();
      m.mask_row_padding(r);
    }
    return m;
  }

  static BitMatrix random(std::size_t n, Rng& rng) { return random(n, n, rng); }

  std::size_t n_rows() const { return rows_; }
  std::size_t n_cols() const { return cols_; }
  std::size_t words_per_row() const { return wpr_; }
  bool is_square() const { return rows_ == cols_; }

  bool get(std::size_t r, std::size_t c) const {
    check_entry(r, c);
    return (words_[r * wpr_ + c / 64] >> (c % 64)) & 1u;
  }

  void set(std::size_t r, std::size_t c, bool v) {
    check_entry(r, c);
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    if (v)
      words_[r * wpr_ + c / 64] |= mask;
    else
      words_[r * wpr_ + c / 64] &= ~mask;
  }

  std::span<const std::uint64_t> row(std::size_t r) const {
    return {words_.data() + r * wpr_, wpr_};
  }

  std::span<std::uint64_t> row_mut(std::size_t r) {
    return {words_.data() + r * wpr_, wpr_};
  }

  bool is_zero() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

  BitVector column(std::size_t j) const {
    if (j >= cols_) throw std::out_of_range("column index out of range");
    BitVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      if (get(r, j)) v.set(r, true);
    return v;
  }

  bool column_is_zero(std::size_t j) const {
    const std::size_t wi = j / 64;
    const std::uint64_t mask = std::uint64_t{1} << (j % 64);
    for (std::size_t r = 0; r < rows_; ++r)
      if (words_[r * wpr_ + wi] & mask) return false;
    return true;
  }

  friend BitMatrix add(const BitMatrix& a, const BitMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw DimensionMismatch("add: shapes differ");
    BitMatrix out = a;
    for (std::size_t i = 0; i < out.words_.size(); ++i)
      out.words_[i] ^= b.words_[i];
    return out;
  }

  // Word-sliced product: each result row is the XOR of the b-rows selected
  // by the set bits of the corresponding a-row.
  friend BitMatrix mul(const BitMatrix& a, const BitMatrix& b) {
    if (a.cols_ != b.rows_)
      throw DimensionMismatch("mul: inner dimensions differ");
    BitMatrix out(a.rows_, b.cols_);
    for (std::size_t r = 0; r < a.rows_; ++r) {
      auto arow = a.row(r);
      auto orow = out.row_mut(r);
      for (std::size_t w = 0; w < a.wpr_; ++w) {
        std::uint64_t bits = arow[w];
        while (bits) {
          const std::size_t k = w * 64 + std::countr_zero(bits);
          bits &= bits - 1;
          auto brow = b.row(k);
          for (std::size_t c = 0; c < b.wpr_; ++c) orow[c] ^= brow[c];
        }
      }
    }
    return out;
  }

  // Left-to-right square-and-multiply. No windowing; this code makes no
  // side-channel claims.
  friend BitMatrix pow(const BitMatrix& a, const Nat& k) {
    if (!a.is_square()) throw DimensionMismatch("pow: matrix must be square");
    if (k < 0) throw std::invalid_argument("pow: negative exponent");
    BitMatrix result = identity(a.rows_);
    if (k == 0) return result;
    for (std::size_t i = bit_length(k); i-- > 0;) {
      result = mul(result, result);
      if (bit_of(k, i)) result = mul(result, a);
    }
    return result;
  }

  friend BitMatrix pow(const BitMatrix& a, std::uint64_t k) {
    return pow(a, Nat(k));
  }

  // Vertical concatenation; used for row-space membership checks.
  friend BitMatrix stack(const BitMatrix& top, const BitMatrix& bottom) {
    if (top.cols_ != bottom.cols_)
      throw DimensionMismatch("stack: column counts differ");
    BitMatrix out(top.rows_ + bottom.rows_, top.cols_);
    std::copy(top.words_.begin(), top.words_.end(), out.words_.begin());
    std::copy(bottom.words_.begin(), bottom.words_.end(),
              out.words_.begin() + static_cast<std::ptrdiff_t>(top.words_.size()));
    return out;
  }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) os << (get(r, c) ? '1' : '0');
      os << '\n';
    }
    return os.str();
  }

 private:
  void check_entry(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_)
      throw std::out_of_range("BitMatrix entry out of range");
  }

  void mask_row_padding(std::size_t r) {
    const std::size_t rem = cols_ % 64;
    if (rem) words_[r * wpr_ + wpr_ - 1] &= (std::uint64_t{1} << rem) - 1;
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t wpr_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ElimResult {
  std::size_t rank = 0;
  std::optional<BitMatrix> inverse;
  bool det = false;  // det = 1 iff full rank
};

// Row rank of an arbitrary matrix by forward elimination.
inline std::size_t rank_of(const BitMatrix& a) {
  BitMatrix work = a;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < work.n_cols() && rank < work.n_rows(); ++col) {
    std::size_t pivot = rank;
    while (pivot < work.n_rows() && !work.get(pivot, col)) ++pivot;
    if (pivot == work.n_rows()) continue;
    if (pivot != rank) {
      auto pr = work.row_mut(pivot);
      auto rr = work.row_mut(rank);
      for (std::size_t w = 0; w < work.words_per_row(); ++w)
        std::swap(pr[w], rr[w]);
    }
    for (std::size_t r = 0; r < work.n_rows(); ++r) {
      if (r != rank && work.get(r, col)) {
        auto dst = work.row_mut(r);
        auto src = work.row(rank);
        for (std::size_t w = 0; w < work.words_per_row(); ++w) dst[w] ^= src[w];
      }
    }
    ++rank;
  }
  return rank;
}

// Gauss-Jordan on [a | I]. Singularity is an outcome, not an error: the
// protocols deliberately resample on det(A) = 0 / det(B) != 0.
inline ElimResult gaussian_elim(const BitMatrix& a) {
  if (!a.is_square())
    throw DimensionMismatch("gaussian_elim: matrix must be square");
  const std::size_t n = a.n_rows();
  BitMatrix work = a;
  BitMatrix inv = BitMatrix::identity(n);
  std::size_t rank = 0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = rank;
    while (pivot < n && !work.get(pivot, col)) ++pivot;
    if (pivot == n) continue;
    if (pivot != rank) {
      for (std::size_t w = 0; w < work.words_per_row(); ++w) {
        std::swap(work.row_mut(pivot)[w], work.row_mut(rank)[w]);
        std::swap(inv.row_mut(pivot)[w], inv.row_mut(rank)[w]);
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r != rank && work.get(r, col)) {
        for (std::size_t w = 0; w < work.words_per_row(); ++w) {
          work.row_mut(r)[w] ^= work.row(rank)[w];
          inv.row_mut(r)[w] ^= inv.row(rank)[w];
        }
      }
    }
    ++rank;
  }
  ElimResult res;
  res.rank = rank;
  res.det = (rank == n);
  if (res.det) res.inverse = std::move(inv);
  return res;
}

inline bool is_nonsingular(const BitMatrix& a) { return gaussian_elim(a).det; }

// Row space of `candidate` contained in row space of `basis`?
inline bool rows_in_span(const BitMatrix& candidate, const BitMatrix& basis) {
  return rank_of(stack(candidate, basis)) == rank_of(basis);
}

}  // namespace nqkx
