#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nqkx/bitmatrix.hpp"
#include "nqkx/nat.hpp"
#include "nqkx/params.hpp"
#include "nqkx/protocols.hpp"

namespace nqkx {

struct WireError : std::runtime_error {
  enum class Kind { magic, version, type, length, padding, invariant };
  Kind kind;
  WireError(Kind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
};

enum class MsgType : std::uint8_t {
  dhwe_init = 0x01,
  dhwe_reply = 0x02,
  rsar_init = 0x03,
  rsar_reply = 0x04,
  params = 0x10,
};

inline constexpr std::uint8_t kWireVersion = 0x01;
inline constexpr char kWireMagic[4] = {'N', 'Q', 'K', 'X'};
inline constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 3 * 4;

struct FrameHeader {
  MsgType type;
  std::uint32_t n = 0;
  std::uint32_t l = 0;
  std::uint32_t j = 0;
};

// Parameter frame payload: the public shape data. known_order is derived,
// not transported.
struct ParamsMsg {
  SystemParams params;
};

using AnyMsg =
    std::variant<DhweInitMsg, DhweReplyMsg, RsarInitMsg, RsarReplyMsg, ParamsMsg>;

struct Frame {
  FrameHeader header;
  AnyMsg msg;
};

namespace wire_detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t count) {
    if (count > data_.size() - pos_)
      throw WireError(WireError::Kind::length, "frame truncated");
    auto out = data_.subspan(pos_, count);
    pos_ += count;
    return out;
  }

  std::uint8_t u8() { return take(1)[0]; }

  std::uint32_t u32() {
    auto b = take(4);
    return static_cast<std::uint32_t>(b[0]) |
           static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 |
           static_cast<std::uint32_t>(b[3]) << 24;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace wire_detail

inline std::size_t matrix_encoded_size(std::size_t n) {
  return n * ((n + 7) / 8);
}

// Rows in order, each row ceil(n/8) bytes, bit c at byte c/8 position
// c % 8. Identical to the in-memory packing, modulo word width.
inline void encode_matrix(const BitMatrix& a, std::vector<std::uint8_t>& out) {
  const std::size_t row_bytes = (a.n_cols() + 7) / 8;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t b = 0; b < row_bytes; ++b)
      out.push_back(static_cast<std::uint8_t>(row[b / 8] >> (8 * (b % 8))));
  }
}

inline std::vector<std::uint8_t> encode_matrix(const BitMatrix& a) {
  std::vector<std::uint8_t> out;
  out.reserve(matrix_encoded_size(a.n_rows()));
  encode_matrix(a, out);
  return out;
}

inline BitMatrix decode_matrix(std::span<const std::uint8_t> data,
                               std::size_t n) {
  const std::size_t row_bytes = (n + 7) / 8;
  if (data.size() != n * row_bytes)
    throw WireError(WireError::Kind::length, "matrix payload length mismatch");
  BitMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = m.row_mut(r);
    for (std::size_t b = 0; b < row_bytes; ++b)
      row[b / 8] |= static_cast<std::uint64_t>(data[r * row_bytes + b])
                    << (8 * (b % 8));
    // non-canonical pad bits are rejected, not masked
    const std::size_t rem = n % 64;
    if (rem && (row[row.size() - 1] >> rem) != 0)
      throw WireError(WireError::Kind::padding, "nonzero matrix padding bits");
  }
  return m;
}

// 32-bit LE length, then minimal little-endian magnitude.
inline void encode_nat(const Nat& x, std::vector<std::uint8_t>& out) {
  const auto bytes = nat_to_bytes(x);
  wire_detail::put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.insert(out.end(), bytes.begin(), bytes.end());
}

inline Nat decode_nat(wire_detail::Cursor& cur) {
  const std::uint32_t len = cur.u32();
  auto bytes = cur.take(len);
  if (len > 0 && bytes[len - 1] == 0)
    throw WireError(WireError::Kind::invariant,
                    "non-canonical integer encoding (trailing zero byte)");
  return nat_from_bytes(bytes.data(), bytes.size());
}

inline std::vector<std::uint8_t> encode_header(const FrameHeader& h) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kWireMagic, kWireMagic + 4);
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(h.type));
  wire_detail::put_u32(out, h.n);
  wire_detail::put_u32(out, h.l);
  wire_detail::put_u32(out, h.j);
  return out;
}

inline std::vector<std::uint8_t> encode_frame(const DhweInitMsg& msg,
                                              const SystemParams& params) {
  auto out = encode_header({MsgType::dhwe_init,
                            static_cast<std::uint32_t>(params.n),
                            static_cast<std::uint32_t>(params.l),
                            static_cast<std::uint32_t>(params.j)});
  encode_matrix(msg.A, out);
  encode_matrix(msg.B, out);
  encode_matrix(msg.S, out);
  return out;
}

inline std::vector<std::uint8_t> encode_frame(const DhweReplyMsg& msg,
                                              const SystemParams& params) {
  auto out = encode_header({MsgType::dhwe_reply,
                            static_cast<std::uint32_t>(params.n),
                            static_cast<std::uint32_t>(params.l),
                            static_cast<std::uint32_t>(params.j)});
  encode_matrix(msg.Y, out);
  return out;
}

inline std::vector<std::uint8_t> encode_frame(const RsarInitMsg& msg,
                                              const SystemParams& params) {
  auto out = encode_header({MsgType::rsar_init,
                            static_cast<std::uint32_t>(params.n),
                            static_cast<std::uint32_t>(params.l),
                            static_cast<std::uint32_t>(msg.j)});
  encode_matrix(msg.A, out);
  encode_matrix(msg.B, out);
  encode_nat(msg.e, out);
  return out;
}

inline std::vector<std::uint8_t> encode_frame(const RsarReplyMsg& msg,
                                              const SystemParams& params) {
  auto out = encode_header({MsgType::rsar_reply,
                            static_cast<std::uint32_t>(params.n),
                            static_cast<std::uint32_t>(params.l),
                            static_cast<std::uint32_t>(params.j)});
  encode_matrix(msg.Y, out);
  return out;
}

inline std::vector<std::uint8_t> encode_frame(const ParamsMsg& msg) {
  const auto& p = msg.params;
  auto out = encode_header({MsgType::params, static_cast<std::uint32_t>(p.n),
                            static_cast<std::uint32_t>(p.l),
                            static_cast<std::uint32_t>(p.j)});
  wire_detail::put_u32(out, static_cast<std::uint32_t>(p.polys.size()));
  for (const auto& poly : p.polys) encode_nat(poly.coeffs, out);
  return out;
}

inline FrameHeader decode_header(wire_detail::Cursor& cur) {
  auto magic = cur.take(4);
  if (std::memcmp(magic.data(), kWireMagic, 4) != 0)
    throw WireError(WireError::Kind::magic, "bad magic");
  if (cur.u8() != kWireVersion)
    throw WireError(WireError::Kind::version, "unsupported version");
  const std::uint8_t t = cur.u8();
  switch (static_cast<MsgType>(t)) {
    case MsgType::dhwe_init:
    case MsgType::dhwe_reply:
    case MsgType::rsar_init:
    case MsgType::rsar_reply:
    case MsgType::params:
      break;
    default:
      throw WireError(WireError::Kind::type, "unknown message type");
  }
  FrameHeader h;
  h.type = static_cast<MsgType>(t);
  h.n = cur.u32();
  h.l = cur.u32();
  h.j = cur.u32();
  if (h.n == 0 || h.j >= h.n)
    throw WireError(WireError::Kind::invariant, "bad header dimensions");
  return h;
}

inline Frame decode_frame(std::span<const std::uint8_t> data) {
  wire_detail::Cursor cur(data);
  const FrameHeader h = decode_header(cur);
  const std::size_t n = h.n;
  const std::size_t msize = matrix_encoded_size(n);

  Frame frame;
  frame.header = h;
  switch (h.type) {
    case MsgType::dhwe_init: {
      DhweInitMsg msg{decode_matrix(cur.take(msize), n),
                      decode_matrix(cur.take(msize), n),
                      decode_matrix(cur.take(msize), n)};
      // header j must match the zero column the responder would derive
      auto z = detail::unique_zero_column(msg.S);
      if (!z || *z != h.j)
        throw WireError(WireError::Kind::invariant,
                        "S zero column disagrees with header j");
      frame.msg = std::move(msg);
      break;
    }
    case MsgType::dhwe_reply:
      frame.msg = DhweReplyMsg{decode_matrix(cur.take(msize), n)};
      break;
    case MsgType::rsar_init: {
      RsarInitMsg msg{decode_matrix(cur.take(msize), n),
                      decode_matrix(cur.take(msize), n), 0, h.j};
      msg.e = decode_nat(cur);
      if (!bit_of(msg.e, 0) || msg.e < 3)
        throw WireError(WireError::Kind::invariant, "e must be odd and >= 3");
      frame.msg = std::move(msg);
      break;
    }
    case MsgType::rsar_reply:
      frame.msg = RsarReplyMsg{decode_matrix(cur.take(msize), n)};
      break;
    case MsgType::params: {
      ParamsMsg msg;
      msg.params.n = h.n;
      msg.params.l = h.l;
      msg.params.m = h.n - h.l;
      msg.params.j = h.j;
      const std::uint32_t count = cur.u32();
      for (std::uint32_t i = 0; i < count; ++i)
        msg.params.polys.push_back({decode_nat(cur), std::nullopt});
      try {
        msg.params.check();
      } catch (const InvalidParams& e) {
        throw WireError(WireError::Kind::invariant, e.what());
      }
      frame.msg = std::move(msg);
      break;
    }
  }
  if (!cur.exhausted())
    throw WireError(WireError::Kind::length, "trailing bytes after frame");
  return frame;
}

// Incremental framing over a byte stream. `read_exact` must fill the
// requested buffer completely or return false (connection closed / EOF).
// Returns the complete frame bytes so decode_frame can do full validation.
template <typename ReadExact>
std::vector<std::uint8_t> read_frame_bytes(ReadExact&& read_exact) {
  std::vector<std::uint8_t> buf(kHeaderSize);
  if (!read_exact(buf.data(), buf.size()))
    throw WireError(WireError::Kind::length, "stream closed before header");
  wire_detail::Cursor cur(buf);
  const FrameHeader h = decode_header(cur);
  const std::size_t msize = matrix_encoded_size(h.n);

  auto read_more = [&](std::size_t count) {
    const std::size_t off = buf.size();
    buf.resize(off + count);
    if (!read_exact(buf.data() + off, count))
      throw WireError(WireError::Kind::length, "stream closed mid-frame");
  };
  auto read_u32_tail = [&]() -> std::uint32_t {
    read_more(4);
    const std::uint8_t* p = buf.data() + buf.size() - 4;
    return static_cast<std::uint32_t>(p[0]) |
           static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 |
           static_cast<std::uint32_t>(p[3]) << 24;
  };

  switch (h.type) {
    case MsgType::dhwe_init:
      read_more(3 * msize);
      break;
    case MsgType::dhwe_reply:
    case MsgType::rsar_reply:
      read_more(msize);
      break;
    case MsgType::rsar_init:
      read_more(2 * msize);
      read_more(read_u32_tail());
      break;
    case MsgType::params: {
      const std::uint32_t count = read_u32_tail();
      for (std::uint32_t i = 0; i < count; ++i) read_more(read_u32_tail());
      break;
    }
  }
  return buf;
}

}  // namespace nqkx
