#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "nqkx/params.hpp"
#include "nqkx/protocols.hpp"
#include "nqkx/rng.hpp"
#include "nqkx/wire.hpp"

namespace nqkx {

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Protocol { dhwe, rsar };

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void send_all(const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
      const ssize_t k = ::send(fd_, data, len, MSG_NOSIGNAL);
      if (k <= 0) throw NetError("send failed: " + std::string(strerror(errno)));
      data += k;
      len -= static_cast<std::size_t>(k);
    }
  }

  void send_all(const std::vector<std::uint8_t>& data) {
    send_all(data.data(), data.size());
  }

  // Fill the buffer completely; false on orderly close before any byte.
  bool recv_exact(std::uint8_t* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
      const ssize_t k = ::recv(fd_, data + got, len - got, 0);
      if (k == 0) {
        if (got == 0) return false;
        throw NetError("connection closed mid-read");
      }
      if (k < 0) throw NetError("recv failed: " + std::string(strerror(errno)));
      got += static_cast<std::size_t>(k);
    }
    return true;
  }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

inline std::pair<std::string, std::uint16_t> parse_addr(
    const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos)
    throw NetError("address must be host:port, got '" + addr + "'");
  const std::string host = addr.substr(0, colon);
  const int port = std::stoi(addr.substr(colon + 1));
  if (port < 0 || port > 65535) throw NetError("port out of range");
  return {host.empty() ? "127.0.0.1" : host,
          static_cast<std::uint16_t>(port)};
}

class Listener {
 public:
  Listener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw NetError("socket() failed");
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
      throw NetError("bad listen address: " + host);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
      throw NetError("bind failed: " + std::string(strerror(errno)));
    if (::listen(fd_, 8) != 0) throw NetError("listen failed");
    socklen_t len = sizeof(sa);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
  }
  ~Listener() {
    if (fd_ >= 0) ::close(fd_);
  }
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }

  Socket accept() {
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw NetError("accept failed");
    return Socket(cfd);
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

inline Socket connect_to(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError("socket() failed");
  Socket s(fd);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw NetError("bad connect address: " + host);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw NetError("connect failed: " + std::string(strerror(errno)));
  return s;
}

namespace net_detail {

inline std::vector<std::uint8_t> key_confirm_bytes(const SharedKey& key) {
  // first 8 bytes of the key (fewer when the key is shorter)
  std::vector<std::uint8_t> out;
  const std::size_t nbytes = std::min<std::size_t>(8, (key.key.length() + 7) / 8);
  for (std::size_t b = 0; b < nbytes; ++b)
    out.push_back(
        static_cast<std::uint8_t>(key.key.words()[b / 8] >> (8 * (b % 8))));
  return out;
}

inline Frame recv_frame(Socket& s) {
  auto bytes = read_frame_bytes(
      [&](std::uint8_t* buf, std::size_t len) { return s.recv_exact(buf, len); });
  return decode_frame(bytes);
}

inline void confirm_key(Socket& s, const SharedKey& key, bool send_first) {
  const auto mine = key_confirm_bytes(key);
  std::vector<std::uint8_t> theirs(mine.size());
  if (send_first) {
    s.send_all(mine);
    if (!s.recv_exact(theirs.data(), theirs.size()))
      throw NetError("peer closed before key confirmation");
  } else {
    if (!s.recv_exact(theirs.data(), theirs.size()))
      throw NetError("peer closed before key confirmation");
    s.send_all(mine);
  }
  if (theirs != mine) throw NetError("key confirmation mismatch");
}

}  // namespace net_detail

// Responder side of one handshake on an accepted connection. The first
// frame's type selects the protocol. Returns the derived key.
inline SharedKey serve_handshake(Socket& s, Rng& rng, bool test_confirm) {
  const Frame frame = net_detail::recv_frame(s);
  SystemParams hdr_params;  // shape echo for the reply header
  hdr_params.n = frame.header.n;
  hdr_params.l = frame.header.l;
  hdr_params.m = frame.header.n - frame.header.l;
  hdr_params.j = frame.header.j;

  SharedKey key;
  if (const auto* init = std::get_if<DhweInitMsg>(&frame.msg)) {
    auto [st, reply, k] = DhweBob::respond(*init, rng);
    s.send_all(encode_frame(reply, hdr_params));
    key = std::move(k);
  } else if (const auto* init2 = std::get_if<RsarInitMsg>(&frame.msg)) {
    auto [st, reply, k] = RsarBob::respond(*init2, rng);
    s.send_all(encode_frame(reply, hdr_params));
    key = std::move(k);
  } else {
    throw ProtocolError("expected an init frame");
  }
  if (test_confirm) net_detail::confirm_key(s, key, /*send_first=*/false);
  return key;
}

// Initiator side: generate key material, run one handshake. Returns the
// derived key.
inline SharedKey client_handshake(Socket& s, const SystemParams& shape,
                                  Protocol proto, Rng& rng,
                                  bool test_confirm) {
  Instance inst = generate(shape, rng);
  SharedKey key;
  if (proto == Protocol::dhwe) {
    auto [st, init] = DhweAlice::init(inst.secret, inst.params, rng);
    s.send_all(encode_frame(init, inst.params));
    Frame reply = net_detail::recv_frame(s);
    const auto* r = std::get_if<DhweReplyMsg>(&reply.msg);
    if (!r) throw ProtocolError("expected a dhwe reply frame");
    key = dhwe_alice_finish(st, *r);
  } else {
    auto [st, init] = RsarAlice::init(inst.secret, inst.params, rng);
    s.send_all(encode_frame(init, inst.params));
    Frame reply = net_detail::recv_frame(s);
    const auto* r = std::get_if<RsarReplyMsg>(&reply.msg);
    if (!r) throw ProtocolError("expected an rsar reply frame");
    key = rsar_alice_finish(st, *r);
  }
  if (test_confirm) net_detail::confirm_key(s, key, /*send_first=*/true);
  return key;
}

}  // namespace nqkx
