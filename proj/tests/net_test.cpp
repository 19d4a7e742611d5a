#include "nqkx/net.hpp"

#include <gtest/gtest.h>

#include <future>
#include <thread>

namespace nqkx {
namespace {

TEST(ParseAddr, HostPortForms) {
  EXPECT_EQ(parse_addr("127.0.0.1:9000"),
            (std::pair<std::string, std::uint16_t>{"127.0.0.1", 9000}));
  EXPECT_EQ(parse_addr(":0"),
            (std::pair<std::string, std::uint16_t>{"127.0.0.1", 0}));
  EXPECT_THROW(parse_addr("nocolon"), NetError);
  EXPECT_THROW(parse_addr("127.0.0.1:70000"), NetError);
}

SharedKey run_loopback(Protocol proto, const std::string& preset_name,
                       std::uint64_t seed, SharedKey* server_key_out) {
  Listener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    Rng rng(seed + 1);
    return serve_handshake(s, rng, /*test_confirm=*/true);
  });
  Socket c = connect_to("127.0.0.1", listener.port());
  Rng rng(seed);
  const SharedKey client_key =
      client_handshake(c, preset(preset_name), proto, rng,
                       /*test_confirm=*/true);
  *server_key_out = server.get();
  return client_key;
}

TEST(Loopback, DhweKeysAgree) {
  SharedKey server_key;
  const SharedKey client_key =
      run_loopback(Protocol::dhwe, "toy-16", 100, &server_key);
  EXPECT_EQ(client_key, server_key);
  EXPECT_EQ(client_key.key.length(), 16u);
}

TEST(Loopback, RsarKeysAgree) {
  SharedKey server_key;
  const SharedKey client_key =
      run_loopback(Protocol::rsar, "toy-16", 101, &server_key);
  EXPECT_EQ(client_key, server_key);
}

TEST(Loopback, LargerPresetKeysAgree) {
  SharedKey server_key;
  const SharedKey client_key =
      run_loopback(Protocol::dhwe, "toy-64", 102, &server_key);
  EXPECT_EQ(client_key, server_key);
  EXPECT_EQ(client_key.key.length(), 64u);
}

TEST(Loopback, ChunkedDeliveryReassembles) {
  // trickle the init frame a few bytes at a time; the responder still
  // assembles and answers it
  Rng rng(103);
  const Instance inst = generate(preset("toy-16"), rng);
  auto [st, init] = DhweAlice::init(inst.secret, inst.params, rng);
  const auto bytes = encode_frame(init, inst.params);

  Listener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    Rng srng(104);
    return serve_handshake(s, srng, /*test_confirm=*/false);
  });
  Socket c = connect_to("127.0.0.1", listener.port());
  for (std::size_t off = 0; off < bytes.size(); off += 7) {
    const std::size_t k = std::min<std::size_t>(7, bytes.size() - off);
    c.send_all(bytes.data() + off, k);
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  Frame reply = net_detail::recv_frame(c);
  auto alice = st;
  const SharedKey client_key =
      dhwe_alice_finish(alice, std::get<DhweReplyMsg>(reply.msg));
  EXPECT_EQ(client_key, server.get());
}

TEST(Loopback, GarbageMagicAborts) {
  Listener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    Rng rng(105);
    serve_handshake(s, rng, /*test_confirm=*/false);
  });
  Socket c = connect_to("127.0.0.1", listener.port());
  const std::vector<std::uint8_t> junk(64, 0xAB);
  c.send_all(junk);
  EXPECT_THROW(server.get(), WireError);
}

TEST(Loopback, EarlyCloseAborts) {
  Listener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    Socket s = listener.accept();
    Rng rng(106);
    serve_handshake(s, rng, /*test_confirm=*/false);
  });
  {
    Socket c = connect_to("127.0.0.1", listener.port());
    const std::vector<std::uint8_t> partial = {'N', 'Q', 'K'};
    c.send_all(partial);
  }  // closed mid-header
  EXPECT_THROW(server.get(), NetError);
}

TEST(Loopback, TwoSequentialHandshakesOneListener) {
  Listener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    std::vector<SharedKey> keys;
    for (int i = 0; i < 2; ++i) {
      Socket s = listener.accept();
      Rng rng(200 + i);
      keys.push_back(serve_handshake(s, rng, /*test_confirm=*/true));
    }
    return keys;
  });
  std::vector<SharedKey> client_keys;
  for (int i = 0; i < 2; ++i) {
    Socket c = connect_to("127.0.0.1", listener.port());
    Rng rng(300 + i);
    client_keys.push_back(
        client_handshake(c, preset("toy-16"),
                         i == 0 ? Protocol::dhwe : Protocol::rsar, rng,
                         /*test_confirm=*/true));
  }
  const auto server_keys = server.get();
  ASSERT_EQ(server_keys.size(), 2u);
  EXPECT_EQ(client_keys[0], server_keys[0]);
  EXPECT_EQ(client_keys[1], server_keys[1]);
  EXPECT_NE(client_keys[0], client_keys[1]);
}

TEST(KeyConfirm, FirstEightKeyBytes) {
  SharedKey key;
  key.key = BitVector(64);
  for (std::size_t i = 0; i < 64; i += 3) key.key.set(i, true);
  const auto bytes = net_detail::key_confirm_bytes(key);
  ASSERT_EQ(bytes.size(), 8u);
  for (std::size_t b = 0; b < 8; ++b) {
    std::uint8_t expect = 0;
    for (std::size_t bit = 0; bit < 8; ++bit)
      if (key.key.get(8 * b + bit)) expect |= std::uint8_t(1) << bit;
    EXPECT_EQ(bytes[b], expect);
  }
}

}  // namespace
}  // namespace nqkx
