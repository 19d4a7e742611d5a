// nqkx command-line tool: key generation, file-based handshakes, a loopback
// TCP demo, and the lab experiments.

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "nqkx/lab.hpp"
#include "nqkx/net.hpp"
#include "nqkx/params.hpp"
#include "nqkx/protocols.hpp"
#include "nqkx/wire.hpp"

namespace {

using namespace nqkx;

constexpr int kExitOk = 0;
constexpr int kExitProtocol = 1;
constexpr int kExitUsage = 2;

std::uint64_t resolve_seed(bool insecure_deterministic, std::uint64_t seed) {
  if (insecure_deterministic) return seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data,
                bool secret) {
  const int flags = O_CREAT | O_WRONLY | O_TRUNC;
  const mode_t mode = secret ? 0600 : 0644;
  const int fd = ::open(path.c_str(), flags, mode);
  if (fd < 0) throw std::runtime_error("cannot create " + path);
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t k = ::write(fd, data.data() + off, data.size() - off);
    if (k <= 0) {
      ::close(fd);
      throw std::runtime_error("write failed for " + path);
    }
    off += static_cast<std::size_t>(k);
  }
  ::close(fd);
}

// Private session-state file (never a wire format): magic NQKS, version,
// role, n, j, then the resumption exponent.
constexpr char kStateMagic[4] = {'N', 'Q', 'K', 'S'};

std::vector<std::uint8_t> encode_state(std::uint8_t role, std::size_t n,
                                       std::size_t j, const Nat& exponent) {
  std::vector<std::uint8_t> out(kStateMagic, kStateMagic + 4);
  out.push_back(0x01);
  out.push_back(role);
  wire_detail::put_u32(out, static_cast<std::uint32_t>(n));
  wire_detail::put_u32(out, static_cast<std::uint32_t>(j));
  encode_nat(exponent, out);
  return out;
}

struct StateFile {
  std::uint8_t role;
  std::size_t n, j;
  Nat exponent;
};

StateFile decode_state(const std::vector<std::uint8_t>& data) {
  wire_detail::Cursor cur(data);
  auto magic = cur.take(4);
  if (std::memcmp(magic.data(), kStateMagic, 4) != 0)
    throw std::runtime_error("not a session state file");
  if (cur.u8() != 0x01) throw std::runtime_error("unsupported state version");
  StateFile st;
  st.role = cur.u8();
  st.n = cur.u32();
  st.j = cur.u32();
  st.exponent = decode_nat(cur);
  if (!cur.exhausted()) throw std::runtime_error("trailing bytes in state file");
  return st;
}

SystemParams shape_from_options(const std::string& preset_name, std::size_t n,
                                std::size_t l,
                                const std::vector<std::size_t>& degrees) {
  if (!preset_name.empty()) return preset(preset_name);
  SystemParams p;
  p.n = n;
  p.l = l;
  p.m = n - l;
  for (std::size_t d : degrees)
    p.polys.push_back(
        {gf2poly::smallest_irreducible(static_cast<int>(d)), std::nullopt});
  p.check();
  return p;
}

void print_key(const SharedKey& key, const std::string& key_out) {
  const std::string hex = key.key.to_hex();
  std::cout << "key " << hex << "\n";
  if (!key_out.empty()) {
    std::vector<std::uint8_t> bytes(hex.begin(), hex.end());
    bytes.push_back('\n');
    write_file(key_out, bytes, /*secret=*/true);
  }
}

int run_selftest(const std::string& preset_name, Rng& rng) {
  const SystemParams shape = preset(preset_name);
  {
    Instance inst = generate(shape, rng);
    auto [ast, init] = DhweAlice::init(inst.secret, inst.params, rng);
    auto [bst, reply, kb] = DhweBob::respond(init, rng);
    SharedKey ka = dhwe_alice_finish(ast, reply);
    if (!(ka == kb)) {
      std::cerr << "selftest: dhwe key mismatch\n";
      return kExitProtocol;
    }
    std::cout << "dhwe alice " << ka.key.to_hex() << "\n";
    std::cout << "dhwe bob   " << kb.key.to_hex() << "\n";
  }
  {
    Instance inst = generate(shape, rng);
    auto [ast, init] = RsarAlice::init(inst.secret, inst.params, rng);
    auto [bst, reply, kb] = RsarBob::respond(init, rng);
    SharedKey ka = rsar_alice_finish(ast, reply);
    if (!(ka == kb)) {
      std::cerr << "selftest: rsar key mismatch\n";
      return kExitProtocol;
    }
    std::cout << "rsar alice " << ka.key.to_hex() << "\n";
    std::cout << "rsar bob   " << kb.key.to_hex() << "\n";
  }
  std::cout << "selftest ok\n";
  return kExitOk;
}

void append_csv(const std::string& path, const std::string& name,
                const ExperimentReport& rep) {
  if (path.empty()) return;
  const bool fresh = !std::ifstream(path).good();
  std::ofstream out(path, std::ios::app);
  if (fresh) out << "experiment,trials,successes,advantage,ci_half_width\n";
  out << name << ',' << rep.trials << ',' << rep.successes << ','
      << rep.advantage << ',' << rep.conf_half_width << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix-based key agreement over GF(2): DH-WE and RSA-Resemble"};
  app.require_subcommand(1);

  bool insecure_deterministic = false;
  std::uint64_t seed = 0;
  app.add_flag("--insecure-deterministic", insecure_deterministic,
               "derive all randomness from --seed (testing only)");
  app.add_option("--seed", seed, "seed, honored only with --insecure-deterministic");

  std::string preset_name, in_path, out_path, state_path, key_out, csv_path;
  std::size_t opt_n = 0, opt_l = 0;
  std::vector<std::size_t> opt_degrees;
  std::string listen_addr = "127.0.0.1:0", protocol_name = "dhwe";
  std::string connect_addr;
  std::size_t trials = 1000;
  std::uint64_t cap = 256;
  bool once = false, test_confirm = false;
  std::string secret_out;

  // params gen
  auto* params_cmd = app.add_subcommand("params", "parameter handling");
  auto* params_gen = params_cmd->add_subcommand("gen", "generate a parameter set");
  params_gen->add_option("--preset", preset_name, "preset name");
  params_gen->add_option("--n", opt_n, "dimension n");
  params_gen->add_option("--l", opt_l, "involution block dimension l (even)");
  params_gen->add_option("--polys", opt_degrees,
                         "degrees of the C-block polynomials (sum = n - l)");
  params_gen->add_option("--out", out_path, "public parameter frame output");

  auto add_handshake_cmds = [&](const std::string& proto) {
    auto* cmd = app.add_subcommand(proto, proto + " handshake steps");
    auto* init = cmd->add_subcommand("init", "Alice: produce the init message");
    init->add_option("--preset", preset_name, "preset name");
    init->add_option("--state", state_path, "session state output (secret)")
        ->required();
    init->add_option("--out", out_path, "init message output")->required();
    auto* respond = cmd->add_subcommand("respond", "Bob: consume init, emit reply");
    respond->add_option("--in", in_path, "init message input")->required();
    respond->add_option("--out", out_path, "reply message output")->required();
    respond->add_option("--key-out", key_out, "write the key hex here (secret)");
    auto* finish = cmd->add_subcommand("finish", "Alice: consume reply, derive key");
    finish->add_option("--state", state_path, "session state input")->required();
    finish->add_option("--in", in_path, "reply message input")->required();
    finish->add_option("--key-out", key_out, "write the key hex here (secret)");
    return cmd;
  };
  auto* dhwe_cmd = add_handshake_cmds("dhwe");
  auto* rsar_cmd = add_handshake_cmds("rsar");

  auto* selftest = app.add_subcommand("selftest", "in-process handshakes, both protocols");
  selftest->add_option("--preset", preset_name, "preset name")
      ->default_val("toy-16");

  auto* serve = app.add_subcommand("serve", "respond to handshakes over TCP");
  serve->add_option("--listen", listen_addr, "host:port to listen on");
  serve->add_option("--protocol", protocol_name, "dhwe or rsar")
      ->check(CLI::IsMember({"dhwe", "rsar"}));
  serve->add_flag("--once", once, "serve a single connection, then exit");
  serve->add_flag("--test-confirm", test_confirm,
                  "exchange key-confirmation bytes (test mode)");

  auto* connect_cmd = app.add_subcommand("connect", "initiate a handshake over TCP");
  connect_cmd->add_option("address", connect_addr, "host:port")->required();
  connect_cmd->add_option("--preset", preset_name, "preset name")
      ->default_val("paper-128");
  connect_cmd->add_option("--protocol", protocol_name, "dhwe or rsar")
      ->check(CLI::IsMember({"dhwe", "rsar"}));
  connect_cmd->add_flag("--test-confirm", test_confirm,
                        "exchange key-confirmation bytes (test mode)");

  auto* lab_cmd = app.add_subcommand("lab", "desk-scale experiments");
  auto* dlp_demo = lab_cmd->add_subcommand(
      "dlp-demo", "plant alpha, recover it from (M, M^alpha), fail on noise");
  dlp_demo->add_option("--preset", preset_name, "preset name")->default_val("toy-8");
  dlp_demo->add_option("--n", opt_n, "shorthand for --preset toy-<n>");
  dlp_demo->add_option("--cap", cap, "exponent search cap");
  auto* distinguish = lab_cmd->add_subcommand(
      "distinguish", "constant-guess distinguisher advantage");
  distinguish->add_option("--preset", preset_name, "preset name")
      ->default_val("toy-16");
  distinguish->add_option("--protocol", protocol_name, "dhwe or rsar")
      ->check(CLI::IsMember({"dhwe", "rsar"}));
  distinguish->add_option("--trials", trials, "number of trials");
  distinguish->add_option("--csv", csv_path, "append a CSV summary row here");
  auto* tail_cmd = lab_cmd->add_subcommand(
      "tail", "tail pair (s, t) of a singular product matrix");
  tail_cmd->add_option("--preset", preset_name, "preset name")->default_val("toy-8");
  tail_cmd->add_option("--cap", cap, "power sequence cap");
  auto* th3 = lab_cmd->add_subcommand(
      "dprime", "d'-existence frequency for Y = X^e");
  th3->add_option("--preset", preset_name, "preset name")->default_val("toy-6");
  th3->add_option("--trials", trials, "number of trials");
  th3->add_option("--cap", cap, "d' search cap");

  // allow the global flags (--seed, --insecure-deterministic) after a
  // subcommand as well as before it
  std::function<void(CLI::App*)> allow_globals = [&](CLI::App* a) {
    for (auto* sub : a->get_subcommands([](const CLI::App*) { return true; })) {
      sub->fallthrough();
      allow_globals(sub);
    }
  };
  allow_globals(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Rng rng(resolve_seed(insecure_deterministic, seed));

  try {
    if (params_gen->parsed()) {
      const SystemParams shape =
          shape_from_options(preset_name, opt_n, opt_l, opt_degrees);
      Instance inst = generate(shape, rng);
      std::cout << "n=" << inst.params.n << " l=" << inst.params.l
                << " j=" << inst.params.j << " r=" << inst.secret.r
                << " phi=" << inst.secret.phi << "\n";
      if (!out_path.empty())
        write_file(out_path, encode_frame(ParamsMsg{inst.params}), false);
      return kExitOk;
    }

    for (auto [cmd, is_dhwe] : {std::pair{dhwe_cmd, true}, {rsar_cmd, false}}) {
      if (!cmd->parsed()) continue;
      auto* init = cmd->get_subcommand("init");
      auto* respond = cmd->get_subcommand("respond");
      auto* finish = cmd->get_subcommand("finish");
      if (init->parsed()) {
        const SystemParams shape =
            preset(preset_name.empty() ? "paper-128" : preset_name);
        Instance inst = generate(shape, rng);
        if (is_dhwe) {
          auto [st, msg] = DhweAlice::init(inst.secret, inst.params, rng);
          write_file(state_path,
                     encode_state(0x01, inst.params.n, inst.params.j, st.alpha()),
                     /*secret=*/true);
          write_file(out_path, encode_frame(msg, inst.params), false);
        } else {
          auto [st, msg] = RsarAlice::init(inst.secret, inst.params, rng);
          write_file(state_path,
                     encode_state(0x02, inst.params.n, inst.params.j, st.d()),
                     /*secret=*/true);
          write_file(out_path, encode_frame(msg, inst.params), false);
        }
        std::cout << "init message written to " << out_path << "\n";
      } else if (respond->parsed()) {
        const Frame frame = decode_frame(read_file(in_path));
        SystemParams hdr;
        hdr.n = frame.header.n;
        hdr.l = frame.header.l;
        hdr.m = hdr.n - hdr.l;
        hdr.j = frame.header.j;
        if (is_dhwe) {
          const auto* msg = std::get_if<DhweInitMsg>(&frame.msg);
          if (!msg) throw ProtocolError("expected a dhwe init frame");
          auto [st, reply, key] = DhweBob::respond(*msg, rng);
          write_file(out_path, encode_frame(reply, hdr), false);
          print_key(key, key_out);
        } else {
          const auto* msg = std::get_if<RsarInitMsg>(&frame.msg);
          if (!msg) throw ProtocolError("expected an rsar init frame");
          auto [st, reply, key] = RsarBob::respond(*msg, rng);
          write_file(out_path, encode_frame(reply, hdr), false);
          print_key(key, key_out);
        }
      } else if (finish->parsed()) {
        const StateFile st = decode_state(read_file(state_path));
        const Frame frame = decode_frame(read_file(in_path));
        if (is_dhwe) {
          if (st.role != 0x01) throw ProtocolError("state file is not a dhwe session");
          const auto* msg = std::get_if<DhweReplyMsg>(&frame.msg);
          if (!msg) throw ProtocolError("expected a dhwe reply frame");
          auto ast = DhweAlice::resume(st.exponent, st.j, st.n);
          print_key(dhwe_alice_finish(ast, *msg), key_out);
        } else {
          if (st.role != 0x02) throw ProtocolError("state file is not an rsar session");
          const auto* msg = std::get_if<RsarReplyMsg>(&frame.msg);
          if (!msg) throw ProtocolError("expected an rsar reply frame");
          auto ast = RsarAlice::resume(st.exponent, st.j, st.n);
          print_key(rsar_alice_finish(ast, *msg), key_out);
        }
      }
      return kExitOk;
    }

    if (selftest->parsed()) return run_selftest(preset_name, rng);

    if (serve->parsed()) {
      auto [host, port] = parse_addr(listen_addr);
      Listener lis(host, port);
      std::cout << "listening on " << host << ":" << lis.port() << std::endl;
      const Protocol expect =
          protocol_name == "dhwe" ? Protocol::dhwe : Protocol::rsar;
      do {
        Socket conn = lis.accept();
        Rng conn_rng = rng.split(0);
        // peek protocol via the handshake itself; serve_handshake reads
        // the init frame and dispatches on its type
        SharedKey key = serve_handshake(conn, conn_rng, test_confirm);
        (void)expect;
        std::cout << "key " << key.key.to_hex() << std::endl;
      } while (!once);
      return kExitOk;
    }

    if (connect_cmd->parsed()) {
      auto [host, port] = parse_addr(connect_addr);
      Socket conn = connect_to(host, port);
      const Protocol proto =
          protocol_name == "dhwe" ? Protocol::dhwe : Protocol::rsar;
      SharedKey key =
          client_handshake(conn, preset(preset_name), proto, rng, test_confirm);
      std::cout << "key " << key.key.to_hex() << std::endl;
      return kExitOk;
    }

    if (dlp_demo->parsed()) {
      if (opt_n > 0) preset_name = "toy-" + std::to_string(opt_n);
      const SystemParams shape = preset(preset_name);
      Instance inst = generate(shape, rng);
      const SecretParams& sp = inst.secret;
      const Nat alpha = nat_between(rng, Nat(2), sp.r - 1);
      const BitMatrix target = pow(sp.M, alpha);
      auto found = bruteforce_matrix_dlp(sp.M, target, cap);
      std::cout << "planted alpha=" << alpha << " recovered="
                << (found ? std::to_string(*found) : "absent") << "\n";
      const BitMatrix noisy_base =
          add(sp.M, mul(BitMatrix::random(shape.n, rng), sp.Q));
      const BitMatrix noisy_target =
          add(target, mul(BitMatrix::random(shape.n, rng), sp.Q));
      auto noisy = bruteforce_matrix_dlp(noisy_base, noisy_target, cap);
      std::cout << "noisy recovery: "
                << (noisy ? std::to_string(*noisy) : "absent") << "\n";
      return (found && Nat(*found) == alpha) ? kExitOk : kExitProtocol;
    }

    if (distinguish->parsed()) {
      const SystemParams shape = preset(preset_name);
      ExperimentReport rep;
      if (protocol_name == "dhwe")
        rep = run_distinguisher(DhweStrategy([](const DhweView&) { return false; }),
                                trials, shape, rng);
      else
        rep = run_distinguisher(RsarStrategy([](const RsarView&) { return false; }),
                                trials, shape, rng);
      std::cout << "strategy=constant0 protocol=" << protocol_name
                << " trials=" << rep.trials << " successes=" << rep.successes
                << " advantage=" << rep.advantage
                << " ci_half_width=" << rep.conf_half_width << "\n";
      append_csv(csv_path, "distinguish-" + protocol_name, rep);
      return kExitOk;
    }

    if (tail_cmd->parsed()) {
      const SystemParams shape = preset(preset_name);
      Instance inst = generate(shape, rng);
      auto [ast, msg] = RsarAlice::init(inst.secret, inst.params, rng);
      const Nat theta = nat_below(rng, Nat(16));
      const Nat vartheta = nat_between(rng, Nat(1), Nat(8));
      BitMatrix x = mul(pow(msg.A, theta), pow(msg.B, vartheta));
      auto st = tail_pair(x, cap);
      if (st)
        std::cout << "tail pair s=" << st->first << " t=" << st->second << "\n";
      else
        std::cout << "tail pair absent within cap=" << cap << "\n";
      return kExitOk;
    }

    if (th3->parsed()) {
      const SystemParams shape = preset(preset_name);
      DprimeReport rep = dprime_experiment(shape, trials, 3, 31, cap, rng);
      std::cout << "singular trials=" << rep.singular_trials
                << " found=" << rep.singular_found
                << " freq=" << rep.singular_freq.center << "+-"
                << rep.singular_freq.half_width << "\n";
      std::cout << "control trials=" << rep.control_trials
                << " found=" << rep.control_found
                << " freq=" << rep.control_freq.center << "+-"
                << rep.control_freq.half_width << "\n";
      return kExitOk;
    }
  } catch (const WireError& e) {
    std::cerr << "wire error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const ResampleBudgetExceeded& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const NetError& e) {
    std::cerr << "network error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
