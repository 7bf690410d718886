#include "cryptocatch/sim.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cryptocatch {

using nlohmann::json;
using net::Clock;
using namespace std::chrono_literals;

PoolBehavior PoolBehavior::parse(std::string_view s) {
  PoolBehavior b;
  if (s == "success") return b;
  if (s == "error") {
    b.mode = Mode::RespondError;
    return b;
  }
  if (s == "silent") {
    b.mode = Mode::SilentDrop;
    return b;
  }
  if (s.rfind("limit:", 0) == 0) {
    const auto n = s.substr(6);
    int max = -1;
    auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), max);
    if (ec != std::errc{} || p != n.data() + n.size() || max < 0)
      throw std::invalid_argument("limit:N needs N >= 0");
    b.mode = Mode::ConnectionLimit;
    b.max_connections = max;
    return b;
  }
  throw std::invalid_argument("unknown pool behavior: " + std::string(s));
}

std::string PoolBehavior::to_string() const {
  switch (mode) {
    case Mode::RespondSuccess: return "success";
    case Mode::RespondError: return "error";
    case Mode::SilentDrop: return "silent";
    case Mode::ConnectionLimit: return "limit:" + std::to_string(max_connections);
  }
  return "?";
}

std::string pool_success_body(ProtocolVariant v, const json& id) {
  const auto i = id.dump();
  switch (v) {
    case ProtocolVariant::StratumBTC:
      return R"({"id":)" + i +
             R"(,"result":[["mining.set_difficulty","b4b6693b72a50c7116db18d6497cac52"],)"
             R"(["mining.notify","ae6812eb4cd7735a302a8a9dd95cf71f"]],"error":null})";
    case ProtocolVariant::StratumXMR:
      return R"({"id":)" + i +
             R"(,"jsonrpc":"2.0","result":{"id":"479385725093648","job":{"algo":"rx/0",)"
             R"("blob":"0e0ed3c6e0a806ab1d3b2c53ad0f8c50ba4f1d5c23c0c2f4f0a4a4c1b4e87b5a0fd2a95d0000000000000000000000000000000000000000000000000000000000000000000000000001",)"
             R"("job_id":"1","target":"b88d0600"},"status":"OK"},"error":null})";
    case ProtocolVariant::StratumETH:
      return R"({"id":)" + i + R"(,"jsonrpc":"2.0","result":true,"error":null})";
    case ProtocolVariant::StratumWebmineXMR:
      return R"({"r":{"subscribed":0},"id":)" + i + "}";
  }
  return {};
}

std::string pool_error_body(ProtocolVariant v, const json& id) {
  const auto i = id.dump();
  switch (v) {
    case ProtocolVariant::StratumBTC:
      return R"({"id":)" + i + R"(,"result":false,"error":[20,"Not supported"]})";
    case ProtocolVariant::StratumXMR:
      return R"({"id":)" + i + R"(,"jsonrpc":"2.0","error":{"code":-1,"message":"Invalid address"}})";
    case ProtocolVariant::StratumETH:
      return R"({"id":)" + i +
             R"(,"jsonrpc":"2.0","result":null,"error":{"code":-1,"message":"Invalid login"}})";
    case ProtocolVariant::StratumWebmineXMR:
      return R"({"e":"noRights","id":)" + i + "}";
  }
  return {};
}

std::optional<std::string> pool_reply(ProtocolVariant v, const PoolBehavior& b, std::string_view line) {
  if (b.mode == PoolBehavior::Mode::SilentDrop) return std::nullopt;
  const json req = json::parse(line.begin(), line.end(), nullptr, false);
  const bool object = !req.is_discarded() && req.is_object();
  json id = is_webmine(v) ? json("start") : json(1);
  if (object && req.contains("id") && (req["id"].is_number_integer() || req["id"].is_string()))
    id = req["id"];

  bool subscribe = false;
  if (object) {
    switch (v) {
      case ProtocolVariant::StratumBTC: subscribe = req.value("method", "") == "mining.subscribe"; break;
      case ProtocolVariant::StratumXMR: subscribe = req.value("method", "") == "login"; break;
      case ProtocolVariant::StratumETH: subscribe = req.value("method", "") == "eth_submitLogin"; break;
      case ProtocolVariant::StratumWebmineXMR: subscribe = req.value("m", "") == "start"; break;
    }
  }
  if (subscribe && b.mode != PoolBehavior::Mode::RespondError) return pool_success_body(v, id);
  return pool_error_body(v, id);
}

MockServer::MockServer(net::Listener listener, std::string host, Handler handler,
                       net::TlsContextPtr tls, int max_connections)
    : listener_(std::move(listener)), host_(std::move(host)), port_(listener_.port),
      handler_(std::move(handler)), tls_(std::move(tls)), max_connections_(max_connections) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  if (stop_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  listener_.fd.reset();
}

std::vector<std::string> MockServer::received() const {
  std::lock_guard lock(mu_);
  return log_;
}

void MockServer::log(std::string line) {
  std::lock_guard lock(mu_);
  log_.push_back(std::move(line));
}

void MockServer::accept_loop() {
  while (!stop_.load()) {
    if (!net::wait_readable(listener_.fd.get(), Clock::now() + 20ms)) continue;
    net::Fd fd(::accept4(listener_.fd.get(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!fd.valid()) continue;
    const int index = ++accepted_;
    if (max_connections_ >= 0 && index > max_connections_) continue;  // closes immediately
    std::lock_guard lock(mu_);
    workers_.emplace_back([this, fd = std::move(fd)]() mutable {
      std::unique_ptr<net::Channel> ch;
      if (tls_)
        ch = net::tls_accept(std::move(fd), tls_, Clock::now() + 1s);
      else
        ch = net::plain_channel(std::move(fd));
      if (ch) handler_(*this, std::move(ch));
    });
  }
}

namespace {

std::unique_ptr<MockServer> make_server(const std::string& host, std::uint16_t port,
                                        MockServer::Handler handler, bool tls = false,
                                        int max_connections = -1) {
  auto listener = net::listen_tcp(host, port);
  return std::make_unique<MockServer>(std::move(listener), host, std::move(handler),
                                      tls ? net::tls_server_context() : nullptr, max_connections);
}

void stratum_session(MockServer& srv, net::Channel& ch, ProtocolVariant v, const PoolBehavior& b) {
  std::string carry;
  while (!srv.stopping()) {
    auto r = net::read_line(ch, carry, Clock::now() + 50ms);
    if (r.status == net::RecvStatus::timeout) continue;
    if (r.status != net::RecvStatus::data) return;
    srv.log(r.bytes);
    if (auto reply = pool_reply(v, b, r.bytes))
      if (!ch.send(*reply + "\n", Clock::now() + 1s)) return;
  }
}

constexpr std::string_view kBadRequest =
    "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";

void webmine_session(MockServer& srv, net::Channel& ch, const PoolBehavior& b) {
  std::string carry;
  const auto head_deadline = Clock::now() + 2s;
  for (;;) {
    if (carry.size() >= 4 ? carry.rfind("GET ", 0) != 0 : std::string_view("GET ").rfind(carry, 0) != 0) {
      srv.log(carry);
      ch.send(kBadRequest, Clock::now() + 1s);
      return;
    }
    if (carry.find("\r\n\r\n") != std::string::npos) break;
    if (srv.stopping() || Clock::now() >= head_deadline) return;
    auto r = ch.recv_some(std::min(head_deadline, Clock::now() + 50ms));
    if (r.status == net::RecvStatus::timeout) continue;
    if (r.status != net::RecvStatus::data) return;
    carry += r.bytes;
  }
  const auto end = carry.find("\r\n\r\n");
  const auto head = carry.substr(0, end);
  carry.erase(0, end + 4);
  srv.log(head);
  const auto key = net::ws::header_value(head, "Sec-WebSocket-Key");
  if (!key) {
    ch.send(kBadRequest, Clock::now() + 1s);
    return;
  }
  const std::string upgrade =
      "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
      "Sec-WebSocket-Accept: " + net::ws::accept_key(*key) + "\r\n\r\n";
  if (!ch.send(upgrade, Clock::now() + 1s)) return;

  while (!srv.stopping()) {
    if (auto f = net::ws::try_decode_frame(carry)) {
      if (f->opcode == 0x8) return;
      if (f->opcode != 0x1 && f->opcode != 0x2) continue;
      srv.log(f->payload);
      if (auto reply = pool_reply(ProtocolVariant::StratumWebmineXMR, b, f->payload))
        if (!ch.send(net::ws::encode_frame(*reply, false), Clock::now() + 1s)) return;
      continue;
    }
    auto r = ch.recv_some(Clock::now() + 50ms);
    if (r.status == net::RecvStatus::timeout) continue;
    if (r.status != net::RecvStatus::data) return;
    carry += r.bytes;
  }
}

}  // namespace

std::unique_ptr<MockServer> serve_pool(ProtocolVariant variant, PoolBehavior behavior,
                                       const std::string& host, std::uint16_t port, bool tls) {
  const int limit =
      behavior.mode == PoolBehavior::Mode::ConnectionLimit ? behavior.max_connections : -1;
  return make_server(
      host, port,
      [variant, behavior](MockServer& srv, std::unique_ptr<net::Channel> ch) {
        if (is_webmine(variant))
          webmine_session(srv, *ch, behavior);
        else
          stratum_session(srv, *ch, variant, behavior);
      },
      tls, limit);
}

std::unique_ptr<MockServer> serve_html(const std::string& host, std::uint16_t port) {
  return make_server(host, port, [](MockServer& srv, std::unique_ptr<net::Channel> ch) {
    auto r = ch->recv_some(Clock::now() + 1s);
    if (r.status != net::RecvStatus::data) return;
    srv.log(r.bytes);
    const std::string body = "<html><body>It works</body></html>\n";
    ch->send("HTTP/1.1 200 OK\r\nContent-Type: text/html\r\nContent-Length: " +
                 std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n" + body,
             Clock::now() + 1s);
  });
}

std::unique_ptr<MockServer> serve_json_echo(const std::string& host, std::uint16_t port) {
  return make_server(host, port, [](MockServer& srv, std::unique_ptr<net::Channel> ch) {
    while (!srv.stopping()) {
      auto r = ch->recv_some(Clock::now() + 50ms);
      if (r.status == net::RecvStatus::timeout) continue;
      if (r.status != net::RecvStatus::data) return;
      srv.log(r.bytes);
      if (!ch->send(r.bytes, Clock::now() + 1s)) return;
    }
  });
}

std::uint16_t closed_port() {
  auto l = net::listen_tcp("127.0.0.1", 0);
  const auto port = l.port;
  l.fd.reset();
  return port;
}

// ---- traffic synthesis ----

const std::vector<CoinProfile>& coin_profiles() {
  static const std::vector<CoinProfile> profiles = [] {
    std::vector<CoinProfile> out;
    for (int c = 0; c < kMiningClassCount; ++c) {
      CoinProfile p;
      p.label = coin_from_index(c);
      p.share_period = 1.0 + 0.75 * c;
      p.jitter = 0.10 + 0.05 * c;
      p.small_mode = 40 + 6 * c;
      p.share_lo = 105 + c % 3;
      p.share_hi = p.share_lo + 3;
      p.job_mode = 200 + 60 * c;
      out.push_back(p);
    }
    return out;
  }();
  return profiles;
}

std::optional<SynthProfile::Kind> SynthProfile::parse_kind(std::string_view s) {
  if (s == "mining") return Kind::mining;
  if (s == "benign") return Kind::benign;
  if (s == "mixed") return Kind::mixed;
  return std::nullopt;
}

namespace {

using Rng = std::mt19937_64;

std::string host_of(int net, int i) {
  return "10." + std::to_string(net) + "." + std::to_string((i / 250) % 256) + "." +
         std::to_string(i % 250 + 1);
}

FlowKey client_key(int net, int i, const Endpoint& dst) {
  FlowKey k;
  k.src_ip = host_of(net, i);
  k.src_port = static_cast<std::uint16_t>(40000 + i % 20000);
  k.dst_ip = dst.host;
  k.dst_port = dst.port;
  return k;
}

void emit(std::vector<PacketRecord>& out, const FlowKey& k, double ts, int len) {
  PacketRecord r;
  r.ts = std::round(ts * 1e6) / 1e6;
  r.src_ip = k.src_ip;
  r.src_port = k.src_port;
  r.dst_ip = k.dst_ip;
  r.dst_port = k.dst_port;
  r.proto = k.proto;
  r.len = static_cast<std::uint32_t>(len);
  out.push_back(r);
}

// Shares leave at exponential gaps, each followed by a short pool reply; job
// notifications arrive on a per-flow constant interval.
void mining_flow(Rng& rng, const SynthProfile& p, const CoinProfile& cp, const FlowKey& k,
                 std::vector<PacketRecord>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> share_gap(1.0 / cp.share_period);
  const int n = std::uniform_int_distribution<int>(p.min_packets, p.max_packets)(rng);
  const double job_interval = std::uniform_real_distribution<double>(20.0, 60.0)(rng);
  double t = std::uniform_real_distribution<double>(0.0, 600.0)(rng);
  double next_job = t + unit(rng) * job_interval;
  for (int i = 0; i < n; ++i) {
    const double u = unit(rng);
    int len = 0;
    if (u < p.p_share) {
      t += std::min(share_gap(rng), 60.0);
      len = std::uniform_int_distribution<int>(cp.share_lo, cp.share_hi)(rng);
    } else if (u < p.p_share + p.p_small) {
      const double delay = 0.02 * (1.0 + 0.5 * coin_index(cp.label));
      t += std::max(0.001, delay * (1.0 + cp.jitter * gauss(rng)));
      len = std::clamp(cp.small_mode + std::uniform_int_distribution<int>(-2, 2)(rng), 36, 80);
    } else {
      t = std::max(t + 0.001, next_job);
      next_job = t + job_interval;
      len = cp.job_mode + std::uniform_int_distribution<int>(-10, 10)(rng);
    }
    emit(out, k, t, len);
  }
}

// Request/response bursts separated by think time.
void benign_flow(Rng& rng, const FlowKey& k, std::vector<PacketRecord>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> in_burst(1.0 / 0.01);
  std::exponential_distribution<double> think(1.0 / 1.5);
  const int n = std::uniform_int_distribution<int>(10, 80)(rng);
  double t = std::uniform_real_distribution<double>(0.0, 600.0)(rng);
  int burst_left = 0;
  for (int i = 0; i < n; ++i) {
    if (burst_left == 0) {
      t += std::min(think(rng), 100.0);
      burst_left = std::uniform_int_distribution<int>(2, 8)(rng);
    } else {
      t += in_burst(rng);
    }
    --burst_left;
    const double u = unit(rng);
    int len = 0;
    if (u < 0.30)
      len = std::uniform_int_distribution<int>(40, 60)(rng);
    else if (u < 0.65)
      len = std::uniform_int_distribution<int>(1200, 1460)(rng);
    else
      len = std::uniform_int_distribution<int>(61, 1199)(rng);
    emit(out, k, t, len);
  }
}

}  // namespace

SynthCorpus synthesize(const SynthProfile& profile, int flows) {
  if (flows < 1) throw std::invalid_argument("flows must be >= 1");
  if (profile.min_packets < 2 || profile.max_packets < profile.min_packets)
    throw std::invalid_argument("bad packet count range");
  if (profile.p_share < 0 || profile.p_small < 0 || profile.p_share + profile.p_small > 1.0)
    throw std::invalid_argument("mining mixture probabilities must sum to <= 1");

  int n_mining = 0, n_benign = 0;
  switch (profile.kind) {
    case SynthProfile::Kind::mining: n_mining = flows; break;
    case SynthProfile::Kind::benign: n_benign = flows; break;
    case SynthProfile::Kind::mixed:
      n_mining = (flows + 1) / 2;
      n_benign = flows / 2;
      break;
  }
  std::vector<Label> coins = profile.coins;
  if (coins.empty())
    for (const auto& cp : coin_profiles()) coins.push_back(cp.label);

  Rng rng(profile.seed);
  SynthCorpus corpus;
  for (int i = 0; i < n_mining; ++i) {
    const auto& cp = coin_profiles()[static_cast<std::size_t>(coin_index(coins[static_cast<std::size_t>(i) % coins.size()]))];
    Endpoint dst{"198.51.100." + std::to_string(10 + coin_index(cp.label)),
                 static_cast<std::uint16_t>(3333 + coin_index(cp.label))};
    if (!profile.mining_destinations.empty())
      dst = profile.mining_destinations[static_cast<std::size_t>(i) % profile.mining_destinations.size()];
    const auto key = client_key(1, i, dst);
    mining_flow(rng, profile, cp, key, corpus.records);
    corpus.labels.emplace_back(key, cp.label);
  }
  for (int i = 0; i < n_benign; ++i) {
    Endpoint dst{"203.0.113." + std::to_string(1 + i % 200), 443};
    if (!profile.benign_destinations.empty())
      dst = profile.benign_destinations[static_cast<std::size_t>(i) % profile.benign_destinations.size()];
    const auto key = client_key(2, i, dst);
    benign_flow(rng, key, corpus.records);
    corpus.labels.emplace_back(key, Label::benign);
  }
  std::stable_sort(corpus.records.begin(), corpus.records.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
  return corpus;
}

void write_records_ndjson(std::ostream& out, const std::vector<PacketRecord>& records) {
  for (const auto& r : records) out << to_ndjson(r) << '\n';
}

void write_labels_csv(std::ostream& out, const std::vector<std::pair<FlowKey, Label>>& labels) {
  out << "flow,label\n";
  for (const auto& [k, l] : labels) out << k.to_string() << ',' << to_string(l) << '\n';
}

LabelMap read_labels_csv(std::istream& in) {
  LabelMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("flow,", 0) == 0)) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("labels line " + std::to_string(lineno) + ": no comma");
    auto label = parse_label(std::string_view(line).substr(comma + 1));
    if (!label) throw ParseError("labels line " + std::to_string(lineno) + ": unknown label");
    map[FlowKey::parse(std::string_view(line).substr(0, comma))] = *label;
  }
  return map;
}

LabelMap to_label_map(const std::vector<std::pair<FlowKey, Label>>& labels) {
  LabelMap map;
  for (const auto& [k, l] : labels) map[k] = l;
  return map;
}

std::size_t attach_labels(std::vector<Window>& windows, const LabelMap& labels) {
  std::size_t missing = 0;
  for (auto& w : windows) {
    if (auto it = labels.find(w.key); it != labels.end())
      w.label = it->second;
    else
      ++missing;
  }
  return missing;
}

}  // namespace cryptocatch
