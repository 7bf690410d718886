#include "cryptocatch/probe.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <memory>
#include <stdexcept>
#include <thread>

#include "cryptocatch/net.hpp"

namespace cryptocatch {

using nlohmann::json;

std::string_view to_string(ProtocolVariant v) {
  switch (v) {
    case ProtocolVariant::StratumBTC: return "StratumBTC";
    case ProtocolVariant::StratumXMR: return "StratumXMR";
    case ProtocolVariant::StratumETH: return "StratumETH";
    case ProtocolVariant::StratumWebmineXMR: return "StratumWebmineXMR";
  }
  return "?";
}

std::optional<ProtocolVariant> parse_variant(std::string_view s) {
  if (s == "btc" || s == "StratumBTC") return ProtocolVariant::StratumBTC;
  if (s == "xmr" || s == "StratumXMR") return ProtocolVariant::StratumXMR;
  if (s == "eth" || s == "StratumETH") return ProtocolVariant::StratumETH;
  if (s == "webmine" || s == "StratumWebmineXMR") return ProtocolVariant::StratumWebmineXMR;
  return std::nullopt;
}

std::vector<ProtocolVariant> all_variants() {
  return {ProtocolVariant::StratumBTC, ProtocolVariant::StratumXMR, ProtocolVariant::StratumETH,
          ProtocolVariant::StratumWebmineXMR};
}

bool is_webmine(ProtocolVariant v) { return v == ProtocolVariant::StratumWebmineXMR; }

std::string_view to_string(Transport t) {
  switch (t) {
    case Transport::TCP: return "tcp";
    case Transport::TLS: return "tls";
    case Transport::WebSocket: return "websocket";
  }
  return "?";
}

std::optional<Transport> parse_transport(std::string_view s) {
  if (s == "tcp" || s == "TCP") return Transport::TCP;
  if (s == "tls" || s == "TLS") return Transport::TLS;
  if (s == "websocket" || s == "ws" || s == "WebSocket") return Transport::WebSocket;
  return std::nullopt;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::PoolPositive: return "PoolPositive";
    case Outcome::PoolNegative: return "PoolNegative";
    case Outcome::Unreachable: return "Unreachable";
    case Outcome::Silent: return "Silent";
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (auto o : {Outcome::PoolPositive, Outcome::PoolNegative, Outcome::Unreachable, Outcome::Silent})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

std::string_view to_string(ResponseKind k) { return k == ResponseKind::success ? "success" : "error"; }

std::string ProbeTarget::endpoint() const {
  if (host.find(':') != std::string::npos) return "[" + host + "]:" + std::to_string(port);
  return host + ":" + std::to_string(port);
}

ProbeTarget ProbeTarget::parse(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw std::invalid_argument("target must be host:port: " + std::string(s));
  auto host = s.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const auto port_s = s.substr(colon + 1);
  int port = 0;
  auto [ptr, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
  if (ec != std::errc{} || ptr != port_s.data() + port_s.size() || port < 1 || port > 65535)
    throw std::invalid_argument("bad port in target: " + std::string(s));
  ProbeTarget t;
  t.host = std::string(host);
  t.port = static_cast<std::uint16_t>(port);
  return t;
}

void ProbeTarget::validate() const {
  if (host.empty()) throw std::invalid_argument("empty target host");
  if (port == 0) throw std::invalid_argument("target port must be in [1, 65535]");
  if (transports.empty()) throw std::invalid_argument("target needs at least one transport");
}

json ProbeVerdict::to_json() const {
  json j;
  j["host"] = target.host;
  j["port"] = target.port;
  j["endpoint"] = target.endpoint();
  j["outcome"] = to_string(outcome);
  j["variant"] = variant ? json(to_string(*variant)) : json(nullptr);
  j["kind"] = kind ? json(to_string(*kind)) : json(nullptr);
  j["transport"] = transport ? json(to_string(*transport)) : json(nullptr);
  j["tls_insecure"] = tls_insecure;
  j["excerpt"] = excerpt;
  j["rtt_ms"] = rtt_ms;
  j["attempts"] = attempts;
  return j;
}

ProbeVerdict ProbeVerdict::from_json(const json& j) {
  ProbeVerdict v;
  v.target.host = j.at("host").get<std::string>();
  v.target.port = j.at("port").get<std::uint16_t>();
  auto o = parse_outcome(j.at("outcome").get<std::string>());
  if (!o) throw std::invalid_argument("unknown outcome");
  v.outcome = *o;
  if (j.contains("variant") && !j["variant"].is_null())
    v.variant = parse_variant(j["variant"].get<std::string>());
  if (j.contains("kind") && !j["kind"].is_null())
    v.kind = j["kind"] == "success" ? ResponseKind::success : ResponseKind::error;
  if (j.contains("transport") && !j["transport"].is_null())
    v.transport = parse_transport(j["transport"].get<std::string>());
  v.tls_insecure = j.value("tls_insecure", false);
  v.excerpt = j.value("excerpt", std::string{});
  v.rtt_ms = j.value("rtt_ms", 0.0);
  v.attempts = j.value("attempts", 0);
  return v;
}

void ProbeConfig::validate() const {
  if (connect_timeout_ms <= 0 || read_timeout_ms <= 0)
    throw std::invalid_argument("probe timeouts must be positive");
  if (max_parallel < 1) throw std::invalid_argument("max_parallel must be >= 1");
  if (variants.empty()) throw std::invalid_argument("no protocol variants configured");
}

json ProbeConfig::to_json() const {
  json vs = json::array();
  for (auto v : variants) vs.push_back(to_string(v));
  return {{"connect_timeout_ms", connect_timeout_ms}, {"read_timeout_ms", read_timeout_ms},
          {"max_parallel", max_parallel},             {"xmr_wallet", xmr_wallet},
          {"eth_wallet", eth_wallet},                 {"token", token},
          {"websocket_path", websocket_path},         {"variants", vs}};
}

ProbeConfig ProbeConfig::from_json(const json& j) {
  ProbeConfig c;
  c.connect_timeout_ms = j.value("connect_timeout_ms", c.connect_timeout_ms);
  c.read_timeout_ms = j.value("read_timeout_ms", c.read_timeout_ms);
  c.max_parallel = j.value("max_parallel", c.max_parallel);
  c.xmr_wallet = j.value("xmr_wallet", c.xmr_wallet);
  c.eth_wallet = j.value("eth_wallet", c.eth_wallet);
  c.token = j.value("token", c.token);
  c.websocket_path = j.value("websocket_path", c.websocket_path);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j["variants"]) {
      auto pv = parse_variant(v.get<std::string>());
      if (!pv) throw std::invalid_argument("unknown variant " + v.get<std::string>());
      c.variants.push_back(*pv);
    }
  }
  c.validate();
  return c;
}

std::string build_message(ProtocolVariant v, const ProbeConfig& config) {
  // Key order is part of the wire format, so the lines are assembled by hand.
  const auto q = [](const std::string& s) { return json(s).dump(); };
  switch (v) {
    case ProtocolVariant::StratumBTC:
      return R"({"id":1,"method":"mining.subscribe","params":[]})"
             "\n";
    case ProtocolVariant::StratumXMR:
      return R"({"id":1,"jsonrpc":"2.0","method":"login","params":{"login":)" + q(config.xmr_wallet) +
             R"(,"pass":"x"}})"
             "\n";
    case ProtocolVariant::StratumETH:
      return R"({"id":1,"jsonrpc":"2.0","method":"eth_submitLogin","params":[)" + q(config.eth_wallet) +
             "]}\n";
    case ProtocolVariant::StratumWebmineXMR:
      return R"({"id":"start","m":"start","p":{"token":)" + q(config.token) + R"(},"subscribe":1})"
             "\n";
  }
  return {};
}

namespace {

constexpr std::size_t kMaxBody = 64 * 1024;

json parse_object(std::string_view body) {
  if (body.size() > kMaxBody) body = body.substr(0, kMaxBody);
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return json();
  return j;
}

}  // namespace

Classification classify_response(ProtocolVariant v, std::string_view body) {
  Classification c;
  const json j = parse_object(body);
  if (!j.is_object() || !j.contains("id")) return c;
  const char* ok_key = is_webmine(v) ? "r" : "result";
  const char* err_key = is_webmine(v) ? "e" : "error";
  if (!j.contains(ok_key) && !j.contains(err_key)) return c;
  c.outcome = Outcome::PoolPositive;
  c.kind = j.contains(err_key) && !j[err_key].is_null() ? ResponseKind::error : ResponseKind::success;
  return c;
}

bool matches_variant_schema(ProtocolVariant v, std::string_view body) {
  const json j = parse_object(body);
  if (!j.is_object() || !j.contains("id")) return false;
  const auto err_null = !j.contains("error") || j["error"].is_null();
  switch (v) {
    case ProtocolVariant::StratumBTC: {
      if (j.contains("jsonrpc") || !j.contains("result")) return false;
      if (err_null) return j["result"].is_array();
      return j["error"].is_array();
    }
    case ProtocolVariant::StratumXMR: {
      if (j.value("jsonrpc", "") != "2.0") return false;
      if (err_null) return j.contains("result") && j["result"].is_object() && j["result"].contains("status");
      return j["error"].is_object() && !j.contains("result");
    }
    case ProtocolVariant::StratumETH: {
      if (j.value("jsonrpc", "") != "2.0" || !j.contains("result")) return false;
      if (err_null) return j["result"].is_boolean();
      return j["error"].is_object() && j["result"].is_null();
    }
    case ProtocolVariant::StratumWebmineXMR:
      return j["id"] == "start" && (j.contains("r") || j.contains("e"));
  }
  return false;
}

namespace {

using net::Clock;
using net::Deadline;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Session {
  std::unique_ptr<net::Channel> ch;
  std::string carry;
  bool dead = false;  // handshake failed; skip the transport
};

class Prober {
 public:
  Prober(const ProbeTarget& target, const ProbeConfig& config)
      : target_(target), config_(config), start_(Clock::now()),
        total_(start_ + std::chrono::milliseconds(config.budget_ms())) {}

  ProbeVerdict run() {
    ProbeVerdict v;
    v.target = target_;
    auto first = net::connect_tcp(target_.host, target_.port, connect_deadline());
    if (first.status != net::ConnectStatus::ok) {
      v.outcome = Outcome::Unreachable;
      v.rtt_ms = ms_since(start_);
      return v;
    }
    sessions_[0].ch = net::plain_channel(std::move(first.fd));

    std::optional<ProbeVerdict> weak;
    for (auto transport : target_.transports) {
      for (auto variant : config_.variants) {
        if ((transport == Transport::WebSocket) != is_webmine(variant)) continue;
        if (Clock::now() >= total_) break;
        auto& s = sessions_[static_cast<int>(transport)];
        if (s.dead) break;
        ++v.attempts;
        if (transport == Transport::TLS) v.tls_insecure = true;
        auto body = attempt(transport, variant, s);
        if (!body) continue;
        if (v.excerpt.empty() && !body->empty()) v.excerpt = body->substr(0, ProbeVerdict::kExcerptLimit);
        const auto c = classify_response(variant, *body);
        if (c.outcome != Outcome::PoolPositive) continue;
        ProbeVerdict hit = v;
        hit.outcome = Outcome::PoolPositive;
        hit.variant = variant;
        hit.kind = c.kind;
        hit.transport = transport;
        hit.excerpt = body->substr(0, ProbeVerdict::kExcerptLimit);
        if (matches_variant_schema(variant, *body)) {
          hit.attempts = v.attempts;
          hit.rtt_ms = ms_since(start_);
          return hit;
        }
        if (!weak) weak = hit;
      }
    }
    if (weak) {
      weak->attempts = v.attempts;
      weak->tls_insecure = v.tls_insecure;
      weak->rtt_ms = ms_since(start_);
      return *weak;
    }
    v.outcome = got_bytes_ ? Outcome::PoolNegative : Outcome::Silent;
    v.rtt_ms = ms_since(start_);
    return v;
  }

 private:
  Deadline connect_deadline() const {
    return std::min(total_, Clock::now() + std::chrono::milliseconds(config_.connect_timeout_ms));
  }
  Deadline read_deadline() const {
    return std::min(total_, Clock::now() + std::chrono::milliseconds(config_.read_timeout_ms));
  }

  bool open(Transport transport, Session& s) {
    auto c = net::connect_tcp(target_.host, target_.port, connect_deadline());
    if (c.status != net::ConnectStatus::ok) return false;
    s.carry.clear();
    if (transport == Transport::TCP) {
      s.ch = net::plain_channel(std::move(c.fd));
      return true;
    }
    if (transport == Transport::TLS) {
      if (!tls_) tls_ = net::tls_client_context();
      s.ch = net::tls_connect(std::move(c.fd), tls_, target_.host, connect_deadline());
      if (!s.ch) s.dead = true;
      return s.ch != nullptr;
    }
    s.ch = net::plain_channel(std::move(c.fd));
    auto hs = net::ws::client_handshake(*s.ch, s.carry, target_.host, target_.port,
                                        config_.websocket_path, read_deadline());
    if (!hs.response.empty()) {
      got_bytes_ = true;
      if (!hs.ok) handshake_reply_ = hs.response;
    }
    if (!hs.ok) {
      s.ch.reset();
      s.dead = true;
    }
    return hs.ok;
  }

  // Returns the first response line/frame, or nullopt when nothing arrived.
  std::optional<std::string> attempt(Transport transport, ProtocolVariant variant, Session& s) {
    if (!s.ch && !open(transport, s)) {
      if (handshake_reply_) {
        auto r = std::move(*handshake_reply_);
        handshake_reply_.reset();
        return r;
      }
      return std::nullopt;
    }
    auto msg = build_message(variant, config_);
    if (transport == Transport::WebSocket) {
      msg.pop_back();
      if (!s.ch->send(net::ws::encode_frame(msg, true), read_deadline())) {
        s.ch.reset();
        return std::nullopt;
      }
      bool got = false;
      auto frame = net::ws::read_frame(*s.ch, s.carry, read_deadline(), &got);
      got_bytes_ = got_bytes_ || got;
      if (!frame) {
        s.ch.reset();
        return got ? std::optional<std::string>(std::string{}) : std::nullopt;
      }
      return frame->payload;
    }
    if (!s.ch->send(msg, read_deadline())) {
      s.ch.reset();
      return std::nullopt;
    }
    auto r = net::read_line(*s.ch, s.carry, read_deadline(), kMaxBody);
    if (r.status != net::RecvStatus::data) {
      s.ch.reset();  // closed or timed out; a later attempt reconnects
      return std::nullopt;
    }
    got_bytes_ = true;
    return r.bytes;
  }

  const ProbeTarget& target_;
  const ProbeConfig& config_;
  Clock::time_point start_;
  Deadline total_;
  Session sessions_[3];
  net::TlsContextPtr tls_;
  bool got_bytes_ = false;
  std::optional<std::string> handshake_reply_;
};

}  // namespace

ProbeVerdict probe_one(const ProbeTarget& target, const ProbeConfig& config) {
  target.validate();
  config.validate();
  return Prober(target, config).run();
}

std::vector<ProbeVerdict> probe_batch(const std::vector<ProbeTarget>& targets,
                                      const ProbeConfig& config) {
  config.validate();
  std::vector<ProbeVerdict> out(targets.size());
  if (targets.empty()) return out;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < targets.size();) {
      try {
        out[i] = probe_one(targets[i], config);
      } catch (const std::exception&) {
        out[i].target = targets[i];
        out[i].outcome = Outcome::Unreachable;
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(config.max_parallel), targets.size());
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  return out;
}

std::vector<ProbeTarget> parse_targets(std::string_view text) {
  std::vector<ProbeTarget> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) out.push_back(ProbeTarget::parse(line));
    start = end + 1;
  }
  return out;
}

}  // namespace cryptocatch
