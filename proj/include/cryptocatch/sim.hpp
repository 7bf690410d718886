#ifndef CRYPTOCATCH_SIM_HPP
#define CRYPTOCATCH_SIM_HPP

// Loopback pool emulators and a seeded traffic synthesizer, used by the
// tests and by `cryptocatch sim`.

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cryptocatch/flow.hpp"
#include "cryptocatch/net.hpp"
#include "cryptocatch/probe.hpp"

namespace cryptocatch {

struct PoolBehavior {
  enum class Mode { RespondSuccess, RespondError, SilentDrop, ConnectionLimit };
  Mode mode = Mode::RespondSuccess;
  int max_connections = 0;  // ConnectionLimit only

  /// `success`, `error`, `silent`, `limit:N`.
  static PoolBehavior parse(std::string_view s);
  std::string to_string() const;
};

/// Response bodies without the trailing LF. `id` is echoed from the request.
std::string pool_success_body(ProtocolVariant v, const nlohmann::json& id);
std::string pool_error_body(ProtocolVariant v, const nlohmann::json& id);

/// Reply for one received line/frame, or nullopt for silence.
std::optional<std::string> pool_reply(ProtocolVariant v, const PoolBehavior& b, std::string_view line);

class MockServer {
 public:
  using Handler = std::function<void(MockServer&, std::unique_ptr<net::Channel>)>;

  MockServer(net::Listener listener, std::string host, Handler handler,
             net::TlsContextPtr tls = nullptr, int max_connections = -1);
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;
  ~MockServer();

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }
  std::string endpoint() const { return host_ + ":" + std::to_string(port_); }
  ProbeTarget target() const { return ProbeTarget::parse(endpoint()); }

  /// Every line or frame payload received, verbatim, in arrival order.
  std::vector<std::string> received() const;
  int connections() const { return accepted_.load(); }
  bool stopping() const { return stop_.load(); }
  void log(std::string line);

  void stop();

 private:
  void accept_loop();

  net::Listener listener_;
  std::string host_;
  std::uint16_t port_ = 0;
  Handler handler_;
  net::TlsContextPtr tls_;
  int max_connections_;
  std::atomic<bool> stop_{false};
  std::atomic<int> accepted_{0};
  mutable std::mutex mu_;
  std::vector<std::string> log_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

std::unique_ptr<MockServer> serve_pool(ProtocolVariant variant, PoolBehavior behavior,
                                       const std::string& host = "127.0.0.1", std::uint16_t port = 0,
                                       bool tls = false);
/// Plain web server: one HTML page for any request, then close.
std::unique_ptr<MockServer> serve_html(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
/// Echoes received bytes back unchanged.
std::unique_ptr<MockServer> serve_json_echo(const std::string& host = "127.0.0.1",
                                            std::uint16_t port = 0);
/// A loopback port that was bound and released, so connects are refused.
std::uint16_t closed_port();

// ---- traffic synthesis ----

/// Generation parameters of one mining class. Classes differ by share period,
/// small-packet length mode, share length, jitter and job size.
struct CoinProfile {
  Label label = Label::BTC;
  double share_period = 1.0;  // mean seconds between shares
  double jitter = 0.1;        // relative sd of share gaps around the mean
  int small_mode = 40;        // keepalive/ack length mode
  int share_lo = 105;
  int share_hi = 110;
  int job_mode = 200;
};

/// The seven documented class profiles, in Label order BTC..RVN.
const std::vector<CoinProfile>& coin_profiles();

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

struct SynthProfile {
  enum class Kind { mining, benign, mixed };
  Kind kind = Kind::mining;
  std::uint64_t seed = 1;
  int min_packets = 20;  // per flow; benign flows use [10, 80]
  int max_packets = 60;
  // Mining length mixture.
  double p_share = 0.55;
  double p_small = 0.40;  // remainder: job packets
  /// Restrict mining flows to these coin classes (default: all seven, round robin).
  std::vector<Label> coins;
  /// Optional fixed destinations for mining/benign flows, assigned round robin.
  std::vector<Endpoint> mining_destinations;
  std::vector<Endpoint> benign_destinations;

  static std::optional<Kind> parse_kind(std::string_view s);
};

struct SynthCorpus {
  std::vector<PacketRecord> records;  // sorted by timestamp
  std::vector<std::pair<FlowKey, Label>> labels;
};

/// Mixed profiles split `flows` evenly between mining and benign.
SynthCorpus synthesize(const SynthProfile& profile, int flows);

void write_records_ndjson(std::ostream& out, const std::vector<PacketRecord>& records);
void write_labels_csv(std::ostream& out, const std::vector<std::pair<FlowKey, Label>>& labels);

using LabelMap = std::unordered_map<FlowKey, Label, FlowKeyHash>;
LabelMap read_labels_csv(std::istream& in);
LabelMap to_label_map(const std::vector<std::pair<FlowKey, Label>>& labels);
/// Sets window labels from the map; returns the number left unlabeled.
std::size_t attach_labels(std::vector<Window>& windows, const LabelMap& labels);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_SIM_HPP
