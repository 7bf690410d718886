#ifndef CRYPTOCATCH_PROBE_HPP
#define CRYPTOCATCH_PROBE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cryptocatch {

enum class ProtocolVariant { StratumBTC, StratumXMR, StratumETH, StratumWebmineXMR };

std::string_view to_string(ProtocolVariant v);
/// Accepts the short CLI forms (btc, xmr, eth, webmine) and the enum names.
std::optional<ProtocolVariant> parse_variant(std::string_view s);
std::vector<ProtocolVariant> all_variants();
bool is_webmine(ProtocolVariant v);

enum class Transport { TCP, TLS, WebSocket };
std::string_view to_string(Transport t);
std::optional<Transport> parse_transport(std::string_view s);

struct ProbeTarget {
  std::string host;
  std::uint16_t port = 0;
  std::vector<Transport> transports{Transport::TCP, Transport::TLS, Transport::WebSocket};

  std::string endpoint() const;
  /// `host:port`; IPv6 literals in brackets.
  static ProbeTarget parse(std::string_view s);
  void validate() const;
};

enum class Outcome { PoolPositive, PoolNegative, Unreachable, Silent };
std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

enum class ResponseKind { success, error };
std::string_view to_string(ResponseKind k);

struct ProbeVerdict {
  ProbeTarget target;
  Outcome outcome = Outcome::Unreachable;
  std::optional<ProtocolVariant> variant;
  std::optional<ResponseKind> kind;
  std::optional<Transport> transport;
  bool tls_insecure = false;  // a TLS attempt ran without certificate validation
  std::string excerpt;        // <= kExcerptLimit bytes
  double rtt_ms = 0.0;  // wall time from first connect to verdict
  int attempts = 0;

  static constexpr std::size_t kExcerptLimit = 1024;

  nlohmann::json to_json() const;
  static ProbeVerdict from_json(const nlohmann::json& j);
};

struct ProbeConfig {
  int connect_timeout_ms = 100;
  int read_timeout_ms = 155;
  int max_parallel = 32;
  // Unspendable addresses; pools only check that they parse.
  std::string xmr_wallet =
      "44AFFq5kSiGBoZ4NMDwYtN18obc8AemS33DBLWs3H7otXft3XjrpDtQGv7SqSsaBYBb98uNbr2VBBEt7f2wfn3RVGQBEP3A";
  std::string eth_wallet = "0x000000000000000000000000000000000000dEaD";
  std::string token = "00000000000000000000000000000000";
  std::string websocket_path = "/";
  std::vector<ProtocolVariant> variants = all_variants();

  /// Whole-probe budget; the prober never runs past it.
  int budget_ms() const { return connect_timeout_ms + read_timeout_ms; }
  void validate() const;
  nlohmann::json to_json() const;
  static ProbeConfig from_json(const nlohmann::json& j);
};

/// One LF-terminated JSON line.
std::string build_message(ProtocolVariant v, const ProbeConfig& config);

struct Classification {
  Outcome outcome = Outcome::PoolNegative;  // PoolPositive or PoolNegative
  std::optional<ResponseKind> kind;
};

/// Key-based rule; total over all byte strings.
Classification classify_response(ProtocolVariant v, std::string_view body);

/// Stricter check that the body has the full response shape of `v`. Used to
/// attribute a positive answer to the right variant when several match.
bool matches_variant_schema(ProtocolVariant v, std::string_view body);

ProbeVerdict probe_one(const ProbeTarget& target, const ProbeConfig& config);
std::vector<ProbeVerdict> probe_batch(const std::vector<ProbeTarget>& targets,
                                      const ProbeConfig& config);

/// Parses a `host:port` per line file body; blank lines and `#` comments skipped.
std::vector<ProbeTarget> parse_targets(std::string_view text);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_PROBE_HPP
