#ifndef CRYPTOCATCH_FLOW_HPP
#define CRYPTOCATCH_FLOW_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cryptocatch {

enum class Proto { TCP, UDP };

std::string_view to_string(Proto p);
std::optional<Proto> parse_proto(std::string_view s);

/// Class labels. `mining` is the collapsed positive class of the binary task.
enum class Label { benign, BTC, XMR, ETC, ETHW, ETF, CFX, RVN, mining };

inline constexpr int kMiningClassCount = 7;

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view s);
inline bool is_mining(Label l) { return l != Label::benign; }
/// 0-based index among the seven coin classes; throws for benign/mining.
int coin_index(Label l);
Label coin_from_index(int idx);

struct PacketRecord {
  double ts = 0.0;
  std::string src_ip;
  std::uint16_t src_port = 0;
  std::string dst_ip;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::TCP;
  std::uint32_t len = 0;
};

/// Directional five-tuple.
struct FlowKey {
  std::string src_ip;
  std::uint16_t src_port = 0;
  std::string dst_ip;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::TCP;

  auto operator<=>(const FlowKey&) const = default;
  bool operator==(const FlowKey&) const = default;

  static FlowKey of(const PacketRecord& r) {
    return {r.src_ip, r.src_port, r.dst_ip, r.dst_port, r.proto};
  }
  /// `src_ip:src_port>dst_ip:dst_port/TCP`
  std::string to_string() const;
  static FlowKey parse(std::string_view s);
  /// `dst_ip:dst_port`
  std::string destination() const;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept;
};

struct PacketObs {
  double ts = 0.0;
  double len = 0.0;
};

/// 2..window_size consecutive packets of one flow instance.
struct Window {
  FlowKey key;
  std::size_t instance = 0;  // flow instance under the same key (idle-timeout split)
  std::size_t seq_index = 0;
  std::vector<PacketObs> packets;
  std::optional<Label> label;

  /// `<key>/<instance>/<seq_index>`; unique per window of one capture.
  std::string id() const;
};

/// Parses a window id back into (key, instance, seq_index).
struct WindowRef {
  FlowKey key;
  std::size_t instance = 0;
  std::size_t seq_index = 0;
  static WindowRef parse(std::string_view id);
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RecordFormat { NDJSON, CSV };

struct ParseOptions {
  RecordFormat format = RecordFormat::NDJSON;
  bool strict = false;
};

struct ParseResult {
  std::vector<PacketRecord> records;
  std::size_t errors = 0;
  std::vector<std::string> error_samples;  // first few messages, for diagnostics
};

ParseResult parse_records(std::istream& in, const ParseOptions& opts = {});
ParseResult parse_records(std::string_view text, const ParseOptions& opts = {});

std::string to_ndjson(const PacketRecord& r);

struct SegmentOptions {
  std::size_t window_size = 10;
  double flow_timeout = 120.0;
};

/// Groups records into directional flows, splits on idle gaps, and chunks each
/// flow instance into windows. Trailing singletons are dropped.
std::vector<Window> segment_flows(const std::vector<PacketRecord>& records,
                                  const SegmentOptions& opts = {});

struct LengthRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Fraction of all packets whose length falls in each inclusive range.
std::vector<double> length_distribution(const std::vector<Window>& windows,
                                        const std::vector<LengthRange>& ranges);
std::vector<double> length_distribution(const std::vector<PacketRecord>& records,
                                        const std::vector<LengthRange>& ranges);

// Windows file: one JSON object per line.
std::string window_to_json_line(const Window& w);
Window window_from_json_line(std::string_view line);
std::vector<Window> read_windows(std::istream& in);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_FLOW_HPP
