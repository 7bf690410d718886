#include "cryptocatch/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace cryptocatch {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxErrorSamples = 8;

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void validate(const PacketRecord& r) {
  if (!std::isfinite(r.ts) || r.ts < 0.0) throw ParseError("ts must be finite and non-negative");
  if (r.src_ip.empty() || r.dst_ip.empty()) throw ParseError("empty address");
}

std::uint16_t checked_port(long long p) {
  if (p < 0 || p > 65535) throw ParseError("port out of range");
  return static_cast<std::uint16_t>(p);
}

PacketRecord record_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record is not an object");
  try {
    PacketRecord r;
    r.ts = j.at("ts").get<double>();
    r.src_ip = j.at("src_ip").get<std::string>();
    r.src_port = checked_port(j.at("src_port").get<long long>());
    r.dst_ip = j.at("dst_ip").get<std::string>();
    r.dst_port = checked_port(j.at("dst_port").get<long long>());
    auto proto = parse_proto(j.at("proto").get<std::string>());
    if (!proto) throw ParseError("unknown proto");
    r.proto = *proto;
    auto len = j.at("len").get<long long>();
    if (len < 0 || len > std::numeric_limits<std::uint32_t>::max())
      throw ParseError("len out of range");
    r.len = static_cast<std::uint32_t>(len);
    validate(r);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field: ") + e.what());
  }
}

PacketRecord record_from_csv(std::string_view line) {
  auto f = split(line, ',');
  if (f.size() != 7) throw ParseError("expected 7 CSV fields");
  for (auto& s : f) s = trim(s);
  PacketRecord r;
  auto ts = parse_number<double>(f[0]);
  auto sp = parse_number<long long>(f[2]);
  auto dp = parse_number<long long>(f[4]);
  auto len = parse_number<long long>(f[6]);
  auto proto = parse_proto(f[5]);
  if (!ts || !sp || !dp || !len || !proto) throw ParseError("malformed CSV field");
  if (*len < 0 || *len > std::numeric_limits<std::uint32_t>::max())
    throw ParseError("len out of range");
  r.ts = *ts;
  r.src_ip = std::string(f[1]);
  r.src_port = checked_port(*sp);
  r.dst_ip = std::string(f[3]);
  r.dst_port = checked_port(*dp);
  r.proto = *proto;
  r.len = static_cast<std::uint32_t>(*len);
  validate(r);
  return r;
}

constexpr std::string_view kCsvHeader = "ts,src_ip,src_port,dst_ip,dst_port,proto,len";

}  // namespace

std::string_view to_string(Proto p) { return p == Proto::TCP ? "TCP" : "UDP"; }

std::optional<Proto> parse_proto(std::string_view s) {
  if (s == "TCP" || s == "tcp") return Proto::TCP;
  if (s == "UDP" || s == "udp") return Proto::UDP;
  return std::nullopt;
}

namespace {
constexpr std::string_view kLabelNames[] = {"benign", "BTC", "XMR", "ETC", "ETHW",
                                            "ETF",    "CFX", "RVN", "mining"};
}

std::string_view to_string(Label l) { return kLabelNames[static_cast<int>(l)]; }

std::optional<Label> parse_label(std::string_view s) {
  for (int i = 0; i < static_cast<int>(std::size(kLabelNames)); ++i)
    if (kLabelNames[i] == s) return static_cast<Label>(i);
  return std::nullopt;
}

int coin_index(Label l) {
  if (l == Label::benign || l == Label::mining)
    throw std::invalid_argument("not a coin class: " + std::string(to_string(l)));
  return static_cast<int>(l) - 1;
}

Label coin_from_index(int idx) {
  if (idx < 0 || idx >= kMiningClassCount) throw std::out_of_range("coin index");
  return static_cast<Label>(idx + 1);
}

std::string FlowKey::to_string() const {
  std::ostringstream os;
  os << src_ip << ':' << src_port << '>' << dst_ip << ':' << dst_port << '/'
     << cryptocatch::to_string(proto);
  return os.str();
}

std::string FlowKey::destination() const { return dst_ip + ':' + std::to_string(dst_port); }

namespace {
// "host:port", splitting at the last colon so bare IPv6 strings survive.
std::pair<std::string, std::uint16_t> split_endpoint(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) throw ParseError("endpoint without port");
  auto port = parse_number<long long>(s.substr(colon + 1));
  if (!port) throw ParseError("bad port");
  return {std::string(s.substr(0, colon)), checked_port(*port)};
}
}  // namespace

FlowKey FlowKey::parse(std::string_view s) {
  auto gt = s.find('>');
  auto slash = s.rfind('/');
  if (gt == std::string_view::npos || slash == std::string_view::npos || slash < gt)
    throw ParseError("bad flow key: " + std::string(s));
  FlowKey k;
  std::tie(k.src_ip, k.src_port) = split_endpoint(s.substr(0, gt));
  std::tie(k.dst_ip, k.dst_port) = split_endpoint(s.substr(gt + 1, slash - gt - 1));
  auto proto = parse_proto(s.substr(slash + 1));
  if (!proto) throw ParseError("bad proto in flow key");
  k.proto = *proto;
  return k;
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
  std::size_t h = std::hash<std::string>{}(k.src_ip);
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(k.src_port);
  mix(std::hash<std::string>{}(k.dst_ip));
  mix(k.dst_port);
  mix(static_cast<std::size_t>(k.proto));
  return h;
}

std::string Window::id() const {
  return key.to_string() + '/' + std::to_string(instance) + '/' + std::to_string(seq_index);
}

WindowRef WindowRef::parse(std::string_view id) {
  auto last = id.rfind('/');
  if (last == std::string_view::npos) throw ParseError("bad window id");
  auto mid = id.rfind('/', last - 1);
  if (mid == std::string_view::npos || mid == 0) throw ParseError("bad window id");
  auto inst = parse_number<std::size_t>(id.substr(mid + 1, last - mid - 1));
  auto seq = parse_number<std::size_t>(id.substr(last + 1));
  if (!inst || !seq) throw ParseError("bad window id: " + std::string(id));
  return {FlowKey::parse(id.substr(0, mid)), *inst, *seq};
}

ParseResult parse_records(std::istream& in, const ParseOptions& opts) {
  ParseResult out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (view.empty()) continue;
    if (opts.format == RecordFormat::CSV && !header_seen) {
      header_seen = true;
      if (view == kCsvHeader) continue;
    }
    try {
      out.records.push_back(opts.format == RecordFormat::NDJSON ? record_from_json(view)
                                                                : record_from_csv(view));
    } catch (const ParseError& e) {
      std::string msg = "line " + std::to_string(lineno) + ": " + e.what();
      if (opts.strict) throw ParseError(msg);
      ++out.errors;
      if (out.error_samples.size() < kMaxErrorSamples) out.error_samples.push_back(msg);
    }
  }
  return out;
}

ParseResult parse_records(std::string_view text, const ParseOptions& opts) {
  std::istringstream in{std::string(text)};
  return parse_records(in, opts);
}

std::string to_ndjson(const PacketRecord& r) {
  json j = {{"ts", r.ts},         {"src_ip", r.src_ip},   {"src_port", r.src_port},
            {"dst_ip", r.dst_ip}, {"dst_port", r.dst_port}, {"proto", to_string(r.proto)},
            {"len", r.len}};
  return j.dump();
}

std::vector<Window> segment_flows(const std::vector<PacketRecord>& records,
                                  const SegmentOptions& opts) {
  if (opts.window_size < 2) throw std::invalid_argument("window_size must be >= 2");

  // Flows in order of first appearance; packet indices in input order.
  std::unordered_map<FlowKey, std::size_t, FlowKeyHash> flow_of;
  std::vector<FlowKey> keys;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto key = FlowKey::of(records[i]);
    auto [it, inserted] = flow_of.try_emplace(key, keys.size());
    if (inserted) {
      keys.push_back(std::move(key));
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }

  std::vector<Window> out;
  for (std::size_t f = 0; f < keys.size(); ++f) {
    auto& idx = members[f];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].ts < records[b].ts; });

    std::size_t instance = 0;
    std::size_t begin = 0;
    auto emit_instance = [&](std::size_t lo, std::size_t hi) {
      std::size_t seq = 0;
      for (std::size_t s = lo; s < hi; s += opts.window_size) {
        const std::size_t e = std::min(hi, s + opts.window_size);
        if (e - s < 2) break;
        Window w;
        w.key = keys[f];
        w.instance = instance;
        w.seq_index = seq++;
        w.packets.reserve(e - s);
        for (std::size_t p = s; p < e; ++p)
          w.packets.push_back({records[idx[p]].ts, static_cast<double>(records[idx[p]].len)});
        out.push_back(std::move(w));
      }
      ++instance;
    };
    for (std::size_t p = 1; p <= idx.size(); ++p) {
      if (p == idx.size() || records[idx[p]].ts - records[idx[p - 1]].ts > opts.flow_timeout) {
        emit_instance(begin, p);
        begin = p;
      }
    }
  }
  return out;
}

namespace {
template <typename LenRange>
std::vector<double> fractions(const LenRange& lens, std::size_t total,
                              const std::vector<LengthRange>& ranges) {
  if (ranges.empty()) throw std::invalid_argument("ranges must be non-empty");
  for (const auto& r : ranges)
    if (r.lo > r.hi) throw std::invalid_argument("range lo > hi");
  std::vector<double> counts(ranges.size(), 0.0);
  if (total == 0) return counts;
  lens([&](double len) {
    for (std::size_t i = 0; i < ranges.size(); ++i)
      if (len >= ranges[i].lo && len <= ranges[i].hi) counts[i] += 1.0;
  });
  for (auto& c : counts) c /= static_cast<double>(total);
  return counts;
}
}  // namespace

std::vector<double> length_distribution(const std::vector<Window>& windows,
                                        const std::vector<LengthRange>& ranges) {
  std::size_t total = 0;
  for (const auto& w : windows) total += w.packets.size();
  return fractions(
      [&](auto&& visit) {
        for (const auto& w : windows)
          for (const auto& p : w.packets) visit(p.len);
      },
      total, ranges);
}

std::vector<double> length_distribution(const std::vector<PacketRecord>& records,
                                        const std::vector<LengthRange>& ranges) {
  return fractions(
      [&](auto&& visit) {
        for (const auto& r : records) visit(static_cast<double>(r.len));
      },
      records.size(), ranges);
}

std::string window_to_json_line(const Window& w) {
  json packets = json::array();
  for (const auto& p : w.packets) packets.push_back({p.ts, p.len});
  json j = {{"window_id", w.id()},
            {"key",
             {{"src_ip", w.key.src_ip},
              {"src_port", w.key.src_port},
              {"dst_ip", w.key.dst_ip},
              {"dst_port", w.key.dst_port},
              {"proto", to_string(w.key.proto)}}},
            {"instance", w.instance},
            {"seq_index", w.seq_index},
            {"packets", std::move(packets)}};
  if (w.label) j["label"] = to_string(*w.label);
  return j.dump();
}

Window window_from_json_line(std::string_view line) {
  try {
    auto j = json::parse(line);
    Window w;
    const auto& k = j.at("key");
    w.key.src_ip = k.at("src_ip").get<std::string>();
    w.key.src_port = checked_port(k.at("src_port").get<long long>());
    w.key.dst_ip = k.at("dst_ip").get<std::string>();
    w.key.dst_port = checked_port(k.at("dst_port").get<long long>());
    auto proto = parse_proto(k.at("proto").get<std::string>());
    if (!proto) throw ParseError("bad proto");
    w.key.proto = *proto;
    w.instance = j.value("instance", std::size_t{0});
    w.seq_index = j.at("seq_index").get<std::size_t>();
    for (const auto& p : j.at("packets")) w.packets.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (w.packets.size() < 2) throw ParseError("window with fewer than 2 packets");
    if (j.contains("label")) {
      auto l = parse_label(j["label"].get<std::string>());
      if (!l) throw ParseError("unknown label");
      w.label = *l;
    }
    return w;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad window line: ") + e.what());
  }
}

std::vector<Window> read_windows(std::istream& in) {
  std::vector<Window> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(window_from_json_line(line));
  }
  return out;
}

}  // namespace cryptocatch
