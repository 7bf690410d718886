#include "cryptocatch/blacklist.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>

namespace cryptocatch {

using nlohmann::json;

std::string format_utc(Timestamp t) {
  const std::time_t tt = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_utc(std::string_view s) {
  std::tm tm{};
  char z = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                  &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &z) != 7 ||
      z != 'Z')
    throw std::invalid_argument("bad UTC timestamp: " + str);
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return Timestamp(std::chrono::seconds(timegm(&tm)));
}

std::chrono::seconds parse_duration(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty duration");
  std::int64_t mult = 1;
  switch (s.back()) {
    case 'd': mult = 86400; break;
    case 'h': mult = 3600; break;
    case 'm': mult = 60; break;
    case 's': mult = 1; break;
    default: mult = 0;
  }
  const auto digits = mult ? s.substr(0, s.size() - 1) : s;
  if (!mult) mult = 1;
  std::int64_t n = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || p != digits.data() + digits.size() || n < 0)
    throw std::invalid_argument("bad duration: " + std::string(s));
  return std::chrono::seconds(n * mult);
}

std::string BlacklistEntry::endpoint() const {
  ProbeTarget t;
  t.host = host;
  t.port = port;
  return t.endpoint();
}

json BlacklistEntry::to_json() const {
  json j;
  j["host"] = host;
  j["port"] = port;
  j["variant"] = variant ? json(to_string(*variant)) : json(nullptr);
  j["first_seen"] = format_utc(first_seen);
  j["last_confirmed"] = format_utc(last_confirmed);
  j["source"] = source == EntrySource::manual ? "manual" : "probe_confirmed";
  j["confirm_count"] = confirm_count;
  return j;
}

BlacklistEntry BlacklistEntry::from_json(const json& j) {
  BlacklistEntry e;
  e.host = j.at("host").get<std::string>();
  e.port = j.at("port").get<std::uint16_t>();
  if (j.contains("variant") && !j["variant"].is_null()) {
    e.variant = parse_variant(j["variant"].get<std::string>());
    if (!e.variant) throw std::invalid_argument("unknown variant in journal");
  }
  e.first_seen = parse_utc(j.at("first_seen").get<std::string>());
  e.last_confirmed = parse_utc(j.at("last_confirmed").get<std::string>());
  const auto src = j.value("source", std::string("probe_confirmed"));
  if (src != "manual" && src != "probe_confirmed") throw std::invalid_argument("unknown source");
  e.source = src == "manual" ? EntrySource::manual : EntrySource::probe_confirmed;
  e.confirm_count = j.at("confirm_count").get<std::int64_t>();
  if (e.port == 0 || e.confirm_count < 1 || e.last_confirmed < e.first_seen)
    throw std::invalid_argument("journal entry violates invariants");
  return e;
}

std::string_view to_string(UpdateMode m) { return m == UpdateMode::realtime ? "realtime" : "batch"; }

std::optional<UpdateMode> parse_update_mode(std::string_view s) {
  if (s == "realtime") return UpdateMode::realtime;
  if (s == "batch") return UpdateMode::batch;
  return std::nullopt;
}

ReplayResult replay_journal(std::istream& in) {
  ReplayResult r;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      ++r.skipped;
      continue;
    }
    try {
      auto e = BlacklistEntry::from_json(j);
      r.view[{e.host, e.port}] = std::move(e);
      ++r.records;
    } catch (const std::exception&) {
      ++r.skipped;
    }
  }
  return r;
}

BlacklistStore::BlacklistStore(std::string journal_path, UpdateMode mode,
                               std::chrono::seconds flush_interval)
    : path_(std::move(journal_path)), mode_(mode), interval_(flush_interval),
      created_(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now())) {
  if (interval_.count() <= 0) throw std::invalid_argument("flush interval must be positive");
  reload();
}

void BlacklistStore::reload() {
  std::unique_lock lock(mu_);
  staged_.clear();
  std::ifstream in(path_);
  durable_ = in ? replay_journal(in).view : LiveView{};
}

void BlacklistStore::append(const std::vector<BlacklistEntry>& entries) {
  if (entries.empty()) return;
  std::string buf;
  for (const auto& e : entries) buf += e.to_json().dump() + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open journal " + path_ + ": " + std::strerror(errno));
  std::size_t off = 0;
  while (off < buf.size()) {
    const auto n = ::write(fd, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string msg = std::strerror(errno);
      ::close(fd);
      throw std::runtime_error("journal write failed: " + msg);
    }
    off += static_cast<std::size_t>(n);
  }
  const bool synced = ::fdatasync(fd) == 0;
  ::close(fd);
  if (!synced) throw std::runtime_error("journal sync failed");
}

bool BlacklistStore::upsert(const std::string& host, std::uint16_t port,
                            std::optional<ProtocolVariant> variant, EntrySource source, Timestamp now) {
  std::unique_lock lock(mu_);
  const EndpointKey key{host, port};
  BlacklistEntry e;
  if (auto it = staged_.find(key); it != staged_.end()) {
    e = it->second;
  } else if (auto d = durable_.find(key); d != durable_.end()) {
    e = d->second;
  } else {
    e.host = host;
    e.port = port;
    e.first_seen = now;
    e.last_confirmed = now;
    e.source = source;
    e.confirm_count = 0;
  }
  e.last_confirmed = std::max(e.last_confirmed, now);
  ++e.confirm_count;
  if (variant) e.variant = variant;
  staged_[key] = e;
  if (mode_ == UpdateMode::realtime) {
    append({e});  // throws with the entry still staged
    durable_[key] = e;
    staged_.erase(key);
  }
  return true;
}

bool BlacklistStore::confirm(const ProbeVerdict& verdict, Timestamp now) {
  if (verdict.outcome != Outcome::PoolPositive) return false;
  return upsert(verdict.target.host, verdict.target.port, verdict.variant,
                EntrySource::probe_confirmed, now);
}

bool BlacklistStore::add_manual(const std::string& host, std::uint16_t port,
                                std::optional<ProtocolVariant> variant, Timestamp now) {
  if (host.empty() || port == 0) throw std::invalid_argument("manual entry needs host and port");
  return upsert(host, port, variant, EntrySource::manual, now);
}

std::size_t BlacklistStore::flush(Timestamp now, std::string* warning) {
  std::unique_lock lock(mu_);
  if (mode_ == UpdateMode::realtime) {
    if (warning) *warning = "flush ignored: store is in realtime mode";
    return 0;
  }
  std::vector<BlacklistEntry> batch;
  for (const auto& [k, e] : staged_) batch.push_back(e);
  append(batch);  // staging survives a failed write
  for (auto& [k, e] : staged_) durable_[k] = std::move(e);
  staged_.clear();
  last_flush_ = now;
  return batch.size();
}

bool BlacklistStore::flush_due(Timestamp now) const {
  std::shared_lock lock(mu_);
  if (mode_ != UpdateMode::batch) return false;
  return now - last_flush_.value_or(created_) >= interval_;
}

std::optional<Timestamp> BlacklistStore::last_flush() const {
  std::shared_lock lock(mu_);
  return last_flush_;
}

std::size_t BlacklistStore::staged() const {
  std::shared_lock lock(mu_);
  return staged_.size();
}

std::optional<BlacklistEntry> BlacklistStore::query(const std::string& host, std::uint16_t port) const {
  std::shared_lock lock(mu_);
  const EndpointKey key{host, port};
  if (auto it = staged_.find(key); it != staged_.end()) return it->second;
  if (auto it = durable_.find(key); it != durable_.end()) return it->second;
  return std::nullopt;
}

std::vector<BlacklistEntry> BlacklistStore::entries() const {
  std::shared_lock lock(mu_);
  LiveView view = durable_;
  for (const auto& [k, e] : staged_) view[k] = e;
  std::vector<BlacklistEntry> out;
  for (auto& [k, e] : view) out.push_back(std::move(e));
  return out;
}

LiveView BlacklistStore::durable_view() const {
  std::shared_lock lock(mu_);
  return durable_;
}

std::vector<std::string> BlacklistStore::export_list(std::optional<std::chrono::seconds> max_age,
                                                     std::optional<Timestamp> now) const {
  const auto ref = now.value_or(
      std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
  std::set<std::string> lines;
  for (const auto& e : entries()) {
    if (max_age && ref - e.last_confirmed > *max_age) continue;
    lines.insert(e.endpoint());
  }
  return {lines.begin(), lines.end()};
}

void BlacklistStore::compact() {
  std::unique_lock lock(mu_);
  const std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    for (const auto& [k, e] : durable_) out << e.to_json().dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("compaction write failed");
  }
  if (std::rename(tmp.c_str(), path_.c_str()) != 0)
    throw std::runtime_error("cannot replace journal: " + std::string(std::strerror(errno)));
}

}  // namespace cryptocatch
