#ifndef CRYPTOCATCH_BLACKLIST_HPP
#define CRYPTOCATCH_BLACKLIST_HPP

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cryptocatch/probe.hpp"

namespace cryptocatch {

using Timestamp = std::chrono::sys_seconds;

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_utc(Timestamp t);
Timestamp parse_utc(std::string_view s);
/// `30d`, `12h`, `15m`, `45s`; a bare number means seconds.
std::chrono::seconds parse_duration(std::string_view s);

enum class EntrySource { probe_confirmed, manual };

struct BlacklistEntry {
  std::string host;
  std::uint16_t port = 0;
  std::optional<ProtocolVariant> variant;
  Timestamp first_seen{};
  Timestamp last_confirmed{};
  EntrySource source = EntrySource::probe_confirmed;
  std::int64_t confirm_count = 1;

  std::string endpoint() const;
  nlohmann::json to_json() const;
  static BlacklistEntry from_json(const nlohmann::json& j);
  bool operator==(const BlacklistEntry&) const = default;
};

enum class UpdateMode { realtime, batch };
std::string_view to_string(UpdateMode m);
std::optional<UpdateMode> parse_update_mode(std::string_view s);

using EndpointKey = std::pair<std::string, std::uint16_t>;
using LiveView = std::map<EndpointKey, BlacklistEntry>;

struct ReplayResult {
  LiveView view;
  std::size_t records = 0;
  std::size_t skipped = 0;  // unparsable lines, e.g. a torn final write
};

/// Upsert-by-key fold over journal lines.
ReplayResult replay_journal(std::istream& in);

/// Journal-backed blacklist. Mutations are serialised by the owner; queries
/// may run concurrently.
class BlacklistStore {
 public:
  explicit BlacklistStore(std::string journal_path, UpdateMode mode = UpdateMode::realtime,
                          std::chrono::seconds flush_interval = std::chrono::hours(24));

  UpdateMode mode() const { return mode_; }
  const std::string& path() const { return path_; }

  /// Upserts PoolPositive verdicts; other outcomes are no-ops. Returns true
  /// when the live view changed. Throws on journal write failure, keeping
  /// the entry staged.
  bool confirm(const ProbeVerdict& verdict, Timestamp now);
  bool add_manual(const std::string& host, std::uint16_t port,
                  std::optional<ProtocolVariant> variant, Timestamp now);

  /// Batch mode: appends staged entries to the journal. Realtime mode: no-op,
  /// returns 0 and sets `warning`.
  std::size_t flush(Timestamp now, std::string* warning = nullptr);
  bool flush_due(Timestamp now) const;
  std::optional<Timestamp> last_flush() const;
  std::size_t staged() const;

  std::optional<BlacklistEntry> query(const std::string& host, std::uint16_t port) const;
  /// Live view including staging, sorted by key.
  std::vector<BlacklistEntry> entries() const;
  /// Durable part only.
  LiveView durable_view() const;
  /// Sorted, deduplicated `host:port` lines; optional age filter on last_confirmed.
  std::vector<std::string> export_list(std::optional<std::chrono::seconds> max_age = std::nullopt,
                                       std::optional<Timestamp> now = std::nullopt) const;

  /// Rewrites the journal as one record per durable entry (atomic rename).
  void compact();
  /// Drops staging and re-reads the journal.
  void reload();

 private:
  bool upsert(const std::string& host, std::uint16_t port, std::optional<ProtocolVariant> variant,
              EntrySource source, Timestamp now);
  void append(const std::vector<BlacklistEntry>& entries);

  std::string path_;
  UpdateMode mode_;
  std::chrono::seconds interval_;
  mutable std::shared_mutex mu_;
  LiveView durable_;
  LiveView staged_;
  std::optional<Timestamp> last_flush_;
  Timestamp created_;
};

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_BLACKLIST_HPP
