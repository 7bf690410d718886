#ifndef CRYPTOCATCH_NET_HPP
#define CRYPTOCATCH_NET_HPP

// Small blocking-with-deadline socket layer shared by the prober and the
// mock servers: TCP connect/listen, OpenSSL-wrapped channels, and the subset
// of RFC 6455 needed to exchange single text frames.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

typedef struct ssl_st SSL;
typedef struct ssl_ctx_st SSL_CTX;

namespace cryptocatch::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset();

 private:
  int fd_ = -1;
};

enum class ConnectStatus { ok, refused, timeout, dns_failure };

struct ConnectResult {
  Fd fd;
  ConnectStatus status = ConnectStatus::refused;
};

ConnectResult connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline);

/// Bound, listening socket. Port 0 picks an ephemeral port.
struct Listener {
  Fd fd;
  std::uint16_t port = 0;
};
Listener listen_tcp(const std::string& host, std::uint16_t port, int backlog = 64);

/// Polls `fd` for readability until the deadline; false on timeout.
bool wait_readable(int fd, Deadline deadline);

enum class RecvStatus { data, timeout, closed, error };

struct RecvResult {
  RecvStatus status = RecvStatus::timeout;
  std::string bytes;
};

/// Byte stream over a connected socket, optionally TLS-wrapped.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual bool send(std::string_view bytes, Deadline deadline) = 0;
  virtual RecvResult recv_some(Deadline deadline, std::size_t max_bytes = 16384) = 0;
  virtual int fd() const = 0;
};

std::unique_ptr<Channel> plain_channel(Fd fd);

struct TlsContext;
using TlsContextPtr = std::shared_ptr<TlsContext>;

/// Client context with certificate verification disabled.
TlsContextPtr tls_client_context();
/// Server context with a freshly generated self-signed certificate.
TlsContextPtr tls_server_context();

/// Runs the handshake; nullptr on failure or deadline.
std::unique_ptr<Channel> tls_connect(Fd fd, const TlsContextPtr& ctx, const std::string& sni,
                                     Deadline deadline);
std::unique_ptr<Channel> tls_accept(Fd fd, const TlsContextPtr& ctx, Deadline deadline);

/// Reads until LF (stripped), EOF, max_bytes or the deadline. `status` is
/// `data` when anything was read.
RecvResult read_line(Channel& ch, std::string& carry, Deadline deadline,
                     std::size_t max_bytes = 64 * 1024);

std::string base64_encode(std::string_view bytes);
std::string sha1(std::string_view bytes);

namespace ws {

std::string accept_key(std::string_view client_key);

/// Case-insensitive lookup of an HTTP header in a raw request/response head.
std::optional<std::string> header_value(std::string_view head, std::string_view name);

struct HandshakeResult {
  bool ok = false;
  std::string response;  // raw server reply, for diagnostics
};

/// Client upgrade request and 101 validation.
HandshakeResult client_handshake(Channel& ch, std::string& carry, const std::string& host,
                                 std::uint16_t port, const std::string& path, Deadline deadline);

/// Single FIN frame with the given opcode; masked when `mask` is true.
std::string encode_frame(std::string_view payload, bool mask, std::uint8_t opcode = 0x1);

struct Frame {
  std::uint8_t opcode = 0;
  std::string payload;
};

/// Pops one complete frame from `buffer`, if present.
std::optional<Frame> try_decode_frame(std::string& buffer);

/// Reads the next data frame (text or binary) before the deadline.
std::optional<Frame> read_frame(Channel& ch, std::string& carry, Deadline deadline,
                                bool* got_bytes = nullptr);

}  // namespace ws

}  // namespace cryptocatch::net

#endif  // CRYPTOCATCH_NET_HPP
