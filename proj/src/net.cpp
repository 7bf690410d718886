#include "cryptocatch/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>

namespace cryptocatch::net {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Deadline deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::microseconds>(deadline - Clock::now());
  if (left.count() <= 0) return 0;
  return static_cast<int>((left.count() + 999) / 1000);
}

bool poll_for(int fd, short events, Deadline deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) return false;
  }
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

bool is_ip_literal(const std::string& host) {
  in6_addr buf{};
  return ::inet_pton(AF_INET, host.c_str(), &buf) == 1 || ::inet_pton(AF_INET6, host.c_str(), &buf) == 1;
}

class PlainChannel final : public Channel {
 public:
  explicit PlainChannel(Fd fd) : fd_(std::move(fd)) {}

  bool send(std::string_view bytes, Deadline deadline) override {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const auto n = ::send(fd_.get(), bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n > 0) {
        off += static_cast<std::size_t>(n);
      } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
        if (!poll_for(fd_.get(), POLLOUT, deadline)) return false;
      } else {
        return false;
      }
    }
    return true;
  }

  RecvResult recv_some(Deadline deadline, std::size_t max_bytes) override {
    RecvResult r;
    for (;;) {
      std::string buf(max_bytes, '\0');
      const auto n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
      if (n > 0) {
        buf.resize(static_cast<std::size_t>(n));
        r.status = RecvStatus::data;
        r.bytes = std::move(buf);
        return r;
      }
      if (n == 0) {
        r.status = RecvStatus::closed;
        return r;
      }
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
        if (!poll_for(fd_.get(), POLLIN, deadline)) {
          r.status = RecvStatus::timeout;
          return r;
        }
        continue;
      }
      r.status = errno == ECONNRESET ? RecvStatus::closed : RecvStatus::error;
      return r;
    }
  }

  int fd() const override { return fd_.get(); }

 private:
  Fd fd_;
};

struct SslDeleter {
  void operator()(SSL* s) const { SSL_free(s); }
};

class TlsChannel final : public Channel {
 public:
  TlsChannel(Fd fd, std::unique_ptr<SSL, SslDeleter> ssl, TlsContextPtr ctx)
      : fd_(std::move(fd)), ssl_(std::move(ssl)), ctx_(std::move(ctx)) {}

  ~TlsChannel() override {
    if (ssl_) SSL_shutdown(ssl_.get());
  }

  bool send(std::string_view bytes, Deadline deadline) override {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const int n = SSL_write(ssl_.get(), bytes.data() + off, static_cast<int>(bytes.size() - off));
      if (n > 0) {
        off += static_cast<std::size_t>(n);
        continue;
      }
      const int err = SSL_get_error(ssl_.get(), n);
      if (err == SSL_ERROR_WANT_WRITE) {
        if (!poll_for(fd_.get(), POLLOUT, deadline)) return false;
      } else if (err == SSL_ERROR_WANT_READ) {
        if (!poll_for(fd_.get(), POLLIN, deadline)) return false;
      } else {
        ERR_clear_error();
        return false;
      }
    }
    return true;
  }

  RecvResult recv_some(Deadline deadline, std::size_t max_bytes) override {
    RecvResult r;
    for (;;) {
      std::string buf(max_bytes, '\0');
      const int n = SSL_read(ssl_.get(), buf.data(), static_cast<int>(buf.size()));
      if (n > 0) {
        buf.resize(static_cast<std::size_t>(n));
        r.status = RecvStatus::data;
        r.bytes = std::move(buf);
        return r;
      }
      const int err = SSL_get_error(ssl_.get(), n);
      if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) {
        if (!poll_for(fd_.get(), err == SSL_ERROR_WANT_READ ? POLLIN : POLLOUT, deadline)) {
          r.status = RecvStatus::timeout;
          return r;
        }
        continue;
      }
      ERR_clear_error();
      r.status = (err == SSL_ERROR_ZERO_RETURN || err == SSL_ERROR_SYSCALL) ? RecvStatus::closed
                                                                             : RecvStatus::error;
      return r;
    }
  }

  int fd() const override { return fd_.get(); }

 private:
  Fd fd_;
  std::unique_ptr<SSL, SslDeleter> ssl_;
  TlsContextPtr ctx_;
};

template <typename Step>
bool drive_handshake(SSL* ssl, int fd, Deadline deadline, Step step) {
  for (;;) {
    const int rc = step(ssl);
    if (rc == 1) return true;
    const int err = SSL_get_error(ssl, rc);
    if (err == SSL_ERROR_WANT_READ) {
      if (!poll_for(fd, POLLIN, deadline)) return false;
    } else if (err == SSL_ERROR_WANT_WRITE) {
      if (!poll_for(fd, POLLOUT, deadline)) return false;
    } else {
      ERR_clear_error();
      return false;
    }
  }
}

}  // namespace

Fd& Fd::operator=(Fd&& o) noexcept {
  if (this != &o) {
    reset();
    fd_ = o.release();
  }
  return *this;
}

void Fd::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

bool wait_readable(int fd, Deadline deadline) { return poll_for(fd, POLLIN, deadline); }

ConnectResult connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline) {
  ignore_sigpipe();
  ConnectResult result;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    result.status = ConnectStatus::dns_failure;
    return result;
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

  result.status = ConnectStatus::refused;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!fd.valid()) continue;
    set_nonblocking(fd.get());
    set_nodelay(fd.get());
    int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      if (!poll_for(fd.get(), POLLOUT, deadline)) {
        result.status = ConnectStatus::timeout;
        continue;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
    }
    if (rc == 0) {
      result.fd = std::move(fd);
      result.status = ConnectStatus::ok;
      return result;
    }
    if (Clock::now() >= deadline) {
      result.status = ConnectStatus::timeout;
      break;
    }
  }
  return result;
}

Listener listen_tcp(const std::string& host, std::uint16_t port, int backlog) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
    throw std::runtime_error("cannot resolve bind address " + host);
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

  Fd fd(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
  if (!fd.valid()) throw std::runtime_error("socket(): " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd.get(), res->ai_addr, res->ai_addrlen) != 0)
    throw std::runtime_error("bind " + host + ":" + service + ": " + std::strerror(errno));
  if (::listen(fd.get(), backlog) != 0)
    throw std::runtime_error("listen(): " + std::string(std::strerror(errno)));
  set_nonblocking(fd.get());

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  Listener l;
  l.port = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                      : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  l.fd = std::move(fd);
  return l;
}

std::unique_ptr<Channel> plain_channel(Fd fd) {
  set_nonblocking(fd.get());
  set_nodelay(fd.get());
  return std::make_unique<PlainChannel>(std::move(fd));
}

struct TlsContext {
  SSL_CTX* ctx = nullptr;
  ~TlsContext() {
    if (ctx) SSL_CTX_free(ctx);
  }
};

TlsContextPtr tls_client_context() {
  ignore_sigpipe();
  auto tc = std::make_shared<TlsContext>();
  tc->ctx = SSL_CTX_new(TLS_client_method());
  if (!tc->ctx) throw std::runtime_error("SSL_CTX_new failed");
  // Pools commonly present self-signed certificates.
  SSL_CTX_set_verify(tc->ctx, SSL_VERIFY_NONE, nullptr);
  return tc;
}

TlsContextPtr tls_server_context() {
  ignore_sigpipe();
  auto tc = std::make_shared<TlsContext>();
  tc->ctx = SSL_CTX_new(TLS_server_method());
  if (!tc->ctx) throw std::runtime_error("SSL_CTX_new failed");

  EVP_PKEY* key = EVP_EC_gen("P-256");
  if (!key) throw std::runtime_error("key generation failed");
  std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)> key_guard(key, &EVP_PKEY_free);
  X509* cert = X509_new();
  std::unique_ptr<X509, decltype(&X509_free)> cert_guard(cert, &X509_free);
  X509_set_version(cert, 2);
  ASN1_INTEGER_set(X509_get_serialNumber(cert), 1);
  X509_gmtime_adj(X509_getm_notBefore(cert), -3600);
  X509_gmtime_adj(X509_getm_notAfter(cert), 3600L * 24 * 365);
  X509_set_pubkey(cert, key);
  X509_NAME* name = X509_get_subject_name(cert);
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("localhost"), -1, -1, 0);
  X509_set_issuer_name(cert, name);
  if (X509_sign(cert, key, EVP_sha256()) == 0) throw std::runtime_error("certificate signing failed");
  if (SSL_CTX_use_certificate(tc->ctx, cert) != 1 || SSL_CTX_use_PrivateKey(tc->ctx, key) != 1)
    throw std::runtime_error("cannot install server certificate");
  return tc;
}

std::unique_ptr<Channel> tls_connect(Fd fd, const TlsContextPtr& ctx, const std::string& sni,
                                     Deadline deadline) {
  set_nonblocking(fd.get());
  std::unique_ptr<SSL, SslDeleter> ssl(SSL_new(ctx->ctx));
  if (!ssl) return nullptr;
  SSL_set_fd(ssl.get(), fd.get());
  if (!sni.empty() && !is_ip_literal(sni)) SSL_set_tlsext_host_name(ssl.get(), sni.c_str());
  if (!drive_handshake(ssl.get(), fd.get(), deadline, [](SSL* s) { return SSL_connect(s); }))
    return nullptr;
  return std::make_unique<TlsChannel>(std::move(fd), std::move(ssl), ctx);
}

std::unique_ptr<Channel> tls_accept(Fd fd, const TlsContextPtr& ctx, Deadline deadline) {
  set_nonblocking(fd.get());
  std::unique_ptr<SSL, SslDeleter> ssl(SSL_new(ctx->ctx));
  if (!ssl) return nullptr;
  SSL_set_fd(ssl.get(), fd.get());
  if (!drive_handshake(ssl.get(), fd.get(), deadline, [](SSL* s) { return SSL_accept(s); }))
    return nullptr;
  return std::make_unique<TlsChannel>(std::move(fd), std::move(ssl), ctx);
}

RecvResult read_line(Channel& ch, std::string& carry, Deadline deadline, std::size_t max_bytes) {
  RecvResult out;
  for (;;) {
    if (auto nl = carry.find('\n'); nl != std::string::npos) {
      out.status = RecvStatus::data;
      out.bytes = carry.substr(0, nl);
      if (!out.bytes.empty() && out.bytes.back() == '\r') out.bytes.pop_back();
      carry.erase(0, nl + 1);
      return out;
    }
    if (carry.size() >= max_bytes) {
      out.status = RecvStatus::data;
      out.bytes = carry.substr(0, max_bytes);
      carry.erase(0, max_bytes);
      return out;
    }
    auto r = ch.recv_some(deadline);
    if (r.status == RecvStatus::data) {
      carry += r.bytes;
      continue;
    }
    if (!carry.empty()) {
      out.status = RecvStatus::data;
      out.bytes = std::move(carry);
      carry.clear();
      return out;
    }
    out.status = r.status;
    return out;
  }
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string sha1(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr);
  return std::string(reinterpret_cast<const char*>(md), len);
}

namespace ws {

namespace {
constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string random_bytes(std::size_t n) {
  std::string out(n, '\0');
  RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(n));
  return out;
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
}  // namespace

std::string accept_key(std::string_view client_key) {
  return base64_encode(sha1(std::string(client_key) + std::string(kGuid)));
}

std::optional<std::string> header_value(std::string_view head, std::string_view name) {
  std::size_t start = 0;
  while (start < head.size()) {
    auto end = head.find("\r\n", start);
    if (end == std::string_view::npos) end = head.size();
    auto line = head.substr(start, end - start);
    auto colon = line.find(':');
    if (colon != std::string_view::npos && colon == name.size() &&
        std::equal(name.begin(), name.end(), line.begin(),
                   [](char a, char b) { return lower(a) == lower(b); })) {
      auto v = line.substr(colon + 1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
      return std::string(v);
    }
    start = end + 2;
  }
  return std::nullopt;
}

HandshakeResult client_handshake(Channel& ch, std::string& carry, const std::string& host,
                                 std::uint16_t port, const std::string& path, Deadline deadline) {
  HandshakeResult result;
  const auto key = base64_encode(random_bytes(16));
  std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                    "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                    "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  if (!ch.send(req, deadline)) return result;
  for (;;) {
    if (auto end = carry.find("\r\n\r\n"); end != std::string::npos) {
      result.response = carry.substr(0, end);
      carry.erase(0, end + 4);
      break;
    }
    auto r = ch.recv_some(deadline);
    if (r.status != RecvStatus::data) {
      result.response = std::move(carry);
      carry.clear();
      return result;
    }
    carry += r.bytes;
    if (carry.size() > 64 * 1024) {
      result.response = carry.substr(0, 1024);
      return result;
    }
  }
  const auto status_end = result.response.find("\r\n");
  const auto status = result.response.substr(0, status_end);
  if (status.rfind("HTTP/1.1 101", 0) != 0) return result;
  auto accept = header_value(result.response, "Sec-WebSocket-Accept");
  result.ok = accept && *accept == accept_key(key);
  return result;
}

std::string encode_frame(std::string_view payload, bool mask, std::uint8_t opcode) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | (opcode & 0x0f)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const auto len = payload.size();
  if (len < 126) {
    out.push_back(static_cast<char>(mask_bit | len));
  } else if (len <= 0xffff) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((len >> 8) & 0xff));
    out.push_back(static_cast<char>(len & 0xff));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<char>((static_cast<std::uint64_t>(len) >> s) & 0xff));
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const std::string key = random_bytes(4);
  out += key;
  for (std::size_t i = 0; i < len; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

std::optional<Frame> try_decode_frame(std::string& buffer) {
  if (buffer.size() < 2) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>(buffer[0]);
  const auto b1 = static_cast<std::uint8_t>(buffer[1]);
  const bool masked = b1 & 0x80;
  std::uint64_t len = b1 & 0x7f;
  std::size_t off = 2;
  if (len == 126) {
    if (buffer.size() < 4) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buffer[2])) << 8) |
          static_cast<std::uint8_t>(buffer[3]);
    off = 4;
  } else if (len == 127) {
    if (buffer.size() < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(buffer[2 + static_cast<std::size_t>(i)]);
    off = 10;
  }
  const std::size_t key_off = off;
  if (masked) off += 4;
  if (buffer.size() < off + len) return std::nullopt;
  Frame f;
  f.opcode = b0 & 0x0f;
  f.payload = buffer.substr(off, static_cast<std::size_t>(len));
  if (masked)
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ buffer[key_off + i % 4]);
  buffer.erase(0, off + static_cast<std::size_t>(len));
  return f;
}

std::optional<Frame> read_frame(Channel& ch, std::string& carry, Deadline deadline, bool* got_bytes) {
  for (;;) {
    while (auto f = try_decode_frame(carry)) {
      if (f->opcode == 0x1 || f->opcode == 0x2 || f->opcode == 0x0) return f;
      if (f->opcode == 0x8) return std::nullopt;  // close
    }
    auto r = ch.recv_some(deadline);
    if (r.status != RecvStatus::data) return std::nullopt;
    if (got_bytes) *got_bytes = true;
    carry += r.bytes;
  }
}

}  // namespace ws

}  // namespace cryptocatch::net
