#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <system_error>
#include <thread>

#include "tpcs/stream/sender.hpp"
#include "tpcs/stream/session.hpp"

namespace tpcs::stream {
namespace {

using Clock = std::chrono::steady_clock;

class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept
  {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { close(); }

  int fd() const { return fd_; }
  void shutdown_write() const
  {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }
  void close()
  {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

[[noreturn]] void sys_fail(const char* what)
{
  throw SessionError(std::string(what) + ": " + std::strerror(errno));
}

std::pair<Socket, Socket> loopback_pair()
{
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(listener.fd(), 1) < 0) sys_fail("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len) < 0)
    sys_fail("getsockname");
  Socket client(::socket(AF_INET, SOCK_STREAM, 0));
  if (client.fd() < 0) sys_fail("socket");
  if (::connect(client.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("connect");
  Socket server(::accept(listener.fd(), nullptr, nullptr));
  if (server.fd() < 0) sys_fail("accept");
  int one = 1;
  ::setsockopt(client.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  ::setsockopt(server.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return {std::move(server), std::move(client)};
}

// Length-prefixed message transport over a connected stream socket.
class Connection {
 public:
  explicit Connection(const Socket& socket) : fd_(socket.fd()) {}

  void send(const Message& m)
  {
    auto bytes = encode_message(m);
    std::lock_guard lock(write_mutex_);
    std::size_t off = 0;
    while (off < bytes.size()) {
      ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        sys_fail("send");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  // Waits up to `timeout_ms` for a message. Returns nullopt on timeout;
  // sets `closed` on orderly shutdown by the peer.
  std::optional<Message> receive(int timeout_ms, bool& closed)
  {
    closed = false;
    while (true) {
      std::size_t used = 0;
      if (auto m = decode_message(buffer_, used)) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(used));
        return m;
      }
      pollfd pfd{fd_, POLLIN, 0};
      int r = ::poll(&pfd, 1, timeout_ms);
      if (r < 0) {
        if (errno == EINTR) continue;
        sys_fail("poll");
      }
      if (r == 0) return std::nullopt;
      std::uint8_t chunk[65536];
      ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        sys_fail("recv");
      }
      if (n == 0) {
        closed = true;
        return std::nullopt;
      }
      buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
  }

 private:
  int fd_;
  std::mutex write_mutex_;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace

SessionResult run_socket_session(const StreamConfig& config, const FrameSource& source,
                                 const std::vector<SensorPose>& poses,
                                 const ViewportProvider& viewport, const PresentSink& sink)
{
  config.validate();
  auto [server_socket, client_socket] = loopback_pair();
  Connection sender_conn(server_socket);
  Connection receiver_conn(client_socket);

  const auto t0 = Clock::now();
  auto clock_ms = [t0] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
  const double period = 1000.0 / config.fps;

  std::mutex timeline_mutex;
  std::vector<FrameTimeline> timelines(source.frame_count);
  std::map<std::uint32_t, double> first_send;
  for (std::uint32_t k = 0; k < source.frame_count; ++k) timelines[k].frame_index = k;
  auto with_timeline = [&](std::uint32_t k, auto fn) {
    std::lock_guard lock(timeline_mutex);
    if (k < timelines.size()) fn(timelines[k]);
  };

  Sender sender(config, poses);
  std::exception_ptr sender_error;

  std::thread capture_thread([&] {
    try {
      std::uint32_t k = 0;
      while (k < source.frame_count) {
        std::this_thread::sleep_until(t0 + std::chrono::duration<double, std::milli>(k * period));
        // Frames captured while the encoder was busy are superseded.
        const auto latest = static_cast<std::uint32_t>(std::floor(clock_ms() / period));
        const std::uint32_t take = std::min(std::max(k, latest), source.frame_count - 1);
        for (std::uint32_t s = k; s < take; ++s)
          with_timeline(s, [&](FrameTimeline& t) {
            t.capture_ts_ms = round_to_tenth(s * period);
            t.drop_reason = "sender_busy";
          });
        k = take;
        PointCloudFrame frame = source.frame(k);
        frame.frame_index = k;
        frame.capture_timestamp_ms = k * period;
        with_timeline(k, [&](FrameTimeline& t) { t.capture_ts_ms = round_to_tenth(k * period); });
        try {
          PreparedFrame prepared = sender.prepare(frame);
          Message offer = prepared.offer;
          const std::size_t media = prepared.media_bytes;
          with_timeline(k, [&](FrameTimeline& t) {
            t.encode_ms = round_to_tenth(prepared.encode_ms);
            t.bytes_sent += media;
            t.control_bytes += wire_size(offer) - media;
            if (media) first_send[k] = clock_ms();
          });
          sender.retain(std::move(prepared));
          sender_conn.send(offer);
        } catch (const SessionError&) {
          throw;
        } catch (const std::exception&) {
          with_timeline(k, [](FrameTimeline& t) { t.drop_reason = "encode_error"; });
        }
        ++k;
      }
      sender_conn.send(make_control_message({ControlCode::kEndOfStream, source.frame_count}));
    } catch (...) {
      sender_error = std::current_exception();
    }
  });

  std::thread request_thread([&] {
    try {
      while (true) {
        bool closed = false;
        auto m = sender_conn.receive(100, closed);
        if (closed) break;
        if (!m) continue;
        if (m->type != MessageType::kRepresentationRequest) continue;
        RepresentationRequest r = parse_request_message(*m);
        std::optional<Message> payload = sender.serve(r);
        if (!payload) {
          sender_conn.send(make_control_message({ControlCode::kFrameUnavailable, r.frame_index}));
          continue;
        }
        with_timeline(r.frame_index, [&](FrameTimeline& t) {
          t.bytes_sent += payload->body.size();
          t.control_bytes += kFrameOverheadBytes;
          first_send.try_emplace(r.frame_index, clock_ms());
        });
        sender_conn.send(*payload);
      }
    } catch (...) {
      if (!sender_error) sender_error = std::current_exception();
    }
  });

  Receiver receiver(config, viewport);
  Synchronizer sync(config.sync);
  std::set<std::uint32_t> finished;
  std::map<std::uint32_t, double> decode_done;
  std::exception_ptr receiver_error;
  bool end_of_stream = false;
  const double hard_stop_ms = source.frame_count * period + 30000.0;

  auto mark_drop = [&](std::uint32_t k, const char* reason) {
    if (!finished.insert(k).second) return;
    receiver.forget(k);
    with_timeline(k, [&](FrameTimeline& t) {
      if (t.drop_reason.empty()) t.drop_reason = reason;
    });
  };
  auto pump_sync = [&] {
    while (auto f = sync.poll(clock_ms())) {
      const std::uint32_t k = f->frame_index;
      finished.insert(k);
      with_timeline(k, [&](FrameTimeline& t) {
        t.presented = true;
        t.present_ts_ms = round_to_tenth(f->present_ts_ms);
        t.end_to_end_ms = round_to_tenth(t.present_ts_ms - t.capture_ts_ms);
        t.sync_wait_ms = round_to_tenth(f->present_ts_ms - decode_done[k]);
      });
      if (sink) sink(*f);
    }
    for (std::uint32_t k : sync.take_dropped()) mark_drop(k, "sync_skip");
  };
  auto deliver = [&](std::uint32_t k, DecodeOutcome out, double arrival) {
    with_timeline(k, [&](FrameTimeline& t) {
      t.transmit_ms = round_to_tenth(arrival - (first_send.count(k) ? first_send[k] : arrival));
      t.decode_ms = round_to_tenth(out.decode_ms);
    });
    if (out.error) {
      mark_drop(k, "decode_error");
      return;
    }
    decode_done[k] = clock_ms();
    for (auto& tile : out.tiles)
      if (sync.ingest(std::move(tile), clock_ms()) == IngestResult::kStale) mark_drop(k, "stale");
    pump_sync();
  };

  try {
    while (true) {
      pump_sync();
      if (clock_ms() > hard_stop_ms) break;
      if (end_of_stream && receiver.pending_frames() == 0 && !sync.next_deadline()) break;
      int timeout = 20;
      if (auto d = sync.next_deadline())
        timeout = std::clamp(static_cast<int>(std::ceil(*d - clock_ms())), 0, 20);
      bool closed = false;
      auto m = receiver_conn.receive(timeout, closed);
      if (closed) break;
      if (!m) continue;
      const double now = clock_ms();
      switch (m->type) {
        case MessageType::kCaptureUncompressed: {
          DecodeOutcome out = receiver.decode_capture(*m);
          std::uint32_t k = out.tiles.empty() ? 0 : out.tiles[0].frame_index;
          deliver(k, std::move(out), now);
          break;
        }
        case MessageType::kTileMetadata: {
          FrameOffer offer = parse_offer_message(*m);
          FrameDecision d = receiver.on_offer(offer, now);
          with_timeline(offer.frame_index, [&](FrameTimeline& t) {
            t.budget_bytes = d.budget_bytes;
            t.budget_violated = d.budget_violated;
            t.selection = d.summary;
            t.control_bytes += wire_size(*m);
          });
          for (const auto& r : d.requests) {
            Message req = make_request_message(r);
            with_timeline(r.frame_index, [&](FrameTimeline& t) { t.control_bytes += wire_size(req); });
            receiver_conn.send(req);
          }
          break;
        }
        case MessageType::kRepresentationPayload: {
          if (auto k = receiver.on_payload(*m)) deliver(*k, receiver.decode_frame(*k), now);
          break;
        }
        case MessageType::kSessionControl: {
          SessionControl c = parse_control_message(*m);
          if (c.code == ControlCode::kEndOfStream) end_of_stream = true;
          if (c.code == ControlCode::kFrameUnavailable) mark_drop(c.frame_index, "unavailable");
          break;
        }
        case MessageType::kRepresentationRequest:
          break;
      }
    }
  } catch (...) {
    receiver_error = std::current_exception();
  }

  client_socket.shutdown_write();
  capture_thread.join();
  request_thread.join();
  if (receiver_error) std::rethrow_exception(receiver_error);
  if (sender_error) std::rethrow_exception(sender_error);

  SessionResult result;
  for (auto& t : timelines) {
    if (!t.presented && t.drop_reason.empty()) t.drop_reason = "incomplete";
    result.frames.push_back(t);
  }
  result.duplicate_tiles = sync.duplicate_count();
  result.playout_offset_ms = round_to_tenth(sync.playout_offset_ms().value_or(0.0));
  return result;
}

}  // namespace tpcs::stream
