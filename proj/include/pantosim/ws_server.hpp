// WebSocket transport for the session service (Boost.Beast, blocking I/O).
//
// One thread per connection. Each connection owns its SessionHost and
// OutboundQueue, so nothing is shared between connections. Frames are
// handled in arrival order; replies are drained after each frame, with run
// telemetry paced to simulated time divided by `speed` (0 = unpaced).
#pragma once

#include "pantosim/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace pantosim::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = kDefaultPort;  // 0 picks a free port
  double speed = 1.0;                  // sim seconds per wall second; 0 disables pacing
  std::size_t queue_capacity = 4096;
  std::size_t keep_every = 4;
};

class BindError : public Error {
 public:
  using Error::Error;
};

class WsServer {
 public:
  using LogFn = std::function<void(const std::string&)>;

  /// Binds and listens immediately; throws BindError if the port is taken.
  explicit WsServer(ServerOptions opt, LogFn log = {}) : opt_(std::move(opt)), log_(std::move(log)), acceptor_(ioc_) {
    if (opt_.speed < 0.0) throw InvalidArgument("speed must be >= 0");
    namespace net = boost::asio;
    boost::system::error_code ec;
    const auto addr = net::ip::make_address(opt_.address, ec);
    if (ec) throw InvalidArgument("bad listen address '" + opt_.address + "'");
    const net::ip::tcp::endpoint ep(addr, opt_.port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw BindError("cannot listen on " + opt_.address + ":" + std::to_string(opt_.port) + ": " + ec.message());
    port_ = acceptor_.local_endpoint().port();
  }

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  ~WsServer() {
    stop();
    for (auto& t : workers_)
      if (t.joinable()) t.join();
  }

  unsigned short port() const { return port_; }

  /// Accepts connections until stop() is called.
  void run() {
    while (!stopping_) {
      boost::asio::ip::tcp::socket socket(ioc_);
      boost::system::error_code ec;
      acceptor_.accept(socket, ec);
      if (ec) {
        if (stopping_) break;
        log("accept failed: " + ec.message());
        continue;
      }
      std::lock_guard lock(mutex_);
      open_.insert(socket.native_handle());
      workers_.emplace_back([this, s = std::move(socket)]() mutable { serve_connection(std::move(s)); });
    }
  }

  /// Safe from any thread: wakes the accept loop and drops open connections.
  void stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
    std::lock_guard lock(mutex_);
    for (const int fd : open_) ::shutdown(fd, SHUT_RDWR);
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct Pace {
    double sim_t = 0.0;
    Clock::time_point wall;
  };

  void log(const std::string& msg) const {
    if (log_) log_(msg);
  }

  void serve_connection(boost::asio::ip::tcp::socket socket) {
    namespace beast = boost::beast;
    const int fd = socket.native_handle();
    try {
      beast::websocket::stream<boost::asio::ip::tcp::socket> ws(std::move(socket));
      ws.accept();
      ws.text(true);
      SessionHost host;
      OutboundQueue queue(opt_.queue_capacity, opt_.keep_every);
      std::map<std::string, Pace> pace;
      beast::flat_buffer buffer;
      while (!stopping_) {
        buffer.clear();
        ws.read(buffer);
        const std::string text = beast::buffers_to_string(buffer.data());
        for (auto& m : host.handle_text(text)) queue.push(std::move(m));
        pace.clear();
        while (auto m = queue.try_pop()) {
          wait_for_sim_time(*m, pace);
          ws.write(boost::asio::buffer(encode(*m)));
        }
      }
    } catch (const boost::system::system_error& e) {
      if (e.code() != beast::websocket::error::closed) log(std::string("connection ended: ") + e.what());
    } catch (const std::exception& e) {
      log(std::string("connection failed: ") + e.what());
    }
    std::lock_guard lock(mutex_);
    open_.erase(fd);
  }

  // Telemetry within one burst leaves no earlier than its sim-time offset / speed.
  void wait_for_sim_time(const Message& m, std::map<std::string, Pace>& pace) const {
    if (opt_.speed <= 0.0 || m.type != "telemetry" || !m.payload.contains("t_s")) return;
    const double t = m.payload["t_s"].get<double>();
    const auto now = Clock::now();
    auto it = pace.find(m.session_id);
    if (it == pace.end() || t < it->second.sim_t) {
      pace[m.session_id] = {t, now};
      return;
    }
    const auto due = it->second.wall + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>((t - it->second.sim_t) / opt_.speed));
    if (due > now) std::this_thread::sleep_until(due);
  }

  ServerOptions opt_;
  LogFn log_;
  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  unsigned short port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::set<int> open_;
  std::vector<std::thread> workers_;
};

}  // namespace pantosim::service
