// Session service: message envelope, per-connection session host and the outbound queue.
//
// Transport-free so it can be driven directly by tests; ws_server.hpp puts it on a socket.
#pragma once

#include "pantosim/io.hpp"
#include "pantosim/scenarios.hpp"
#include "pantosim/session.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pantosim::service {

using Json = io::Json;

inline constexpr int kProtocolVersion = 1;
inline constexpr unsigned short kDefaultPort = 8089;
inline constexpr std::size_t kMaxRunSteps = 1'000'000;

struct Message {
  std::string type;
  std::string session_id;  // empty for connection-level messages
  std::uint64_t seq = 0;
  Json payload = Json::object();

  bool operator==(const Message&) const = default;
};

inline Json to_json(const Message& m) {
  Json j;
  j["type"] = m.type;
  if (!m.session_id.empty()) j["session_id"] = m.session_id;
  j["seq"] = m.seq;
  j["payload"] = m.payload;
  return j;
}

inline std::string encode(const Message& m) { return to_json(m).dump(); }

/// Throws FormatError on a malformed envelope.
inline Message decode(const std::string& text) {
  const Json j = io::parse_json_text(text, "message");
  io::ObjectReader r(j, "");
  Message m;
  m.type = r.string("type");
  if (r.has("session_id")) m.session_id = r.string("session_id");
  if (r.has("seq")) {
    const Json& s = r.raw("seq");
    if (!s.is_number_unsigned()) throw FormatError("seq", "expected a non-negative integer");
    m.seq = s.get<std::uint64_t>();
  }
  if (r.has("payload")) {
    m.payload = r.raw("payload");
    if (!m.payload.is_object()) throw FormatError("payload", "expected an object");
  }
  r.finish();
  return m;
}

inline Message error_message(const std::string& session_id, const std::string& code, const std::string& detail) {
  return {"error", session_id, 0, Json{{"code", code}, {"detail", detail}}};
}

/**
 * Owns the live sessions of one connection.
 *
 * Sessions never share state: each holds its own geometry, scene and
 * buffered hand target. Outbound messages carry seq 0; sequencing happens
 * where messages are admitted for delivery (OutboundQueue).
 */
class SessionHost {
 public:
  std::vector<Message> handle(const Message& in) {
    try {
      return dispatch(in);
    } catch (const FormatError& e) {
      return {error_message(in.session_id, "bad_request", e.what())};
    } catch (const Error& e) {
      return {error_message(in.session_id, "bad_request", e.what())};
    } catch (const nlohmann::json::exception& e) {
      return {error_message(in.session_id, "bad_request", e.what())};
    }
  }

  /// Decodes and handles one text frame; decoding failures become bad_request errors.
  std::vector<Message> handle_text(const std::string& text) {
    Message in;
    try {
      in = decode(text);
    } catch (const Error& e) {
      return {error_message("", "bad_request", e.what())};
    }
    return handle(in);
  }

  std::size_t session_count() const { return sessions_.size(); }

 private:
  struct Live {
    LinkageGeometry geometry;
    SessionState state;
    HandSample target;
    std::optional<std::uint64_t> last_seq;
    double t = 0.0;
  };

  std::vector<Message> dispatch(const Message& in) {
    if (in.type == "hello") return hello(in);
    if (in.type == "create_session") return create(in);

    auto it = sessions_.find(in.session_id);
    if (it == sessions_.end()) return {error_message(in.session_id, "no_session", "unknown session '" + in.session_id + "'")};
    Live& live = it->second;
    if (live.last_seq && in.seq <= *live.last_seq)
      return {error_message(in.session_id, "bad_request", "seq must increase within a session")};
    live.last_seq = in.seq;

    if (in.type == "set_target") return set_target(live, in);
    if (in.type == "set_plane_setpoint") return set_setpoint(live, in);
    if (in.type == "step") return step_once(live, in);
    if (in.type == "run") return run_steps(live, in);
    if (in.type == "close") {
      sessions_.erase(it);
      return {Message{"close", in.session_id, 0, Json::object()}};
    }
    return {error_message(in.session_id, "bad_request", "unknown message type '" + in.type + "'")};
  }

  std::vector<Message> hello(const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    const int proto = r.has("proto") ? r.integer("proto") : kProtocolVersion;
    if (r.has("client")) r.string("client");
    r.finish();
    if (proto != kProtocolVersion)
      return {error_message("", "bad_request", "unsupported proto " + std::to_string(proto))};
    return {Message{"hello", "", 0, Json{{"proto", kProtocolVersion}, {"server", "pantosim"}}}};
  }

  std::vector<Message> create(const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    std::optional<LinkageGeometry> geometry;
    if (r.has("geometry")) geometry = io::geometry_from_json(r.raw("geometry"), "payload.geometry");
    Scene scene;
    if (r.has("scene")) {
      auto file = io::scene_from_json(r.raw("scene"), geometry.value_or(study_geometry()));
      if (!geometry) geometry = file.geometry;
      scene = file.scene;
    } else {
      if (!geometry) geometry = study_geometry();
      scene = make_scene(study_table(kLowTableHeight), *geometry);
    }
    r.finish();

    const std::string id = "s" + std::to_string(++created_);
    Live live;
    live.geometry = *geometry;
    live.state = start_session(scene, live.geometry);
    live.target = {0.0, scale_up(live.geometry, live.state.constraint_point), 0.0, 0.0};
    const StepRecord rec = snapshot(live.state, live.geometry, live.target);
    sessions_.emplace(id, std::move(live));
    return {telemetry(id, rec)};
  }

  std::vector<Message> set_target(Live& live, const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    live.target.target = r.vec3("target_m");
    live.target.handle_pitch = r.optional_number("handle_pitch_rad").value_or(0.0);
    live.target.handle_yaw = r.optional_number("handle_yaw_rad").value_or(0.0);
    r.finish();
    if (!live.target.target.allFinite()) throw FormatError("payload.target_m", "must be finite");
    return {};
  }

  std::vector<Message> set_setpoint(Live& live, const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    const double height = r.number("height_m");
    r.finish();
    live.state.scene = set_plane_setpoint(live.state.scene, live.geometry, height);
    return {};
  }

  static double read_dt(io::ObjectReader& r) {
    double dt = kDefaultDt;
    if (r.has("dt_s")) dt = r.number("dt_s");
    if (r.has("rate_hz")) {
      const double rate = r.number("rate_hz");
      if (!(rate > 0.0)) throw FormatError("payload.rate_hz", "must be positive");
      dt = 1.0 / rate;
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw FormatError("payload.dt_s", "must be positive");
    return dt;
  }

  Message advance(const std::string& id, Live& live, double dt) {
    live.t += dt;
    HandSample sample = live.target;
    sample.t = live.t;
    auto out = step(live.state, live.geometry, sample, dt);
    live.state = std::move(out.state);
    return telemetry(id, out.record);
  }

  std::vector<Message> step_once(Live& live, const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    const double dt = read_dt(r);
    r.finish();
    return {advance(in.session_id, live, dt)};
  }

  std::vector<Message> run_steps(Live& live, const Message& in) {
    io::ObjectReader r(in.payload, "payload");
    const double dt = read_dt(r);
    const int steps = r.integer("steps");
    const int every = r.has("every") ? r.integer("every") : 1;
    r.finish();
    if (steps <= 0 || static_cast<std::size_t>(steps) > kMaxRunSteps)
      throw FormatError("payload.steps", "must lie in [1, " + std::to_string(kMaxRunSteps) + "]");
    if (every <= 0) throw FormatError("payload.every", "must be positive");
    std::vector<Message> out;
    for (int i = 1; i <= steps; ++i) {
      Message m = advance(in.session_id, live, dt);
      if (i % every == 0 || i == steps) out.push_back(std::move(m));
    }
    return out;
  }

  static Message telemetry(const std::string& id, const StepRecord& rec) {
    return {"telemetry", id, 0, io::record_to_json(rec)};
  }

  std::map<std::string, Live> sessions_;
  std::uint64_t created_ = 0;
};

/**
 * FIFO of outbound messages for one connection.
 *
 * Stamps gap-free per-session seq numbers on admission. Once the backlog
 * reaches `capacity`, only every `keep_every`-th telemetry message per
 * session is admitted; others are dropped before sequencing. Order is never
 * changed.
 */
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t capacity = 4096, std::size_t keep_every = 4)
      : capacity_(capacity), keep_every_(std::max<std::size_t>(1, keep_every)) {}

  bool push(Message m) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) return false;
      if (m.type == "telemetry" && queue_.size() >= capacity_) {
        if (++skipped_[m.session_id] % keep_every_ != 0) return false;
      }
      m.seq = ++next_seq_[m.session_id];
      queue_.push_back(std::move(m));
    }
    ready_.notify_one();
    return true;
  }

  /// Blocks until a message is available or the queue is closed and drained.
  std::optional<Message> pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    Message m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

  std::optional<Message> try_pop() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    Message m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

 private:
  std::size_t capacity_;
  std::size_t keep_every_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Message> queue_;
  std::map<std::string, std::uint64_t> next_seq_;
  std::map<std::string, std::uint64_t> skipped_;
  bool closed_ = false;
};

}  // namespace pantosim::service
