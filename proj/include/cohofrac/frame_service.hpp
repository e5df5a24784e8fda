#pragma once

// Render/navigation session behind the frame protocol, and a loopback TCP
// server running one session per connection.
//
// Requests: load (payload = manifold text or a file path), navigate (payload
// = "tx ty tz rx ry rz"), render (optional parameter and camera overrides).
// Replies echo the request id: summary, camera, frame, or error. Request ids
// must strictly increase within a session.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cohofrac/error.hpp"
#include "cohofrac/frame_protocol.hpp"
#include "cohofrac/loaded_manifold.hpp"
#include "cohofrac/raycaster.hpp"

namespace cohofrac {

inline constexpr int kDefaultPort = 7045;

class Session {
 public:
  // A render request resolved against the session state when it starts.
  struct RenderJob {
    std::uint64_t id = 0;
    std::shared_ptr<const LoadedManifold> manifold;
    Camera camera;
    RenderParams params;
    std::string weights_name;
  };

  explicit Session(unsigned workers = 0) : workers_(workers) {}

  // Synchronous dispatch: id check, then the matching handler.
  protocol::Message handle(const protocol::Message& req) {
    if (auto err = accept_id(req)) return *err;
    if (req.type == "load") return handle_load(req);
    if (req.type == "navigate") return handle_navigate(req);
    if (req.type == "render") return handle_render_request(req);
    return error_reply(req, "unexpected message type '" + req.type + "'");
  }

  // Enforces strictly increasing request ids; returns an error reply if not.
  std::optional<protocol::Message> accept_id(const protocol::Message& req) {
    std::lock_guard lock(mu_);
    if (!req.id) return error_reply(req, "request has no id");
    if (last_id_ && *req.id <= *last_id_)
      return error_reply(req, "request id " + std::to_string(*req.id) + " does not exceed " +
                                  std::to_string(*last_id_));
    last_id_ = req.id;
    return std::nullopt;
  }

  protocol::Message handle_load(const protocol::Message& req) {
    try {
      // A single line is a path; anything with a newline is the file itself.
      std::string text = req.payload;
      if (text.find('\n') == std::string::npos) {
        std::ifstream in(text, std::ios::binary);
        if (!in) throw validation_error("cannot open '" + text + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      auto m = load_manifold(text);
      std::lock_guard lock(mu_);
      manifold_ = m;
      camera_ = default_camera(m->scene);
      weights_name_ = m->weights.empty() ? std::string() : m->weights.front().first;
      protocol::Message out = reply(req, "summary");
      out.cam_tet = camera_.tet;
      out.cam_matrix = to_row_major(camera_.frame);
      if (!weights_name_.empty()) out.weights_name = weights_name_;
      out.payload = summary_text(*m);
      return out;
    } catch (const std::exception& e) {
      return error_reply(req, e.what());
    }
  }

  protocol::Message handle_navigate(const protocol::Message& req) {
    try {
      std::istringstream in(req.payload);
      in.imbue(std::locale::classic());
      std::array<double, 6> v{};
      for (double& x : v)
        if (!(in >> x) || !std::isfinite(x)) throw usage_error("navigate payload must be six reals");
      std::string extra;
      if (in >> extra) throw usage_error("navigate payload must be six reals");
      std::lock_guard lock(mu_);
      if (!manifold_) throw usage_error("no manifold loaded");
      camera_ = move_camera(manifold_->scene, camera_, {v[0], v[1], v[2]}, {v[3], v[4], v[5]},
                            params_.max_steps);
      protocol::Message out = reply(req, "camera");
      out.cam_tet = camera_.tet;
      out.cam_matrix = to_row_major(camera_.frame);
      return out;
    } catch (const std::exception& e) {
      return error_reply(req, e.what());
    }
  }

  // Applies the request's overrides to the session and snapshots what the
  // render needs. Throws on invalid overrides, leaving the session unchanged.
  RenderJob prepare_render(const protocol::Message& req) {
    std::lock_guard lock(mu_);
    if (!manifold_) throw usage_error("no manifold loaded");
    RenderParams p = params_;
    if (req.width) p.width = *req.width;
    if (req.height) p.height = *req.height;
    if (req.fov) p.fov = *req.fov;
    if (req.radius) p.radius = *req.radius;
    if (req.max_steps) p.max_steps = *req.max_steps;
    if (req.colormap) p.colormap = *req.colormap;
    if (req.supersample) p.supersample = *req.supersample;
    validate_params(p);
    if (std::size_t(p.width) * p.height > (std::size_t(1) << 24)) throw usage_error("image too large");
    find_gradient(p.colormap);

    Camera cam = camera_;
    if (req.cam_tet.has_value() != req.cam_matrix.has_value())
      throw usage_error("camTet and camMatrix must be given together");
    if (req.cam_tet) {
      cam = {*req.cam_tet, from_row_major(*req.cam_matrix)};
      validate_camera(manifold_->scene, cam);
    }
    std::string wname = req.weights_name ? *req.weights_name : weights_name_;
    const FaceWeights* w = manifold_->find(wname);
    FaceWeights zero{std::vector<std::int64_t>(manifold_->file.triangulation.face_classes().size(), 0), ""};
    if (!w && req.weights_name) throw usage_error("unknown weights '" + wname + "'");

    params_ = p;
    camera_ = cam;
    weights_name_ = wname;
    RenderJob job{*req.id, manifold_, cam, p, wname};
    job.params.weights = w ? *w : zero;
    return job;
  }

  protocol::Message run_render(const RenderJob& job) const {
    protocol::Message out;
    out.type = "frame";
    out.id = job.id;
    out.width = job.params.width;
    out.height = job.params.height;
    out.fov = job.params.fov;
    out.radius = job.params.radius;
    out.max_steps = job.params.max_steps;
    out.cam_tet = job.camera.tet;
    out.cam_matrix = to_row_major(job.camera.frame);
    if (!job.weights_name.empty()) out.weights_name = job.weights_name;
    out.colormap = job.params.colormap;
    out.supersample = job.params.supersample;
    out.status = "ok";
    const RenderResult r = render(job.manifold->scene, job.camera, job.params, workers_);
    out.payload.assign(reinterpret_cast<const char*>(r.image.pixels.data()), r.image.pixels.size());
    return out;
  }

  protocol::Message handle_render_request(const protocol::Message& req) {
    try {
      return run_render(prepare_render(req));
    } catch (const std::exception& e) {
      return error_reply(req, e.what());
    }
  }

  static protocol::Message superseded(const protocol::Message& req) {
    protocol::Message out = reply(req, "frame");
    out.status = "superseded";
    return out;
  }

  Camera camera() const {
    std::lock_guard lock(mu_);
    return camera_;
  }

  std::shared_ptr<const LoadedManifold> manifold() const {
    std::lock_guard lock(mu_);
    return manifold_;
  }

  static protocol::Message error_reply(const protocol::Message& req, const std::string& what) {
    protocol::Message out;
    out.type = "error";
    out.id = req.id;
    out.status = "error";
    out.payload = what;
    return out;
  }

 private:
  static protocol::Message reply(const protocol::Message& req, const std::string& type) {
    protocol::Message out;
    out.type = type;
    out.id = req.id;
    out.status = "ok";
    return out;
  }

  unsigned workers_;
  mutable std::mutex mu_;
  std::shared_ptr<const LoadedManifold> manifold_;
  Camera camera_;
  RenderParams params_;
  std::string weights_name_;
  std::optional<std::uint64_t> last_id_;
};

namespace net {

inline void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw protocol_error(std::string("send failed: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

// False on end of stream before the first byte.
inline bool read_exact(int fd, char* out, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, out + got, len - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw protocol_error("connection closed mid-message");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw protocol_error(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

inline std::optional<protocol::Message> read_message(int fd) {
  char len[4];
  if (!read_exact(fd, len, 4)) return std::nullopt;
  const std::uint32_t header_len = protocol::detail::get_u32(std::string_view(len, 4));
  if (header_len > protocol::kMaxHeaderBytes) throw protocol_error("header too large");
  std::string header(header_len, '\0');
  if (header_len && !read_exact(fd, header.data(), header_len)) throw protocol_error("connection closed mid-message");
  protocol::ParsedHeader ph = protocol::parse_header(header);
  ph.message.payload.resize(ph.payload_bytes);
  if (ph.payload_bytes && !read_exact(fd, ph.message.payload.data(), ph.payload_bytes))
    throw protocol_error("connection closed mid-message");
  return std::move(ph.message);
}

}  // namespace net

struct ServerOptions {
  int port = kDefaultPort;  // 0 picks a free port
  unsigned workers = 0;
  // Test hooks: called on the connection's reader thread when a render request
  // is queued, and on the render thread just before a render starts.
  std::function<void(const protocol::Message&)> on_render_queued;
  std::function<void(const protocol::Message&)> before_render;
};

// One connection: the reader answers load/navigate in arrival order and hands
// render requests to a single render thread. A render request still waiting
// when a newer one arrives is answered "superseded" (latest wins).
class Connection {
 public:
  Connection(int fd, const ServerOptions& opts) : fd_(fd), opts_(opts), session_(opts.workers) {}

  void run() {
    std::thread renderer([this] { render_loop(); });
    try {
      while (auto msg = net::read_message(fd_)) {
        if (auto err = session_.accept_id(*msg)) {
          send(*err);
          continue;
        }
        if (msg->type == "render") {
          std::optional<protocol::Message> dropped;
          {
            std::lock_guard lock(mu_);
            if (pending_) dropped = std::move(pending_);
            pending_ = std::move(*msg);
            if (opts_.on_render_queued) opts_.on_render_queued(*pending_);
          }
          cv_.notify_one();
          if (dropped) send(Session::superseded(*dropped));
        } else if (msg->type == "load") {
          send(session_.handle_load(*msg));
        } else if (msg->type == "navigate") {
          send(session_.handle_navigate(*msg));
        } else {
          send(Session::error_reply(*msg, "unexpected message type '" + msg->type + "'"));
        }
      }
    } catch (const Error& e) {
      protocol::Message err;
      err.type = "error";
      err.status = "error";
      err.payload = e.what();
      try {
        send(err);
      } catch (const Error&) {
      }
    }
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    cv_.notify_one();
    renderer.join();
  }

 private:
  void render_loop() {
    for (;;) {
      protocol::Message req;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return pending_ || closing_; });
        if (!pending_) return;  // closing with nothing left to render
        req = std::move(*pending_);
        pending_.reset();
      }
      if (opts_.before_render) opts_.before_render(req);
      try {
        send(session_.handle_render_request(req));
      } catch (const Error&) {
        return;  // peer gone
      }
    }
  }

  void send(const protocol::Message& m) {
    const std::string bytes = protocol::encode(m);
    std::lock_guard lock(write_mu_);
    net::write_all(fd_, bytes);
  }

  int fd_;
  const ServerOptions& opts_;
  Session session_;
  std::mutex mu_, write_mu_;
  std::condition_variable cv_;
  std::optional<protocol::Message> pending_;
  bool closing_ = false;
};

class Server {
 public:
  explicit Server(ServerOptions opts) : opts_(std::move(opts)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw usage_error(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 8) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      throw usage_error("cannot listen on 127.0.0.1:" + std::to_string(opts_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~Server() {
    stop();
    for (auto& t : threads_) t.join();
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }

  // Accepts connections until stop(); each gets its own session and thread.
  // Call from one thread and join it before destroying the server.
  void serve() {
    for (;;) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        return;  // listening socket shut down
      }
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      if (stopped_) {
        ::close(fd);
        return;
      }
      connection_fds_.push_back(fd);
      threads_.emplace_back([this, fd] {
        Connection(fd, opts_).run();
        std::lock_guard done(mu_);
        std::erase(connection_fds_, fd);
        ::close(fd);
      });
    }
  }

  void stop() {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
  }

 private:
  ServerOptions opts_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::mutex mu_;
  bool stopped_ = false;
  std::vector<int> connection_fds_;
  std::list<std::thread> threads_;
};

// Minimal blocking client, used by tests and scripts.
class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (fd_ < 0 || ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      const std::string why = std::strerror(errno);
      if (fd_ >= 0) ::close(fd_);
      throw usage_error("cannot connect to 127.0.0.1:" + std::to_string(port) + ": " + why);
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~Client() { ::close(fd_); }
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const protocol::Message& m) { net::write_all(fd_, protocol::encode(m)); }
  void send_raw(std::string_view bytes) { net::write_all(fd_, bytes); }

  protocol::Message receive() {
    auto m = net::read_message(fd_);
    if (!m) throw protocol_error("server closed the connection");
    return *m;
  }

 private:
  int fd_ = -1;
};

}  // namespace cohofrac
