#pragma once

// Scripted checks shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <future>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cohofrac/frame_protocol.hpp"
#include "cohofrac/frame_service.hpp"
#include "support.hpp"

namespace scenarios {

using cohofrac::protocol::Message;

inline std::string random_token(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.=, /";
  std::uniform_int_distribution<std::size_t> len(1, 24), pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (char& c : s) c = alphabet[pick(rng)];
  return s;
}

inline double random_real(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return std::uniform_real_distribution<double>(-1, 1)(rng);
    case 1: return std::ldexp(std::uniform_real_distribution<double>(-1, 1)(rng), int(rng() % 600) - 300);
    case 2: return double(std::int64_t(rng() % 2001) - 1000);
    default: {
      // Arbitrary finite bit patterns.
      for (;;) {
        const std::uint64_t bits = rng();
        double x;
        std::memcpy(&x, &bits, sizeof x);
        if (std::isfinite(x)) return x;
      }
    }
  }
}

inline Message random_message(std::mt19937_64& rng) {
  using namespace cohofrac::protocol;
  Message m;
  m.type = kMessageTypes[rng() % kMessageTypes.size()];
  auto maybe = [&rng] { return rng() % 2 == 0; };
  std::uniform_int_distribution<int> small(-100000, 100000);
  if (maybe()) m.id = rng();
  if (maybe()) m.width = small(rng);
  if (maybe()) m.height = small(rng);
  if (maybe()) m.fov = random_real(rng);
  if (maybe()) m.radius = random_real(rng);
  if (maybe()) m.max_steps = small(rng);
  if (maybe()) m.cam_tet = small(rng);
  if (maybe()) {
    std::array<double, 16> a{};
    for (double& x : a) x = random_real(rng);
    m.cam_matrix = a;
  }
  if (maybe()) m.weights_name = random_token(rng);
  if (maybe()) m.colormap = random_token(rng);
  if (maybe()) m.supersample = small(rng);
  if (maybe()) m.status = kStatuses[rng() % kStatuses.size()];
  std::string payload(rng() % 64, '\0');
  for (char& c : payload) c = static_cast<char>(rng() & 0xff);
  m.payload = payload;
  return m;
}

// Encodes and decodes `count` random messages, also streaming them through
// decode_prefix in random-sized chunks. Returns the number of mismatches.
inline int fuzz_round_trips(int count, std::uint64_t seed) {
  using namespace cohofrac::protocol;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::vector<Message> sent;
  std::string stream;
  for (int i = 0; i < count; ++i) {
    const Message m = random_message(rng);
    const std::string bytes = encode(m);
    if (!(decode(bytes) == m) || encode(decode(bytes)) != bytes) ++failures;
    sent.push_back(m);
    stream += bytes;
  }
  std::size_t fed = 0, next = 0;
  std::string buffer;
  while (fed < stream.size()) {
    const std::size_t chunk = std::min<std::size_t>(1 + rng() % 300, stream.size() - fed);
    buffer.append(stream, fed, chunk);
    fed += chunk;
    for (;;) {
      std::size_t used = 0;
      auto m = decode_prefix(buffer, used);
      if (!m) break;
      if (next >= sent.size() || !(*m == sent[next])) ++failures;
      ++next;
      buffer.erase(0, used);
    }
  }
  if (next != sent.size() || !buffer.empty()) ++failures;
  return failures;
}

struct LatestWinsOutcome {
  std::vector<std::uint64_t> superseded;
  std::vector<std::uint64_t> rendered;  // in the order frames came back
  bool last_camera_matches = false;
  bool payload_sizes_ok = false;
};

// Loads the figure-eight, starts one render and holds it at the starting
// line until ten more render requests, each with its own camera, have been
// queued behind it. Only the last of those should be rendered next.
inline LatestWinsOutcome latest_wins(int updates = 10) {
  using namespace cohofrac;
  std::mutex mu;
  std::condition_variable cv;
  std::uint64_t last_queued = 0;
  std::promise<void> first_started;
  bool first = true;
  const std::uint64_t final_id = 2 + updates;

  ServerOptions opts;
  opts.port = 0;
  opts.on_render_queued = [&](const Message& m) {
    std::lock_guard lock(mu);
    last_queued = *m.id;
    cv.notify_all();
  };
  opts.before_render = [&](const Message&) {
    std::unique_lock lock(mu);
    if (!first) return;
    first = false;
    first_started.set_value();
    cv.wait(lock, [&] { return last_queued == final_id; });
  };
  Server server(opts);
  std::thread serving([&] { server.serve(); });

  LatestWinsOutcome out;
  {
    Client client(server.port());
    Message load;
    load.type = "load";
    load.id = 1;
    load.payload = testing_support::data_path("m004.tri");
    client.send(load);
    const Message summary = client.receive();

    const GeometricScene& scene = testing_support::loaded("m004").scene;
    Camera cam = default_camera(scene);
    Message render;
    render.type = "render";
    render.width = 32;
    render.height = 24;
    render.id = 2;
    client.send(render);
    first_started.get_future().wait();

    std::array<double, 16> last_matrix{};
    for (int k = 0; k < updates; ++k) {
      cam = move_camera(scene, cam, Eigen::Vector3d(0.01, 0.0, 0.03), Eigen::Vector3d(0.0, 0.02, 0.0));
      Message update;
      update.type = "render";
      update.id = 3 + k;
      update.cam_tet = cam.tet;
      update.cam_matrix = to_row_major(cam.frame);
      last_matrix = *update.cam_matrix;
      client.send(update);
    }
    out.payload_sizes_ok = summary.type == "summary";
    for (int k = 0; k < updates + 1; ++k) {
      const Message reply = client.receive();
      if (reply.type == "frame" && reply.status == "superseded") {
        out.superseded.push_back(*reply.id);
      } else if (reply.type == "frame" && reply.status == "ok") {
        out.rendered.push_back(*reply.id);
        out.payload_sizes_ok = out.payload_sizes_ok && reply.payload.size() == 32u * 24u * 3u;
        if (*reply.id == final_id)
          out.last_camera_matches = reply.cam_matrix == last_matrix && reply.cam_tet == cam.tet;
      }
    }
  }
  server.stop();
  serving.join();
  return out;
}

}  // namespace scenarios
