#pragma once

// Frame-service wire format. A message is
//   u32 big-endian header length | header | payload
// where the header is UTF-8 "key=value\n" lines with keys drawn, in this
// order, from kHeaderFields. `type` is mandatory and `payloadBytes` is always
// written last; every other field is optional.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "cohofrac/error.hpp"

namespace cohofrac::protocol {

inline constexpr std::array<std::string_view, 14> kHeaderFields{
    "type",     "id",          "width",    "height",      "fov",    "radius",       "maxSteps",
    "camTet",   "camMatrix",   "weightsName", "colormap", "supersample", "status", "payloadBytes"};

inline constexpr std::array<std::string_view, 7> kMessageTypes{
    "load", "navigate", "render", "summary", "camera", "frame", "error"};

inline constexpr std::array<std::string_view, 3> kStatuses{"ok", "superseded", "error"};

inline constexpr std::size_t kMaxHeaderBytes = 1 << 16;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t(1) << 30;

struct Message {
  std::string type;
  std::optional<std::uint64_t> id;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> fov;
  std::optional<double> radius;
  std::optional<int> max_steps;
  std::optional<int> cam_tet;
  std::optional<std::array<double, 16>> cam_matrix;  // row-major
  std::optional<std::string> weights_name;
  std::optional<std::string> colormap;
  std::optional<int> supersample;
  std::optional<std::string> status;
  std::string payload;

  bool operator==(const Message&) const = default;
};

namespace detail {

template <std::size_t N>
bool one_of(std::string_view v, const std::array<std::string_view, N>& set) {
  for (std::string_view s : set)
    if (s == v) return true;
  return false;
}

// Shortest form that reads back to the same double.
inline std::string format_double(double x) {
  if (!std::isfinite(x)) throw protocol_error("non-finite real in header");
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    double back = 0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == x) break;
  }
  return buf;
}

inline double parse_double(std::string_view key, std::string_view v) {
  double x = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty() || !std::isfinite(x))
    throw protocol_error("field " + std::string(key) + ": invalid real '" + std::string(v) + "'");
  return x;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int x = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty())
    throw protocol_error("field " + std::string(key) + ": invalid integer '" + std::string(v) + "'");
  return x;
}

inline void check_text(std::string_view key, std::string_view v) {
  if (v.empty()) throw protocol_error("field " + std::string(key) + " is empty");
  for (char c : v)
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f)
      throw protocol_error("field " + std::string(key) + " contains a control character");
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline std::uint32_t get_u32(std::string_view in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(in[i]);
  return v;
}

}  // namespace detail

inline std::string encode_header(const Message& m) {
  if (!detail::one_of(m.type, kMessageTypes)) throw protocol_error("unknown message type '" + m.type + "'");
  if (m.status && !detail::one_of(*m.status, kStatuses))
    throw protocol_error("unknown status '" + *m.status + "'");
  std::string h;
  auto line = [&h](std::string_view key, const std::string& value) {
    h.append(key).push_back('=');
    h.append(value).push_back('\n');
  };
  line("type", m.type);
  if (m.id) line("id", std::to_string(*m.id));
  if (m.width) line("width", std::to_string(*m.width));
  if (m.height) line("height", std::to_string(*m.height));
  if (m.fov) line("fov", detail::format_double(*m.fov));
  if (m.radius) line("radius", detail::format_double(*m.radius));
  if (m.max_steps) line("maxSteps", std::to_string(*m.max_steps));
  if (m.cam_tet) line("camTet", std::to_string(*m.cam_tet));
  if (m.cam_matrix) {
    std::string v;
    for (std::size_t i = 0; i < 16; ++i) v += (i ? "," : "") + detail::format_double((*m.cam_matrix)[i]);
    line("camMatrix", v);
  }
  if (m.weights_name) {
    detail::check_text("weightsName", *m.weights_name);
    line("weightsName", *m.weights_name);
  }
  if (m.colormap) {
    detail::check_text("colormap", *m.colormap);
    line("colormap", *m.colormap);
  }
  if (m.supersample) line("supersample", std::to_string(*m.supersample));
  if (m.status) line("status", *m.status);
  line("payloadBytes", std::to_string(m.payload.size()));
  return h;
}

inline std::string encode(const Message& m) {
  if (m.payload.size() > kMaxPayloadBytes) throw protocol_error("payload too large");
  const std::string h = encode_header(m);
  if (h.size() > kMaxHeaderBytes) throw protocol_error("header too large");
  std::string out;
  out.reserve(4 + h.size() + m.payload.size());
  detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out += m.payload;
  return out;
}

struct ParsedHeader {
  Message message;  // payload left empty
  std::uint64_t payload_bytes = 0;
};

inline ParsedHeader parse_header(std::string_view h) {
  ParsedHeader out;
  Message& m = out.message;
  std::size_t next_field = 0;
  bool have_type = false, have_length = false;
  while (!h.empty()) {
    const std::size_t nl = h.find('\n');
    if (nl == std::string_view::npos) throw protocol_error("header line is not newline-terminated");
    const std::string_view line = h.substr(0, nl);
    h.remove_prefix(nl + 1);
    if (have_length) throw protocol_error("payloadBytes must be the last header field");
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw protocol_error("header line without '='");
    const std::string_view key = line.substr(0, eq), value = line.substr(eq + 1);

    std::size_t index = next_field;
    while (index < kHeaderFields.size() && kHeaderFields[index] != key) ++index;
    if (index == kHeaderFields.size()) {
      for (std::string_view f : kHeaderFields)
        if (f == key) throw protocol_error("field " + std::string(key) + " is repeated or out of order");
      throw protocol_error("unknown header field '" + std::string(key) + "'");
    }
    if (index != 0 && !have_type) throw protocol_error("type must be the first header field");
    next_field = index + 1;

    if (key == "type") {
      if (!detail::one_of(value, kMessageTypes))
        throw protocol_error("unknown message type '" + std::string(value) + "'");
      m.type = value;
      have_type = true;
    } else if (key == "id") {
      m.id = detail::parse_int<std::uint64_t>(key, value);
    } else if (key == "width") {
      m.width = detail::parse_int<int>(key, value);
    } else if (key == "height") {
      m.height = detail::parse_int<int>(key, value);
    } else if (key == "fov") {
      m.fov = detail::parse_double(key, value);
    } else if (key == "radius") {
      m.radius = detail::parse_double(key, value);
    } else if (key == "maxSteps") {
      m.max_steps = detail::parse_int<int>(key, value);
    } else if (key == "camTet") {
      m.cam_tet = detail::parse_int<int>(key, value);
    } else if (key == "camMatrix") {
      std::array<double, 16> a{};
      std::string_view rest = value;
      for (std::size_t i = 0; i < 16; ++i) {
        const std::size_t comma = rest.find(',');
        if ((comma == std::string_view::npos) != (i == 15))
          throw protocol_error("camMatrix must hold exactly 16 comma-separated reals");
        a[i] = detail::parse_double(key, rest.substr(0, comma));
        if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
      }
      m.cam_matrix = a;
    } else if (key == "weightsName") {
      detail::check_text(key, value);
      m.weights_name = value;
    } else if (key == "colormap") {
      detail::check_text(key, value);
      m.colormap = value;
    } else if (key == "supersample") {
      m.supersample = detail::parse_int<int>(key, value);
    } else if (key == "status") {
      if (!detail::one_of(value, kStatuses)) throw protocol_error("unknown status '" + std::string(value) + "'");
      m.status = value;
    } else {
      out.payload_bytes = detail::parse_int<std::uint64_t>(key, value);
      if (out.payload_bytes > kMaxPayloadBytes) throw protocol_error("payload too large");
      have_length = true;
    }
  }
  if (!have_type) throw protocol_error("header has no type");
  if (!have_length) throw protocol_error("header has no payloadBytes");
  return out;
}

// Decodes one message from the front of `bytes`. Returns nothing if the
// buffer does not yet hold a complete message; `consumed` gets its length.
inline std::optional<Message> decode_prefix(std::string_view bytes, std::size_t& consumed) {
  consumed = 0;
  if (bytes.size() < 4) return std::nullopt;
  const std::uint32_t header_len = detail::get_u32(bytes);
  if (header_len > kMaxHeaderBytes) throw protocol_error("header too large");
  if (bytes.size() < 4 + std::size_t(header_len)) return std::nullopt;
  ParsedHeader ph = parse_header(bytes.substr(4, header_len));
  const std::size_t total = 4 + std::size_t(header_len) + ph.payload_bytes;
  if (bytes.size() < total) return std::nullopt;
  ph.message.payload = std::string(bytes.substr(4 + header_len, ph.payload_bytes));
  consumed = total;
  return std::move(ph.message);
}

// Decodes exactly one message occupying all of `bytes`.
inline Message decode(std::string_view bytes) {
  std::size_t used = 0;
  auto m = decode_prefix(bytes, used);
  if (!m) throw protocol_error("truncated message");
  if (used != bytes.size()) throw protocol_error("trailing bytes after message");
  return *m;
}

}  // namespace cohofrac::protocol
