// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Streaming reader for Chrome-trace JSON ("traceEvents" array, or a bare
// top-level array). Memory use is bounded per event: the document is consumed
// through nlohmann's SAX interface and no DOM is ever built, which keeps
// multi-gigabyte traces parseable. Gzip-compressed files are decompressed on
// the fly through zlib.

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <streambuf>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"

namespace tracebench {

// Scalar JSON value as delivered by the SAX layer. Integer inputs keep full
// 64-bit precision so microsecond timestamps convert to nanoseconds exactly.
struct JsonScalar {
  enum class Type { Null, Bool, Int, Double, Str };
  Type type = Type::Null;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;

  static JsonScalar of_bool(bool v) { return {Type::Bool, v, 0, 0.0, {}}; }
  static JsonScalar of_int(std::int64_t v) { return {Type::Int, false, v, 0.0, {}}; }
  static JsonScalar of_double(double v) { return {Type::Double, false, 0, v, {}}; }
  static JsonScalar of_string(std::string v) {
    return {Type::Str, false, 0, 0.0, std::move(v)};
  }

  bool is_number() const { return type == Type::Int || type == Type::Double; }

  std::optional<double> as_double() const {
    if (type == Type::Int) return static_cast<double>(i);
    if (type == Type::Double) return d;
    if (type == Type::Str) {  // numeric strings appear in some exporters
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end && *end == '\0' && end != s.c_str()) return v;
      return std::nullopt;
    }
    return std::nullopt;
  }

  std::optional<std::int64_t> as_int() const {
    if (type == Type::Int) return i;
    if (type == Type::Double) return static_cast<std::int64_t>(d);
    if (type == Type::Str) {
      char* end = nullptr;
      const long long v = std::strtoll(s.c_str(), &end, 10);
      if (end && *end == '\0' && end != s.c_str()) return v;
      return std::nullopt;
    }
    return std::nullopt;
  }

  std::string as_string() const {
    switch (type) {
      case Type::Str: return s;
      case Type::Int: return std::to_string(i);
      case Type::Double: return std::to_string(d);
      case Type::Bool: return b ? "true" : "false";
      default: return {};
    }
  }
};

// One element of the traceEvents array, flattened. Only args scalars one
// level deep are captured; nested structures are not needed by any metric.
struct RawTraceEvent {
  std::string name;
  std::string cat;
  std::string ph;
  std::string tid;
  std::optional<JsonScalar> ts;
  std::optional<JsonScalar> dur;
  std::vector<std::pair<std::string, JsonScalar>> args;

  const JsonScalar* arg(const std::string& key) const {
    for (const auto& [k, v] : args) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

namespace detail {

// std::streambuf over a zlib gzFile. gzread also passes uncompressed data
// through unchanged, so every input goes through this one path.
class GzStreamBuf : public std::streambuf {
 public:
  explicit GzStreamBuf(const std::string& path)
      : file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) {
      throw ParseError("cannot open trace file: " + path);
    }
    setg(buffer_, buffer_, buffer_);
  }
  ~GzStreamBuf() override {
    if (file_ != nullptr) gzclose(file_);
  }
  GzStreamBuf(const GzStreamBuf&) = delete;
  GzStreamBuf& operator=(const GzStreamBuf&) = delete;

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    const int n = gzread(file_, buffer_, sizeof(buffer_));
    if (n <= 0) return traits_type::eof();
    setg(buffer_, buffer_, buffer_ + n);
    return traits_type::to_int_type(*gptr());
  }

 private:
  gzFile file_;
  char buffer_[1 << 16];
};

class GzIStream : public std::istream {
 public:
  explicit GzIStream(const std::string& path)
      : std::istream(nullptr), buf_(path) {
    rdbuf(&buf_);
  }

 private:
  GzStreamBuf buf_;
};

// SAX handler that walks the document and hands each completed event object
// to the sink. Returning false from the sink stops the parse early.
class EventSax : public nlohmann::json::json_sax_t {
 public:
  using Sink = std::function<bool(RawTraceEvent&&)>;

  explicit EventSax(Sink sink) : sink_(std::move(sink)) {}

  bool stopped_early() const { return stopped_early_; }

  bool null() override { return scalar(JsonScalar{}); }
  bool boolean(bool v) override { return scalar(JsonScalar::of_bool(v)); }
  bool number_integer(number_integer_t v) override {
    return scalar(JsonScalar::of_int(v));
  }
  bool number_unsigned(number_unsigned_t v) override {
    if (v <= static_cast<number_unsigned_t>(
                 std::numeric_limits<std::int64_t>::max())) {
      return scalar(JsonScalar::of_int(static_cast<std::int64_t>(v)));
    }
    return scalar(JsonScalar::of_double(static_cast<double>(v)));
  }
  bool number_float(number_float_t v, const string_t&) override {
    return scalar(JsonScalar::of_double(v));
  }
  bool string(string_t& v) override {
    return scalar(JsonScalar::of_string(v));
  }
  bool binary(binary_t&) override { return true; }

  bool start_object(std::size_t) override {
    ++depth_;
    if (in_events_ && !in_event_ && depth_ == events_depth_ + 1) {
      in_event_ = true;
      event_depth_ = depth_;
      event_ = RawTraceEvent{};
    } else if (in_event_ && !in_args_ && depth_ == event_depth_ + 1 &&
               event_key_ == "args") {
      in_args_ = true;
      args_depth_ = depth_;
    }
    return true;
  }

  bool end_object() override {
    if (in_args_ && depth_ == args_depth_) {
      in_args_ = false;
    } else if (in_event_ && depth_ == event_depth_) {
      in_event_ = false;
      if (!sink_(std::move(event_))) {
        stopped_early_ = true;
        return false;
      }
    }
    --depth_;
    return true;
  }

  bool start_array(std::size_t) override {
    ++depth_;
    if (depth_ == 1) {
      // Bare-array trace format: the root is the event list itself.
      in_events_ = true;
      events_depth_ = depth_;
    } else if (!in_events_ && depth_ == 2 && root_key_ == "traceEvents") {
      in_events_ = true;
      events_depth_ = depth_;
    }
    return true;
  }

  bool end_array() override {
    if (in_events_ && depth_ == events_depth_) in_events_ = false;
    --depth_;
    return true;
  }

  bool key(string_t& k) override {
    if (depth_ == 1) {
      root_key_ = k;
    } else if (in_args_ && depth_ == args_depth_) {
      args_key_ = k;
    } else if (in_event_ && depth_ == event_depth_) {
      event_key_ = k;
    }
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::json::exception& ex) override {
    throw ParseError(ex.what(), position);
  }

 private:
  bool scalar(JsonScalar&& v) {
    if (in_args_ && depth_ == args_depth_) {
      event_.args.emplace_back(args_key_, std::move(v));
    } else if (in_event_ && depth_ == event_depth_) {
      if (event_key_ == "name") {
        event_.name = v.as_string();
      } else if (event_key_ == "cat") {
        event_.cat = v.as_string();
      } else if (event_key_ == "ph") {
        event_.ph = v.as_string();
      } else if (event_key_ == "tid") {
        event_.tid = v.as_string();
      } else if (event_key_ == "ts") {
        event_.ts = std::move(v);
      } else if (event_key_ == "dur") {
        event_.dur = std::move(v);
      }
    }
    return true;
  }

  Sink sink_;
  int depth_ = 0;
  bool in_events_ = false;
  int events_depth_ = -1;
  bool in_event_ = false;
  int event_depth_ = -1;
  bool in_args_ = false;
  int args_depth_ = -1;
  std::string root_key_;
  std::string event_key_;
  std::string args_key_;
  RawTraceEvent event_;
  bool stopped_early_ = false;
};

}  // namespace detail

// Streams every traceEvents element through `sink`. The sink returns false
// to stop early (used by dialect detection). Throws ParseError on malformed
// JSON with the byte offset into the (decompressed) document.
inline void for_each_trace_event(
    std::istream& in, const std::function<bool(RawTraceEvent&&)>& sink) {
  detail::EventSax handler(sink);
  const bool ok = nlohmann::json::sax_parse(in, &handler);
  if (!ok && !handler.stopped_early()) {
    throw ParseError("trace document is not valid JSON");
  }
}

inline std::unique_ptr<std::istream> open_trace_stream(
    const std::string& path) {
  return std::make_unique<detail::GzIStream>(path);
}

}  // namespace tracebench
