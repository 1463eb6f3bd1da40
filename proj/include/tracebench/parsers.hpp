// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Per-file parsers for the two Chrome-trace dialects.
//
// Kineto (GPU): complete events (ph "X") with wall-clock ts/dur in
// microseconds; iterations delimited by ProfilerStep#N spans; collectives
// appear as NCCL kernel names.
//
// XLA (TPU): device-side events carry device_offset_ps/device_duration_ps in
// picoseconds; collectives are HLO categories; DMA is encoded as paired
// copy-start.k / copy-done.k async events.
//
// Both produce integer-nanosecond timelines: exact x1000 for microseconds,
// round-to-nearest /1000 for picoseconds.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracebench/chrome_trace_reader.hpp"
#include "tracebench/errors.hpp"
#include "tracebench/patterns.hpp"
#include "tracebench/trace.hpp"

namespace tracebench {

struct ParsedFragment {
  std::vector<TraceEvent> events;
  std::vector<StepWindow> windows;
  ParseWarnings warnings;
};

namespace detail {

inline std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

// Populates the typed attr bag from an event's args. Key spellings vary
// across profiler versions, so each attr accepts a small alias list
// (matched case-insensitively).
inline EventAttrs attrs_from_args(const RawTraceEvent& raw) {
  static const std::vector<std::string> kBytesKeys = {
      "bytes", "msg size", "message size", "size in bytes"};
  static const std::vector<std::string> kCountKeys = {
      "in msg nelems", "msg nelems", "element count", "nelems", "elements"};
  static const std::vector<std::string> kElemSizeKeys = {
      "element size", "elem size", "element_size", "dtype size"};
  static const std::vector<std::string> kGroupKeys = {
      "group size", "group_size", "nranks", "world size", "num ranks"};
  static const std::vector<std::string> kOccupancyKeys = {
      "est. achieved occupancy %", "achieved occupancy %",
      "achieved occupancy", "occupancy"};

  EventAttrs attrs;
  for (const auto& [key, value] : raw.args) {
    const std::string k = to_lower(key);
    auto is_any = [&k](const std::vector<std::string>& names) {
      return std::find(names.begin(), names.end(), k) != names.end();
    };
    if (!attrs.bytes && is_any(kBytesKeys)) {
      attrs.bytes = value.as_int();
    } else if (!attrs.element_count && is_any(kCountKeys)) {
      attrs.element_count = value.as_int();
    } else if (!attrs.element_size && is_any(kElemSizeKeys)) {
      attrs.element_size = value.as_int();
    } else if (!attrs.group_size && is_any(kGroupKeys)) {
      if (auto v = value.as_int()) attrs.group_size = static_cast<int>(*v);
    } else if (!attrs.occupancy_pct && is_any(kOccupancyKeys)) {
      attrs.occupancy_pct = value.as_double();
    } else if (!attrs.model_flops && k == "model_flops") {
      attrs.model_flops = value.as_double();
    }
  }
  return attrs;
}

inline std::int64_t us_scalar_to_ns(const JsonScalar& v) {
  if (v.type == JsonScalar::Type::Int) return v.i * 1000;
  return static_cast<std::int64_t>(std::llround(*v.as_double() * 1000.0));
}

inline std::int64_t ps_to_ns(const JsonScalar& v) {
  if (v.type == JsonScalar::Type::Int) {
    const std::int64_t ps = v.i;
    return ps >= 0 ? (ps + 500) / 1000 : -((-ps + 500) / 1000);
  }
  return static_cast<std::int64_t>(std::llround(*v.as_double() / 1000.0));
}

// Orders windows by start time, assigns appearance indices, and enforces
// non-overlap by clamping a window's end to the next window's start.
inline void finalize_windows(std::vector<StepWindow>& windows) {
  std::stable_sort(windows.begin(), windows.end(),
                   [](const StepWindow& a, const StepWindow& b) {
                     return a.t_start < b.t_start;
                   });
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i].index = static_cast<int>(i);
    if (i + 1 < windows.size()) {
      windows[i].t_end = std::min(windows[i].t_end, windows[i + 1].t_start);
    }
  }
  std::erase_if(windows, [](const StepWindow& w) { return w.duration() <= 0; });
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i].index = static_cast<int>(i);
  }
}

inline void finalize_events(std::vector<TraceEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.t_start < b.t_start;
                   });
}

inline bool is_kernel_class(EventClass k) {
  return k == EventClass::Compute || k == EventClass::Collective ||
         k == EventClass::MemTransfer;
}

// "all-reduce.7" -> "all-reduce"; names without a numeric suffix pass
// through unchanged.
inline std::string hlo_name_stem(const std::string& name) {
  const auto dot = name.find_last_of('.');
  if (dot == std::string::npos || dot + 1 == name.size()) return name;
  for (std::size_t i = dot + 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  }
  return name.substr(0, dot);
}

inline std::string hlo_category(const RawTraceEvent& raw) {
  if (const JsonScalar* v = raw.arg("hlo_category")) return v->as_string();
  return hlo_name_stem(raw.name);
}

}  // namespace detail

// --- Kineto (GPU) ----------------------------------------------------------

inline ParsedFragment parse_kineto(std::istream& in,
                                   const ClassificationConfig& cfg =
                                       ClassificationConfig::defaults()) {
  ParsedFragment frag;
  std::size_t kernel_events = 0;

  for_each_trace_event(in, [&](RawTraceEvent&& raw) {
    if (raw.ph != "X") return true;
    if (!raw.ts || !raw.ts->is_number()) {
      ++frag.warnings.missing_timestamp;
      return true;
    }
    const std::int64_t start_ns = detail::us_scalar_to_ns(*raw.ts);
    std::int64_t dur_ns = 0;
    if (raw.dur && raw.dur->is_number()) {
      dur_ns = std::max<std::int64_t>(0, detail::us_scalar_to_ns(*raw.dur));
    } else {
      ++frag.warnings.missing_duration;
    }

    TraceEvent ev;
    ev.stream = raw.tid;
    ev.name = raw.name;
    ev.t_start = start_ns;
    ev.duration = dur_ns;
    ev.attrs = detail::attrs_from_args(raw);

    if (detail::starts_with(raw.name, cfg.gpu_step_prefix)) {
      ev.klass = EventClass::Marker;
      const std::string tail = raw.name.substr(cfg.gpu_step_prefix.size());
      char* end = nullptr;
      const long long n = std::strtoll(tail.c_str(), &end, 10);
      if (end != tail.c_str()) ev.attrs.raw_step_number = n;
      frag.windows.push_back(
          {0, start_ns, start_ns + dur_ns, StepKind::TrainStep});
    } else if (raw.cat == "kernel") {
      if (auto kind = cfg.match_gpu_collective(raw.name)) {
        ev.klass = EventClass::Collective;
        ev.attrs.collective = kind;
      } else if (cfg.match_mem_transfer(raw.name)) {
        ev.klass = EventClass::MemTransfer;
      } else {
        ev.klass = EventClass::Compute;
      }
    } else if (cfg.match_mem_transfer(raw.name)) {
      ev.klass = EventClass::MemTransfer;
    } else {
      ev.klass = EventClass::Other;
    }

    if (detail::is_kernel_class(ev.klass)) ++kernel_events;
    frag.events.push_back(std::move(ev));
    return true;
  });

  if (kernel_events == 0) {
    throw EmptyTraceError("no kernel events in Kineto trace");
  }
  detail::finalize_events(frag.events);
  detail::finalize_windows(frag.windows);
  return frag;
}

// --- XLA (TPU) --------------------------------------------------------------

inline ParsedFragment parse_xla(std::istream& in,
                                const ClassificationConfig& cfg =
                                    ClassificationConfig::defaults()) {
  ParsedFragment frag;
  std::size_t kernel_events = 0;

  struct PendingCopy {
    std::int64_t start_ns = 0;
    std::string stream;
    std::string name;
    EventAttrs attrs;
  };
  std::map<std::string, PendingCopy> copy_starts;
  std::map<std::string, std::int64_t> copy_dones;

  for_each_trace_event(in, [&](RawTraceEvent&& raw) {
    const JsonScalar* offset_ps = raw.arg("device_offset_ps");
    const JsonScalar* duration_ps = raw.arg("device_duration_ps");
    const bool is_step =
        raw.name.find(cfg.xla_step_marker) != std::string::npos;

    if (offset_ps == nullptr && !is_step) {
      // Host-side annotation with no device clock; not part of any device
      // timeline.
      ++frag.warnings.host_events_skipped;
      return true;
    }

    std::int64_t start_ns = 0;
    if (offset_ps != nullptr && offset_ps->is_number()) {
      start_ns = detail::ps_to_ns(*offset_ps);
    } else if (is_step && raw.ts && raw.ts->is_number()) {
      start_ns = detail::us_scalar_to_ns(*raw.ts);
    } else {
      ++frag.warnings.missing_timestamp;
      return true;
    }
    std::int64_t dur_ns = 0;
    if (duration_ps != nullptr && duration_ps->is_number()) {
      dur_ns = std::max<std::int64_t>(0, detail::ps_to_ns(*duration_ps));
    } else if (is_step && raw.dur && raw.dur->is_number()) {
      dur_ns = std::max<std::int64_t>(0, detail::us_scalar_to_ns(*raw.dur));
    } else {
      ++frag.warnings.missing_duration;
    }

    const std::string stem = detail::hlo_name_stem(raw.name);
    if (stem == "copy-start" || stem == "copy-done") {
      const std::string key =
          raw.name.size() > stem.size() ? raw.name.substr(stem.size()) : "";
      if (stem == "copy-start") {
        copy_starts[key] =
            {start_ns, raw.tid, raw.name, detail::attrs_from_args(raw)};
      } else {
        copy_dones[key] = start_ns;
      }
      return true;
    }

    TraceEvent ev;
    ev.stream = raw.tid;
    ev.name = raw.name;
    ev.t_start = start_ns;
    ev.duration = dur_ns;
    ev.attrs = detail::attrs_from_args(raw);
    if (const JsonScalar* flops = raw.arg("model_flops")) {
      ev.attrs.model_flops = flops->as_double();
    }

    const std::string category = detail::hlo_category(raw);
    if (is_step) {
      ev.klass = EventClass::Marker;
      frag.windows.push_back(
          {0, start_ns, start_ns + dur_ns, StepKind::TrainStep});
    } else if (auto kind = cfg.match_xla_collective(category)) {
      ev.klass = EventClass::Collective;
      ev.attrs.collective = kind;
    } else if (offset_ps != nullptr && duration_ps != nullptr &&
               !detail::starts_with(raw.name, "jit_") &&
               category != "dependency-wait" &&
               cfg.match_xla_compute(category)) {
      ev.klass = EventClass::Compute;
    } else {
      // Includes broadcast (a local data-layout op in HLO, not a network
      // collective), jit_* container spans, and dependency-wait barriers.
      ev.klass = EventClass::Other;
    }

    if (detail::is_kernel_class(ev.klass)) ++kernel_events;
    frag.events.push_back(std::move(ev));
    return true;
  });

  // Pair async DMA endpoints: one MemTransfer interval per matched key,
  // spanning the two device timestamps.
  for (auto& [key, start] : copy_starts) {
    auto done = copy_dones.find(key);
    if (done == copy_dones.end()) {
      ++frag.warnings.unmatched_copy_pair;
      continue;
    }
    if (done->second < start.start_ns) {
      ++frag.warnings.unmatched_copy_pair;
      copy_dones.erase(done);
      continue;
    }
    TraceEvent ev;
    ev.stream = start.stream;
    ev.name = start.name;
    ev.t_start = start.start_ns;
    ev.duration = done->second - start.start_ns;
    ev.klass = EventClass::MemTransfer;
    ev.attrs = start.attrs;
    frag.events.push_back(std::move(ev));
    ++kernel_events;
    copy_dones.erase(done);
  }
  frag.warnings.unmatched_copy_pair += copy_dones.size();

  if (kernel_events == 0) {
    throw EmptyTraceError("no device kernel events in XLA trace");
  }
  detail::finalize_events(frag.events);
  detail::finalize_windows(frag.windows);
  return frag;
}

}  // namespace tracebench
