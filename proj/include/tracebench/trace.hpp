// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Dialect-independent timeline model. Both Chrome-trace families (Kineto GPU,
// XLA TPU) normalize into per-rank event lists with step windows. All
// timestamps are integer nanoseconds after unit conversion; per-rank clocks
// are never assumed aligned across ranks.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracebench/intervals.hpp"

namespace tracebench {

enum class Dialect { KinetoGpu, XlaTpu };

inline const char* to_string(Dialect d) {
  return d == Dialect::KinetoGpu ? "kineto_gpu" : "xla_tpu";
}

enum class EventClass { Compute, Collective, MemTransfer, Marker, Other };

inline const char* to_string(EventClass k) {
  switch (k) {
    case EventClass::Compute: return "compute";
    case EventClass::Collective: return "collective";
    case EventClass::MemTransfer: return "mem_transfer";
    case EventClass::Marker: return "marker";
    default: return "other";
  }
}

enum class CollectiveKind {
  AllReduce,
  AllGather,
  ReduceScatter,
  AllToAll,
  Broadcast,
  SendRecv,
  Other,
};

inline const char* to_string(CollectiveKind k) {
  switch (k) {
    case CollectiveKind::AllReduce: return "allreduce";
    case CollectiveKind::AllGather: return "allgather";
    case CollectiveKind::ReduceScatter: return "reducescatter";
    case CollectiveKind::AllToAll: return "alltoall";
    case CollectiveKind::Broadcast: return "broadcast";
    case CollectiveKind::SendRecv: return "sendrecv";
    default: return "other";
  }
}

// Typed attribute bag. Only fields the metric tools consume are retained;
// everything else in an event's args is dropped during the streaming parse.
struct EventAttrs {
  std::optional<std::int64_t> bytes;
  std::optional<std::int64_t> element_count;
  std::optional<std::int64_t> element_size;
  std::optional<int> group_size;
  std::optional<CollectiveKind> collective;
  std::optional<double> occupancy_pct;
  std::optional<double> model_flops;
  std::optional<std::int64_t> raw_step_number;  // the N of ProfilerStep#N

  friend bool operator==(const EventAttrs&, const EventAttrs&) = default;
};

// Message size in bytes, from the explicit byte count when present, else
// element count x element size.
inline std::optional<std::int64_t> message_bytes(const EventAttrs& a) {
  if (a.bytes) return a.bytes;
  if (a.element_count && a.element_size) {
    return *a.element_count * *a.element_size;
  }
  return std::nullopt;
}

struct TraceEvent {
  int rank = 0;
  std::string stream;        // opaque lane id: GPU stream / TPU timeline
  std::string name;
  std::int64_t t_start = 0;  // ns, per-file clock
  std::int64_t duration = 0; // ns, >= 0
  EventClass klass = EventClass::Other;
  EventAttrs attrs;

  std::int64_t t_end() const noexcept { return t_start + duration; }
  Interval interval() const noexcept { return {t_start, t_end()}; }
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class StepKind { TrainStep, Prefill, DecodeStep };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::TrainStep: return "train_step";
    case StepKind::Prefill: return "prefill";
    default: return "decode_step";
  }
}

struct StepWindow {
  int index = 0;             // 0-based, order of appearance
  std::int64_t t_start = 0;  // ns
  std::int64_t t_end = 0;    // ns, exclusive
  StepKind kind = StepKind::TrainStep;

  std::int64_t duration() const noexcept { return t_end - t_start; }
  friend bool operator==(const StepWindow&, const StepWindow&) = default;
};

// Counts of recoverable oddities encountered while parsing one file.
struct ParseWarnings {
  std::size_t missing_timestamp = 0;   // event skipped
  std::size_t missing_duration = 0;    // duration defaulted to 0
  std::size_t unmatched_copy_pair = 0; // copy-start/done without its peer
  std::size_t host_events_skipped = 0; // XLA events with no device clock

  std::size_t total() const noexcept {
    return missing_timestamp + missing_duration + unmatched_copy_pair +
           host_events_skipped;
  }
};

struct RankTimeline {
  int rank = 0;
  std::string source;                   // originating file path, if any
  std::vector<TraceEvent> events;       // stable-sorted by t_start
  std::vector<StepWindow> step_windows; // sorted, non-overlapping
  ParseWarnings warnings;
};

struct NormalizedTrace {
  Dialect dialect = Dialect::KinetoGpu;
  std::vector<RankTimeline> ranks;
  std::string clock_unit_note;  // original unit and the conversion applied
};

enum class Phase { Training, Inference };

// How inference step windows map to Prefill/DecodeStep. By default the first
// window is the prefill pass and all later ones are decode steps; a card can
// opt out when the captured trace starts mid-decode.
enum class StepLabeling { FirstIsPrefill, AllDecode };

// Returns the rank's windows with kinds resolved for the workload phase.
// Training traces label every window TrainStep regardless of capture order.
inline std::vector<StepWindow> labeled_windows(const RankTimeline& rank,
                                               Phase phase,
                                               StepLabeling labeling =
                                                   StepLabeling::FirstIsPrefill) {
  std::vector<StepWindow> out = rank.step_windows;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (phase == Phase::Training) {
      out[i].kind = StepKind::TrainStep;
    } else if (i == 0 && labeling == StepLabeling::FirstIsPrefill) {
      out[i].kind = StepKind::Prefill;
    } else {
      out[i].kind = StepKind::DecodeStep;
    }
  }
  return out;
}

// Windows that count as engine iterations for step-time style metrics:
// TrainStep for training, DecodeStep for inference (prefill is its own
// phase, reported through ttft).
inline std::vector<StepWindow> iteration_windows(const RankTimeline& rank,
                                                 Phase phase,
                                                 StepLabeling labeling =
                                                     StepLabeling::FirstIsPrefill) {
  std::vector<StepWindow> all = labeled_windows(rank, phase, labeling);
  std::vector<StepWindow> out;
  const StepKind want =
      phase == Phase::Training ? StepKind::TrainStep : StepKind::DecodeStep;
  for (const StepWindow& w : all) {
    if (w.kind == want) out.push_back(w);
  }
  return out;
}

// Drops the first and last window to avoid warm-up and cool-down skew.
// Callers that need "inner" steps require at least three windows.
inline std::vector<StepWindow> inner_windows(std::vector<StepWindow> windows) {
  if (windows.size() < 3) return {};
  return {windows.begin() + 1, windows.end() - 1};
}

// Clips events of the requested classes to a step window, truncating partial
// overlaps at the window bounds. Events fully outside are dropped, as are
// clips that collapse to zero length.
inline std::vector<Interval> clip(std::span<const TraceEvent> events,
                                  const StepWindow& window,
                                  std::initializer_list<EventClass> klasses) {
  std::vector<Interval> out;
  for (const TraceEvent& ev : events) {
    bool wanted = false;
    for (EventClass k : klasses) wanted |= (ev.klass == k);
    if (!wanted) continue;
    const std::int64_t lo = std::max(ev.t_start, window.t_start);
    const std::int64_t hi = std::min(ev.t_end(), window.t_end);
    if (lo < hi) out.push_back({lo, hi});
  }
  return out;
}

}  // namespace tracebench
