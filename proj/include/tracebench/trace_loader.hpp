// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Multi-file trace loading. One rank per input file, rank index equal to the
// file's position in the lexicographically sorted path list. Files parse
// independently (in parallel when there is more than one) and the result is
// immutable afterwards.

#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "tracebench/errors.hpp"
#include "tracebench/parsers.hpp"

namespace tracebench {

// Sniffs the dialect from the first events: any device_offset_ps /
// device_duration_ps arg marks an XLA trace; otherwise Kineto. Stops after a
// bounded number of events so detection never reads a whole 10 GB file.
inline Dialect detect_dialect(std::istream& in) {
  bool saw_ps = false;
  bool saw_any = false;
  std::size_t scanned = 0;
  for_each_trace_event(in, [&](RawTraceEvent&& raw) {
    saw_any = true;
    if (raw.arg("device_offset_ps") != nullptr ||
        raw.arg("device_duration_ps") != nullptr) {
      saw_ps = true;
      return false;
    }
    return ++scanned < 4096;
  });
  if (!saw_any) {
    throw EmptyTraceError("trace contains no events to detect a dialect from");
  }
  return saw_ps ? Dialect::XlaTpu : Dialect::KinetoGpu;
}

inline Dialect detect_dialect_file(const std::string& path) {
  auto stream = open_trace_stream(path);
  return detect_dialect(*stream);
}

struct TraceLoadOptions {
  std::optional<Dialect> dialect;  // absent = auto-detect
  ClassificationConfig patterns = ClassificationConfig::defaults();
  bool parallel = true;
};

inline NormalizedTrace load_trace(std::vector<std::string> paths,
                                  const TraceLoadOptions& opts = {}) {
  if (paths.empty()) {
    throw ParseError("no trace files given");
  }
  std::sort(paths.begin(), paths.end());

  Dialect dialect;
  if (opts.dialect) {
    dialect = *opts.dialect;
  } else {
    dialect = detect_dialect_file(paths[0]);
    for (std::size_t i = 1; i < paths.size(); ++i) {
      const Dialect d = detect_dialect_file(paths[i]);
      if (d != dialect) {
        throw DialectMismatchError("trace dialect conflict: '" + paths[0] +
                                   "' is " + to_string(dialect) + " but '" +
                                   paths[i] + "' is " + to_string(d));
      }
    }
  }

  auto parse_one = [&](const std::string& path) {
    auto stream = open_trace_stream(path);
    return dialect == Dialect::KinetoGpu ? parse_kineto(*stream, opts.patterns)
                                         : parse_xla(*stream, opts.patterns);
  };

  std::vector<ParsedFragment> fragments(paths.size());
  if (opts.parallel && paths.size() > 1) {
    std::vector<std::future<ParsedFragment>> jobs;
    jobs.reserve(paths.size());
    for (const std::string& path : paths) {
      jobs.push_back(
          std::async(std::launch::async, [&parse_one, path] { return parse_one(path); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) fragments[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      fragments[i] = parse_one(paths[i]);
    }
  }

  NormalizedTrace trace;
  trace.dialect = dialect;
  trace.clock_unit_note =
      dialect == Dialect::KinetoGpu
          ? "kineto: ts/dur microseconds, x1000 to integer ns"
          : "xla: device_offset/duration picoseconds, /1000 to integer ns "
            "(round to nearest)";
  trace.ranks.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    RankTimeline rank;
    rank.rank = static_cast<int>(i);
    rank.source = paths[i];
    rank.events = std::move(fragments[i].events);
    rank.step_windows = std::move(fragments[i].windows);
    rank.warnings = fragments[i].warnings;
    for (TraceEvent& ev : rank.events) ev.rank = rank.rank;
    trace.ranks.push_back(std::move(rank));
  }
  return trace;
}

}  // namespace tracebench
