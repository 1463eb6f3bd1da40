// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// The metric toolkit: every tool is a pure function from (workload card,
// normalized trace) to a scalar, registered with an applicability predicate
// so the suite can route and skip without try/fail. Metrics that combine
// ranks aggregate per rank first and never compare raw timestamps across
// files, which keeps every result invariant under per-rank clock offsets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/intervals.hpp"
#include "tracebench/parsers.hpp"
#include "tracebench/patterns.hpp"
#include "tracebench/trace.hpp"
#include "tracebench/workload_card.hpp"

namespace tracebench {

enum class Direction { HigherBetter, LowerBetter };

inline const char* to_string(Direction d) {
  return d == Direction::HigherBetter ? "higher_better" : "lower_better";
}

struct MetricResult {
  std::string key;
  double value = 0.0;
  std::string unit;
  Direction direction = Direction::LowerBetter;
  std::map<int, double> per_rank;  // optional rank breakdown
  std::string notes;               // provenance of constants used
};

struct SkippedTool {
  std::string key;
  std::string reason;
};

struct PerformanceProfile {
  std::string workload_card_ref;
  std::string dialect;
  std::vector<MetricResult> entries;
  std::vector<SkippedTool> skipped;

  const MetricResult* find(const std::string& key) const {
    for (const MetricResult& m : entries) {
      if (m.key == key) return &m;
    }
    return nullptr;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    doc["workload_card_ref"] = workload_card_ref;
    doc["dialect"] = dialect;
    doc["metrics"] = nlohmann::ordered_json::array();
    for (const MetricResult& m : entries) {
      nlohmann::ordered_json entry;
      entry["key"] = m.key;
      entry["value"] = m.value;
      entry["unit"] = m.unit;
      entry["direction"] = to_string(m.direction);
      if (!m.per_rank.empty()) {
        nlohmann::ordered_json pr;
        for (const auto& [rank, v] : m.per_rank) {
          pr[std::to_string(rank)] = v;
        }
        entry["per_rank"] = std::move(pr);
      }
      if (!m.notes.empty()) entry["notes"] = m.notes;
      doc["metrics"].push_back(std::move(entry));
    }
    doc["skipped"] = nlohmann::ordered_json::array();
    for (const SkippedTool& s : skipped) {
      doc["skipped"].push_back({{"key", s.key}, {"reason", s.reason}});
    }
    return doc;
  }

  static PerformanceProfile from_json(const nlohmann::json& doc) {
    PerformanceProfile p;
    p.workload_card_ref = doc.value("workload_card_ref", "");
    p.dialect = doc.value("dialect", "");
    for (const auto& entry : doc.at("metrics")) {
      MetricResult m;
      m.key = entry.at("key").get<std::string>();
      m.value = entry.at("value").get<double>();
      m.unit = entry.value("unit", "");
      m.direction = entry.value("direction", "") == "higher_better"
                        ? Direction::HigherBetter
                        : Direction::LowerBetter;
      if (entry.contains("per_rank")) {
        for (const auto& [rank, v] : entry.at("per_rank").items()) {
          m.per_rank[std::stoi(rank)] = v.get<double>();
        }
      }
      m.notes = entry.value("notes", "");
      p.entries.push_back(std::move(m));
    }
    if (doc.contains("skipped")) {
      for (const auto& s : doc.at("skipped")) {
        p.skipped.push_back({s.at("key").get<std::string>(),
                             s.at("reason").get<std::string>()});
      }
    }
    return p;
  }
};

struct MetricOptions {
  bool drop_edge_steps = false;  // avg_step_time only; overlap metrics always drop
};

struct ToolContext {
  const WorkloadCard& card;
  const NormalizedTrace& trace;
  const ClassificationConfig& patterns;
  const PeakFlopsTable& peaks;
  MetricOptions options;
};

// --- shared helpers ----------------------------------------------------------

namespace metric_detail {

constexpr double kNsPerSecond = 1e9;
constexpr double kBytesPerGB = 1e9;  // decimal GB throughout

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

// Even-length medians take the lower of the two central values so results
// stay deterministic.
inline double lower_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : xs[n / 2 - 1];
}

inline IntervalSet kernel_union(const RankTimeline& rank) {
  std::vector<Interval> raw;
  for (const TraceEvent& ev : rank.events) {
    if (detail::is_kernel_class(ev.klass)) raw.push_back(ev.interval());
  }
  return IntervalSet::union_of(std::move(raw));
}

inline IntervalSet class_union(const RankTimeline& rank, EventClass klass) {
  std::vector<Interval> raw;
  for (const TraceEvent& ev : rank.events) {
    if (ev.klass == klass) raw.push_back(ev.interval());
  }
  return IntervalSet::union_of(std::move(raw));
}

inline std::vector<StepWindow> rank_iteration_windows(const ToolContext& ctx,
                                                      const RankTimeline& rank) {
  return iteration_windows(rank, ctx.card.phase, ctx.card.effective_labeling());
}

}  // namespace metric_detail

// Per-step communication decomposition. Integer nanoseconds throughout, and
// comm_union == overlap + exposed holds exactly (it is checked by tests as a
// dual-route identity: intersection and subtraction are independent sweeps).
struct StepCommStats {
  std::int64_t comm_union_ns = 0;
  std::int64_t overlap_ns = 0;
  std::int64_t exposed_ns = 0;
};

inline StepCommStats step_comm_stats(std::span<const TraceEvent> events,
                                     const StepWindow& window) {
  const IntervalSet comm =
      IntervalSet::union_of(clip(events, window, {EventClass::Collective}));
  const IntervalSet comp =
      IntervalSet::union_of(clip(events, window, {EventClass::Compute}));
  StepCommStats out;
  out.comm_union_ns = comm.length();
  out.overlap_ns = intersect_len(comm, comp);
  out.exposed_ns = subtract_len(comm, comp);
  return out;
}

// --- model execution ---------------------------------------------------------

inline MetricResult avg_step_time(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"avg_step_time", 0.0, "s", Direction::LowerBetter, {}, {}};
  std::vector<double> rank_means;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    std::vector<StepWindow> windows = rank_iteration_windows(ctx, rank);
    if (ctx.options.drop_edge_steps && windows.size() >= 3) {
      windows = inner_windows(std::move(windows));
    }
    if (windows.empty()) {
      throw ToolError("NoStepWindows",
                      "rank " + std::to_string(rank.rank) +
                          " has no iteration windows");
    }
    double total = 0;
    for (const StepWindow& w : windows) total += static_cast<double>(w.duration());
    const double v = total / static_cast<double>(windows.size()) / kNsPerSecond;
    m.per_rank[rank.rank] = v;
    rank_means.push_back(v);
  }
  m.value = mean(rank_means);
  return m;
}

// Per-token FLOP estimate from the model architecture. Exposed separately so
// the arithmetic is testable on degenerate symbol values that a validated
// card would reject.
inline double per_token_flops(double active_params, double embedding_params,
                              double layers, double head_dim, double heads,
                              double seq_len, Phase phase) {
  const double attention = layers * head_dim * heads * seq_len;
  return phase == Phase::Inference
             ? 2.0 * (active_params - embedding_params) + 4.0 * attention
             : 6.0 * (active_params - embedding_params) + 12.0 * attention;
}

inline double mfu_percent(double token_flops, double batch_size, double seq_len,
                          double step_time_s, double peak_flops,
                          double device_count) {
  const double observed = token_flops * batch_size * seq_len / step_time_s;
  return observed / (peak_flops * device_count) * 100.0;
}

inline MetricResult mfu(const ToolContext& ctx) {
  using namespace metric_detail;
  const auto found = ctx.peaks.lookup(ctx.card.xpu_model);
  if (!found) {
    throw ToolError("MissingPeakSpec",
                    "no peak FLOP/s entry for hardware model '" +
                        ctx.card.xpu_model + "'");
  }
  const double peak = *found;

  MetricResult m{"mfu", 0.0, "%", Direction::HigherBetter, {}, {}};
  char notes[160];
  std::snprintf(notes, sizeof(notes), "peak=%g FLOP/s (%s) x %lld device(s)",
                peak, ctx.card.xpu_model.c_str(),
                static_cast<long long>(ctx.card.total_count));
  m.notes = notes;

  if (ctx.trace.dialect == Dialect::KinetoGpu) {
    auto require = [&](const std::optional<std::int64_t>& v,
                       const char* field) -> double {
      if (!v) {
        throw ToolError("MissingArchField",
                        std::string("workload.model.model_arch.") + field);
      }
      return static_cast<double>(*v);
    };
    const double total = require(ctx.card.num_params, "num_params");
    const double active = ctx.card.num_params_active
                              ? static_cast<double>(*ctx.card.num_params_active)
                              : total;
    const double embedding =
        require(ctx.card.num_params_embedding, "num_params_embedding");
    const double layers = require(ctx.card.num_layers, "num_layers");
    const double heads = require(ctx.card.num_heads, "num_heads");
    const double head_dim = require(ctx.card.head_dim, "head_dim");

    const double step_s = avg_step_time(ctx).value;
    const double token_flops =
        per_token_flops(active, embedding, layers, head_dim, heads,
                        static_cast<double>(ctx.card.seq_len), ctx.card.phase);
    m.value = mfu_percent(token_flops, static_cast<double>(ctx.card.batch_size),
                          static_cast<double>(ctx.card.seq_len), step_s, peak,
                          static_cast<double>(ctx.card.total_count));
    return m;
  }

  // XLA backend: device-reported model_flops summed per file, divided by the
  // unioned active duration of the events carrying them. Each file already
  // aggregates all chips, so rank results are averaged rather than summed.
  std::vector<double> rank_values;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    double flops_sum = 0;
    std::vector<Interval> active;
    for (const TraceEvent& ev : rank.events) {
      if (ev.attrs.model_flops && *ev.attrs.model_flops > 0) {
        flops_sum += *ev.attrs.model_flops;
        active.push_back(ev.interval());
      }
    }
    if (active.empty()) continue;
    const double active_s =
        static_cast<double>(IntervalSet::union_of(std::move(active)).length()) /
        kNsPerSecond;
    if (active_s <= 0) continue;
    const double rate = flops_sum / active_s;
    const double v =
        rate / (peak * static_cast<double>(ctx.card.total_count)) * 100.0;
    m.per_rank[rank.rank] = v;
    rank_values.push_back(v);
  }
  if (rank_values.empty()) {
    throw ToolError("NoFlopsEvents",
                    "no positive model_flops values in any rank");
  }
  m.value = mean(rank_values);
  return m;
}

inline MetricResult ttft(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"ttft", 0.0, "s", Direction::LowerBetter, {}, {}};
  std::vector<double> prefills;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    const auto windows = labeled_windows(rank, ctx.card.phase,
                                         ctx.card.effective_labeling());
    const auto it = std::find_if(windows.begin(), windows.end(),
                                 [](const StepWindow& w) {
                                   return w.kind == StepKind::Prefill;
                                 });
    if (it == windows.end()) {
      throw ToolError("MissingPrefill",
                      "rank " + std::to_string(rank.rank) +
                          " has no prefill window");
    }
    const double v = static_cast<double>(it->duration()) / kNsPerSecond;
    m.per_rank[rank.rank] = v;
    prefills.push_back(v);
  }
  m.value = mean(prefills);
  return m;
}

inline MetricResult tpot(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"tpot", 0.0, "s", Direction::LowerBetter, {}, {}};
  std::vector<double> rank_means;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    double total = 0;
    int n = 0;
    for (const StepWindow& w : labeled_windows(rank, ctx.card.phase,
                                               ctx.card.effective_labeling())) {
      if (w.kind == StepKind::DecodeStep) {
        total += static_cast<double>(w.duration());
        ++n;
      }
    }
    if (n == 0) {
      throw ToolError("MissingDecode", "rank " + std::to_string(rank.rank) +
                                           " has no decode windows");
    }
    const double v = total / n / kNsPerSecond;
    m.per_rank[rank.rank] = v;
    rank_means.push_back(v);
  }
  m.value = mean(rank_means);
  return m;
}

// --- compute -----------------------------------------------------------------

inline MetricResult mean_sm_coverage(const ToolContext& ctx) {
  MetricResult m{"mean_sm_coverage", 0.0, "%", Direction::HigherBetter, {}, {}};
  double weighted = 0;
  double total = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (!detail::is_kernel_class(ev.klass) || !ev.attrs.occupancy_pct) continue;
      weighted += *ev.attrs.occupancy_pct * static_cast<double>(ev.duration);
      total += static_cast<double>(ev.duration);
    }
  }
  if (total <= 0) {
    throw ToolError("NotApplicable", "no occupancy data in trace");
  }
  m.value = weighted / total;
  return m;
}

inline MetricResult dominant_kernel_concentration(const ToolContext& ctx) {
  MetricResult m{"dominant_kernel_concentration", 0.0, "%",
                 Direction::LowerBetter, {}, {}};
  std::map<std::string, std::int64_t> groups;  // sorted: ties break to the
                                               // lexicographically smallest
  std::int64_t total = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (!detail::is_kernel_class(ev.klass)) continue;
      const std::string key = ctx.trace.dialect == Dialect::KinetoGpu
                                  ? ev.name
                                  : detail::hlo_name_stem(ev.name);
      groups[key] += ev.duration;
      total += ev.duration;
    }
  }
  if (total <= 0) throw ToolError("NoKernelEvents");
  std::string dominant;
  std::int64_t best = -1;
  for (const auto& [key, dur] : groups) {
    if (dur > best) {
      best = dur;
      dominant = key;
    }
  }
  m.value = 100.0 * static_cast<double>(best) / static_cast<double>(total);
  m.notes = "dominant=" + dominant;
  return m;
}

namespace metric_detail {

inline MetricResult bound_fraction(const ToolContext& ctx, const char* key,
                                   Direction dir,
                                   const std::function<bool(double, std::int64_t)>& pred) {
  MetricResult m{key, 0.0, "%", dir, {}, {}};
  std::int64_t num = 0;
  std::int64_t den = 0;
  std::size_t without_occupancy = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (!detail::is_kernel_class(ev.klass)) continue;
      if (!ev.attrs.occupancy_pct) {
        ++without_occupancy;
        continue;
      }
      den += ev.duration;
      if (pred(*ev.attrs.occupancy_pct, ev.duration)) num += ev.duration;
    }
  }
  if (den <= 0) {
    throw ToolError("NotApplicable", "no occupancy data in trace");
  }
  m.value = 100.0 * static_cast<double>(num) / static_cast<double>(den);
  if (without_occupancy > 0) {
    m.notes = std::to_string(without_occupancy) +
              " kernel(s) without occupancy excluded";
  }
  return m;
}

}  // namespace metric_detail

inline MetricResult compute_bound_fraction(const ToolContext& ctx) {
  // SM coverage > 70% and duration > 10 us.
  constexpr std::int64_t kMinDurationNs = 10'000;
  return metric_detail::bound_fraction(
      ctx, "compute_bound_fraction", Direction::HigherBetter,
      [](double occ, std::int64_t dur) {
        return occ > 70.0 && dur > kMinDurationNs;
      });
}

inline MetricResult memory_bound_fraction(const ToolContext& ctx) {
  return metric_detail::bound_fraction(
      ctx, "memory_bound_fraction", Direction::LowerBetter,
      [](double occ, std::int64_t) { return occ < 50.0; });
}

inline MetricResult moe_fraction(const ToolContext& ctx) {
  MetricResult m{"moe_fraction", 0.0, "%", Direction::LowerBetter, {}, {}};
  std::int64_t num = 0;
  std::int64_t den = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (!detail::is_kernel_class(ev.klass)) continue;
      den += ev.duration;
      if (ctx.patterns.match_moe(ev.name)) num += ev.duration;
    }
  }
  if (den <= 0) throw ToolError("NoKernelEvents");
  m.value = 100.0 * static_cast<double>(num) / static_cast<double>(den);
  m.notes = "pattern table is a non-authoritative default; override with "
            "--patterns";
  return m;
}

// --- memory ------------------------------------------------------------------

inline MetricResult average_memory_bandwidth(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"average_memory_bandwidth", 0.0, "GB/s",
                 Direction::HigherBetter, {}, {}};
  double total_bytes = 0;
  double total_ns = 0;
  std::size_t unsized = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (ev.klass != EventClass::MemTransfer) continue;
      const auto bytes = message_bytes(ev.attrs);
      if (!bytes || ev.duration <= 0) {
        ++unsized;
        continue;
      }
      total_bytes += static_cast<double>(*bytes);
      total_ns += static_cast<double>(ev.duration);
    }
  }
  if (total_ns <= 0) {
    throw ToolError("NoSizedTransfers",
                    "no memory transfers carry a byte count");
  }
  m.value = total_bytes / (total_ns / kNsPerSecond) / kBytesPerGB;
  if (unsized > 0) {
    m.notes = std::to_string(unsized) + " transfer(s) without sizes excluded";
  }
  return m;
}

inline MetricResult memory_transfer_overhead(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"memory_transfer_overhead", 0.0, "%", Direction::LowerBetter,
                 {}, {}};
  // Numerators and denominators are summed across ranks before dividing;
  // per-rank clocks never mix.
  std::int64_t numerator = 0;
  std::int64_t denominator = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    const IntervalSet transfers = class_union(rank, EventClass::MemTransfer);
    const IntervalSet compute = class_union(rank, EventClass::Compute);
    numerator += subtract_len(transfers, compute);

    if (ctx.trace.dialect == Dialect::KinetoGpu) {
      // Kernel-activity span [min ts, max(ts+dur)] for this rank.
      std::int64_t lo = std::numeric_limits<std::int64_t>::max();
      std::int64_t hi = std::numeric_limits<std::int64_t>::min();
      for (const TraceEvent& ev : rank.events) {
        if (!detail::is_kernel_class(ev.klass)) continue;
        lo = std::min(lo, ev.t_start);
        hi = std::max(hi, ev.t_end());
      }
      if (hi > lo) denominator += hi - lo;
    } else {
      // Total step duration for this rank.
      for (const StepWindow& w : rank.step_windows) denominator += w.duration();
    }
  }
  if (denominator <= 0) throw ToolError("ZeroDenominator");
  m.value =
      100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
  return m;
}

// --- communication -----------------------------------------------------------

inline MetricResult communication_fraction(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"communication_fraction", 0.0, "%", Direction::LowerBetter,
                 {}, {}};
  std::vector<double> rank_values;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    const std::int64_t all = kernel_union(rank).length();
    if (all <= 0) continue;
    const std::int64_t comm = class_union(rank, EventClass::Collective).length();
    const double v = 100.0 * static_cast<double>(comm) / static_cast<double>(all);
    m.per_rank[rank.rank] = v;
    rank_values.push_back(v);
  }
  if (rank_values.empty()) throw ToolError("NoKernelEvents");
  m.value = mean(rank_values);
  return m;
}

namespace metric_detail {

// Inner iteration windows for the per-step communication metrics; requires
// at least three windows per rank so warm-up and cool-down steps never skew
// the result.
inline std::vector<StepWindow> required_inner_windows(const ToolContext& ctx,
                                                      const RankTimeline& rank) {
  const std::vector<StepWindow> windows = rank_iteration_windows(ctx, rank);
  if (windows.size() < 3) {
    throw ToolError("TooFewSteps",
                    "rank " + std::to_string(rank.rank) + " has " +
                        std::to_string(windows.size()) +
                        " iteration windows; at least 3 required");
  }
  return inner_windows(windows);
}

}  // namespace metric_detail

inline MetricResult compute_comm_overlap(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"compute_comm_overlap", 0.0, "%", Direction::HigherBetter,
                 {}, {}};
  std::vector<double> rank_values;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    double sum = 0;
    int steps_with_comm = 0;
    for (const StepWindow& w : required_inner_windows(ctx, rank)) {
      const StepCommStats stats = step_comm_stats(rank.events, w);
      if (stats.comm_union_ns <= 0) continue;  // comm-free step
      sum += 100.0 * static_cast<double>(stats.overlap_ns) /
             static_cast<double>(stats.comm_union_ns);
      ++steps_with_comm;
    }
    if (steps_with_comm == 0) continue;
    const double v = sum / steps_with_comm;
    m.per_rank[rank.rank] = v;
    rank_values.push_back(v);
  }
  if (rank_values.empty()) throw ToolError("AllStepsCommFree");
  m.value = mean(rank_values);
  return m;
}

inline MetricResult total_communication_time(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"total_communication_time", 0.0, "s", Direction::LowerBetter,
                 {}, {}};
  std::vector<double> rank_values;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    const std::vector<StepWindow> inner = required_inner_windows(ctx, rank);
    double exposed_total = 0;
    for (const StepWindow& w : inner) {
      exposed_total +=
          static_cast<double>(step_comm_stats(rank.events, w).exposed_ns);
    }
    const double v = exposed_total / static_cast<double>(inner.size()) /
                     kNsPerSecond;
    m.per_rank[rank.rank] = v;
    rank_values.push_back(v);
  }
  m.value = mean(rank_values);
  return m;
}

inline MetricResult load_imbalance_ratio(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"load_imbalance_ratio", 0.0, "ratio", Direction::LowerBetter,
                 {}, {}};
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    const std::int64_t active = kernel_union(rank).length();
    m.per_rank[rank.rank] = static_cast<double>(active) / kNsPerSecond;
    lo = std::min(lo, active);
    hi = std::max(hi, active);
  }
  if (lo <= 0) throw ToolError("ZeroActiveRank");
  m.value = static_cast<double>(hi) / static_cast<double>(lo);
  return m;
}

inline MetricResult straggler(const ToolContext& ctx) {
  using namespace metric_detail;
  MetricResult m{"straggler", 0.0, "ratio", Direction::LowerBetter, {}, {}};
  // Collectives are matched across ranks by (kind, per-kind occurrence
  // index); mismatched counts truncate to the shortest rank.
  std::map<CollectiveKind, std::vector<std::vector<std::int64_t>>> durations;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    std::map<CollectiveKind, std::vector<std::int64_t>> per_kind;
    for (const TraceEvent& ev : rank.events) {
      if (ev.klass != EventClass::Collective) continue;
      per_kind[ev.attrs.collective.value_or(CollectiveKind::Other)].push_back(
          ev.duration);
    }
    for (auto& [kind, durs] : per_kind) {
      durations[kind].push_back(std::move(durs));
    }
  }
  std::vector<double> delays;
  bool truncated = false;
  for (const auto& [kind, ranks] : durations) {
    if (ranks.size() < ctx.trace.ranks.size()) continue;  // not on all ranks
    std::size_t matched = std::numeric_limits<std::size_t>::max();
    for (const auto& durs : ranks) matched = std::min(matched, durs.size());
    for (const auto& durs : ranks) truncated |= durs.size() != matched;
    for (std::size_t i = 0; i < matched; ++i) {
      std::int64_t lo = std::numeric_limits<std::int64_t>::max();
      std::int64_t hi = 0;
      for (const auto& durs : ranks) {
        lo = std::min(lo, durs[i]);
        hi = std::max(hi, durs[i]);
      }
      delays.push_back(hi > 0 ? static_cast<double>(hi - lo) /
                                    static_cast<double>(hi)
                              : 0.0);
    }
  }
  if (delays.empty()) throw ToolError("NoMatchedCollectives");
  m.value = mean(delays);
  if (truncated) {
    m.notes = "collective counts differ across ranks; matched instances "
              "truncated to the shortest rank";
  }
  return m;
}

// Ring-algorithm bus-bandwidth factor: converts message bytes into the
// traffic actually crossing the busiest link.
inline double collective_bw_factor(CollectiveKind kind, int group_size) {
  const double n = static_cast<double>(group_size);
  switch (kind) {
    case CollectiveKind::AllReduce:
      return 2.0 * (n - 1.0) / n;
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
      return (n - 1.0) / n;
    default:
      return 1.0;  // AllToAll and the rest carry no algorithm factor here
  }
}

inline MetricResult collective_bandwidth(const ToolContext& ctx,
                                         CollectiveKind kind) {
  using namespace metric_detail;
  MetricResult m{std::string("bw_") + to_string(kind), 0.0, "GB/s",
                 Direction::HigherBetter, {}, {}};
  std::vector<double> values;
  std::size_t skipped = 0;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    for (const TraceEvent& ev : rank.events) {
      if (ev.klass != EventClass::Collective ||
          ev.attrs.collective != kind) {
        continue;
      }
      const auto bytes = message_bytes(ev.attrs);
      if (!bytes || !ev.attrs.group_size || ev.duration <= 0) {
        ++skipped;
        continue;
      }
      const double factor = collective_bw_factor(kind, *ev.attrs.group_size);
      const double seconds = static_cast<double>(ev.duration) / kNsPerSecond;
      values.push_back(static_cast<double>(*bytes) * factor / seconds /
                       kBytesPerGB);
    }
  }
  if (values.empty()) {
    throw ToolError("NoSizedCollectives", to_string(kind));
  }
  m.value = lower_median(std::move(values));
  if (skipped > 0) {
    m.notes = std::to_string(skipped) +
              " event(s) without size/group/duration excluded";
  }
  return m;
}

// Mean bytes per inner step by collective kind. Events are assigned to the
// window containing their start. With fewer than three windows there is no
// inner region to cut, so all windows count.
inline std::vector<MetricResult> collective_traffic_volume(const ToolContext& ctx) {
  using namespace metric_detail;
  static const CollectiveKind kKinds[] = {
      CollectiveKind::AllReduce,     CollectiveKind::AllGather,
      CollectiveKind::ReduceScatter, CollectiveKind::AllToAll,
      CollectiveKind::Broadcast,     CollectiveKind::SendRecv,
      CollectiveKind::Other,
  };
  std::map<CollectiveKind, std::map<int, double>> per_kind_rank;
  bool any_windows = false;
  for (const RankTimeline& rank : ctx.trace.ranks) {
    std::vector<StepWindow> windows = rank_iteration_windows(ctx, rank);
    if (windows.size() >= 3) windows = inner_windows(std::move(windows));
    if (windows.empty()) continue;
    any_windows = true;
    std::map<CollectiveKind, double> bytes_total;
    for (const TraceEvent& ev : rank.events) {
      if (ev.klass != EventClass::Collective) continue;
      const auto bytes = message_bytes(ev.attrs);
      if (!bytes) continue;
      for (const StepWindow& w : windows) {
        if (ev.t_start >= w.t_start && ev.t_start < w.t_end) {
          bytes_total[ev.attrs.collective.value_or(CollectiveKind::Other)] +=
              static_cast<double>(*bytes);
          break;
        }
      }
    }
    for (const auto& [kind, total] : bytes_total) {
      per_kind_rank[kind][rank.rank] =
          total / static_cast<double>(windows.size());
    }
  }
  if (!any_windows) throw ToolError("NoStepWindows");

  std::vector<MetricResult> out;
  for (CollectiveKind kind : kKinds) {
    const auto it = per_kind_rank.find(kind);
    if (it == per_kind_rank.end()) continue;
    MetricResult m{std::string("traffic_volume_") + to_string(kind), 0.0,
                   "bytes/step", Direction::LowerBetter, {}, {}};
    std::vector<double> vals;
    for (const auto& [rank, v] : it->second) {
      m.per_rank[rank] = v;
      vals.push_back(v);
    }
    m.value = mean(vals);
    out.push_back(std::move(m));
  }
  return out;
}

// --- registry and suite ------------------------------------------------------

struct Tool {
  std::string key;
  // Routing predicate: a reason string when the tool does not apply to the
  // (card, trace) pair, nullopt when it does.
  std::function<std::optional<std::string>(const ToolContext&)> skip_reason;
  std::function<std::vector<MetricResult>(const ToolContext&)> compute;
};

namespace metric_detail {

inline std::optional<std::string> applicable(const ToolContext&) {
  return std::nullopt;
}

inline std::optional<std::string> gpu_only(const ToolContext& ctx) {
  if (ctx.trace.dialect != Dialect::KinetoGpu) {
    return "NotApplicable: dialect=" + std::string(to_string(ctx.trace.dialect));
  }
  return std::nullopt;
}

inline std::optional<std::string> inference_only(const ToolContext& ctx) {
  if (ctx.card.phase != Phase::Inference) {
    return std::string("NotApplicable: phase=training");
  }
  return std::nullopt;
}

inline std::optional<std::string> multi_rank_only(const ToolContext& ctx) {
  if (ctx.trace.ranks.size() < 2) {
    return std::string("NotApplicable: single rank");
  }
  return std::nullopt;
}

inline Tool single(std::string key,
                   std::function<std::optional<std::string>(const ToolContext&)> skip,
                   MetricResult (*fn)(const ToolContext&)) {
  return Tool{std::move(key), std::move(skip),
              [fn](const ToolContext& ctx) {
                return std::vector<MetricResult>{fn(ctx)};
              }};
}

}  // namespace metric_detail

inline std::vector<Tool> default_registry() {
  using namespace metric_detail;
  std::vector<Tool> tools;
  tools.push_back(single("avg_step_time", applicable, &avg_step_time));
  tools.push_back(single("mfu", applicable, &mfu));
  tools.push_back(single("ttft", inference_only, &ttft));
  tools.push_back(single("tpot", inference_only, &tpot));
  tools.push_back(single("mean_sm_coverage", gpu_only, &mean_sm_coverage));
  tools.push_back(single("dominant_kernel_concentration", applicable,
                         &dominant_kernel_concentration));
  tools.push_back(single("compute_bound_fraction", gpu_only,
                         &compute_bound_fraction));
  tools.push_back(single("memory_bound_fraction", gpu_only,
                         &memory_bound_fraction));
  tools.push_back(single(
      "moe_fraction",
      [](const ToolContext& ctx) -> std::optional<std::string> {
        if (auto r = gpu_only(ctx)) return r;
        if (!ctx.card.moe.value_or(false)) {
          return std::string("NotApplicable: moe=false");
        }
        return std::nullopt;
      },
      &moe_fraction));
  tools.push_back(single("average_memory_bandwidth", applicable,
                         &average_memory_bandwidth));
  tools.push_back(single("memory_transfer_overhead", applicable,
                         &memory_transfer_overhead));
  tools.push_back(single("communication_fraction", applicable,
                         &communication_fraction));
  tools.push_back(single("total_communication_time", applicable,
                         &total_communication_time));
  tools.push_back(single("compute_comm_overlap", applicable,
                         &compute_comm_overlap));
  tools.push_back(single("load_imbalance_ratio", multi_rank_only,
                         &load_imbalance_ratio));
  tools.push_back(single(
      "straggler",
      [](const ToolContext& ctx) -> std::optional<std::string> {
        if (auto r = gpu_only(ctx)) return r;
        return multi_rank_only(ctx);
      },
      &straggler));
  for (CollectiveKind kind :
       {CollectiveKind::AllGather, CollectiveKind::AllReduce,
        CollectiveKind::ReduceScatter, CollectiveKind::AllToAll}) {
    tools.push_back(Tool{
        std::string("bw_") + to_string(kind), applicable,
        [kind](const ToolContext& ctx) {
          return std::vector<MetricResult>{collective_bandwidth(ctx, kind)};
        }});
  }
  tools.push_back(Tool{"traffic_volume", applicable,
                       &collective_traffic_volume});
  return tools;
}

// Runs every registered tool in registry order. A failing tool never aborts
// the others; it lands in `skipped` with its reason. Applying the suite twice
// to the same inputs yields identical profiles.
inline PerformanceProfile run_suite(const ToolContext& ctx,
                                    const std::vector<Tool>& registry,
                                    std::string card_ref = "") {
  if (registry.empty()) throw ToolError("EmptyRegistry");
  PerformanceProfile profile;
  profile.workload_card_ref = std::move(card_ref);
  profile.dialect = to_string(ctx.trace.dialect);
  for (const Tool& tool : registry) {
    if (auto reason = tool.skip_reason(ctx)) {
      profile.skipped.push_back({tool.key, *reason});
      continue;
    }
    try {
      for (MetricResult& m : tool.compute(ctx)) {
        if (!std::isfinite(m.value)) {
          profile.skipped.push_back({m.key, "NonFiniteValue"});
          continue;
        }
        profile.entries.push_back(std::move(m));
      }
    } catch (const ToolError& ex) {
      profile.skipped.push_back({tool.key, ex.what()});
    }
  }
  return profile;
}

}  // namespace tracebench
