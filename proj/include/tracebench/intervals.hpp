// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Exact integer interval algebra over half-open [start, end) nanosecond
// ranges. Everything here is integral; no floating point enters any length
// computation. Canonical IntervalSets are sorted, pairwise disjoint, and
// merge adjacent intervals, so total lengths are additive.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace tracebench {

struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive

  std::int64_t length() const noexcept { return end - start; }
  bool empty() const noexcept { return end <= start; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

class IntervalSet {
 public:
  IntervalSet() = default;

  // Builds the canonical union of arbitrary raw intervals. Zero-length and
  // inverted inputs contribute nothing.
  static IntervalSet union_of(std::vector<Interval> raw) {
    std::erase_if(raw, [](const Interval& iv) { return iv.empty(); });
    std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) {
      return a.start < b.start || (a.start == b.start && a.end < b.end);
    });
    IntervalSet out;
    for (const Interval& iv : raw) {
      if (!out.items_.empty() && iv.start <= out.items_.back().end) {
        out.items_.back().end = std::max(out.items_.back().end, iv.end);
      } else {
        out.items_.push_back(iv);
      }
    }
    return out;
  }

  std::span<const Interval> items() const noexcept { return items_; }
  bool empty() const noexcept { return items_.empty(); }

  std::int64_t length() const noexcept {
    std::int64_t total = 0;
    for (const Interval& iv : items_) total += iv.length();
    return total;
  }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> items_;
};

// Length of a ∩ b. Commutative; never exceeds min(len(a), len(b)).
inline std::int64_t intersect_len(const IntervalSet& a, const IntervalSet& b) {
  std::int64_t total = 0;
  auto ia = a.items().begin();
  auto ib = b.items().begin();
  while (ia != a.items().end() && ib != b.items().end()) {
    const std::int64_t lo = std::max(ia->start, ib->start);
    const std::int64_t hi = std::min(ia->end, ib->end);
    if (lo < hi) total += hi - lo;
    if (ia->end < ib->end) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return total;
}

// The set a \ b. Kept as a real sweep (not len(a) - intersect_len) so the
// algebraic identity len(a) == intersect_len + subtract_len is a genuine
// cross-check between two independent code paths.
inline IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
  std::vector<Interval> out;
  auto ib = b.items().begin();
  for (Interval cur : a.items()) {
    while (ib != b.items().end() && ib->end <= cur.start) ++ib;
    auto it = ib;
    while (it != b.items().end() && it->start < cur.end) {
      if (it->start > cur.start) {
        out.push_back({cur.start, it->start});
      }
      cur.start = std::max(cur.start, it->end);
      if (cur.empty()) break;
      ++it;
    }
    if (!cur.empty()) out.push_back(cur);
  }
  return IntervalSet::union_of(std::move(out));
}

inline std::int64_t subtract_len(const IntervalSet& a, const IntervalSet& b) {
  return subtract(a, b).length();
}

}  // namespace tracebench
