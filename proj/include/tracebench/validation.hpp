// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Rule-based submission checks: minimum iteration counts, trace-source
// coverage, and environment completeness. Findings are data, not exceptions;
// schema-level violations are Errors (they block a metric run) while
// provenance gaps are Warnings.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/trace.hpp"
#include "tracebench/workload_card.hpp"

namespace tracebench {

enum class Severity { Pass, Warning, Error };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::Pass: return "pass";
    case Severity::Warning: return "warning";
    default: return "error";
  }
}

struct ValidationFinding {
  std::string rule;
  Severity severity = Severity::Pass;
  std::string message;
  nlohmann::ordered_json observed;
  nlohmann::ordered_json required;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  bool relaxed = false;

  bool has_errors() const {
    return std::any_of(findings.begin(), findings.end(),
                       [](const ValidationFinding& f) {
                         return f.severity == Severity::Error;
                       });
  }
  std::size_t error_count() const {
    return std::count_if(findings.begin(), findings.end(),
                         [](const ValidationFinding& f) {
                           return f.severity == Severity::Error;
                         });
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    doc["relaxed"] = relaxed;
    doc["errors"] = error_count();
    doc["findings"] = nlohmann::ordered_json::array();
    for (const ValidationFinding& f : findings) {
      nlohmann::ordered_json entry;
      entry["rule"] = f.rule;
      entry["severity"] = to_string(f.severity);
      entry["message"] = f.message;
      entry["observed"] = f.observed;
      entry["required"] = f.required;
      doc["findings"].push_back(std::move(entry));
    }
    return doc;
  }
};

namespace validation_detail {

inline int count_kind(const RankTimeline& rank, Phase phase,
                      StepLabeling labeling, StepKind kind) {
  int n = 0;
  for (const StepWindow& w : labeled_windows(rank, phase, labeling)) {
    if (w.kind == kind) ++n;
  }
  return n;
}

}  // namespace validation_detail

// Checks, in order: (a) training minimum iterations, (b) inference prefill +
// decode minimums, (c) declared trace kinds cover the loaded dialect,
// (d) recorded iteration count matches observed windows, (e) environment
// completeness. `relaxed` downgrades the step-count rules to warnings for
// desk-scale fixtures; the report records that it was applied.
inline ValidationReport validate_submission(const WorkloadCard& card,
                                            const NormalizedTrace& trace,
                                            bool relaxed = false) {
  using validation_detail::count_kind;

  ValidationReport report;
  report.relaxed = relaxed;
  const StepLabeling labeling = card.effective_labeling();
  const Severity step_fail = relaxed ? Severity::Warning : Severity::Error;

  if (card.phase == Phase::Training) {
    constexpr int kMinTrainSteps = 5;
    int min_steps = std::numeric_limits<int>::max();
    for (const RankTimeline& rank : trace.ranks) {
      min_steps = std::min(
          min_steps, count_kind(rank, card.phase, labeling, StepKind::TrainStep));
    }
    ValidationFinding f;
    f.rule = "min-iterations";
    f.observed = min_steps;
    f.required = kMinTrainSteps;
    if (min_steps >= kMinTrainSteps) {
      f.severity = Severity::Pass;
      f.message = "every rank records at least 5 training steps";
    } else {
      f.severity = step_fail;
      f.message = "training submissions need at least 5 steady-state steps "
                  "per rank; observed " + std::to_string(min_steps);
    }
    report.findings.push_back(std::move(f));
  } else {
    constexpr int kMinDecodeSteps = 128;
    int min_prefill = std::numeric_limits<int>::max();
    int min_decode = std::numeric_limits<int>::max();
    for (const RankTimeline& rank : trace.ranks) {
      min_prefill = std::min(
          min_prefill, count_kind(rank, card.phase, labeling, StepKind::Prefill));
      min_decode = std::min(
          min_decode, count_kind(rank, card.phase, labeling, StepKind::DecodeStep));
    }
    {
      ValidationFinding f;
      f.rule = "min-prefill";
      f.observed = min_prefill;
      f.required = 1;
      if (min_prefill >= 1) {
        f.severity = Severity::Pass;
        f.message = "prefill pass present on every rank";
      } else {
        f.severity = step_fail;
        f.message = "inference submissions must cover the prefill pass";
      }
      report.findings.push_back(std::move(f));
    }
    {
      ValidationFinding f;
      f.rule = "min-decode-steps";
      f.observed = min_decode;
      f.required = kMinDecodeSteps;
      if (min_decode >= kMinDecodeSteps) {
        f.severity = Severity::Pass;
        f.message = "every rank records at least 128 steady-state decode steps";
      } else {
        f.severity = step_fail;
        f.message = "inference submissions need at least 128 steady-state "
                    "decode steps per rank; observed " +
                    std::to_string(min_decode);
      }
      report.findings.push_back(std::move(f));
    }
  }

  {
    ValidationFinding f;
    f.rule = "source-coverage";
    const std::string needed = "json";
    f.required = needed;
    std::vector<std::string> declared =
        card.trace_kinds.value_or(std::vector<std::string>{});
    f.observed = declared;
    const bool covered =
        std::find(declared.begin(), declared.end(), needed) != declared.end();
    if (covered) {
      f.severity = Severity::Pass;
      f.message = "declared trace kinds cover the loaded dialect (" +
                  std::string(to_string(trace.dialect)) + ")";
    } else {
      f.severity = Severity::Warning;
      f.message = "card does not declare a 'json' trace in "
                  "metric_source.traces but a JSON trace was loaded";
    }
    report.findings.push_back(std::move(f));
  }

  {
    ValidationFinding f;
    f.rule = "iteration-count";
    const StepKind counted = card.phase == Phase::Training
                                 ? StepKind::TrainStep
                                 : StepKind::DecodeStep;
    nlohmann::ordered_json per_rank = nlohmann::ordered_json::array();
    bool mismatch = false;
    for (const RankTimeline& rank : trace.ranks) {
      const int n = count_kind(rank, card.phase, labeling, counted);
      per_rank.push_back(n);
      if (card.iteration && n != *card.iteration) mismatch = true;
    }
    f.observed = per_rank;
    if (!card.iteration) {
      f.severity = Severity::Warning;
      f.required = nullptr;
      f.message = "card does not record an iteration count";
    } else {
      f.required = *card.iteration;
      if (mismatch) {
        f.severity = Severity::Warning;
        f.message = "recorded iteration count differs from observed step "
                    "windows";
      } else {
        f.severity = Severity::Pass;
        f.message = "recorded iteration count matches observed step windows";
      }
    }
    report.findings.push_back(std::move(f));
  }

  {
    ValidationFinding f;
    f.rule = "environment-completeness";
    std::vector<std::string> missing;
    if (!card.framework_name) missing.push_back("Model-executor.framework.name");
    if (!card.framework_version) {
      missing.push_back("Model-executor.framework.version");
    }
    if (!card.comm_lib_name) {
      missing.push_back("Model-executor.communication_library.name");
    }
    if (!card.comm_lib_version) {
      missing.push_back("Model-executor.communication_library.version");
    }
    if (!card.driver_version) {
      missing.push_back("workload.hardware.driver_version");
    }
    f.observed = missing;
    f.required = "framework name+version, communication library "
                 "name+version, driver_version";
    if (missing.empty()) {
      f.severity = Severity::Pass;
      f.message = "environment reporting is complete";
    } else {
      f.severity = Severity::Warning;
      f.message = std::to_string(missing.size()) +
                  " environment field(s) missing";
    }
    report.findings.push_back(std::move(f));
  }

  return report;
}

}  // namespace tracebench
