// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Event-classification pattern tables. Kernel naming drifts across library
// versions, so the tables ship as data: the built-in defaults below can be
// replaced wholesale or partially from a JSON file at run time.

#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/trace.hpp"

namespace tracebench {

struct KindPattern {
  CollectiveKind kind;
  std::regex pattern;  // case-insensitive, searched as substring
  std::string source;  // original pattern text, kept for diagnostics
};

struct ClassificationConfig {
  // GPU collective kernels, tried in order; first match wins.
  std::vector<KindPattern> gpu_collective;
  // Copy-like names (any category) mapped to MemTransfer.
  std::vector<std::regex> mem_transfer;
  // XLA HLO categories considered network collectives. `broadcast` is
  // deliberately absent: in HLO it is a local data-layout operation.
  std::vector<std::pair<std::string, CollectiveKind>> xla_collective;
  // XLA HLO categories considered leaf compute.
  std::vector<std::string> xla_compute;
  // MoE-specific kernel-name fragments (non-authoritative defaults).
  std::vector<std::regex> moe;
  std::vector<std::string> moe_source;
  // Step markers.
  std::string gpu_step_prefix = "ProfilerStep#";
  std::string xla_step_marker = "$core.py:331 step";

  static std::regex make(const std::string& text) {
    return std::regex(text, std::regex::icase | std::regex::ECMAScript);
  }

  static ClassificationConfig defaults() {
    ClassificationConfig c;
    auto add = [&c](CollectiveKind k, const std::string& pat) {
      c.gpu_collective.push_back({k, make(pat), pat});
    };
    add(CollectiveKind::AllReduce, "ncclAllReduce");
    add(CollectiveKind::AllGather, "ncclAllGather");
    add(CollectiveKind::ReduceScatter, "ncclReduceScatter");
    add(CollectiveKind::AllToAll, "nccl.*AllToAll");
    add(CollectiveKind::Broadcast, "ncclBroadcast");
    add(CollectiveKind::SendRecv, "ncclSend|ncclRecv");

    for (const char* pat : {"memcpy", "memset", "copy_kernel", "dma"}) {
      c.mem_transfer.push_back(make(pat));
    }

    c.xla_collective = {
        {"all-reduce", CollectiveKind::AllReduce},
        {"all-gather", CollectiveKind::AllGather},
        {"reduce-scatter", CollectiveKind::ReduceScatter},
        {"all-to-all", CollectiveKind::AllToAll},
        {"collective-permute", CollectiveKind::SendRecv},
    };
    c.xla_compute = {"dot", "convolution", "gemm", "fusion", "custom-call"};

    for (const char* pat : {"expert", "router", "topk", "gating", "dispatch",
                            "combine", "permute"}) {
      c.moe.push_back(make(pat));
      c.moe_source.push_back(pat);
    }
    return c;
  }

  // Applies overrides from a JSON document. Only the keys present are
  // replaced; everything else keeps its current value. Layout:
  //   {"gpu_collective": {"allreduce": ["regex", ...], ...},
  //    "mem_transfer": ["regex", ...],
  //    "xla_collective": {"allreduce": ["all-reduce"], ...},
  //    "xla_compute": ["dot", ...],
  //    "moe": ["regex", ...],
  //    "gpu_step_prefix": "...", "xla_step_marker": "..."}
  void apply_overrides(const nlohmann::json& doc) {
    static const std::vector<std::pair<std::string, CollectiveKind>> kinds = {
        {"allreduce", CollectiveKind::AllReduce},
        {"allgather", CollectiveKind::AllGather},
        {"reducescatter", CollectiveKind::ReduceScatter},
        {"alltoall", CollectiveKind::AllToAll},
        {"broadcast", CollectiveKind::Broadcast},
        {"sendrecv", CollectiveKind::SendRecv},
        {"other", CollectiveKind::Other},
    };
    auto kind_of = [](const std::string& name) {
      for (const auto& [n, k] : kinds) {
        if (n == name) return k;
      }
      throw SchemaError("patterns." + name, "unknown collective kind");
    };
    if (doc.contains("gpu_collective")) {
      gpu_collective.clear();
      for (const auto& [key, arr] : doc.at("gpu_collective").items()) {
        for (const auto& pat : arr) {
          const std::string text = pat.get<std::string>();
          gpu_collective.push_back({kind_of(key), make(text), text});
        }
      }
    }
    if (doc.contains("mem_transfer")) {
      mem_transfer.clear();
      for (const auto& pat : doc.at("mem_transfer")) {
        mem_transfer.push_back(make(pat.get<std::string>()));
      }
    }
    if (doc.contains("xla_collective")) {
      xla_collective.clear();
      for (const auto& [key, arr] : doc.at("xla_collective").items()) {
        for (const auto& pat : arr) {
          xla_collective.emplace_back(pat.get<std::string>(), kind_of(key));
        }
      }
    }
    if (doc.contains("xla_compute")) {
      xla_compute = doc.at("xla_compute").get<std::vector<std::string>>();
    }
    if (doc.contains("moe")) {
      moe.clear();
      moe_source.clear();
      for (const auto& pat : doc.at("moe")) {
        moe.push_back(make(pat.get<std::string>()));
        moe_source.push_back(pat.get<std::string>());
      }
    }
    if (doc.contains("gpu_step_prefix")) {
      gpu_step_prefix = doc.at("gpu_step_prefix").get<std::string>();
    }
    if (doc.contains("xla_step_marker")) {
      xla_step_marker = doc.at("xla_step_marker").get<std::string>();
    }
  }

  std::optional<CollectiveKind> match_gpu_collective(
      const std::string& name) const {
    for (const KindPattern& p : gpu_collective) {
      if (std::regex_search(name, p.pattern)) return p.kind;
    }
    return std::nullopt;
  }

  bool match_mem_transfer(const std::string& name) const {
    for (const std::regex& re : mem_transfer) {
      if (std::regex_search(name, re)) return true;
    }
    return false;
  }

  std::optional<CollectiveKind> match_xla_collective(
      const std::string& category) const {
    for (const auto& [cat, kind] : xla_collective) {
      if (cat == category) return kind;
    }
    return std::nullopt;
  }

  bool match_xla_compute(const std::string& category) const {
    for (const std::string& cat : xla_compute) {
      if (cat == category) return true;
    }
    return false;
  }

  bool match_moe(const std::string& name) const {
    for (const std::regex& re : moe) {
      if (std::regex_search(name, re)) return true;
    }
    return false;
  }
};

}  // namespace tracebench
