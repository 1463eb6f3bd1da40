// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Trace-derived execution graphs and the what-if replayer.
//
// One selected step window per rank converts into per-stream node chains:
// compute and memory kernels become fixed-duration comp nodes, collectives
// become comm nodes parameterized by kind, message size, and communicator
// group, and idle time becomes gap nodes so the original timeline shape is
// preserved. Replay walks the chains with a rendezvous at every group
// instance: the instance begins once all members arrive and completes
// simultaneously on all of them. Comm durations come either from the trace
// (Measured) or from a two-tier ring cost model (Modeled), which is what the
// resource-doubling utility metric compares against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/trace.hpp"
#include "tracebench/workload_card.hpp"

namespace tracebench {

enum class NodeKind { Comp, CommColl, Gap };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Comp: return "comp";
    case NodeKind::CommColl: return "comm_coll";
    default: return "gap";
  }
}

struct CommNodeAttrs {
  CollectiveKind kind = CollectiveKind::Other;
  std::int64_t bytes = 0;
  int group = -1;
};

struct GraphNode {
  int id = 0;  // globally unique; replay tie-breaking is by node id
  NodeKind kind = NodeKind::Comp;
  std::int64_t duration_ns = 0;  // measured duration (all node kinds)
  std::optional<CommNodeAttrs> comm;
  std::string stream;
};

struct RankGraph {
  int rank = 0;
  std::int64_t window_ns = 0;  // source step-window duration
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;  // per-stream sequencing chains
};

struct ExecutionGraph {
  std::vector<RankGraph> ranks;
  std::map<int, std::vector<int>> groups;  // group id -> ordered member ranks
};

struct GraphBuildStats {
  std::size_t total_collectives = 0;
  std::size_t unsized_collectives = 0;  // demoted to comp nodes
  std::size_t overlap_clamped = 0;      // same-stream overlaps forced serial
};

struct NetworkConfig {
  double scale_up_bandwidth_gbps = 300.0;   // GB/s unidirectional
  double scale_out_bandwidth_gbps = 25.0;   // GB/s
  int scale_up_domain_size = 8;             // ranks per scale-up domain
  double scale_up_latency_s = 0.0;          // per-message latency by tier
  double scale_out_latency_s = 0.0;

  static NetworkConfig from_json(const nlohmann::json& doc) {
    NetworkConfig net;
    net.scale_up_bandwidth_gbps =
        doc.value("scale_up_bandwidth_gbps", net.scale_up_bandwidth_gbps);
    net.scale_out_bandwidth_gbps =
        doc.value("scale_out_bandwidth_gbps", net.scale_out_bandwidth_gbps);
    net.scale_up_domain_size =
        doc.value("scale_up_domain_size", net.scale_up_domain_size);
    net.scale_up_latency_s =
        doc.value("scale_up_latency_s", net.scale_up_latency_s);
    net.scale_out_latency_s =
        doc.value("scale_out_latency_s", net.scale_out_latency_s);
    if (net.scale_up_bandwidth_gbps <= 0 || net.scale_out_bandwidth_gbps <= 0) {
      throw SchemaError("network.bandwidth", "bandwidths must be > 0");
    }
    if (net.scale_up_domain_size < 1) {
      throw SchemaError("network.scale_up_domain_size", "must be >= 1");
    }
    return net;
  }

  nlohmann::ordered_json to_json() const {
    return {{"scale_up_bandwidth_gbps", scale_up_bandwidth_gbps},
            {"scale_out_bandwidth_gbps", scale_out_bandwidth_gbps},
            {"scale_up_domain_size", scale_up_domain_size},
            {"scale_up_latency_s", scale_up_latency_s},
            {"scale_out_latency_s", scale_out_latency_s}};
  }
};

enum class Resource { ScaleOutBandwidth, ScaleUpBandwidth, ScaleUpDomainSize };

inline const char* to_string(Resource r) {
  switch (r) {
    case Resource::ScaleOutBandwidth: return "scale_out_bandwidth";
    case Resource::ScaleUpBandwidth: return "scale_up_bandwidth";
    default: return "scale_up_domain_size";
  }
}

inline std::optional<Resource> resource_from_string(const std::string& s) {
  if (s == "scale_out_bandwidth") return Resource::ScaleOutBandwidth;
  if (s == "scale_up_bandwidth") return Resource::ScaleUpBandwidth;
  if (s == "scale_up_domain_size") return Resource::ScaleUpDomainSize;
  return std::nullopt;
}

struct WhatIfResult {
  Resource resource = Resource::ScaleOutBandwidth;
  double baseline_step_time_s = 0.0;
  double simulated_step_time_s = 0.0;
  double utility_pct = 0.0;  // (T - T2x) / T * 100
};

// --- graph construction ------------------------------------------------------

namespace whatif_detail {

struct MatchKey {
  int kind;  // CollectiveKind as int
  int declared_size;
  int occurrence;
  auto operator<=>(const MatchKey&) const = default;
};

}  // namespace whatif_detail

struct GraphBuildOptions {
  int step = 0;  // which inner iteration window to convert
};

inline std::pair<ExecutionGraph, GraphBuildStats> build_graph(
    const NormalizedTrace& trace, const WorkloadCard& card,
    const GraphBuildOptions& opts = {}) {
  ExecutionGraph graph;
  GraphBuildStats stats;
  int next_node_id = 0;

  // (kind, declared group size, occurrence) -> [(rank index, node id)]
  std::map<whatif_detail::MatchKey, std::vector<std::pair<int, int>>> buckets;

  for (const RankTimeline& rank : trace.ranks) {
    const std::vector<StepWindow> inner = inner_windows(
        iteration_windows(rank, card.phase, card.effective_labeling()));
    if (opts.step < 0 || static_cast<std::size_t>(opts.step) >= inner.size()) {
      throw GraphError("NoStepWindows: rank " + std::to_string(rank.rank) +
                       " has " + std::to_string(inner.size()) +
                       " inner iteration windows, cannot select step " +
                       std::to_string(opts.step));
    }
    const StepWindow window = inner[static_cast<std::size_t>(opts.step)];

    RankGraph rg;
    rg.rank = rank.rank;
    rg.window_ns = window.duration();

    // Partition the window's kernel events by stream, preserving time order.
    std::map<std::string, std::vector<const TraceEvent*>> streams;
    for (const TraceEvent& ev : rank.events) {
      if (!detail::is_kernel_class(ev.klass)) continue;
      if (ev.t_start < window.t_start || ev.t_start >= window.t_end) continue;
      streams[ev.stream].push_back(&ev);
    }

    std::map<CollectiveKind, std::map<int, int>> occurrence;  // kind -> size -> n
    if (streams.empty()) {
      // Idle rank: a single gap chain keeps its step duration replayable.
      rg.nodes.push_back({next_node_id++, NodeKind::Gap, rg.window_ns,
                          std::nullopt, ""});
    }
    for (auto& [stream, events] : streams) {
      int prev_id = -1;
      std::int64_t cursor = window.t_start;
      for (const TraceEvent* ev : events) {
        const std::int64_t clipped_end = std::min(ev->t_end(), window.t_end);
        if (ev->t_start > cursor) {
          GraphNode gap{next_node_id++, NodeKind::Gap, ev->t_start - cursor,
                        std::nullopt, stream};
          if (prev_id >= 0) rg.edges.emplace_back(prev_id, gap.id);
          prev_id = gap.id;
          rg.nodes.push_back(std::move(gap));
        } else if (ev->t_start < cursor) {
          ++stats.overlap_clamped;
        }
        GraphNode node{next_node_id++, NodeKind::Comp,
                       std::max<std::int64_t>(0, clipped_end - ev->t_start),
                       std::nullopt, stream};
        if (ev->klass == EventClass::Collective) {
          ++stats.total_collectives;
          const auto bytes = message_bytes(ev->attrs);
          if (bytes) {
            const CollectiveKind kind =
                ev->attrs.collective.value_or(CollectiveKind::Other);
            const int declared = ev->attrs.group_size.value_or(0);
            node.kind = NodeKind::CommColl;
            node.comm = CommNodeAttrs{kind, *bytes, -1};
            const int occ = occurrence[kind][declared]++;
            buckets[{static_cast<int>(kind), declared, occ}].emplace_back(
                rg.rank, node.id);
          } else {
            ++stats.unsized_collectives;  // demoted to a comp node
          }
        }
        if (prev_id >= 0) rg.edges.emplace_back(prev_id, node.id);
        prev_id = node.id;
        cursor = std::max(cursor, clipped_end);
        rg.nodes.push_back(std::move(node));
      }
      if (cursor < window.t_end) {
        GraphNode gap{next_node_id++, NodeKind::Gap, window.t_end - cursor,
                      std::nullopt, stream};
        if (prev_id >= 0) rg.edges.emplace_back(prev_id, gap.id);
        rg.nodes.push_back(std::move(gap));
      }
    }
    graph.ranks.push_back(std::move(rg));
  }

  // Resolve communicator groups. Buckets chunk into instances of the
  // declared size; without a declared size, whoever matched forms one group.
  std::map<int, CommNodeAttrs*> comm_by_node;
  for (RankGraph& rg : graph.ranks) {
    for (GraphNode& n : rg.nodes) {
      if (n.comm) comm_by_node[n.id] = &*n.comm;
    }
  }
  int next_group_id = 0;
  for (const auto& [key, members] : buckets) {
    const int declared = key.declared_size;
    std::size_t chunk = members.size();
    if (declared > 0) {
      if (members.size() % static_cast<std::size_t>(declared) != 0) {
        throw GraphError(
            "CollectiveMatchFailure: " +
            std::string(to_string(static_cast<CollectiveKind>(key.kind))) +
            " occurrence " + std::to_string(key.occurrence) + " matched " +
            std::to_string(members.size()) +
            " rank(s), not a multiple of declared group size " +
            std::to_string(declared));
      }
      chunk = static_cast<std::size_t>(declared);
    }
    for (std::size_t base = 0; base < members.size(); base += chunk) {
      const int gid = next_group_id++;
      std::vector<int> group_ranks;
      for (std::size_t i = base; i < base + chunk; ++i) {
        group_ranks.push_back(members[i].first);
        comm_by_node.at(members[i].second)->group = gid;
      }
      graph.groups[gid] = std::move(group_ranks);
    }
  }

  return {std::move(graph), stats};
}

// --- cost model ---------------------------------------------------------------

// Ring-model transfer time for one collective on a two-tier network. The
// bottleneck tier is scale-up only when every member shares one scale-up
// domain; any group that spans domains pays the scale-out path for the whole
// operation (single-bottleneck model, no hierarchical decomposition).
inline double comm_time_model(CollectiveKind kind, std::int64_t bytes,
                              const std::vector<int>& member_ranks,
                              const NetworkConfig& net) {
  const std::size_t n = member_ranks.size();
  if (n <= 1) return 0.0;

  bool same_domain = true;
  const int domain0 = member_ranks.front() / net.scale_up_domain_size;
  for (int r : member_ranks) {
    same_domain &= (r / net.scale_up_domain_size) == domain0;
  }
  const double bandwidth_gbps = same_domain ? net.scale_up_bandwidth_gbps
                                            : net.scale_out_bandwidth_gbps;
  const double latency_s =
      same_domain ? net.scale_up_latency_s : net.scale_out_latency_s;

  const double nn = static_cast<double>(n);
  double factor = 1.0;
  switch (kind) {
    case CollectiveKind::AllReduce:
      factor = 2.0 * (nn - 1.0) / nn;
      break;
    case CollectiveKind::AllGather:
    case CollectiveKind::ReduceScatter:
    case CollectiveKind::AllToAll:  // per-rank exchange share
      factor = (nn - 1.0) / nn;
      break;
    default:
      factor = 1.0;
  }
  return latency_s +
         static_cast<double>(bytes) * factor / (bandwidth_gbps * 1e9);
}

// --- replay -------------------------------------------------------------------

enum class ReplayMode { Measured, Modeled };

struct ReplayResult {
  std::vector<double> per_rank_makespan_s;
  double step_time_s = 0.0;  // max per-rank makespan
};

namespace whatif_detail {

struct Chain {
  int rank = 0;
  std::vector<const GraphNode*> nodes;
  std::size_t next = 0;
  double t_ns = 0.0;
};

// Rebuilds per-stream chains from a rank's edge list. Every node has at most
// one predecessor and one successor; anything else is a malformed graph.
inline std::vector<Chain> chains_of(const RankGraph& rg) {
  std::map<int, const GraphNode*> by_id;
  for (const GraphNode& n : rg.nodes) {
    if (!by_id.emplace(n.id, &n).second) {
      throw GraphError("duplicate node id " + std::to_string(n.id));
    }
  }
  std::map<int, int> succ;
  std::set<int> has_pred;
  for (const auto& [from, to] : rg.edges) {
    if (!by_id.count(from) || !by_id.count(to)) {
      throw GraphError("edge references unknown node");
    }
    if (!succ.emplace(from, to).second) {
      throw GraphError("node " + std::to_string(from) +
                       " has multiple successors");
    }
    if (!has_pred.insert(to).second) {
      throw GraphError("node " + std::to_string(to) +
                       " has multiple predecessors");
    }
  }
  std::vector<Chain> chains;
  for (const GraphNode& n : rg.nodes) {
    if (has_pred.count(n.id)) continue;  // not a chain head
    Chain chain;
    chain.rank = rg.rank;
    int cur = n.id;
    std::set<int> seen;
    while (true) {
      if (!seen.insert(cur).second) {
        throw GraphError("cycle detected within rank " +
                         std::to_string(rg.rank));
      }
      chain.nodes.push_back(by_id.at(cur));
      const auto it = succ.find(cur);
      if (it == succ.end()) break;
      cur = it->second;
    }
    chains.push_back(std::move(chain));
  }
  std::size_t covered = 0;
  for (const Chain& c : chains) covered += c.nodes.size();
  if (covered != rg.nodes.size()) {
    throw GraphError("cycle detected within rank " + std::to_string(rg.rank));
  }
  // Deterministic processing order regardless of container layout.
  std::sort(chains.begin(), chains.end(), [](const Chain& a, const Chain& b) {
    return a.nodes.front()->id < b.nodes.front()->id;
  });
  return chains;
}

}  // namespace whatif_detail

inline ReplayResult replay(const ExecutionGraph& graph,
                           const NetworkConfig& net, ReplayMode mode) {
  using whatif_detail::Chain;

  std::vector<Chain> chains;
  for (const RankGraph& rg : graph.ranks) {
    for (Chain& c : whatif_detail::chains_of(rg)) {
      chains.push_back(std::move(c));
    }
  }

  struct Arrival {
    Chain* chain = nullptr;
    double t_ns = 0.0;
    const GraphNode* node = nullptr;
  };
  std::map<int, std::vector<Arrival>> arrivals;  // group id -> waiters
  std::set<int> registered_nodes;

  bool progress = true;
  while (progress) {
    progress = false;

    for (Chain& chain : chains) {
      while (chain.next < chain.nodes.size()) {
        const GraphNode* node = chain.nodes[chain.next];
        if (node->kind != NodeKind::CommColl) {
          chain.t_ns += static_cast<double>(node->duration_ns);
          ++chain.next;
          progress = true;
          continue;
        }
        if (!graph.groups.count(node->comm->group)) {
          throw GraphError("comm node " + std::to_string(node->id) +
                           " references unknown group " +
                           std::to_string(node->comm->group));
        }
        if (registered_nodes.insert(node->id).second) {
          arrivals[node->comm->group].push_back({&chain, chain.t_ns, node});
          progress = true;
        }
        break;  // blocked on the rendezvous
      }
    }

    // Resolve every group instance whose members have all arrived. The
    // instance starts at the latest arrival and completes simultaneously on
    // all members.
    for (auto& [gid, waiters] : arrivals) {
      const std::size_t expected = graph.groups.at(gid).size();
      if (waiters.empty() || waiters.size() < expected) continue;
      double completion = 0.0;
      if (mode == ReplayMode::Modeled) {
        double start = 0.0;
        std::int64_t bytes = 0;
        CollectiveKind kind = CollectiveKind::Other;
        for (const Arrival& a : waiters) {
          start = std::max(start, a.t_ns);
          bytes = std::max(bytes, a.node->comm->bytes);
          kind = a.node->comm->kind;
        }
        completion = start + comm_time_model(kind, bytes,
                                             graph.groups.at(gid), net) * 1e9;
      } else {
        for (const Arrival& a : waiters) {
          completion = std::max(
              completion, a.t_ns + static_cast<double>(a.node->duration_ns));
        }
      }
      for (Arrival& a : waiters) {
        a.chain->t_ns = completion;
        ++a.chain->next;
      }
      waiters.clear();
      progress = true;
    }
  }

  for (const Chain& chain : chains) {
    if (chain.next < chain.nodes.size()) {
      throw GraphError("DeadlockDetected: group rendezvous cannot complete "
                       "(inconsistent group ordering across ranks)");
    }
  }

  ReplayResult result;
  std::map<int, double> rank_makespan;
  for (const Chain& chain : chains) {
    rank_makespan[chain.rank] =
        std::max(rank_makespan[chain.rank], chain.t_ns);
  }
  for (const RankGraph& rg : graph.ranks) {
    const double s = rank_makespan.count(rg.rank)
                         ? rank_makespan.at(rg.rank) / 1e9
                         : 0.0;
    result.per_rank_makespan_s.push_back(s);
    result.step_time_s = std::max(result.step_time_s, s);
  }
  return result;
}

// Eq.-style resource utility: percent step-time improvement from doubling one
// network knob. Both the baseline and the doubled run use the Modeled comm
// times so the comparison isolates the knob rather than model-vs-trace error.
inline WhatIfResult resource_utility(const ExecutionGraph& graph,
                                     const NetworkConfig& net,
                                     Resource resource) {
  NetworkConfig doubled = net;
  switch (resource) {
    case Resource::ScaleOutBandwidth:
      doubled.scale_out_bandwidth_gbps *= 2;
      break;
    case Resource::ScaleUpBandwidth:
      doubled.scale_up_bandwidth_gbps *= 2;
      break;
    case Resource::ScaleUpDomainSize:
      doubled.scale_up_domain_size *= 2;  // re-derives tier per group
      break;
  }
  WhatIfResult result;
  result.resource = resource;
  result.baseline_step_time_s = replay(graph, net, ReplayMode::Modeled).step_time_s;
  result.simulated_step_time_s =
      replay(graph, doubled, ReplayMode::Modeled).step_time_s;
  result.utility_pct = (result.baseline_step_time_s -
                        result.simulated_step_time_s) /
                       result.baseline_step_time_s * 100.0;
  return result;
}

// --- serialization ------------------------------------------------------------

inline nlohmann::ordered_json export_graph(const ExecutionGraph& graph) {
  nlohmann::ordered_json doc;
  doc["ranks"] = nlohmann::ordered_json::array();
  for (const RankGraph& rg : graph.ranks) {
    nlohmann::ordered_json rank_doc;
    rank_doc["rank"] = rg.rank;
    rank_doc["window_ns"] = rg.window_ns;
    rank_doc["nodes"] = nlohmann::ordered_json::array();
    for (const GraphNode& n : rg.nodes) {
      nlohmann::ordered_json node_doc;
      node_doc["id"] = n.id;
      node_doc["kind"] = to_string(n.kind);
      node_doc["dur_ns"] = n.duration_ns;
      if (n.comm) {
        node_doc["comm"] = {{"kind", to_string(n.comm->kind)},
                            {"bytes", n.comm->bytes},
                            {"group", n.comm->group}};
      }
      node_doc["stream"] = n.stream;
      rank_doc["nodes"].push_back(std::move(node_doc));
    }
    rank_doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& [from, to] : rg.edges) {
      rank_doc["edges"].push_back({from, to});
    }
    doc["ranks"].push_back(std::move(rank_doc));
  }
  doc["groups"] = nlohmann::ordered_json::object();
  for (const auto& [gid, members] : graph.groups) {
    doc["groups"][std::to_string(gid)] = members;
  }
  return doc;
}

inline ExecutionGraph import_graph(const nlohmann::json& doc) {
  ExecutionGraph graph;
  for (const auto& rank_doc : doc.at("ranks")) {
    RankGraph rg;
    rg.rank = rank_doc.at("rank").get<int>();
    rg.window_ns = rank_doc.value("window_ns", std::int64_t{0});
    for (const auto& node_doc : rank_doc.at("nodes")) {
      GraphNode n;
      n.id = node_doc.at("id").get<int>();
      const std::string kind = node_doc.at("kind").get<std::string>();
      if (kind == "comp") {
        n.kind = NodeKind::Comp;
      } else if (kind == "comm_coll") {
        n.kind = NodeKind::CommColl;
      } else if (kind == "gap") {
        n.kind = NodeKind::Gap;
      } else {
        throw SchemaError("graph.nodes.kind", "unknown kind '" + kind + "'");
      }
      n.duration_ns = node_doc.value("dur_ns", std::int64_t{0});
      if (node_doc.contains("comm")) {
        CommNodeAttrs comm;
        const std::string ck = node_doc.at("comm").at("kind").get<std::string>();
        comm.kind = CollectiveKind::Other;
        for (CollectiveKind k :
             {CollectiveKind::AllReduce, CollectiveKind::AllGather,
              CollectiveKind::ReduceScatter, CollectiveKind::AllToAll,
              CollectiveKind::Broadcast, CollectiveKind::SendRecv}) {
          if (ck == to_string(k)) comm.kind = k;
        }
        comm.bytes = node_doc.at("comm").at("bytes").get<std::int64_t>();
        comm.group = node_doc.at("comm").at("group").get<int>();
        n.comm = comm;
      }
      n.stream = node_doc.value("stream", "");
      rg.nodes.push_back(std::move(n));
    }
    for (const auto& edge : rank_doc.at("edges")) {
      rg.edges.emplace_back(edge.at(0).get<int>(), edge.at(1).get<int>());
    }
    graph.ranks.push_back(std::move(rg));
  }
  for (const auto& [gid, members] : doc.at("groups").items()) {
    std::vector<int> ranks;
    for (const auto& r : members) ranks.push_back(r.get<int>());
    if (ranks.empty()) {
      throw SchemaError("graph.groups." + gid, "group has no members");
    }
    graph.groups[std::stoi(gid)] = std::move(ranks);
  }
  // Validate chain structure (and thereby acyclicity) up front.
  for (const RankGraph& rg : graph.ranks) {
    (void)whatif_detail::chains_of(rg);
  }
  return graph;
}

}  // namespace tracebench
