// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors

#include "tracebench/whatif.hpp"

#include <gtest/gtest.h>

#include <random>

#include "tracebench/trace_loader.hpp"
#include "testutil.hpp"

namespace tracebench {
namespace {

NetworkConfig single_collective_net() {
  NetworkConfig net;
  net.scale_up_bandwidth_gbps = 300.0;
  net.scale_out_bandwidth_gbps = 25.0;
  net.scale_up_domain_size = 2;
  net.scale_up_latency_s = 0.0;
  net.scale_out_latency_s = 0.0;
  return net;
}

TEST(CommTimeModel, RingAllReduceHandExample) {
  // 1 GB AllReduce over 8 ranks in one 300 GB/s domain, zero latency:
  // 1e9 * 2*(7/8) / 300e9 s
  NetworkConfig net = single_collective_net();
  net.scale_up_domain_size = 8;
  const double t = comm_time_model(CollectiveKind::AllReduce, 1'000'000'000,
                                   {0, 1, 2, 3, 4, 5, 6, 7}, net);
  EXPECT_NEAR(t, 1.75 / 300.0, 1e-12);
}

TEST(CommTimeModel, SingleMemberIsFree) {
  EXPECT_DOUBLE_EQ(comm_time_model(CollectiveKind::AllReduce, 1 << 30, {3},
                                   single_collective_net()),
                   0.0);
}

TEST(CommTimeModel, SplitDomainPaysScaleOut) {
  NetworkConfig net = single_collective_net();
  net.scale_up_domain_size = 2;
  // ranks 1 and 2 live in different domains of size 2
  const double split =
      comm_time_model(CollectiveKind::AllGather, 1'000'000, {1, 2}, net);
  const double local =
      comm_time_model(CollectiveKind::AllGather, 1'000'000, {0, 1}, net);
  EXPECT_NEAR(split, 1'000'000 * 0.5 / 25e9, 1e-15);
  EXPECT_NEAR(local, 1'000'000 * 0.5 / 300e9, 1e-15);
  EXPECT_GT(split, local);
}

TEST(CommTimeModel, LatencyTermAdds) {
  NetworkConfig net = single_collective_net();
  net.scale_up_latency_s = 5e-6;
  const double t =
      comm_time_model(CollectiveKind::AllGather, 1'000'000, {0, 1}, net);
  EXPECT_NEAR(t, 5e-6 + 1'000'000 * 0.5 / 300e9, 1e-15);
}

class GpuTrainGraph : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bundle_ = new tbtest::CtxBundle(tbtest::load_bundle(
        "gpu_train/card.yaml",
        {"gpu_train/rank0.json", "gpu_train/rank1.json"}));
    auto [graph, stats] = build_graph(bundle_->trace, bundle_->card);
    graph_ = new ExecutionGraph(std::move(graph));
    stats_ = stats;
  }
  static void TearDownTestSuite() {
    delete bundle_;
    delete graph_;
    bundle_ = nullptr;
    graph_ = nullptr;
  }
  static tbtest::CtxBundle* bundle_;
  static ExecutionGraph* graph_;
  static GraphBuildStats stats_;
};

tbtest::CtxBundle* GpuTrainGraph::bundle_ = nullptr;
ExecutionGraph* GpuTrainGraph::graph_ = nullptr;
GraphBuildStats GpuTrainGraph::stats_;

TEST_F(GpuTrainGraph, BuildsMatchedGroups) {
  ASSERT_EQ(graph_->ranks.size(), 2u);
  // one AllReduce + one AllGather instance, each spanning both ranks
  ASSERT_EQ(graph_->groups.size(), 2u);
  for (const auto& [gid, members] : graph_->groups) {
    EXPECT_EQ(members, (std::vector<int>{0, 1}));
  }
  EXPECT_EQ(stats_.total_collectives, 4u);
  EXPECT_EQ(stats_.unsized_collectives, 0u);
}

TEST_F(GpuTrainGraph, MeasuredReplayReproducesStepDuration) {
  const ReplayResult r =
      replay(*graph_, single_collective_net(), ReplayMode::Measured);
  ASSERT_EQ(r.per_rank_makespan_s.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_rank_makespan_s[0], 0.001);
  EXPECT_DOUBLE_EQ(r.per_rank_makespan_s[1], 0.001);
  EXPECT_DOUBLE_EQ(r.step_time_s, 0.001);
}

TEST_F(GpuTrainGraph, ExportImportRoundTripsByteIdentically) {
  const nlohmann::ordered_json doc = export_graph(*graph_);
  const ExecutionGraph back = import_graph(doc);
  EXPECT_EQ(export_graph(back).dump(2), doc.dump(2));
  const ReplayResult a = replay(*graph_, single_collective_net(), ReplayMode::Measured);
  const ReplayResult b = replay(back, single_collective_net(), ReplayMode::Measured);
  EXPECT_EQ(a.step_time_s, b.step_time_s);
}

TEST(BuildGraph, SingleRankIdentityReconstruction) {
  // compute 10 ms + idle 2 ms + compute 5 ms inside a 17 ms window
  const std::string trace_json = R"({"traceEvents":[
    {"name":"ProfilerStep#0","ph":"X","ts":0,"dur":17000,"tid":1},
    {"name":"ProfilerStep#1","ph":"X","ts":17000,"dur":17000,"tid":1},
    {"name":"ProfilerStep#2","ph":"X","ts":34000,"dur":17000,"tid":1},
    {"name":"a","cat":"kernel","ph":"X","ts":17000,"dur":10000,"tid":7},
    {"name":"b","cat":"kernel","ph":"X","ts":29000,"dur":5000,"tid":7}]})";
  const std::string path = ::testing::TempDir() + "identity.json";
  {
    std::ofstream f(path);
    f << trace_json;
  }
  const NormalizedTrace trace = load_trace({path});
  WorkloadCard card;
  card.phase = Phase::Training;
  const auto [graph, stats] = build_graph(trace, card);
  ASSERT_EQ(graph.ranks.size(), 1u);
  // comp, gap, compplus the trailing gap to the window end
  ASSERT_EQ(graph.ranks[0].nodes.size(), 4u);
  EXPECT_EQ(graph.ranks[0].nodes[0].kind, NodeKind::Comp);
  EXPECT_EQ(graph.ranks[0].nodes[1].kind, NodeKind::Gap);
  EXPECT_EQ(graph.ranks[0].nodes[1].duration_ns, 2'000'000);
  const ReplayResult r =
      replay(graph, single_collective_net(), ReplayMode::Measured);
  EXPECT_DOUBLE_EQ(r.step_time_s, 0.017);
  std::remove(path.c_str());
}

TEST(BuildGraph, UnsizedCollectivesDemoteToCompNodes) {
  const std::string trace_json = R"({"traceEvents":[
    {"name":"ProfilerStep#0","ph":"X","ts":0,"dur":1000,"tid":1},
    {"name":"ProfilerStep#1","ph":"X","ts":1000,"dur":1000,"tid":1},
    {"name":"ProfilerStep#2","ph":"X","ts":2000,"dur":1000,"tid":1},
    {"name":"ncclAllReduce_nosize","cat":"kernel","ph":"X","ts":1100,"dur":100,"tid":20}]})";
  const std::string path = ::testing::TempDir() + "unsized.json";
  {
    std::ofstream f(path);
    f << trace_json;
  }
  WorkloadCard card;
  card.phase = Phase::Training;
  const auto [graph, stats] = build_graph(load_trace({path}), card);
  EXPECT_EQ(stats.total_collectives, 1u);
  EXPECT_EQ(stats.unsized_collectives, 1u);
  EXPECT_TRUE(graph.groups.empty());
  for (const GraphNode& n : graph.ranks[0].nodes) {
    EXPECT_NE(n.kind, NodeKind::CommColl);
  }
  std::remove(path.c_str());
}

TEST(BuildGraph, TooFewWindowsIsError) {
  const auto b = tbtest::load_bundle("gpu_train/card.yaml",
                                     {"gpu_train/rank0.json"});
  GraphBuildOptions opts;
  opts.step = 99;
  EXPECT_THROW(build_graph(b.trace, b.card, opts), GraphError);
}

TEST(Replay, LateArrivalDelaysTheGroup) {
  // two ranks; rank 1 reaches the collective 3 ms later
  ExecutionGraph graph;
  {
    RankGraph rg;
    rg.rank = 0;
    rg.window_ns = 10'000'000;
    rg.nodes.push_back({0, NodeKind::CommColl, 1'000'000,
                        CommNodeAttrs{CollectiveKind::AllReduce, 1'000'000, 0},
                        "s"});
    graph.ranks.push_back(rg);
  }
  {
    RankGraph rg;
    rg.rank = 1;
    rg.window_ns = 10'000'000;
    rg.nodes.push_back({1, NodeKind::Gap, 3'000'000, {}, "s"});
    rg.nodes.push_back({2, NodeKind::CommColl, 1'000'000,
                        CommNodeAttrs{CollectiveKind::AllReduce, 1'000'000, 0},
                        "s"});
    rg.edges.emplace_back(1, 2);
    graph.ranks.push_back(rg);
  }
  graph.groups[0] = {0, 1};
  NetworkConfig net = single_collective_net();
  const ReplayResult r = replay(graph, net, ReplayMode::Modeled);
  const double model_s =
      comm_time_model(CollectiveKind::AllReduce, 1'000'000, {0, 1}, net);
  // the group starts at the later arrival (3 ms) on both ranks
  EXPECT_NEAR(r.per_rank_makespan_s[0], 3e-3 + model_s, 1e-12);
  EXPECT_NEAR(r.per_rank_makespan_s[1], 3e-3 + model_s, 1e-12);
}

TEST(Replay, GroupMembersCompleteSimultaneously) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const ExecutionGraph graph = tbtest::random_graph(rng);
    const ReplayResult r =
        replay(graph, single_collective_net(), ReplayMode::Modeled);
    ASSERT_EQ(r.per_rank_makespan_s.size(), graph.ranks.size());
  }
}

TEST(Replay, DeadlockIsDetected) {
  // group 0 before 1 on rank 0, but 1 before 0 on rank 1
  ExecutionGraph graph;
  auto comm = [](int id, int group) {
    return GraphNode{id, NodeKind::CommColl, 1000,
                     CommNodeAttrs{CollectiveKind::AllReduce, 1000, group},
                     "s"};
  };
  {
    RankGraph rg;
    rg.rank = 0;
    rg.nodes = {comm(0, 0), comm(1, 1)};
    rg.edges = {{0, 1}};
    graph.ranks.push_back(rg);
  }
  {
    RankGraph rg;
    rg.rank = 1;
    rg.nodes = {comm(2, 1), comm(3, 0)};
    rg.edges = {{2, 3}};
    graph.ranks.push_back(rg);
  }
  graph.groups[0] = {0, 1};
  graph.groups[1] = {0, 1};
  EXPECT_THROW(replay(graph, single_collective_net(), ReplayMode::Modeled),
               GraphError);
}

TEST(Utility, SingleCollectiveFixtureBandwidthDoubling) {
  const auto b = tbtest::load_bundle(
      "single_collective/card.yaml",
      {"single_collective/rank0.json", "single_collective/rank1.json"});
  const auto [graph, stats] = build_graph(b.trace, b.card);
  const NetworkConfig net = single_collective_net();

  // modeled baseline: 300 MB x factor 1.0 / 300 GB/s = 1 ms, the whole step
  EXPECT_NEAR(replay(graph, net, ReplayMode::Modeled).step_time_s, 1e-3, 1e-12);
  const WhatIfResult up = resource_utility(graph, net, Resource::ScaleUpBandwidth);
  EXPECT_NEAR(up.utility_pct, 50.0, 1e-3);
  const WhatIfResult out =
      resource_utility(graph, net, Resource::ScaleOutBandwidth);
  EXPECT_DOUBLE_EQ(out.utility_pct, 0.0);
  const WhatIfResult domain =
      resource_utility(graph, net, Resource::ScaleUpDomainSize);
  EXPECT_DOUBLE_EQ(domain.utility_pct, 0.0);
}

TEST(Utility, ComputeOnlyFixtureGainsNothing) {
  const auto b = tbtest::load_bundle("compute_only/card.yaml",
                                     {"compute_only/rank0.json"});
  const auto [graph, stats] = build_graph(b.trace, b.card);
  for (const Resource r : {Resource::ScaleOutBandwidth,
                           Resource::ScaleUpBandwidth,
                           Resource::ScaleUpDomainSize}) {
    EXPECT_DOUBLE_EQ(
        resource_utility(graph, single_collective_net(), r).utility_pct, 0.0);
  }
}

TEST(Utility, DomainDoublingMovesGroupOntoFastTier) {
  // two ranks in different domains of size 1; doubling the domain size puts
  // them in one scale-up domain
  ExecutionGraph graph;
  for (int r = 0; r < 2; ++r) {
    RankGraph rg;
    rg.rank = r;
    rg.window_ns = 0;
    rg.nodes.push_back({r, NodeKind::CommColl, 1'000'000,
                        CommNodeAttrs{CollectiveKind::AllGather, 100'000'000, 0},
                        "s"});
    graph.ranks.push_back(rg);
  }
  graph.groups[0] = {0, 1};
  NetworkConfig net = single_collective_net();
  net.scale_up_domain_size = 1;
  const WhatIfResult r =
      resource_utility(graph, net, Resource::ScaleUpDomainSize);
  const double slow = 100e6 * 0.5 / 25e9;
  const double fast = 100e6 * 0.5 / 300e9;
  EXPECT_NEAR(r.baseline_step_time_s, slow, 1e-12);
  EXPECT_NEAR(r.simulated_step_time_s, fast, 1e-12);
  EXPECT_GT(r.utility_pct, 0.0);
}

TEST(Utility, MonotoneInBandwidth) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) {
    const ExecutionGraph graph = tbtest::random_graph(rng);
    NetworkConfig net = single_collective_net();
    net.scale_up_domain_size = 2;
    for (const Resource r :
         {Resource::ScaleOutBandwidth, Resource::ScaleUpBandwidth}) {
      const WhatIfResult result = resource_utility(graph, net, r);
      ASSERT_GE(result.utility_pct, -1e-9);
      ASSERT_LE(result.utility_pct, 100.0);
    }
  }
}

TEST(ReplayOracle, MatchesFixedPointReference) {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 50; ++i) {
    const ExecutionGraph graph = tbtest::random_graph(rng);
    for (const ReplayMode mode : {ReplayMode::Measured, ReplayMode::Modeled}) {
      const ReplayResult ours = replay(graph, single_collective_net(), mode);
      const ReplayResult ref =
          tbtest::reference_replay(graph, single_collective_net(), mode);
      ASSERT_EQ(ours.per_rank_makespan_s.size(), ref.per_rank_makespan_s.size());
      for (std::size_t r = 0; r < ours.per_rank_makespan_s.size(); ++r) {
        ASSERT_EQ(ours.per_rank_makespan_s[r], ref.per_rank_makespan_s[r])
            << "seed " << i << " rank " << r;
      }
    }
  }
}

}  // namespace
}  // namespace tracebench
