// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors

#include "tracebench/workload_card.hpp"

#include <gtest/gtest.h>

#include "tracebench/trace_loader.hpp"
#include "tracebench/validation.hpp"
#include "testutil.hpp"

namespace tracebench {
namespace {

const char* kTableCard = R"(version: "1"
description: example column
workload:
  model:
    phase: training
    moe: false
    granularity: model_fwd_bwd_pass
    model_family: llama-3.1-8b
    precision: bf16
    iteration: 5
    model_arch:
      num_params: 16380544000
      num_params_embedding: 525336576
      num_layers: 28
      num_heads: 16
      head_dim: 128
  data:
    batch_size: 4
    seq_len: 8192
    dataset: c4
  hardware:
    network_topo:
      topology: slingshot
      bandwidth_gbps: [200, 2000]
    xpu_spec:
      type: GPU
      model: nvidia_a100
      total_count: 16
      count_per_node: 4
    driver_version: cuda_12.4
Model-executor:
  framework:
    name: torchtitan
    version: 0.2.0
  model_plan_parallelization:
    dp_replicate: 1
    dp_shard: 2
    tp: 4
    pp: 2
    cp: 1
    ep: 1
    pp_mb: 1
  communication_library:
    name: NCCL
    version: 2.14.3
  protocol_selection: [rocev2, p2p]
metric_source:
  traces: [nsys, json]
)";

TEST(WorkloadCard, ParsesTableExampleColumn) {
  const WorkloadCard card = parse_card(kTableCard);
  EXPECT_EQ(card.phase, Phase::Training);
  EXPECT_EQ(card.model_family, "llama-3.1-8b");
  EXPECT_EQ(card.batch_size, 4);
  EXPECT_EQ(card.seq_len, 8192);
  EXPECT_EQ(card.parallel.dp_shard, 2);
  EXPECT_EQ(card.parallel.tp, 4);
  EXPECT_EQ(card.parallel.pp, 2);
  EXPECT_EQ(card.xpu_model, "nvidia_a100");
  EXPECT_EQ(card.total_count, 16);
  EXPECT_EQ(card.num_params, 16380544000);
  ASSERT_TRUE(card.bandwidth_gbps.has_value());
  EXPECT_EQ(card.bandwidth_gbps->size(), 2u);
  ASSERT_TRUE(card.trace_kinds.has_value());
  EXPECT_EQ(card.trace_kinds->at(0), "nsys");
}

TEST(WorkloadCard, MissingPhaseIsSchemaErrorNamingTheField) {
  const std::string text = R"(workload:
  model:
    model_family: m
  data:
    batch_size: 1
    seq_len: 1
  hardware:
    xpu_spec:
      model: nvidia_a100
      total_count: 1
)";
  try {
    parse_card(text);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& ex) {
    EXPECT_EQ(ex.field_path(), "workload.model.phase");
  }
}

TEST(WorkloadCard, UnknownKeysPreservedInExtras) {
  const std::string text = std::string(kTableCard) +
                           "foo:\n  bar: [1, 2]\n";
  const WorkloadCard card = parse_card(text);
  ASSERT_EQ(card.extras.size(), 1u);
  EXPECT_EQ(card.extras[0].first, "foo");
  const std::string out = serialize_card(card);
  EXPECT_NE(out.find("foo"), std::string::npos);
  EXPECT_NE(out.find("bar"), std::string::npos);
}

TEST(WorkloadCard, ParseSerializeParseIsFixedPoint) {
  const std::string with_extras =
      std::string(kTableCard) + "custom_block:\n  nested: {a: 1}\n";
  const WorkloadCard first = parse_card(with_extras);
  const std::string serialized = serialize_card(first);
  const WorkloadCard second = parse_card(serialized);
  EXPECT_EQ(first, second);
  // and the serialization itself is stable from then on
  EXPECT_EQ(serialized, serialize_card(second));
}

TEST(WorkloadCard, AliasModelExecutorKeyAccepted) {
  std::string text = kTableCard;
  const auto pos = text.find("Model-executor");
  text.replace(pos, std::string("Model-executor").size(), "model_executor");
  const WorkloadCard card = parse_card(text);
  EXPECT_EQ(card.framework_name, "torchtitan");
  // canonical spelling on output
  EXPECT_NE(serialize_card(card).find("Model-executor"), std::string::npos);
}

TEST(WorkloadCard, InvariantViolationsRejected) {
  std::string bad_batch = kTableCard;
  const auto pos = bad_batch.find("batch_size: 4");
  bad_batch.replace(pos, 13, "batch_size: 0");
  EXPECT_THROW(parse_card(bad_batch), SchemaError);

  std::string bad_phase = kTableCard;
  const auto ppos = bad_phase.find("phase: training");
  bad_phase.replace(ppos, 15, "phase: serving");
  EXPECT_THROW(parse_card(bad_phase), SchemaError);
}

TEST(WorkloadCard, ParallelProductNeedNotEqualTotalCount) {
  // dp_shard * tp * pp = 16 with dp_replicate=1, but cards may legitimately
  // use fewer devices than allocated; no product constraint exists.
  std::string text = kTableCard;
  const auto pos = text.find("total_count: 16");
  text.replace(pos, 15, "total_count: 64");
  EXPECT_NO_THROW(parse_card(text));
}

TEST(WorkloadCard, NotYamlIsParseError) {
  EXPECT_THROW(parse_card("{{{::"), ParseError);
  EXPECT_THROW(parse_card("- just\n- a\n- sequence\n"), ParseError);
}

TEST(PeakFlopsTable, DefaultsAndOverrides) {
  const PeakFlopsTable t = PeakFlopsTable::defaults();
  ASSERT_TRUE(t.lookup("nvidia_a100").has_value());
  EXPECT_DOUBLE_EQ(*t.lookup("nvidia_a100"), 312e12);
  ASSERT_TRUE(t.lookup("tpu_v6e").has_value());
  EXPECT_FALSE(t.lookup("unknown_chip").has_value());

  const PeakFlopsTable o =
      PeakFlopsTable::from_json(nlohmann::json{{"mi300x", 1.3e15}});
  EXPECT_DOUBLE_EQ(*o.lookup("mi300x"), 1.3e15);
  EXPECT_TRUE(o.lookup("nvidia_a100").has_value());  // defaults retained
  EXPECT_THROW(PeakFlopsTable::from_json(nlohmann::json{{"bad", -1.0}}),
               SchemaError);
}

// --- validation ----------------------------------------------------------------

TEST(Validation, TrainingFiveStepRulePasses) {
  const auto b = tbtest::load_bundle(
      "gpu_train/card.yaml", {"gpu_train/rank0.json", "gpu_train/rank1.json"});
  const ValidationReport report = validate_submission(b.card, b.trace);
  EXPECT_FALSE(report.has_errors());
}

TEST(Validation, ThreeStepTrainingFailsMinIterations) {
  const auto b = tbtest::load_bundle(
      "single_collective/card.yaml",
      {"single_collective/rank0.json", "single_collective/rank1.json"});
  const ValidationReport report = validate_submission(b.card, b.trace);
  EXPECT_TRUE(report.has_errors());
  const auto& f = report.findings.front();
  EXPECT_EQ(f.rule, "min-iterations");
  EXPECT_EQ(f.severity, Severity::Error);
  EXPECT_EQ(f.observed.get<int>(), 3);
  EXPECT_EQ(f.required.get<int>(), 5);
}

TEST(Validation, RelaxedDowngradesStepRuleToWarning) {
  const auto b = tbtest::load_bundle(
      "single_collective/card.yaml",
      {"single_collective/rank0.json", "single_collective/rank1.json"});
  const ValidationReport report = validate_submission(b.card, b.trace, true);
  EXPECT_FALSE(report.has_errors());
  EXPECT_TRUE(report.relaxed);
  EXPECT_EQ(report.findings.front().severity, Severity::Warning);
}

TEST(Validation, InferencePrefillPlus128DecodePasses) {
  const auto b =
      tbtest::load_bundle("inference/card.yaml", {"inference/rank0.json"});
  const ValidationReport report = validate_submission(b.card, b.trace);
  EXPECT_FALSE(report.has_errors());
  EXPECT_EQ(report.findings[0].rule, "min-prefill");
  EXPECT_EQ(report.findings[0].severity, Severity::Pass);
  EXPECT_EQ(report.findings[1].rule, "min-decode-steps");
  EXPECT_EQ(report.findings[1].severity, Severity::Pass);
  EXPECT_EQ(report.findings[1].observed.get<int>(), 128);
}

TEST(Validation, SourceMismatchIsWarning) {
  auto b = tbtest::load_bundle(
      "gpu_train/card.yaml", {"gpu_train/rank0.json", "gpu_train/rank1.json"});
  b.card.trace_kinds = std::vector<std::string>{"nsys"};
  const ValidationReport report = validate_submission(b.card, b.trace);
  bool found = false;
  for (const auto& f : report.findings) {
    if (f.rule == "source-coverage") {
      found = true;
      EXPECT_EQ(f.severity, Severity::Warning);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_FALSE(report.has_errors());  // warning only
}

TEST(Validation, IterationMismatchFlagged) {
  auto b = tbtest::load_bundle(
      "gpu_train/card.yaml", {"gpu_train/rank0.json", "gpu_train/rank1.json"});
  b.card.iteration = 9;
  const ValidationReport report = validate_submission(b.card, b.trace);
  bool found = false;
  for (const auto& f : report.findings) {
    if (f.rule == "iteration-count") {
      found = true;
      EXPECT_EQ(f.severity, Severity::Warning);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Validation, MissingEnvironmentFieldsAreWarnings) {
  auto b = tbtest::load_bundle(
      "gpu_train/card.yaml", {"gpu_train/rank0.json", "gpu_train/rank1.json"});
  b.card.comm_lib_version.reset();
  b.card.driver_version.reset();
  const ValidationReport report = validate_submission(b.card, b.trace);
  for (const auto& f : report.findings) {
    if (f.rule == "environment-completeness") {
      EXPECT_EQ(f.severity, Severity::Warning);
      EXPECT_EQ(f.observed.size(), 2u);
    }
  }
  EXPECT_FALSE(report.has_errors());
}

TEST(Validation, DeterministicAndMonotoneInWindows) {
  const auto b = tbtest::load_bundle(
      "single_collective/card.yaml",
      {"single_collective/rank0.json", "single_collective/rank1.json"});
  const auto r1 = validate_submission(b.card, b.trace);
  const auto r2 = validate_submission(b.card, b.trace);
  EXPECT_EQ(r1.to_json(), r2.to_json());

  // Growing every rank's window list cannot increase the error count.
  auto grown = b;
  for (RankTimeline& rank : grown.trace.ranks) {
    std::int64_t end = rank.step_windows.back().t_end;
    for (int i = 0; i < 3; ++i) {
      rank.step_windows.push_back({static_cast<int>(rank.step_windows.size()),
                                   end, end + 1000, StepKind::TrainStep});
      end += 1000;
    }
  }
  EXPECT_LE(validate_submission(grown.card, grown.trace).error_count(),
            r1.error_count());
}

}  // namespace
}  // namespace tracebench
