// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Command-line front end: validate, metrics, compare, whatif, export-graph,
// search, package-entry. All commands are deterministic given identical
// inputs and flags; JSON output uses stable key ordering and ends with a
// single trailing newline. Exit codes: 0 success, 1 validation/input
// failure, 2 internal error.

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/search.hpp"
#include "tracebench/trace_loader.hpp"
#include "tracebench/validation.hpp"
#include "tracebench/whatif.hpp"
#include "tracebench/workload_card.hpp"

namespace tracebench::cli {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInternalError = 2;

namespace cli_detail {

inline void emit(std::ostream& out, const nlohmann::ordered_json& doc) {
  out << doc.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + ex.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::setw(2) << static_cast<int>(digest[i]);
  }
  return hex.str();
}

inline std::optional<Dialect> parse_dialect_flag(const std::string& flag) {
  if (flag == "auto") return std::nullopt;
  if (flag == "kineto") return Dialect::KinetoGpu;
  if (flag == "xla") return Dialect::XlaTpu;
  throw ParseError("unknown dialect '" + flag + "' (auto|kineto|xla)");
}

inline ClassificationConfig load_patterns(const std::string& path) {
  ClassificationConfig cfg = ClassificationConfig::defaults();
  if (!path.empty()) cfg.apply_overrides(read_json_file(path));
  return cfg;
}

inline PeakFlopsTable load_peaks(const std::string& path) {
  if (path.empty()) return PeakFlopsTable::defaults();
  return PeakFlopsTable::from_json(read_json_file(path));
}

inline std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- commands ----------------------------------------------------------------

struct CommonTraceArgs {
  std::string card_path;
  std::vector<std::string> trace_paths;
  std::string dialect_flag = "auto";
  std::string patterns_path;
};

struct LoadedInputs {
  WorkloadCard card;
  NormalizedTrace trace;
  ClassificationConfig patterns;
};

inline LoadedInputs load_inputs(const CommonTraceArgs& args) {
  LoadedInputs in{parse_card_file(args.card_path), {},
                  load_patterns(args.patterns_path)};
  TraceLoadOptions opts;
  opts.dialect = parse_dialect_flag(args.dialect_flag);
  opts.patterns = in.patterns;
  in.trace = load_trace(args.trace_paths, opts);
  return in;
}

inline int cmd_validate(const CommonTraceArgs& args, bool relaxed,
                        const std::string& format, std::ostream& out) {
  const LoadedInputs in = load_inputs(args);
  const ValidationReport report =
      validate_submission(in.card, in.trace, relaxed);
  if (format == "table") {
    out << std::left << std::setw(26) << "RULE" << std::setw(10) << "SEVERITY"
        << "MESSAGE\n";
    for (const ValidationFinding& f : report.findings) {
      out << std::left << std::setw(26) << f.rule << std::setw(10)
          << to_string(f.severity) << f.message << "\n";
    }
  } else {
    emit(out, report.to_json());
  }
  return report.has_errors() ? kExitInputError : kExitOk;
}

inline int cmd_metrics(const CommonTraceArgs& args, const std::string& only,
                       const std::string& peaks_path, bool drop_edge_steps,
                       const std::string& format, std::ostream& out) {
  const LoadedInputs in = load_inputs(args);
  const PeakFlopsTable peaks = load_peaks(peaks_path);
  MetricOptions options;
  options.drop_edge_steps = drop_edge_steps;
  const ToolContext ctx{in.card, in.trace, in.patterns, peaks, options};

  std::vector<Tool> registry = default_registry();
  if (!only.empty()) {
    std::set<std::string> wanted;
    std::stringstream ss(only);
    std::string key;
    while (std::getline(ss, key, ',')) {
      if (!key.empty()) wanted.insert(key);
    }
    std::erase_if(registry,
                  [&wanted](const Tool& t) { return !wanted.count(t.key); });
    if (registry.empty()) {
      throw ParseError("--only selected no known metric keys");
    }
  }

  const PerformanceProfile profile = run_suite(ctx, registry, args.card_path);
  if (format == "table") {
    out << std::left << std::setw(34) << "METRIC" << std::setw(16) << "VALUE"
        << std::setw(12) << "UNIT" << "DIRECTION\n";
    for (const MetricResult& m : profile.entries) {
      out << std::left << std::setw(34) << m.key << std::setw(16)
          << format_value(m.value) << std::setw(12) << m.unit
          << to_string(m.direction) << "\n";
    }
    for (const SkippedTool& s : profile.skipped) {
      out << std::left << std::setw(34) << s.key << "skipped: " << s.reason
          << "\n";
    }
  } else {
    emit(out, profile.to_json());
  }
  return kExitOk;
}

inline int cmd_compare(const std::string& path_a, const std::string& path_b,
                       const std::string& format, std::ostream& out) {
  const PerformanceProfile a =
      PerformanceProfile::from_json(read_json_file(path_a));
  const PerformanceProfile b =
      PerformanceProfile::from_json(read_json_file(path_b));

  nlohmann::ordered_json doc;
  doc["a"] = path_a;
  doc["b"] = path_b;
  doc["rows"] = nlohmann::ordered_json::array();

  std::vector<std::string> keys;
  for (const MetricResult& m : a.entries) keys.push_back(m.key);
  for (const MetricResult& m : b.entries) {
    if (!a.find(m.key)) keys.push_back(m.key);
  }

  for (const std::string& key : keys) {
    const MetricResult* ma = a.find(key);
    const MetricResult* mb = b.find(key);
    nlohmann::ordered_json row;
    row["key"] = key;
    if (ma && mb) {
      row["a"] = ma->value;
      row["b"] = mb->value;
      const double delta = mb->value - ma->value;
      row["delta"] = delta;
      if (ma->value != 0.0) {
        row["delta_pct"] = delta / std::abs(ma->value) * 100.0;
      } else {
        row["delta_pct"] = nullptr;
      }
      if (ma->value == mb->value) {
        row["better"] = "tie";
      } else if (ma->direction == Direction::HigherBetter) {
        row["better"] = mb->value > ma->value ? "b" : "a";
      } else {
        row["better"] = mb->value < ma->value ? "b" : "a";
      }
    } else {
      row["only_in"] = ma ? "a" : "b";
      row["value"] = ma ? ma->value : mb->value;
    }
    doc["rows"].push_back(std::move(row));
  }

  if (format == "table") {
    out << std::left << std::setw(34) << "METRIC" << std::setw(16) << "A"
        << std::setw(16) << "B" << std::setw(16) << "DELTA" << "BETTER\n";
    for (const auto& row : doc["rows"]) {
      out << std::left << std::setw(34) << row["key"].get<std::string>();
      if (row.contains("only_in")) {
        out << "only in " << row["only_in"].get<std::string>() << " ("
            << format_value(row["value"].get<double>()) << ")\n";
      } else {
        out << std::setw(16) << format_value(row["a"].get<double>())
            << std::setw(16) << format_value(row["b"].get<double>())
            << std::setw(16) << format_value(row["delta"].get<double>())
            << row["better"].get<std::string>() << "\n";
      }
    }
  } else {
    emit(out, doc);
  }
  return kExitOk;
}

inline int cmd_whatif(const CommonTraceArgs& args, const std::string& net_path,
                      std::vector<std::string> resources, int step,
                      double max_unsized, std::ostream& out) {
  const LoadedInputs in = load_inputs(args);
  NetworkConfig net;
  if (!net_path.empty()) net = NetworkConfig::from_json(read_json_file(net_path));

  GraphBuildOptions build_opts;
  build_opts.step = step;
  const auto [graph, stats] = build_graph(in.trace, in.card, build_opts);

  if (stats.total_collectives > 0) {
    const double unsized_fraction =
        static_cast<double>(stats.unsized_collectives) /
        static_cast<double>(stats.total_collectives);
    if (unsized_fraction > max_unsized) {
      throw GraphError(
          "refusing what-if analysis: " +
          std::to_string(stats.unsized_collectives) + " of " +
          std::to_string(stats.total_collectives) +
          " collectives carry no message size (limit --max-unsized=" +
          format_value(max_unsized) + "); re-simulated times would be "
          "dominated by unmodeled transfers");
    }
  }

  if (resources.empty()) {
    resources = {"scale_out_bandwidth", "scale_up_bandwidth",
                 "scale_up_domain_size"};
  }

  nlohmann::ordered_json doc;
  doc["network"] = net.to_json();
  doc["measured_step_time_s"] =
      replay(graph, net, ReplayMode::Measured).step_time_s;
  doc["baseline_step_time_s"] =
      replay(graph, net, ReplayMode::Modeled).step_time_s;
  doc["build"] = {{"total_collectives", stats.total_collectives},
                  {"unsized_collectives", stats.unsized_collectives}};
  doc["results"] = nlohmann::ordered_json::array();
  for (const std::string& name : resources) {
    const auto resource = resource_from_string(name);
    if (!resource) {
      throw ParseError("unknown resource '" + name +
                       "' (scale_out_bandwidth|scale_up_bandwidth|"
                       "scale_up_domain_size)");
    }
    const WhatIfResult r = resource_utility(graph, net, *resource);
    doc["results"].push_back({{"resource", to_string(r.resource)},
                              {"baseline_step_time_s", r.baseline_step_time_s},
                              {"simulated_step_time_s", r.simulated_step_time_s},
                              {"utility_pct", r.utility_pct}});
  }
  emit(out, doc);
  return kExitOk;
}

inline int cmd_export_graph(const CommonTraceArgs& args, int step,
                            const std::string& out_path, std::ostream& out) {
  const LoadedInputs in = load_inputs(args);
  GraphBuildOptions build_opts;
  build_opts.step = step;
  const auto [graph, stats] = build_graph(in.trace, in.card, build_opts);
  (void)stats;
  const nlohmann::ordered_json doc = export_graph(graph);
  if (out_path.empty()) {
    emit(out, doc);
  } else {
    std::ofstream file(out_path);
    if (!file) throw ParseError("cannot write graph to " + out_path);
    file << doc.dump(2) << "\n";
  }
  return kExitOk;
}

inline int cmd_search(const std::string& space_path,
                      const std::string& objective_path,
                      const std::string& proposer_spec,
                      const std::string& executor_spec, int budget,
                      std::uint64_t seed, const std::string& start_path,
                      const std::string& history_path, bool timing,
                      std::ostream& out) {
  const ConfigSpace space = ConfigSpace::from_json(read_json_file(space_path));
  const Objective objective =
      Objective::from_json(read_json_file(objective_path));

  std::optional<Config> start;
  if (!start_path.empty()) {
    start = config_from_json(read_json_file(start_path));
  }

  std::unique_ptr<Proposer> proposer;
  if (proposer_spec == "random") {
    proposer = std::make_unique<RandomSearchProposer>(seed);
  } else if (proposer_spec == "hillclimb") {
    proposer = std::make_unique<CoordinateHillClimbProposer>(seed, start);
  } else if (proposer_spec.rfind("cmd:", 0) == 0) {
    proposer = std::make_unique<ExternalCommandProposer>(proposer_spec.substr(4));
  } else {
    throw ParseError("unknown proposer '" + proposer_spec +
                     "' (random|hillclimb|cmd:<command>)");
  }

  std::unique_ptr<Executor> executor;
  if (executor_spec.rfind("table:", 0) == 0) {
    executor = std::make_unique<TableExecutor>(
        TableExecutor::from_json(read_json_file(executor_spec.substr(6))));
  } else if (executor_spec.rfind("sim:", 0) == 0) {
    const std::string rest = executor_spec.substr(4);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) {
      throw ParseError("sim executor spec is sim:<graph.json>,<net.json>");
    }
    ExecutionGraph graph = import_graph(read_json_file(rest.substr(0, comma)));
    NetworkConfig net =
        NetworkConfig::from_json(read_json_file(rest.substr(comma + 1)));
    executor = std::make_unique<SimExecutor>(std::move(graph), net);
  } else {
    throw ParseError("unknown executor '" + executor_spec +
                     "' (table:<file>|sim:<graph>,<net>)");
  }

  std::ofstream history_file;
  if (!history_path.empty()) {
    history_file.open(history_path, std::ios::trunc);
    if (!history_file) {
      throw ParseError("cannot write history to " + history_path);
    }
  }
  // Trials persist as they complete, so an interrupted run loses at most the
  // in-flight trial.
  auto sink = [&](const SearchTrial& trial) {
    if (history_file.is_open()) {
      history_file << trial_to_json(trial, timing).dump() << "\n";
      history_file.flush();
    }
  };

  const SearchHistory history =
      run_search(space, objective, *proposer, *executor, budget, sink);

  nlohmann::ordered_json doc;
  doc["budget"] = budget;
  doc["trials"] = history.trials.size();
  std::size_t failed = 0;
  for (const SearchTrial& t : history.trials) failed += t.succeeded ? 0 : 1;
  doc["failed_trials"] = failed;
  if (const auto best = history.best_index()) {
    const SearchTrial& t = history.trials[*best];
    nlohmann::ordered_json best_doc;
    best_doc["iteration"] = t.iteration;
    best_doc["config"] = config_to_json(t.config);
    best_doc["score"] = *t.score;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.metrics) metrics[k] = v;
    best_doc["metrics"] = std::move(metrics);
    doc["best"] = std::move(best_doc);
  } else {
    doc["best"] = nullptr;
  }

  if (objective.kind == Objective::Kind::Composite) {
    // Pareto frontier over (step time, device count) among succeeded trials.
    struct Point {
      double t;
      int n;
      int iteration;
    };
    std::vector<Point> points;
    for (const SearchTrial& t : history.trials) {
      if (!t.succeeded || !t.num_devices) continue;
      const auto it = t.metrics.find("avg_step_time");
      if (it == t.metrics.end()) continue;
      points.push_back({it->second, *t.num_devices, t.iteration});
    }
    nlohmann::ordered_json pareto = nlohmann::ordered_json::array();
    for (const Point& p : points) {
      bool dominated = false;
      for (const Point& q : points) {
        if ((q.t < p.t && q.n <= p.n) || (q.t <= p.t && q.n < p.n)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) {
        pareto.push_back({{"iteration", p.iteration},
                          {"avg_step_time", p.t},
                          {"num_devices", p.n}});
      }
    }
    doc["pareto"] = std::move(pareto);
  }

  emit(out, doc);
  return kExitOk;
}

inline int cmd_package_entry(const std::string& card_path,
                             const std::vector<std::string>& trace_paths,
                             const std::vector<std::string>& script_paths,
                             const std::string& profile_path,
                             const std::string& out_path, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["card"] = {{"path", card_path},
                 {"sha256", sha256_hex(read_text_file(card_path))}};
  doc["traces"] = nlohmann::ordered_json::array();
  for (const std::string& p : trace_paths) {
    doc["traces"].push_back({{"path", p}, {"sha256", sha256_hex(read_text_file(p))}});
  }
  doc["scripts"] = nlohmann::ordered_json::array();
  for (const std::string& p : script_paths) {
    doc["scripts"].push_back({{"path", p}, {"sha256", sha256_hex(read_text_file(p))}});
  }
  if (!profile_path.empty()) {
    doc["profile"] = {{"path", profile_path},
                      {"sha256", sha256_hex(read_text_file(profile_path))}};
  }
  if (out_path.empty()) {
    emit(out, doc);
  } else {
    std::ofstream file(out_path);
    if (!file) throw ParseError("cannot write entry to " + out_path);
    file << doc.dump(2) << "\n";
  }
  return kExitOk;
}

inline int cmd_verify_entry(const std::string& entry_path, std::ostream& out) {
  const nlohmann::json entry = read_json_file(entry_path);
  nlohmann::ordered_json doc;
  doc["entry"] = entry_path;
  doc["mismatches"] = nlohmann::ordered_json::array();
  auto check = [&doc](const nlohmann::json& item) {
    const std::string path = item.at("path").get<std::string>();
    const std::string expected = item.at("sha256").get<std::string>();
    std::string actual;
    try {
      actual = sha256_hex(read_text_file(path));
    } catch (const ParseError&) {
      actual = "<missing file>";
    }
    if (actual != expected) {
      doc["mismatches"].push_back(
          {{"path", path}, {"expected", expected}, {"actual", actual}});
    }
  };
  check(entry.at("card"));
  for (const auto& t : entry.at("traces")) check(t);
  for (const auto& s : entry.at("scripts")) check(s);
  if (entry.contains("profile")) check(entry.at("profile"));
  doc["ok"] = doc["mismatches"].empty();
  emit(out, doc);
  return doc["ok"].get<bool>() ? kExitOk : kExitInputError;
}

}  // namespace cli_detail

inline int run(std::vector<std::string> args, std::ostream& out,
               std::ostream& err) {
  using namespace cli_detail;

  CLI::App app{"trace-evidence toolkit for distributed ML workloads"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand(
      "validate", "run submission checks on a card + trace pair");
  CommonTraceArgs validate_args;
  bool relaxed = false;
  std::string validate_format = "json";
  validate->add_option("card", validate_args.card_path)->required();
  validate->add_option("traces", validate_args.trace_paths)->required();
  validate->add_option("--dialect", validate_args.dialect_flag);
  validate->add_option("--patterns", validate_args.patterns_path);
  validate->add_flag("--relaxed", relaxed,
                     "downgrade step-count rules to warnings");
  validate->add_option("--format", validate_format)
      ->check(CLI::IsMember({"json", "table"}));

  // metrics
  auto* metrics = app.add_subcommand("metrics",
                                     "compute the metric suite for a card + "
                                     "trace pair");
  CommonTraceArgs metrics_args;
  std::string only_keys;
  std::string peaks_path;
  bool drop_edge_steps = false;
  std::string metrics_format = "json";
  metrics->add_option("card", metrics_args.card_path)->required();
  metrics->add_option("traces", metrics_args.trace_paths)->required();
  metrics->add_option("--dialect", metrics_args.dialect_flag);
  metrics->add_option("--patterns", metrics_args.patterns_path);
  metrics->add_option("--only", only_keys, "comma-separated metric keys");
  metrics->add_option("--peaks", peaks_path, "peak FLOP/s table JSON");
  metrics->add_flag("--drop-edge-steps", drop_edge_steps,
                    "exclude first/last window from avg_step_time");
  metrics->add_option("--format", metrics_format)
      ->check(CLI::IsMember({"json", "table"}));

  // compare
  auto* compare =
      app.add_subcommand("compare", "side-by-side deltas of two profiles");
  std::string compare_a;
  std::string compare_b;
  std::string compare_format = "json";
  compare->add_option("profile_a", compare_a)->required();
  compare->add_option("profile_b", compare_b)->required();
  compare->add_option("--format", compare_format)
      ->check(CLI::IsMember({"json", "table"}));

  // whatif
  auto* whatif = app.add_subcommand(
      "whatif", "replay the execution graph under doubled network resources");
  CommonTraceArgs whatif_args;
  std::string net_path;
  std::vector<std::string> resources;
  int whatif_step = 0;
  double max_unsized = 0.10;
  whatif->add_option("card", whatif_args.card_path)->required();
  whatif->add_option("traces", whatif_args.trace_paths)->required();
  whatif->add_option("--dialect", whatif_args.dialect_flag);
  whatif->add_option("--patterns", whatif_args.patterns_path);
  whatif->add_option("--net", net_path, "network config JSON");
  whatif->add_option("--resource", resources,
                     "resource(s) to double; default all three");
  whatif->add_option("--step", whatif_step, "inner step window to convert");
  whatif->add_option("--max-unsized", max_unsized,
                     "max tolerated fraction of unsized collectives");

  // export-graph
  auto* export_cmd =
      app.add_subcommand("export-graph", "emit the execution graph as JSON");
  CommonTraceArgs export_args;
  int export_step = 0;
  std::string export_out;
  export_cmd->add_option("card", export_args.card_path)->required();
  export_cmd->add_option("traces", export_args.trace_paths)->required();
  export_cmd->add_option("--dialect", export_args.dialect_flag);
  export_cmd->add_option("--patterns", export_args.patterns_path);
  export_cmd->add_option("--step", export_step);
  export_cmd->add_option("-o,--output", export_out);

  // search
  auto* search = app.add_subcommand(
      "search", "run a configuration search over a declared space");
  std::string space_path;
  std::string objective_path;
  std::string proposer_spec = "random";
  std::string executor_spec;
  int budget = 0;
  std::uint64_t seed = 0;
  std::string start_path;
  std::string history_path;
  bool timing = false;
  search->add_option("--space", space_path)->required();
  search->add_option("--objective", objective_path)->required();
  search->add_option("--proposer", proposer_spec,
                     "random | hillclimb | cmd:<command>");
  search->add_option("--executor", executor_spec,
                     "table:<file> | sim:<graph>,<net>")
      ->required();
  search->add_option("--budget", budget)->required();
  search->add_option("--seed", seed);
  search->add_option("--start", start_path, "seed config JSON");
  search->add_option("--history", history_path, "JSONL output path");
  search->add_flag("--timing", timing,
                   "include wall times in the JSONL record (breaks "
                   "byte-reproducibility)");

  // package-entry
  auto* package = app.add_subcommand(
      "package-entry", "record a benchmark entry manifest with file hashes");
  std::string pkg_card;
  std::vector<std::string> pkg_traces;
  std::vector<std::string> pkg_scripts;
  std::string pkg_profile;
  std::string pkg_out;
  std::string pkg_verify;
  package->add_option("--card", pkg_card);
  package->add_option("--trace", pkg_traces);
  package->add_option("--scripts", pkg_scripts);
  package->add_option("--profile", pkg_profile);
  package->add_option("-o,--output", pkg_out);
  package->add_option("--verify", pkg_verify,
                      "verify hashes of an existing entry instead");

  try {
    std::reverse(args.begin(), args.end());  // CLI11 wants reversed argv
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (validate->parsed()) {
      return cmd_validate(validate_args, relaxed, validate_format, out);
    }
    if (metrics->parsed()) {
      return cmd_metrics(metrics_args, only_keys, peaks_path, drop_edge_steps,
                         metrics_format, out);
    }
    if (compare->parsed()) {
      return cmd_compare(compare_a, compare_b, compare_format, out);
    }
    if (whatif->parsed()) {
      return cmd_whatif(whatif_args, net_path, resources, whatif_step,
                        max_unsized, out);
    }
    if (export_cmd->parsed()) {
      return cmd_export_graph(export_args, export_step, export_out, out);
    }
    if (search->parsed()) {
      if (budget < 1) {
        err << "error: --budget must be >= 1\n";
        return kExitInputError;
      }
      return cmd_search(space_path, objective_path, proposer_spec,
                        executor_spec, budget, seed, start_path, history_path,
                        timing, out);
    }
    if (package->parsed()) {
      if (!pkg_verify.empty()) return cmd_verify_entry(pkg_verify, out);
      if (pkg_card.empty()) {
        err << "error: --card is required when packaging\n";
        return kExitInputError;
      }
      return cmd_package_entry(pkg_card, pkg_traces, pkg_scripts, pkg_profile,
                               pkg_out, out);
    }
    err << "error: no subcommand\n";
    return kExitInputError;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const SchemaError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const EmptyTraceError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const DialectMismatchError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const GraphError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const ToolError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternalError;
  }
}

}  // namespace tracebench::cli
