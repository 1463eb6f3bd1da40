// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// Desk-scale configuration search: propose -> execute -> score -> update over
// a declared configuration space, every trial recorded as a reproducible
// benchmark entry. Proposers and executors are pluggable; the built-in
// proposers are deterministic under a fixed seed, and an external-command
// hook stands in for policy engines that live outside this process.

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/whatif.hpp"

namespace tracebench {

class ProposerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration is a full assignment of space keys to values.
using Config = std::map<std::string, nlohmann::json>;

struct ConfigDimension {
  std::string key;
  std::string type;  // int | bool | enum
  std::vector<nlohmann::json> choices;
  std::string description;
};

struct ConfigSpace {
  std::vector<ConfigDimension> dims;

  static ConfigSpace from_json(const nlohmann::json& doc) {
    ConfigSpace space;
    const nlohmann::json& list =
        doc.is_array() ? doc : doc.at("config_space");
    for (const auto& d : list) {
      ConfigDimension dim;
      dim.key = d.at("key").get<std::string>();
      dim.type = d.value("type", "enum");
      for (const auto& c : d.at("choices")) dim.choices.push_back(c);
      dim.description = d.value("description", "");
      if (dim.choices.empty()) {
        throw SchemaError("config_space." + dim.key,
                          "dimension has no choices");
      }
      for (const ConfigDimension& other : space.dims) {
        if (other.key == dim.key) {
          throw SchemaError("config_space." + dim.key, "duplicate key");
        }
      }
      space.dims.push_back(std::move(dim));
    }
    if (space.dims.empty()) {
      throw SchemaError("config_space", "space has no dimensions");
    }
    return space;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const ConfigDimension& d : dims) {
      nlohmann::ordered_json dim;
      dim["key"] = d.key;
      dim["type"] = d.type;
      dim["choices"] = d.choices;
      if (!d.description.empty()) dim["description"] = d.description;
      list.push_back(std::move(dim));
    }
    return list;
  }

  // Exact-assignment membership: every dimension bound, no extra keys, every
  // value drawn from the dimension's choices.
  bool contains(const Config& config) const {
    if (config.size() != dims.size()) return false;
    for (const ConfigDimension& d : dims) {
      const auto it = config.find(d.key);
      if (it == config.end()) return false;
      if (std::find(d.choices.begin(), d.choices.end(), it->second) ==
          d.choices.end()) {
        return false;
      }
    }
    return true;
  }

  // Default seed configuration: the first choice of every dimension.
  Config default_config() const {
    Config c;
    for (const ConfigDimension& d : dims) c[d.key] = d.choices.front();
    return c;
  }
};

inline nlohmann::ordered_json config_to_json(const Config& config) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) doc[k] = v;
  return doc;
}

inline Config config_from_json(const nlohmann::json& doc) {
  Config c;
  for (const auto& [k, v] : doc.items()) c[k] = v;
  return c;
}

// --- objective ----------------------------------------------------------------

// Scores are canonicalized to maximize-form: a minimized metric key k becomes
// score = -value(k). The composite form rewards configurations that reduce
// step time and device count relative to a baseline (T0, N0).
struct Objective {
  enum class Kind { MinimizeMetric, Composite };
  Kind kind = Kind::MinimizeMetric;
  std::string metric_key = "avg_step_time";
  double weight = 0.5;  // w
  double baseline_step_time_s = 1.0;  // T0
  double baseline_devices = 1.0;      // N0

  static Objective minimize(std::string key) {
    Objective o;
    o.kind = Kind::MinimizeMetric;
    o.metric_key = std::move(key);
    return o;
  }

  static Objective composite(double w, double t0, double n0) {
    Objective o;
    o.kind = Kind::Composite;
    o.weight = w;
    o.baseline_step_time_s = t0;
    o.baseline_devices = n0;
    o.validate();
    return o;
  }

  void validate() const {
    if (kind == Kind::Composite) {
      if (weight < 0.0 || weight > 1.0) {
        throw SchemaError("objective.w", "must lie in [0, 1]");
      }
      if (baseline_step_time_s <= 0 || baseline_devices <= 0) {
        throw SchemaError("objective.baseline", "T0 and N0 must be > 0");
      }
    }
  }

  static Objective from_json(const nlohmann::json& doc) {
    Objective o;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "minimize_metric") {
      o.kind = Kind::MinimizeMetric;
      o.metric_key = doc.at("metric").get<std::string>();
    } else if (kind == "composite") {
      o.kind = Kind::Composite;
      o.weight = doc.at("w").get<double>();
      o.baseline_step_time_s = doc.at("t0").get<double>();
      o.baseline_devices = doc.at("n0").get<double>();
    } else {
      throw SchemaError("objective.kind",
                        "must be 'minimize_metric' or 'composite'");
    }
    o.validate();
    return o;
  }

  nlohmann::ordered_json to_json() const {
    if (kind == Kind::MinimizeMetric) {
      return {{"kind", "minimize_metric"}, {"metric", metric_key}};
    }
    return {{"kind", "composite"},
            {"w", weight},
            {"t0", baseline_step_time_s},
            {"n0", baseline_devices}};
  }

  double composite_score(double step_time_s, double devices) const {
    return weight * (baseline_step_time_s / step_time_s) +
           (1.0 - weight) * (baseline_devices / devices);
  }
};

// --- trial record ---------------------------------------------------------------

struct ExecutionResult {
  bool ok = false;
  std::string failure_reason;
  PerformanceProfile profile;          // valid when ok
  std::optional<int> num_devices;      // for composite objectives
  std::vector<std::string> entry_paths;
};

struct SearchTrial {
  int iteration = 0;
  Config config;
  bool succeeded = false;
  std::string failure_reason;               // when failed
  std::map<std::string, double> metrics;    // flattened profile
  std::optional<int> num_devices;
  std::optional<double> score;              // absent on failure
  std::vector<std::string> entry_paths;
  double wall_time_s = 0.0;  // excluded from the JSONL record by default
};

// JSONL line for one trial. Timing is opt-in: identical seeded runs must
// produce byte-identical history files.
inline nlohmann::ordered_json trial_to_json(const SearchTrial& trial,
                                            bool include_timing = false) {
  nlohmann::ordered_json doc;
  doc["iteration"] = trial.iteration;
  doc["config"] = config_to_json(trial.config);
  doc["status"] = trial.succeeded ? "succeeded" : "failed";
  if (!trial.succeeded) {
    doc["reason"] = trial.failure_reason;
  } else {
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, v] : trial.metrics) metrics[k] = v;
    doc["metrics"] = std::move(metrics);
    if (trial.num_devices) doc["num_devices"] = *trial.num_devices;
    doc["score"] = *trial.score;
  }
  if (!trial.entry_paths.empty()) doc["entry_paths"] = trial.entry_paths;
  if (include_timing) doc["wall_time_s"] = trial.wall_time_s;
  return doc;
}

struct SearchHistory {
  std::vector<SearchTrial> trials;

  // Index of the best succeeded trial (maximize-form score, earliest wins
  // ties); absent while nothing has succeeded.
  std::optional<std::size_t> best_index() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (!trials[i].score) continue;
      if (!best || *trials[i].score > *trials[*best].score) best = i;
    }
    return best;
  }

  std::string to_jsonl(bool include_timing = false) const {
    std::string out;
    for (const SearchTrial& t : trials) {
      out += trial_to_json(t, include_timing).dump();
      out += '\n';
    }
    return out;
  }
};

// --- proposers ------------------------------------------------------------------

class Proposer {
 public:
  virtual ~Proposer() = default;
  // Receives the full history after every trial; must return a config drawn
  // from the space. Throw ProposerError to record a failed trial.
  virtual Config propose(const ConfigSpace& space,
                         const SearchHistory& history) = 0;
};

// Uniform independent sampling. Choice indices come from `engine() % n`
// rather than a distribution object so the sequence is identical on every
// platform.
class RandomSearchProposer : public Proposer {
 public:
  explicit RandomSearchProposer(std::uint64_t seed) : engine_(seed) {}

  Config propose(const ConfigSpace& space, const SearchHistory&) override {
    Config c;
    for (const ConfigDimension& d : space.dims) {
      c[d.key] = d.choices[engine_() % d.choices.size()];
    }
    return c;
  }

 private:
  std::mt19937_64 engine_;
};

// Coordinate hill climbing: starting from a seed configuration, proposes
// single-dimension mutations of the incumbent (the best succeeded config so
// far) until no untried single-dimension move remains, then re-proposes the
// incumbent. The candidate order is a seeded shuffle, recomputed from the
// history each call, so a run is fully reproducible from (seed, history).
class CoordinateHillClimbProposer : public Proposer {
 public:
  explicit CoordinateHillClimbProposer(std::uint64_t seed,
                                       std::optional<Config> start = {})
      : seed_(seed), start_(std::move(start)) {}

  Config propose(const ConfigSpace& space,
                 const SearchHistory& history) override {
    const Config start = start_.value_or(space.default_config());
    if (history.trials.empty()) return start;

    Config incumbent = start;
    if (const auto best = history.best_index()) {
      incumbent = history.trials[*best].config;
    }

    std::set<std::string> tried;
    for (const SearchTrial& t : history.trials) {
      tried.insert(config_to_json(t.config).dump());
    }
    if (!tried.count(config_to_json(start).dump())) return start;

    std::mt19937_64 engine(seed_);
    std::vector<std::size_t> dim_order(space.dims.size());
    for (std::size_t i = 0; i < dim_order.size(); ++i) dim_order[i] = i;
    shuffle(dim_order, engine);

    for (const std::size_t di : dim_order) {
      const ConfigDimension& dim = space.dims[di];
      std::vector<std::size_t> choice_order(dim.choices.size());
      for (std::size_t i = 0; i < choice_order.size(); ++i) choice_order[i] = i;
      shuffle(choice_order, engine);
      for (const std::size_t ci : choice_order) {
        if (dim.choices[ci] == incumbent.at(dim.key)) continue;
        Config candidate = incumbent;
        candidate[dim.key] = dim.choices[ci];
        if (!tried.count(config_to_json(candidate).dump())) return candidate;
      }
    }
    return incumbent;  // converged: no untried single-dimension move
  }

 private:
  // Fisher-Yates with engine() % n, for cross-platform determinism.
  static void shuffle(std::vector<std::size_t>& xs, std::mt19937_64& engine) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::swap(xs[i - 1], xs[engine() % i]);
    }
  }

  std::uint64_t seed_;
  std::optional<Config> start_;
};

// Shells out one child process per proposal. The request document
// {iteration, space, history} goes to the child's stdin; the child answers
// with one JSON line {"config": {...}} on stdout.
class ExternalCommandProposer : public Proposer {
 public:
  explicit ExternalCommandProposer(std::string command)
      : command_(std::move(command)) {}

  Config propose(const ConfigSpace& space,
                 const SearchHistory& history) override {
    nlohmann::ordered_json request;
    request["iteration"] = static_cast<int>(history.trials.size());
    request["space"] = space.to_json();
    request["history"] = nlohmann::ordered_json::array();
    for (const SearchTrial& t : history.trials) {
      request["history"].push_back(trial_to_json(t));
    }
    const std::string output = run_child(request.dump() + "\n");
    try {
      const nlohmann::json reply = nlohmann::json::parse(output);
      const nlohmann::json& cfg =
          reply.contains("config") ? reply.at("config") : reply;
      if (!cfg.is_object()) {
        throw ProposerError("external proposer reply carries no config object");
      }
      return config_from_json(cfg);
    } catch (const nlohmann::json::exception& ex) {
      throw ProposerError(std::string("external proposer output is not valid "
                                      "JSON: ") + ex.what());
    }
  }

 private:
  std::string run_child(const std::string& input) const {
    signal(SIGPIPE, SIG_IGN);  // the child may exit without reading stdin
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
      throw ProposerError("cannot create pipes for external proposer");
    }
    const pid_t pid = fork();
    if (pid < 0) {
      throw ProposerError("cannot fork external proposer");
    }
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), nullptr);
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    std::size_t written = 0;
    while (written < input.size()) {
      const ssize_t n = write(in_pipe[1], input.data() + written,
                              input.size() - written);
      if (n <= 0) break;
      written += static_cast<std::size_t>(n);
    }
    close(in_pipe[1]);
    std::string output;
    char buffer[4096];
    ssize_t n;
    while ((n = read(out_pipe[0], buffer, sizeof(buffer))) > 0) {
      output.append(buffer, static_cast<std::size_t>(n));
    }
    close(out_pipe[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw ProposerError("external proposer exited with status " +
                          std::to_string(WIFEXITED(status)
                                             ? WEXITSTATUS(status)
                                             : -1));
    }
    return output;
  }

  std::string command_;
};

// --- executors ------------------------------------------------------------------

class Executor {
 public:
  virtual ~Executor() = default;
  // Failures are data: return ok=false rather than throwing.
  virtual ExecutionResult execute(const Config& config) = 0;
};

// Replays committed measurements: a fixture table maps configurations to
// metric values or failure reasons. Configurations absent from the table are
// Unmeasured failures.
class TableExecutor : public Executor {
 public:
  struct Row {
    Config config;
    bool ok = true;
    std::string failure_reason;
    std::map<std::string, double> metrics;
    std::optional<int> num_devices;
  };

  explicit TableExecutor(std::vector<Row> rows) : rows_(std::move(rows)) {}

  static TableExecutor from_json(const nlohmann::json& doc) {
    std::vector<Row> rows;
    for (const auto& r : doc.at("rows")) {
      Row row;
      row.config = config_from_json(r.at("config"));
      if (r.contains("fail")) {
        row.ok = false;
        row.failure_reason = r.at("fail").get<std::string>();
      } else {
        for (const auto& [k, v] : r.at("metrics").items()) {
          row.metrics[k] = v.get<double>();
        }
        if (r.contains("num_devices")) {
          row.num_devices = r.at("num_devices").get<int>();
        }
      }
      rows.push_back(std::move(row));
    }
    return TableExecutor(std::move(rows));
  }

  ExecutionResult execute(const Config& config) override {
    for (const Row& row : rows_) {
      if (row.config != config) continue;
      ExecutionResult result;
      if (!row.ok) {
        result.ok = false;
        result.failure_reason = row.failure_reason;
        return result;
      }
      result.ok = true;
      result.num_devices = row.num_devices;
      for (const auto& [k, v] : row.metrics) {
        MetricResult m;
        m.key = k;
        m.value = v;
        m.unit = k == "avg_step_time" ? "s" : "";
        m.direction = Direction::LowerBetter;
        result.profile.entries.push_back(std::move(m));
      }
      return result;
    }
    ExecutionResult result;
    result.ok = false;
    result.failure_reason = "Unmeasured";
    return result;
  }

 private:
  std::vector<Row> rows_;
};

// Derives step time from the what-if replayer: network knobs map onto the
// NetworkConfig, and a tensor-parallel knob scales collective payloads
// (bytes ~ 1/tp), giving proposers a physics-flavored surface to climb.
class SimExecutor : public Executor {
 public:
  SimExecutor(ExecutionGraph graph, NetworkConfig base_net,
              double tp_baseline = 1.0)
      : graph_(std::move(graph)), base_net_(base_net),
        tp_baseline_(tp_baseline) {}

  ExecutionResult execute(const Config& config) override {
    NetworkConfig net = base_net_;
    double bytes_scale = 1.0;
    for (const auto& [key, value] : config) {
      if (key == "scale_up_bandwidth_gbps") {
        net.scale_up_bandwidth_gbps = value.get<double>();
      } else if (key == "scale_out_bandwidth_gbps") {
        net.scale_out_bandwidth_gbps = value.get<double>();
      } else if (key == "scale_up_domain_size") {
        net.scale_up_domain_size = value.get<int>();
      } else if (key == "tp") {
        const double tp = value.get<double>();
        if (tp > 0) bytes_scale = tp_baseline_ / tp;
      }
    }

    ExecutionGraph scaled = graph_;
    if (bytes_scale != 1.0) {
      for (RankGraph& rg : scaled.ranks) {
        for (GraphNode& n : rg.nodes) {
          if (n.comm) {
            n.comm->bytes = static_cast<std::int64_t>(
                std::llround(static_cast<double>(n.comm->bytes) * bytes_scale));
          }
        }
      }
    }

    ExecutionResult result;
    result.ok = true;
    result.num_devices = static_cast<int>(scaled.ranks.size());
    MetricResult m;
    m.key = "avg_step_time";
    m.value = replay(scaled, net, ReplayMode::Modeled).step_time_s;
    m.unit = "s";
    m.direction = Direction::LowerBetter;
    result.profile.entries.push_back(std::move(m));
    return result;
  }

 private:
  ExecutionGraph graph_;
  NetworkConfig base_net_;
  double tp_baseline_;
};

// --- the loop -------------------------------------------------------------------

// Runs exactly `budget` trials. Proposer errors and out-of-space configs are
// recorded as failed trials and never abort the search; `on_trial` fires
// after each trial so history persists incrementally.
inline SearchHistory run_search(
    const ConfigSpace& space, const Objective& objective, Proposer& proposer,
    Executor& executor, int budget,
    const std::function<void(const SearchTrial&)>& on_trial = {}) {
  if (budget < 1) {
    throw SchemaError("search.budget", "must be >= 1");
  }
  objective.validate();

  SearchHistory history;
  for (int iteration = 0; iteration < budget; ++iteration) {
    SearchTrial trial;
    trial.iteration = iteration;
    bool proposed = false;
    try {
      trial.config = proposer.propose(space, history);
      proposed = true;
    } catch (const ProposerError& ex) {
      trial.succeeded = false;
      trial.failure_reason = std::string("ProposerError: ") + ex.what();
    }

    if (proposed && !space.contains(trial.config)) {
      trial.succeeded = false;
      trial.failure_reason = "InvalidConfig: proposal is outside the "
                             "declared space";
      proposed = false;
    }

    if (proposed) {
      ExecutionResult result;
      try {
        result = executor.execute(trial.config);
      } catch (const std::exception& ex) {
        result.ok = false;
        result.failure_reason = std::string("ExecutorError: ") + ex.what();
      }
      if (!result.ok) {
        trial.succeeded = false;
        trial.failure_reason = result.failure_reason;
      } else {
        trial.num_devices = result.num_devices;
        trial.entry_paths = result.entry_paths;
        for (const MetricResult& m : result.profile.entries) {
          trial.metrics[m.key] = m.value;
        }
        if (objective.kind == Objective::Kind::MinimizeMetric) {
          const auto it = trial.metrics.find(objective.metric_key);
          if (it == trial.metrics.end()) {
            trial.succeeded = false;
            trial.failure_reason =
                "ScoreUnavailable: metric '" + objective.metric_key +
                "' missing from execution profile";
          } else {
            trial.succeeded = true;
            trial.score = -it->second;
          }
        } else {
          const auto it = trial.metrics.find("avg_step_time");
          if (it == trial.metrics.end() || it->second <= 0) {
            trial.succeeded = false;
            trial.failure_reason =
                "ScoreUnavailable: composite objective needs avg_step_time";
          } else if (!trial.num_devices || *trial.num_devices <= 0) {
            trial.succeeded = false;
            trial.failure_reason =
                "ScoreUnavailable: composite objective needs num_devices";
          } else {
            trial.succeeded = true;
            trial.score = objective.composite_score(
                it->second, static_cast<double>(*trial.num_devices));
          }
        }
      }
    }

    history.trials.push_back(trial);
    if (on_trial) on_trial(history.trials.back());
  }
  return history;
}

}  // namespace tracebench
