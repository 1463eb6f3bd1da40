// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

// The YAML workload card: the document that makes a trace interpretable.
// Recognized fields bind to typed members; unrecognized fields are preserved
// verbatim in an extras bag so parse -> serialize -> parse is a fixed point
// and future card revisions pass through untouched.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/errors.hpp"
#include "tracebench/trace.hpp"

namespace tracebench {

struct Parallelization {
  std::optional<std::int64_t> dp_replicate;
  std::optional<std::int64_t> dp_shard;
  std::optional<std::int64_t> tp;
  std::optional<std::int64_t> pp;
  std::optional<std::int64_t> cp;
  std::optional<std::int64_t> ep;
  std::optional<std::int64_t> pp_mb;
  friend bool operator==(const Parallelization&, const Parallelization&) = default;
};

struct WorkloadCard {
  // Provenance
  std::optional<std::string> version;
  std::optional<std::string> description;
  std::optional<std::string> hf_url;
  std::optional<std::string> trace_url;
  std::optional<std::string> contributor;
  std::optional<std::string> contact;

  // workload.model
  Phase phase = Phase::Training;  // required
  std::optional<bool> moe;
  std::optional<std::string> granularity;  // stored as an opaque string
  std::string model_family;                // required
  std::optional<std::string> precision;
  std::optional<std::int64_t> epochs;
  std::optional<std::int64_t> iteration;
  std::optional<StepLabeling> step_labeling;  // optional card flag

  // workload.model.model_arch
  std::optional<std::int64_t> num_params;
  std::optional<std::int64_t> num_params_active;
  std::optional<std::int64_t> num_params_embedding;
  std::optional<std::int64_t> num_layers;
  std::optional<std::int64_t> num_heads;
  std::optional<std::int64_t> head_dim;

  // workload.data
  std::int64_t batch_size = 0;  // required
  std::int64_t seq_len = 0;     // required
  std::optional<std::int64_t> input_len;
  std::optional<std::int64_t> output_len;
  std::optional<std::string> dataset;

  // workload.hardware
  std::optional<std::string> topology;
  // [scale-out, scale-up] by convention; the card template does not label
  // the two entries.
  std::optional<std::vector<double>> bandwidth_gbps;
  std::optional<std::string> xpu_type;
  std::string xpu_model;          // required
  std::int64_t total_count = 0;   // required
  std::optional<std::int64_t> count_per_node;
  std::optional<std::string> driver_version;

  // Model-executor
  std::optional<std::string> framework_name;
  std::optional<std::string> framework_version;
  std::optional<std::string> compiler_tool_selection;
  Parallelization parallel;
  std::optional<std::string> comm_lib_name;
  std::optional<std::string> comm_lib_version;
  std::optional<std::string> comm_lib_env;
  std::optional<std::vector<std::string>> protocol_selection;

  // metric_source
  std::optional<std::vector<std::string>> trace_kinds;
  std::optional<std::vector<std::string>> metrics_specific_trace;

  // Unrecognized fields: dotted path -> canonical YAML snippet.
  std::vector<std::pair<std::string, std::string>> extras;

  StepLabeling effective_labeling() const {
    return step_labeling.value_or(StepLabeling::FirstIsPrefill);
  }

  friend bool operator==(const WorkloadCard&, const WorkloadCard&) = default;
};

namespace card_detail {

inline std::string joined(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

template <typename T>
inline std::optional<T> scalar(const YAML::Node& n, const std::string& path) {
  if (!n || n.IsNull()) return std::nullopt;
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError(path, "unexpected value type");
  }
}

template <typename T>
inline std::optional<std::vector<T>> sequence(const YAML::Node& n,
                                              const std::string& path) {
  if (!n || n.IsNull()) return std::nullopt;
  if (!n.IsSequence()) throw SchemaError(path, "expected a sequence");
  std::vector<T> out;
  for (const auto& item : n) {
    try {
      out.push_back(item.as<T>());
    } catch (const YAML::Exception&) {
      throw SchemaError(path, "unexpected element type");
    }
  }
  return out;
}

// Dispatch table for one mapping level: recognized keys (with accepted
// aliases) consume the child node; anything else lands in extras.
struct MapWalker {
  using Handler = std::function<void(const YAML::Node&, const std::string&)>;
  std::vector<std::pair<std::vector<std::string>, Handler>> handlers;

  void add(std::vector<std::string> aliases, Handler h) {
    handlers.emplace_back(std::move(aliases), std::move(h));
  }

  void walk(const YAML::Node& node, const std::string& path,
            std::vector<std::pair<std::string, std::string>>& extras) const {
    if (!node) return;
    if (!node.IsMap()) throw SchemaError(path, "expected a mapping");
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      bool handled = false;
      for (const auto& [aliases, handler] : handlers) {
        for (const std::string& alias : aliases) {
          if (alias == key) {
            handler(kv.second, joined(path, aliases.front()));
            handled = true;
            break;
          }
        }
        if (handled) break;
      }
      if (!handled) {
        YAML::Emitter em;
        em << kv.second;
        extras.emplace_back(joined(path, key), em.c_str());
      }
    }
  }
};

inline void check_min(const std::optional<std::int64_t>& v, std::int64_t min,
                      const std::string& path) {
  if (v && *v < min) {
    throw SchemaError(path, "must be >= " + std::to_string(min));
  }
}

}  // namespace card_detail

inline WorkloadCard parse_card(const std::string& yaml_text) {
  using card_detail::MapWalker;
  using card_detail::scalar;
  using card_detail::sequence;

  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& ex) {
    throw ParseError(std::string("workload card is not valid YAML: ") +
                     ex.what());
  }
  if (!root.IsMap()) {
    throw ParseError("workload card must be a YAML mapping");
  }

  WorkloadCard card;
  bool phase_seen = false;
  bool model_family_seen = false;
  bool batch_seen = false;
  bool seq_seen = false;
  bool xpu_model_seen = false;
  bool total_count_seen = false;

  MapWalker arch;
  arch.add({"num_params"}, [&](const YAML::Node& n, const std::string& p) {
    card.num_params = scalar<std::int64_t>(n, p);
  });
  arch.add({"num_params_active"}, [&](const YAML::Node& n, const std::string& p) {
    card.num_params_active = scalar<std::int64_t>(n, p);
  });
  arch.add({"num_params_embedding"}, [&](const YAML::Node& n, const std::string& p) {
    card.num_params_embedding = scalar<std::int64_t>(n, p);
  });
  arch.add({"num_layers"}, [&](const YAML::Node& n, const std::string& p) {
    card.num_layers = scalar<std::int64_t>(n, p);
  });
  arch.add({"num_heads"}, [&](const YAML::Node& n, const std::string& p) {
    card.num_heads = scalar<std::int64_t>(n, p);
  });
  arch.add({"head_dim"}, [&](const YAML::Node& n, const std::string& p) {
    card.head_dim = scalar<std::int64_t>(n, p);
  });

  MapWalker model;
  model.add({"phase"}, [&](const YAML::Node& n, const std::string& p) {
    const auto v = scalar<std::string>(n, p);
    if (!v) return;
    phase_seen = true;
    if (*v == "training") {
      card.phase = Phase::Training;
    } else if (*v == "inference") {
      card.phase = Phase::Inference;
    } else {
      throw SchemaError(p, "must be 'training' or 'inference'");
    }
  });
  model.add({"moe"}, [&](const YAML::Node& n, const std::string& p) {
    card.moe = scalar<bool>(n, p);
  });
  model.add({"granularity"}, [&](const YAML::Node& n, const std::string& p) {
    card.granularity = scalar<std::string>(n, p);
  });
  model.add({"model_family"}, [&](const YAML::Node& n, const std::string& p) {
    if (auto v = scalar<std::string>(n, p)) {
      card.model_family = *v;
      model_family_seen = true;
    }
  });
  model.add({"precision"}, [&](const YAML::Node& n, const std::string& p) {
    card.precision = scalar<std::string>(n, p);
  });
  model.add({"epochs"}, [&](const YAML::Node& n, const std::string& p) {
    card.epochs = scalar<std::int64_t>(n, p);
  });
  model.add({"iteration"}, [&](const YAML::Node& n, const std::string& p) {
    card.iteration = scalar<std::int64_t>(n, p);
  });
  model.add({"step_labeling"}, [&](const YAML::Node& n, const std::string& p) {
    const auto v = scalar<std::string>(n, p);
    if (!v) return;
    if (*v == "first_is_prefill") {
      card.step_labeling = StepLabeling::FirstIsPrefill;
    } else if (*v == "all_decode") {
      card.step_labeling = StepLabeling::AllDecode;
    } else {
      throw SchemaError(p, "must be 'first_is_prefill' or 'all_decode'");
    }
  });
  model.add({"model_arch"}, [&](const YAML::Node& n, const std::string& p) {
    arch.walk(n, p, card.extras);
  });

  MapWalker data;
  data.add({"batch_size"}, [&](const YAML::Node& n, const std::string& p) {
    if (auto v = scalar<std::int64_t>(n, p)) {
      card.batch_size = *v;
      batch_seen = true;
    }
  });
  data.add({"seq_len"}, [&](const YAML::Node& n, const std::string& p) {
    if (auto v = scalar<std::int64_t>(n, p)) {
      card.seq_len = *v;
      seq_seen = true;
    }
  });
  data.add({"input_len"}, [&](const YAML::Node& n, const std::string& p) {
    card.input_len = scalar<std::int64_t>(n, p);
  });
  data.add({"output_len"}, [&](const YAML::Node& n, const std::string& p) {
    card.output_len = scalar<std::int64_t>(n, p);
  });
  data.add({"dataset"}, [&](const YAML::Node& n, const std::string& p) {
    card.dataset = scalar<std::string>(n, p);
  });

  MapWalker network;
  network.add({"topology"}, [&](const YAML::Node& n, const std::string& p) {
    card.topology = scalar<std::string>(n, p);
  });
  network.add({"bandwidth_gbps"}, [&](const YAML::Node& n, const std::string& p) {
    card.bandwidth_gbps = sequence<double>(n, p);
  });

  MapWalker xpu;
  xpu.add({"type"}, [&](const YAML::Node& n, const std::string& p) {
    card.xpu_type = scalar<std::string>(n, p);
  });
  xpu.add({"model"}, [&](const YAML::Node& n, const std::string& p) {
    if (auto v = scalar<std::string>(n, p)) {
      card.xpu_model = *v;
      xpu_model_seen = true;
    }
  });
  xpu.add({"total_count"}, [&](const YAML::Node& n, const std::string& p) {
    if (auto v = scalar<std::int64_t>(n, p)) {
      card.total_count = *v;
      total_count_seen = true;
    }
  });
  xpu.add({"count_per_node"}, [&](const YAML::Node& n, const std::string& p) {
    card.count_per_node = scalar<std::int64_t>(n, p);
  });

  MapWalker hardware;
  hardware.add({"network_topo"}, [&](const YAML::Node& n, const std::string& p) {
    network.walk(n, p, card.extras);
  });
  hardware.add({"xpu_spec"}, [&](const YAML::Node& n, const std::string& p) {
    xpu.walk(n, p, card.extras);
  });
  hardware.add({"driver_version"}, [&](const YAML::Node& n, const std::string& p) {
    card.driver_version = scalar<std::string>(n, p);
  });

  MapWalker workload;
  workload.add({"model"}, [&](const YAML::Node& n, const std::string& p) {
    model.walk(n, p, card.extras);
  });
  workload.add({"data"}, [&](const YAML::Node& n, const std::string& p) {
    data.walk(n, p, card.extras);
  });
  workload.add({"hardware"}, [&](const YAML::Node& n, const std::string& p) {
    hardware.walk(n, p, card.extras);
  });

  MapWalker framework;
  framework.add({"name"}, [&](const YAML::Node& n, const std::string& p) {
    card.framework_name = scalar<std::string>(n, p);
  });
  framework.add({"version"}, [&](const YAML::Node& n, const std::string& p) {
    card.framework_version = scalar<std::string>(n, p);
  });

  MapWalker parallel;
  auto deg = [&](std::optional<std::int64_t>& field) {
    return [&field](const YAML::Node& n, const std::string& p) {
      field = card_detail::scalar<std::int64_t>(n, p);
    };
  };
  parallel.add({"dp_replicate"}, deg(card.parallel.dp_replicate));
  parallel.add({"dp_shard"}, deg(card.parallel.dp_shard));
  parallel.add({"tp"}, deg(card.parallel.tp));
  parallel.add({"pp"}, deg(card.parallel.pp));
  parallel.add({"cp"}, deg(card.parallel.cp));
  parallel.add({"ep"}, deg(card.parallel.ep));
  parallel.add({"pp_mb"}, deg(card.parallel.pp_mb));

  MapWalker comm;
  comm.add({"name"}, [&](const YAML::Node& n, const std::string& p) {
    card.comm_lib_name = scalar<std::string>(n, p);
  });
  comm.add({"version"}, [&](const YAML::Node& n, const std::string& p) {
    card.comm_lib_version = scalar<std::string>(n, p);
  });
  comm.add({"env"}, [&](const YAML::Node& n, const std::string& p) {
    card.comm_lib_env = scalar<std::string>(n, p);
  });

  MapWalker executor;
  executor.add({"framework"}, [&](const YAML::Node& n, const std::string& p) {
    framework.walk(n, p, card.extras);
  });
  executor.add({"compiler_tool_selection"},
               [&](const YAML::Node& n, const std::string& p) {
                 card.compiler_tool_selection = scalar<std::string>(n, p);
               });
  executor.add({"model_plan_parallelization", "parallelization"},
               [&](const YAML::Node& n, const std::string& p) {
                 parallel.walk(n, p, card.extras);
               });
  executor.add({"communication_library"},
               [&](const YAML::Node& n, const std::string& p) {
                 comm.walk(n, p, card.extras);
               });
  executor.add({"protocol_selection"},
               [&](const YAML::Node& n, const std::string& p) {
                 card.protocol_selection = sequence<std::string>(n, p);
               });

  MapWalker source;
  source.add({"traces"}, [&](const YAML::Node& n, const std::string& p) {
    card.trace_kinds = sequence<std::string>(n, p);
  });
  source.add({"metrics_specific_trace"},
             [&](const YAML::Node& n, const std::string& p) {
               card.metrics_specific_trace = sequence<std::string>(n, p);
             });

  MapWalker top;
  auto prov = [&](std::optional<std::string>& field) {
    return [&field](const YAML::Node& n, const std::string& p) {
      field = card_detail::scalar<std::string>(n, p);
    };
  };
  top.add({"version"}, prov(card.version));
  top.add({"description"}, prov(card.description));
  top.add({"hf_url"}, prov(card.hf_url));
  top.add({"trace_url"}, prov(card.trace_url));
  top.add({"contributor"}, prov(card.contributor));
  top.add({"contact"}, prov(card.contact));
  top.add({"workload"}, [&](const YAML::Node& n, const std::string& p) {
    workload.walk(n, p, card.extras);
  });
  top.add({"Model-executor", "model_executor"},
          [&](const YAML::Node& n, const std::string& p) {
            executor.walk(n, p, card.extras);
          });
  top.add({"metric_source"}, [&](const YAML::Node& n, const std::string& p) {
    source.walk(n, p, card.extras);
  });

  top.walk(root, "", card.extras);

  if (!phase_seen) throw SchemaError("workload.model.phase", "required field missing");
  if (!model_family_seen) {
    throw SchemaError("workload.model.model_family", "required field missing");
  }
  if (!batch_seen) throw SchemaError("workload.data.batch_size", "required field missing");
  if (!seq_seen) throw SchemaError("workload.data.seq_len", "required field missing");
  if (!xpu_model_seen) {
    throw SchemaError("workload.hardware.xpu_spec.model", "required field missing");
  }
  if (!total_count_seen) {
    throw SchemaError("workload.hardware.xpu_spec.total_count",
                      "required field missing");
  }

  if (card.batch_size < 1) {
    throw SchemaError("workload.data.batch_size", "must be >= 1");
  }
  if (card.seq_len < 1) throw SchemaError("workload.data.seq_len", "must be >= 1");
  if (card.total_count < 1) {
    throw SchemaError("workload.hardware.xpu_spec.total_count", "must be >= 1");
  }
  card_detail::check_min(card.count_per_node, 1,
                         "workload.hardware.xpu_spec.count_per_node");
  if (card.count_per_node && *card.count_per_node > card.total_count) {
    throw SchemaError("workload.hardware.xpu_spec.count_per_node",
                      "must not exceed total_count");
  }
  const std::string arch_path = "workload.model.model_arch.";
  card_detail::check_min(card.num_params_embedding, 0,
                         arch_path + "num_params_embedding");
  if (card.num_params && card.num_params_embedding &&
      *card.num_params < *card.num_params_embedding) {
    throw SchemaError(arch_path + "num_params",
                      "must be >= num_params_embedding");
  }
  card_detail::check_min(card.num_layers, 1, arch_path + "num_layers");
  card_detail::check_min(card.num_heads, 1, arch_path + "num_heads");
  card_detail::check_min(card.head_dim, 1, arch_path + "head_dim");
  const std::string par_path = "Model-executor.model_plan_parallelization.";
  card_detail::check_min(card.parallel.dp_replicate, 1, par_path + "dp_replicate");
  card_detail::check_min(card.parallel.dp_shard, 1, par_path + "dp_shard");
  card_detail::check_min(card.parallel.tp, 1, par_path + "tp");
  card_detail::check_min(card.parallel.pp, 1, par_path + "pp");
  card_detail::check_min(card.parallel.cp, 1, par_path + "cp");
  card_detail::check_min(card.parallel.ep, 1, par_path + "ep");
  card_detail::check_min(card.parallel.pp_mb, 1, par_path + "pp_mb");
  // Deliberately no check that the parallel degrees multiply to total_count:
  // using fewer devices than allocated is a legitimate configuration.

  return card;
}

inline WorkloadCard parse_card_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open workload card: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_card(buf.str());
}

// Canonical serialization: Table-layout key names, fields in template order,
// extras re-inserted at their recorded paths. Absent optionals are omitted.
inline std::string serialize_card(const WorkloadCard& card) {
  YAML::Node root;
  auto set = [](YAML::Node node, const char* key, const auto& opt) {
    if (opt) node[key] = *opt;
  };
  set(root, "version", card.version);
  set(root, "description", card.description);
  set(root, "hf_url", card.hf_url);
  set(root, "trace_url", card.trace_url);
  set(root, "contributor", card.contributor);
  set(root, "contact", card.contact);

  YAML::Node model = root["workload"]["model"];
  model["phase"] = card.phase == Phase::Training ? "training" : "inference";
  set(model, "moe", card.moe);
  set(model, "granularity", card.granularity);
  model["model_family"] = card.model_family;
  set(model, "precision", card.precision);
  set(model, "epochs", card.epochs);
  set(model, "iteration", card.iteration);
  if (card.step_labeling) {
    model["step_labeling"] = *card.step_labeling == StepLabeling::AllDecode
                                 ? "all_decode"
                                 : "first_is_prefill";
  }
  YAML::Node arch = model["model_arch"];
  set(arch, "num_params", card.num_params);
  set(arch, "num_params_active", card.num_params_active);
  set(arch, "num_params_embedding", card.num_params_embedding);
  set(arch, "num_layers", card.num_layers);
  set(arch, "num_heads", card.num_heads);
  set(arch, "head_dim", card.head_dim);
  if (!arch.size()) model.remove("model_arch");

  YAML::Node data = root["workload"]["data"];
  data["batch_size"] = card.batch_size;
  data["seq_len"] = card.seq_len;
  set(data, "input_len", card.input_len);
  set(data, "output_len", card.output_len);
  set(data, "dataset", card.dataset);

  YAML::Node hardware = root["workload"]["hardware"];
  if (card.topology || card.bandwidth_gbps) {
    YAML::Node topo = hardware["network_topo"];
    set(topo, "topology", card.topology);
    set(topo, "bandwidth_gbps", card.bandwidth_gbps);
  }
  YAML::Node xpu = hardware["xpu_spec"];
  set(xpu, "type", card.xpu_type);
  xpu["model"] = card.xpu_model;
  xpu["total_count"] = card.total_count;
  set(xpu, "count_per_node", card.count_per_node);
  set(hardware, "driver_version", card.driver_version);

  YAML::Node executor = root["Model-executor"];
  if (card.framework_name || card.framework_version) {
    YAML::Node fw = executor["framework"];
    set(fw, "name", card.framework_name);
    set(fw, "version", card.framework_version);
  }
  set(executor, "compiler_tool_selection", card.compiler_tool_selection);
  {
    YAML::Node par = executor["model_plan_parallelization"];
    set(par, "dp_replicate", card.parallel.dp_replicate);
    set(par, "dp_shard", card.parallel.dp_shard);
    set(par, "tp", card.parallel.tp);
    set(par, "pp", card.parallel.pp);
    set(par, "cp", card.parallel.cp);
    set(par, "ep", card.parallel.ep);
    set(par, "pp_mb", card.parallel.pp_mb);
    if (!par.size()) executor.remove("model_plan_parallelization");
  }
  if (card.comm_lib_name || card.comm_lib_version || card.comm_lib_env) {
    YAML::Node lib = executor["communication_library"];
    set(lib, "name", card.comm_lib_name);
    set(lib, "version", card.comm_lib_version);
    set(lib, "env", card.comm_lib_env);
  }
  set(executor, "protocol_selection", card.protocol_selection);
  if (!executor.size()) root.remove("Model-executor");

  if (card.trace_kinds || card.metrics_specific_trace) {
    YAML::Node source = root["metric_source"];
    set(source, "traces", card.trace_kinds);
    set(source, "metrics_specific_trace", card.metrics_specific_trace);
  }

  // Re-insert unrecognized subtrees at their original paths.
  for (const auto& [path, text] : card.extras) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (begin <= path.size()) {
      const std::size_t dot = path.find('.', begin);
      if (dot == std::string::npos) {
        parts.push_back(path.substr(begin));
        break;
      }
      parts.push_back(path.substr(begin, dot - begin));
      begin = dot + 1;
    }
    YAML::Node cursor;
    cursor.reset(root);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      cursor.reset(cursor[parts[i]]);
    }
    cursor[parts.back()] = YAML::Load(text);
  }

  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

// --- Peak FLOP/s table -------------------------------------------------------

// Per-device dense BF16 peak FLOP/s by hardware model string. The defaults
// below are editable via a JSON config ({"nvidia_a100": 312e12, ...}); MFU
// results echo the value actually used so numbers stay auditable.
class PeakFlopsTable {
 public:
  static PeakFlopsTable defaults() {
    PeakFlopsTable t;
    t.per_model_ = {
        {"nvidia_a100", 312e12},
        {"tpu_v6e", 918e12},
        {"nvidia_l40", 90.5e12},
    };
    return t;
  }

  static PeakFlopsTable from_json(const nlohmann::json& doc) {
    PeakFlopsTable t = defaults();
    for (const auto& [model, value] : doc.items()) {
      const double flops = value.get<double>();
      if (flops <= 0) throw SchemaError("peaks." + model, "must be > 0");
      t.per_model_[model] = flops;
    }
    return t;
  }

  std::optional<double> lookup(const std::string& model) const {
    const auto it = per_model_.find(model);
    if (it == per_model_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, double>& entries() const { return per_model_; }

 private:
  std::map<std::string, double> per_model_;
};

}  // namespace tracebench
