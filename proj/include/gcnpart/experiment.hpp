#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcnpart/comm_plan.hpp"
#include "gcnpart/error.hpp"
#include "gcnpart/gcn.hpp"
#include "gcnpart/graph_io.hpp"
#include "gcnpart/metrics.hpp"
#include "gcnpart/models.hpp"
#include "gcnpart/partitioner.hpp"
#include "gcnpart/rng.hpp"
#include "gcnpart/runtime.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

inline constexpr int kReportSchemaVersion = 1;

/// Where a dataset comes from: a file, or a generator spec such as
/// "grid:32x32", "communities:256:8:4" or "random:256:6".
struct GraphSource {
  std::string name;
  std::string path;
  GraphFormat format = GraphFormat::EdgeList;
  std::string generator;
};

enum class TrainMode { Full, Mini };

struct ExperimentConfig {
  std::vector<GraphSource> graphs;
  bool directed = false;
  std::vector<Index> p_values{1};
  std::vector<std::string> partitioners{"rp"};
  std::string partition_file;
  double epsilon = 0.01;
  Index layers = 2;
  std::vector<Index> dims;
  Index epochs = 5;
  TrainMode mode = TrainMode::Full;
  Index batch_size = 0;
  Index batches = 1;
  Index shp_samples = 200;  // b, sampled batches merged by SHP
  Real learning_rate = 0.01;
  std::optional<std::uint64_t> seed;
  Scheduler scheduler = Scheduler::SingleThreaded;
  bool timing = false;  // wall-clock figures make reports nondeterministic
  bool emit_plan = false;
};

namespace detail {

inline bool known_partitioner(const std::string& id) {
  return id == "rp" || id == "gp" || id == "hp" || id == "shp" || id == "file";
}

}  // namespace detail

/// Checks that need no graph data.
inline void validate_config(const ExperimentConfig& cfg) {
  constexpr const char* mod = "cli";
  detail::require(cfg.seed.has_value(), mod, "a seed is required");
  detail::require(!cfg.graphs.empty(), mod, "no graph given");
  detail::require(cfg.layers >= 1, mod, "need at least one layer");
  detail::require(cfg.dims.size() == cfg.layers + 1, mod,
                  "dims lists " + std::to_string(cfg.dims.size()) + " sizes, expected L+1 = " +
                      std::to_string(cfg.layers + 1));
  for (Index d : cfg.dims) detail::require(d >= 1, mod, "layer dimensions must be positive");
  detail::require(!cfg.p_values.empty(), mod, "no processor count given");
  for (Index p : cfg.p_values) detail::require(p >= 1, mod, "p must be at least 1");
  detail::require(!cfg.partitioners.empty(), mod, "no partitioner given");
  for (const auto& id : cfg.partitioners) {
    detail::require(detail::known_partitioner(id), mod, "unknown partitioner '" + id + "'");
  }
  const bool wants_file = std::find(cfg.partitioners.begin(), cfg.partitioners.end(), "file") != cfg.partitioners.end();
  detail::require(!wants_file || !cfg.partition_file.empty(), mod, "partitioner 'file' needs --partition-file");
  detail::require(cfg.epsilon >= 0.0, mod, "epsilon must be non-negative");
  detail::require(cfg.learning_rate > 0.0, mod, "learning rate must be positive");
  const bool wants_shp = std::find(cfg.partitioners.begin(), cfg.partitioners.end(), "shp") != cfg.partitioners.end();
  if (cfg.mode == TrainMode::Mini || wants_shp) {
    detail::require(cfg.batch_size >= 1, mod, "mini-batch training and shp need --batch-size");
  }
  if (cfg.mode == TrainMode::Mini) detail::require(cfg.batches >= 1, mod, "--batches must be at least 1");
  if (wants_shp) detail::require(cfg.shp_samples >= 1, mod, "shp needs at least one sampled batch");
}

/// Builds a generator graph from "kind:args".
inline SparseMatrix generate_graph(const std::string& spec, std::uint64_t seed) {
  constexpr const char* mod = "cli";
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  detail::require(!parts.empty(), mod, "empty generator spec");
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    detail::require(used == s.size() && !s.empty(), mod, "bad number '" + s + "' in generator spec '" + spec + "'");
    return v;
  };
  const std::string& kind = parts[0];
  if (kind == "grid" && parts.size() == 2) {
    const auto x = parts[1].find('x');
    detail::require(x != std::string::npos, mod, "grid spec is grid:<rows>x<cols>");
    return grid_graph(static_cast<Index>(num(parts[1].substr(0, x))),
                      static_cast<Index>(num(parts[1].substr(x + 1))));
  }
  if (kind == "communities" && parts.size() == 4) {
    return two_community_graph(static_cast<Index>(num(parts[1])), static_cast<Index>(num(parts[2])),
                               static_cast<Index>(num(parts[3])), seed);
  }
  if (kind == "random" && parts.size() == 3) {
    return random_graph(static_cast<Index>(num(parts[1])), num(parts[2]), seed);
  }
  if (kind == "random-directed" && parts.size() == 3) {
    return random_graph(static_cast<Index>(num(parts[1])), num(parts[2]), seed, true);
  }
  detail::fail(mod, "unknown generator spec '" + spec + "'");
}

inline SparseMatrix load_source(const GraphSource& src, bool directed, std::uint64_t seed) {
  if (!src.generator.empty()) return generate_graph(src.generator, seed);
  return load_graph(src.path, src.format, directed);
}

/// Seeded standard-normal n x d0 feature matrix.
inline DenseMatrix random_features(Index n, Index d0, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x66656174ULL);
  DenseMatrix h(n, d0);
  for (Real& v : h.data()) v = rng.normal();
  return h;
}

/// Random classes on a seeded 10% vertex subset (at least one vertex).
inline LabelSet synthetic_labels(Index n, Index n_classes, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x6c61626cULL);
  std::vector<Index> ids(n);
  for (Index i = 0; i < n; ++i) ids[i] = i;
  rng.shuffle(std::span<Index>(ids));
  const Index count = std::max<Index>(1, n / 10);
  std::vector<std::pair<Index, Index>> labeled;
  for (Index k = 0; k < count && k < n; ++k) labeled.emplace_back(ids[k], static_cast<Index>(rng.below(n_classes)));
  return LabelSet(std::move(labeled), n_classes);
}

struct ExperimentOutput {
  nlohmann::ordered_json report;
  nlohmann::ordered_json plans;  // empty unless emit_plan
  Comparison comparison;
};

using LogFn = std::function<void(const std::string&)>;

namespace detail {

/// True when every rank sends at most one message per peer and at most p-1
/// messages in each (step, phase, layer).
inline bool message_ceiling_holds(const std::vector<MessageRecord>& log, Index p) {
  std::map<std::tuple<std::uint64_t, int, Index, Index>, Index> per_rank;
  std::map<std::tuple<std::uint64_t, int, Index, Index, Index>, Index> per_pair;
  for (const auto& m : log) {
    const int phase = static_cast<int>(m.tag.phase);
    if (++per_rank[{m.tag.step, phase, m.tag.layer, m.from}] > p - 1) return false;
    if (++per_pair[{m.tag.step, phase, m.tag.layer, m.from, m.to}] > 1) return false;
  }
  return true;
}

inline std::string dataset_id(const GraphSource& src, Index p, bool several_p) {
  return several_p ? src.name + "/p" + std::to_string(p) : src.name;
}

}  // namespace detail

/// Runs every (graph, p, partitioner) combination. RP is always run so the
/// comparison has a baseline.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg_in, const LogFn& log = {}) {
  validate_config(cfg_in);
  ExperimentConfig cfg = cfg_in;
  if (std::find(cfg.partitioners.begin(), cfg.partitioners.end(), "rp") == cfg.partitioners.end()) {
    cfg.partitioners.insert(cfg.partitioners.begin(), "rp");
  }
  const std::uint64_t seed = *cfg.seed;
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  // Load and validate everything before any partitioning or training.
  std::vector<SparseMatrix> graphs;
  for (Index g = 0; g < cfg.graphs.size(); ++g) {
    graphs.push_back(load_source(cfg.graphs[g], cfg.directed, seed + g));
    const Index n = graphs.back().rows();
    for (Index p : cfg.p_values) {
      detail::require(p <= n, "cli",
                      "p = " + std::to_string(p) + " exceeds vertex count " + std::to_string(n) + " of '" +
                          cfg.graphs[g].name + "'");
    }
    if (cfg.mode == TrainMode::Mini || cfg.batch_size > 0) {
      detail::require(cfg.batch_size <= n, "cli", "batch size exceeds vertex count of '" + cfg.graphs[g].name + "'");
    }
  }

  ExperimentOutput out;
  nlohmann::ordered_json& rep = out.report;
  rep["schema_version"] = kReportSchemaVersion;
  nlohmann::ordered_json jcfg;
  jcfg["seed"] = seed;
  jcfg["directed"] = cfg.directed;
  jcfg["p"] = cfg.p_values;
  jcfg["partitioners"] = cfg.partitioners;
  jcfg["epsilon"] = cfg.epsilon;
  jcfg["layers"] = cfg.layers;
  jcfg["dims"] = cfg.dims;
  jcfg["epochs"] = cfg.epochs;
  jcfg["mode"] = cfg.mode == TrainMode::Full ? "full" : "mini";
  jcfg["batch_size"] = cfg.batch_size;
  jcfg["batches"] = cfg.batches;
  jcfg["shp_samples"] = cfg.shp_samples;
  jcfg["learning_rate"] = cfg.learning_rate;
  jcfg["scheduler"] = cfg.scheduler == Scheduler::SingleThreaded ? "single" : "threads";
  rep["config"] = jcfg;
  rep["datasets"] = nlohmann::ordered_json::array();
  rep["runs"] = nlohmann::ordered_json::array();

  std::vector<RunSummary> summaries;
  for (Index g = 0; g < graphs.size(); ++g) {
    const GraphSource& src = cfg.graphs[g];
    const SparseMatrix& adj = graphs[g];
    const Index n = adj.rows();
    const SparseMatrix a_hat = normalize_adjacency(adj, true);
    const SparseMatrix model_pattern = cfg.directed ? symmetrize_pattern(a_hat) : a_hat;
    const Hypergraph hyper = build_hypergraph_model(model_pattern);
    const UGraph ugraph = build_graph_model(model_pattern);
    const std::uint64_t graph_seed = seed + 0x9e3779b97f4a7c15ULL * (g + 1);

    rep["datasets"].push_back({{"name", src.name},
                               {"n", n},
                               {"nnz", adj.nnz()},
                               {"directed", cfg.directed},
                               {"labeled", std::max<Index>(1, n / 10)}});

    TrainingData data{adj, cfg.directed, random_features(n, cfg.dims.front(), graph_seed),
                      synthetic_labels(n, cfg.dims.back(), graph_seed)};
    const GcnModel initial = make_model(cfg.dims, Activation::ReLU, cfg.learning_rate, graph_seed);

    for (Index p : cfg.p_values) {
      const std::string dataset = detail::dataset_id(src, p, cfg.p_values.size() > 1);
      for (const auto& id : cfg.partitioners) {
        say("partitioning " + dataset + " with " + id);
        PartitionConfig pc;
        pc.p = p;
        pc.epsilon = cfg.epsilon;
        pc.seed = graph_seed ^ (0x5151ULL * p);
        Partition pi;
        if (id == "rp") {
          pi = random_partition(hyper.vertex_weight(), pc);
        } else if (id == "gp") {
          pi = partition_graph_fm(ugraph, pc);
        } else if (id == "hp") {
          pi = partition_hypergraph_fm(hyper, pc);
        } else if (id == "shp") {
          const SparseMatrix pattern = cfg.directed ? symmetrize_pattern(adj) : adj;
          pi = partition_stochastic(pattern, {{cfg.batch_size}, graph_seed ^ 0x736870ULL}, cfg.shp_samples, pc);
        } else {
          std::ifstream in(cfg.partition_file);
          detail::require(static_cast<bool>(in), "cli", "cannot read partition file '" + cfg.partition_file + "'");
          pi = Partition(p, read_partition_assignment(in, n), hyper.vertex_weight(), cfg.epsilon);
        }

        if (cfg.emit_plan) {
          out.plans[dataset][id] = plan_to_json(build_comm_plan(a_hat, pi));
        }

        say("training " + dataset + " with " + id);
        TrainingMode mode = FullBatch{};
        if (cfg.mode == TrainMode::Mini) mode = MiniBatch{{cfg.batch_size}, cfg.batches, graph_seed ^ 0x6d62ULL};
        const TrainingResult tr = train_epochs(data, initial, pi.assignment(), p, cfg.epochs, mode, cfg.scheduler);

        const CutReport hcut = evaluate_hypergraph_cut(hyper, pi);
        const CutReport gcut = evaluate_graph_cut(ugraph, pi);
        nlohmann::ordered_json run;
        run["dataset"] = dataset;
        run["partitioner"] = id;
        run["p"] = p;
        run["balance_ratio"] = pi.balance_ratio();
        run["balanced"] = pi.is_balanced();
        run["part_weights"] = pi.part_weights();
        run["hypergraph_cut"] = hcut.cut_value;
        run["graph_cut"] = gcut.cut_value;
        if (cfg.mode == TrainMode::Full) run["predicted_words_per_epoch"] = predicted_total_volume(hyper, pi, cfg.dims);
        run["message_ceiling_ok"] = detail::message_ceiling_holds(tr.messages, p);

        RunSummary sum;
        sum.dataset = dataset;
        sum.partitioner = id;
        sum.balance_ratio = pi.balance_ratio();
        double wall = 0.0;
        run["epochs"] = nlohmann::ordered_json::array();
        for (Index e = 0; e < tr.epochs.size(); ++e) {
          const EpochMetrics& m = tr.epochs[e];
          nlohmann::ordered_json je;
          je["epoch"] = e;
          je["loss"] = m.loss;
          je["total_words"] = m.total_words;
          je["max_words_per_proc"] = m.max_words_per_proc;
          je["avg_words_per_proc"] = m.avg_words_per_proc;
          je["total_msgs"] = m.total_msgs;
          je["max_msgs_per_proc"] = m.max_msgs_per_proc;
          je["avg_msgs_per_proc"] = m.avg_msgs_per_proc;
          je["forward_words"] = m.forward_words;
          je["backward_words"] = m.backward_words;
          je["allreduce_words"] = m.allreduce_words;
          je["replicas_identical"] = m.replicas_identical;
          if (cfg.timing) je["wallclock_seconds"] = m.wallclock_seconds;
          run["epochs"].push_back(std::move(je));
          sum.avg_volume += m.avg_words_per_proc;
          sum.max_volume += static_cast<double>(m.max_words_per_proc);
          sum.avg_msgs += m.avg_msgs_per_proc;
          sum.max_msgs += static_cast<double>(m.max_msgs_per_proc);
          wall += m.wallclock_seconds;
        }
        const double epochs = static_cast<double>(std::max<Index>(1, tr.epochs.size()));
        sum.avg_volume /= epochs;
        sum.max_volume /= epochs;
        sum.avg_msgs /= epochs;
        sum.max_msgs /= epochs;
        if (cfg.timing) sum.runtime_seconds = wall / epochs;
        run["final_loss"] = tr.epochs.empty() ? 0.0 : tr.epochs.back().loss;
        if (cfg.mode == TrainMode::Full && !tr.epochs.empty()) run["predictions"] = predict_classes(tr.final_output);
        rep["runs"].push_back(std::move(run));
        summaries.push_back(sum);
      }
    }
  }
  out.comparison = compare(summaries);
  rep["comparison"] = to_json(out.comparison);
  return out;
}

/// Writes report.json, comparison.csv and (optionally) plan.json into `dir`.
inline void write_outputs(const ExperimentOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  detail::require(!ec, "cli", "cannot create output directory '" + dir.string() + "'");
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    detail::require(static_cast<bool>(f), "cli", "cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("report.json");
    f << out.report.dump(2) << '\n';
  }
  {
    auto f = open("comparison.csv");
    write_comparison_csv(f, out.comparison);
  }
  if (!out.plans.is_null()) {
    auto f = open("plan.json");
    f << out.plans.dump(2) << '\n';
  }
}

}  // namespace gcnpart
