// gcnpart: partition a graph, simulate distributed GCN training, report traffic.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gcnpart/gcnpart.hpp"

namespace {

int log_level() {
  const char* env = std::getenv("GCNPART_LOG");
  if (env == nullptr) return 1;
  const std::string v = env;
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

template <class T>
std::vector<T> split_list(const std::vector<std::string>& raw) {
  std::vector<T> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    for (std::string tok; std::getline(ss, tok, ',');) {
      if (tok.empty()) continue;
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(tok);
      } else {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(tok, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != tok.size()) throw gcnpart::Error("cli", "expected an unsigned integer, got '" + tok + "'");
        out.push_back(static_cast<T>(v));
      }
    }
  }
  return out;
}

std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition-aware distributed GCN training simulator"};

  std::vector<std::string> graph_paths, generators, p_raw, part_raw, dims_raw;
  std::string format = "edge_list", mode = "full", scheduler = "single", out_dir = "gcnpart_out";
  std::string partition_file;
  bool directed = false, emit_plan = false, timing = false;
  double epsilon = 0.01, learning_rate = 0.01;
  gcnpart::Index layers = 2, epochs = 5, batch_size = 0, batches = 1, shp_samples = 200;
  std::uint64_t seed = 0;

  app.add_option("--graph", graph_paths, "Graph file (repeatable)");
  app.add_option("--generate", generators,
                 "Synthetic graph instead of a file: grid:RxC, communities:N:DEG:BRIDGES, random:N:DEG, "
                 "random-directed:N:DEG (repeatable)");
  app.add_option("--format", format, "Graph file format")->check(CLI::IsMember({"edge_list", "matrix_market"}));
  app.add_flag("--directed", directed, "Treat the input as a directed graph");
  app.add_option("-p", p_raw, "Processor count(s), comma separated")->required();
  app.add_option("--partitioner", part_raw, "rp, gp, hp, shp, file (comma separated; rp is always added)");
  app.add_option("--partition-file", partition_file, "Part id per line, used by --partitioner file");
  app.add_option("--epsilon", epsilon, "Balance tolerance");
  app.add_option("--layers", layers, "Number of GCN layers L");
  app.add_option("--dims", dims_raw, "Layer widths d_0,...,d_L")->required();
  app.add_option("--epochs", epochs, "Training epochs");
  app.add_option("--mode", mode, "Training mode")->check(CLI::IsMember({"full", "mini"}));
  app.add_option("--batch-size", batch_size, "Vertices per sampled mini-batch");
  app.add_option("--batches", batches, "Mini-batches per epoch");
  app.add_option("--shp-samples", shp_samples, "Sampled batches merged by the stochastic hypergraph");
  app.add_option("--learning-rate", learning_rate, "Gradient descent step");
  app.add_option("--seed", seed, "Seed for every random choice")->required();
  app.add_option("--scheduler", scheduler, "Runtime scheduler")->check(CLI::IsMember({"single", "threads"}));
  app.add_flag("--timing", timing, "Record wall-clock runtime ratios (reports become nondeterministic)");
  app.add_flag("--emit-plan", emit_plan, "Also write plan.json with per-pair row counts");
  app.add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);
  const int verbosity = log_level();

  try {
    gcnpart::ExperimentConfig cfg;
    const auto fmt = format == "matrix_market" ? gcnpart::GraphFormat::MatrixMarket : gcnpart::GraphFormat::EdgeList;
    for (const auto& path : graph_paths) cfg.graphs.push_back({stem_of(path), path, fmt, {}});
    for (const auto& spec : generators) cfg.graphs.push_back({spec, {}, fmt, spec});
    cfg.directed = directed;
    cfg.p_values = split_list<gcnpart::Index>(p_raw);
    if (!part_raw.empty()) cfg.partitioners = split_list<std::string>(part_raw);
    cfg.partition_file = partition_file;
    cfg.epsilon = epsilon;
    cfg.layers = layers;
    cfg.dims = split_list<gcnpart::Index>(dims_raw);
    cfg.epochs = epochs;
    cfg.mode = mode == "mini" ? gcnpart::TrainMode::Mini : gcnpart::TrainMode::Full;
    cfg.batch_size = batch_size;
    cfg.batches = batches;
    cfg.shp_samples = shp_samples;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    cfg.scheduler = scheduler == "threads" ? gcnpart::Scheduler::MultiWorker : gcnpart::Scheduler::SingleThreaded;
    cfg.timing = timing;
    cfg.emit_plan = emit_plan;

    const auto output = gcnpart::run_experiment(cfg, [&](const std::string& msg) {
      if (verbosity >= 2) std::cerr << "[gcnpart] " << msg << '\n';
    });
    gcnpart::write_outputs(output, out_dir);
    if (verbosity >= 1) {
      gcnpart::write_comparison_csv(std::cout, output.comparison);
      std::cerr << "wrote " << out_dir << "/report.json\n";
    }
  } catch (const gcnpart::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
