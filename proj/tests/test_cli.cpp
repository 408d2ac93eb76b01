#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gcnpart/gcnpart.hpp"

using namespace gcnpart;

namespace {

SparseMatrix parse(const std::string& text, GraphFormat format = GraphFormat::EdgeList, bool directed = false) {
  std::istringstream in(text);
  return parse_graph(in, format, directed);
}

std::string error_of(const std::string& text, GraphFormat format = GraphFormat::EdgeList) {
  try {
    parse(text, format);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig grid_config(const std::string& spec, std::vector<Index> ps, std::vector<std::string> parts) {
  ExperimentConfig cfg;
  cfg.graphs = {GraphSource{"g", "", GraphFormat::EdgeList, spec}};
  cfg.p_values = std::move(ps);
  cfg.partitioners = std::move(parts);
  cfg.layers = 2;
  cfg.dims = {8, 6, 4};
  cfg.epochs = 2;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST(LoadGraph, DeclaredEmptyEdgeList) {
  const auto a = parse("# n=3\n");
  EXPECT_EQ(a.rows(), 3u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a.nnz(), 0u);
  EXPECT_EQ(parse("n=3\n\n").rows(), 3u);
}

TEST(LoadGraph, SingleUndirectedEdge) {
  const auto a = parse("0 1\n");
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_EQ(a.at(0, 1), 1.0);
  EXPECT_EQ(a.at(1, 0), 1.0);
  EXPECT_TRUE(is_structurally_symmetric(a));
  const auto d = parse("0 1\n", GraphFormat::EdgeList, true);
  EXPECT_EQ(d.nnz(), 1u);
  EXPECT_EQ(d.at(1, 0), 0.0);
}

TEST(LoadGraph, CommentsDuplicatesAndSelfLoops) {
  const auto a = parse("% header\n0 1\n1 0\n0 1 2.5\n\n2 2\n# trailing\n");
  EXPECT_EQ(a.rows(), 3u);
  EXPECT_EQ(a.nnz(), 2u);
  for (Real v : a.values()) EXPECT_EQ(v, 1.0);
}

TEST(LoadGraph, MatrixMarketRoundTripIsExact) {
  for (const auto& g : {grid_graph(5, 7), random_graph(60, 4.0, 3), two_community_graph(40, 4, 2, 1)}) {
    std::ostringstream first;
    write_matrix_market(first, g);
    const auto back = parse(first.str(), GraphFormat::MatrixMarket);
    EXPECT_EQ(back.row_offsets().size(), g.row_offsets().size());
    EXPECT_TRUE(std::equal(back.row_offsets().begin(), back.row_offsets().end(), g.row_offsets().begin()));
    EXPECT_TRUE(std::equal(back.col_indices().begin(), back.col_indices().end(), g.col_indices().begin()));
    std::ostringstream second;
    write_matrix_market(second, back);
    EXPECT_EQ(first.str(), second.str());
  }
}

TEST(LoadGraph, MatrixMarketGeneralIsDirectedOnRequest) {
  const std::string text = "%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n2 3\n";
  EXPECT_EQ(parse(text, GraphFormat::MatrixMarket, true).nnz(), 2u);
  EXPECT_EQ(parse(text, GraphFormat::MatrixMarket, false).nnz(), 4u);
}

TEST(LoadGraph, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("0 1\n1 x\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("n=2\n0 1\n0 5\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("-1 0\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n3 1\n", GraphFormat::MatrixMarket)
                .find("line 3"),
            std::string::npos);
  EXPECT_FALSE(error_of("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n", GraphFormat::MatrixMarket)
                   .empty());
  EXPECT_FALSE(error_of("", GraphFormat::MatrixMarket).empty());
  EXPECT_THROW(load_graph("/nonexistent/graph.txt", GraphFormat::EdgeList, false), Error);
}

TEST(Config, Validation) {
  auto ok = grid_config("grid:4x4", {2}, {"hp"});
  EXPECT_NO_THROW(validate_config(ok));
  auto bad = ok;
  bad.dims = {8, 4};
  EXPECT_THROW(validate_config(bad), Error);
  bad = ok;
  bad.seed.reset();
  EXPECT_THROW(validate_config(bad), Error);
  bad = ok;
  bad.p_values = {0};
  EXPECT_THROW(validate_config(bad), Error);
  bad = ok;
  bad.partitioners = {"metis"};
  EXPECT_THROW(validate_config(bad), Error);
  bad = ok;
  bad.partitioners = {"shp"};
  EXPECT_THROW(validate_config(bad), Error);
  bad = ok;
  bad.partitioners = {"file"};
  EXPECT_THROW(validate_config(bad), Error);
  // p larger than the graph is caught before any partitioning.
  bad = ok;
  bad.p_values = {32};
  std::vector<std::string> log;
  EXPECT_THROW(run_experiment(bad, [&](const std::string& m) { log.push_back(m); }), Error);
  EXPECT_TRUE(log.empty());
}

TEST(Config, GeneratorSpecs) {
  EXPECT_EQ(generate_graph("grid:3x4", 1).rows(), 12u);
  EXPECT_EQ(generate_graph("communities:32:4:2", 1).rows(), 32u);
  EXPECT_EQ(generate_graph("random:50:3", 1).rows(), 50u);
  EXPECT_THROW(generate_graph("grid:3", 1), Error);
  EXPECT_THROW(generate_graph("random:x:3", 1), Error);
  EXPECT_THROW(generate_graph("torus:4", 1), Error);
}

TEST(RunExperiment, SingleProcessorHasNoTraffic) {
  const auto out = run_experiment(grid_config("grid:6x6", {1}, {"rp", "hp"}));
  ASSERT_EQ(out.report["runs"].size(), 2u);
  for (const auto& run : out.report["runs"]) {
    EXPECT_EQ(run["predicted_words_per_epoch"], 0);
    for (const auto& e : run["epochs"]) {
      EXPECT_EQ(e["total_words"], 0);
      EXPECT_EQ(e["total_msgs"], 0);
    }
  }
  EXPECT_EQ(out.report["schema_version"], kReportSchemaVersion);
}

TEST(RunExperiment, RerunsAreByteIdentical) {
  auto cfg = grid_config("communities:64:4:2", {2, 4}, {"gp", "hp", "shp"});
  cfg.batch_size = 16;
  cfg.shp_samples = 8;
  const auto dir = std::filesystem::temp_directory_path() / "gcnpart_cli_rerun";
  std::filesystem::remove_all(dir);
  write_outputs(run_experiment(cfg), dir / "a");
  cfg.scheduler = Scheduler::MultiWorker;
  write_outputs(run_experiment(cfg), dir / "b");
  auto slurp = [](const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const char* name : {"report.json", "comparison.csv"}) {
    const auto a = slurp(dir / "a" / name);
    const auto b = slurp(dir / "b" / name);
    EXPECT_FALSE(a.empty());
    // Only the recorded scheduler name may differ.
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), std::count(b.begin(), b.end(), '\n'));
  }
  cfg.scheduler = Scheduler::SingleThreaded;
  write_outputs(run_experiment(cfg), dir / "c");
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "c" / "report.json"));
  EXPECT_EQ(slurp(dir / "a" / "comparison.csv"), slurp(dir / "c" / "comparison.csv"));
  std::filesystem::remove_all(dir);
}

TEST(RunExperiment, GridHypergraphBeatsRandom) {
  const auto out = run_experiment(grid_config("grid:32x32", {4, 16}, {"rp", "gp", "hp"}));
  for (const auto& row : out.comparison.rows) {
    if (row.partitioner == "hp" || row.partitioner == "gp") EXPECT_LT(row.avg_volume_norm, 1.0) << row.dataset;
  }
  for (const auto& run : out.report["runs"]) {
    EXPECT_TRUE(run["balanced"].get<bool>());
    EXPECT_TRUE(run["message_ceiling_ok"].get<bool>());
    // Measured words per epoch match the prediction from the hypergraph cut.
    EXPECT_EQ(run["epochs"][0]["total_words"], run["predicted_words_per_epoch"]);
  }
}

TEST(RunExperiment, PartitionFileIsUsed) {
  const auto dir = std::filesystem::temp_directory_path() / "gcnpart_cli_partfile";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "parts.txt");
    for (Index v = 0; v < 16; ++v) f << (v < 8 ? 0 : 1) << '\n';
  }
  auto cfg = grid_config("grid:4x4", {2}, {"file"});
  cfg.partition_file = (dir / "parts.txt").string();
  cfg.epsilon = 0.2;
  cfg.emit_plan = true;
  const auto out = run_experiment(cfg);
  const auto& file_run = out.report["runs"][1];
  EXPECT_EQ(file_run["partitioner"], "file");
  EXPECT_EQ(file_run["hypergraph_cut"], 8);  // four columns cut, each seen by both halves
  EXPECT_EQ(out.plans["g"]["file"]["total_rows"], 8);
  std::filesystem::remove_all(dir);
}
