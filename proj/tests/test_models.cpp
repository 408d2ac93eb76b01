#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"

using namespace gcnpart;

namespace {

SparseMatrix six_a_hat() { return normalize_adjacency(oracle::six_vertex_graph()); }

Partition six_partition(const std::vector<Index>& weights) {
  return Partition(3, oracle::six_vertex_parts(), weights, 0.5);
}

}  // namespace

TEST(GraphModel, DiagonalOnlyHasNoEdges) {
  const auto g = build_graph_model(SparseMatrix::identity(4));
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.vertex_weight, std::vector<Index>(4, 1));
}

TEST(GraphModel, OneWayEdgeBecomesUndirected) {
  const auto a = normalize_adjacency(SparseMatrix::from_triplets(3, 3, {{0, 2, 1.0}}));
  const auto g = build_graph_model(a);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0], (std::pair<Index, Index>{0, 2}));
  EXPECT_EQ(g.vertex_weight[0], 2u);
  EXPECT_EQ(g.vertex_weight[2], 1u);
  EXPECT_THROW(build_graph_model(SparseMatrix::zeros(2, 3)), Error);
}

TEST(GraphModel, SixVertexWeights) {
  const auto g = build_graph_model(six_a_hat());
  EXPECT_EQ(g.vertex_weight[0], 3u);  // v1: itself, v2, v5
  EXPECT_EQ(g.edges.size(), 7u);
  for (const auto& [i, j] : g.edges) EXPECT_LT(i, j);
}

TEST(HypergraphModel, IdentityGivesSingletons) {
  const auto h = build_hypergraph_model(SparseMatrix::identity(5));
  ASSERT_EQ(h.n_nets(), 5u);
  for (Index j = 0; j < 5; ++j) EXPECT_EQ(h.pins(j), std::vector<Index>{j});
}

TEST(HypergraphModel, RequiresFullDiagonal) {
  EXPECT_THROW(build_hypergraph_model(oracle::six_vertex_graph()), Error);
}

TEST(HypergraphModel, SixVertexPinsAndConnectivity) {
  const auto a = six_a_hat();
  const auto h = build_hypergraph_model(a);
  EXPECT_EQ(h.pins(1), (std::vector<Index>{0, 1, 3, 5}));
  for (Index j = 0; j < 6; ++j) EXPECT_TRUE(std::binary_search(h.pins(j).begin(), h.pins(j).end(), j));
  const auto rep = evaluate_hypergraph_cut(h, six_partition(h.vertex_weight()));
  EXPECT_EQ(rep.per_net_lambda[1], 3u);
  EXPECT_EQ(rep.per_net_lambda[3], 3u);
}

TEST(HypergraphModel, SixVertexVolumeVersusGraphModel) {
  const auto a = six_a_hat();
  const auto h = build_hypergraph_model(a);
  const auto g = build_graph_model(a);
  const auto pi = six_partition(h.vertex_weight());
  const auto rep = evaluate_hypergraph_cut(h, pi);
  // v4's row goes to two other parts, but the graph model charges three edges.
  EXPECT_EQ(rep.per_net_lambda[3] - 1, 2u);
  EXPECT_EQ(graph_model_vertex_volume(g, pi, 3), 3u);

  // Restricted to v4's net with L = 1, d0 = d1 = d: 2d words against 3d.
  const Index d = 7;
  const Hypergraph only_v4(6, {h.pins(3)}, h.vertex_weight());
  const std::vector<Index> dims{d, d};
  // One epoch moves d0 + d1 = 2d words per transfer; per phase that is 2d vs 3d.
  EXPECT_EQ(predicted_total_volume(only_v4, pi, dims), 2 * (d + d));
  EXPECT_EQ(predicted_total_volume(only_v4, pi, dims) / 2, 2 * d);
  EXPECT_EQ(graph_model_vertex_volume(g, pi, 3) * d, 3 * d);
}

TEST(Cuts, TrivialCases) {
  const auto a = normalize_adjacency(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
  const auto g = build_graph_model(a);
  const auto h = build_hypergraph_model(a);
  const Partition one(1, {0, 0}, h.vertex_weight(), 0.0);
  EXPECT_EQ(evaluate_graph_cut(g, one).cut_value, 0u);
  const auto rep1 = evaluate_hypergraph_cut(h, one);
  EXPECT_EQ(rep1.cut_value, 0u);
  for (Index l : rep1.per_net_lambda) EXPECT_EQ(l, 1u);
  const std::vector<Index> dims{4, 2};
  EXPECT_EQ(predicted_total_volume(h, one, dims), 0u);

  const Partition two(2, {0, 1}, h.vertex_weight(), 0.0);
  EXPECT_EQ(evaluate_graph_cut(g, two).cut_value, 1u);
  EXPECT_EQ(evaluate_hypergraph_cut(h, two).cut_value, 2u);
}

TEST(Cuts, SingleCutNetVolume) {
  const Hypergraph h(2, {{0, 1}}, {1, 1});
  const Partition pi(2, {0, 1}, h.vertex_weight(), 0.0);
  const std::vector<Index> dims{4, 2};
  EXPECT_EQ(predicted_total_volume(h, pi, dims), 6u);
  EXPECT_THROW(predicted_total_volume(h, pi, std::vector<Index>{4}), Error);
}

TEST(Cuts, NetSpanningThreePartsCountsTwo) {
  const Hypergraph h(3, {{0, 1, 2}}, {1, 1, 1});
  const Partition pi(3, {0, 1, 2}, h.vertex_weight(), 0.0);
  EXPECT_EQ(evaluate_hypergraph_cut(h, pi).cut_value, 2u);
}

TEST(Cuts, MatchesSetCountOnRandomHypergraphs) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const Index n = 12;
    std::vector<std::vector<Index>> nets(10);
    for (auto& pins : nets) {
      for (Index v = 0; v < n; ++v) {
        if (rng.below(3) == 0) pins.push_back(v);
      }
      if (pins.empty()) pins.push_back(rng.below(n));
    }
    const Hypergraph h(n, nets, std::vector<Index>(n, 1));
    const auto owner = oracle::random_owner(n, 4, seed);
    const Partition pi(4, owner, h.vertex_weight(), 10.0);
    const auto rep = evaluate_hypergraph_cut(h, pi);
    EXPECT_EQ(rep.cut_value, oracle::lambda_cut(nets, owner));
    for (Index l : rep.per_net_lambda) {
      EXPECT_GE(l, 1u);
      EXPECT_LE(l, 4u);
    }
  }
}

TEST(Cuts, HypergraphNeverExceedsGraphModel) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto adj = seed % 2 ? oracle::random_undirected(25, 0.12, seed) : oracle::random_directed(25, 0.1, seed);
    const auto a = normalize_adjacency(adj);
    const auto h = build_hypergraph_model(a);
    const auto g = build_graph_model(a);
    const Index p = 2 + seed % 4;
    const Partition pi(p, oracle::random_owner(25, p, seed), h.vertex_weight(), 10.0);
    const Index hyper = evaluate_hypergraph_cut(h, pi).cut_value;
    EXPECT_LE(hyper, graph_model_row_volume(g, pi)) << "seed " << seed;
    EXPECT_EQ(hyper == 0, predicted_total_volume(h, pi, std::vector<Index>{3, 2}) == 0);
  }
}

TEST(Cuts, StrictGapForOneWayEdgeAndSharedConsumers) {
  // One-way edge 0 -> 1 across parts: one transfer, graph model charges two.
  const auto oneway = normalize_adjacency(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}}));
  const auto h1 = build_hypergraph_model(oneway);
  const Partition p1(2, {0, 1}, h1.vertex_weight(), 1.0);
  EXPECT_LT(evaluate_hypergraph_cut(h1, p1).cut_value, graph_model_row_volume(build_graph_model(oneway), p1));

  // Vertex 0 feeds two vertices of the same other part: one transfer, two cut edges.
  const auto star = normalize_adjacency(
      SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}}));
  const auto h2 = build_hypergraph_model(star);
  const auto g2 = build_graph_model(star);
  const Partition p2(2, {0, 1, 1}, h2.vertex_weight(), 1.0);
  EXPECT_EQ(evaluate_hypergraph_cut(h2, p2).per_net_lambda[0] - 1, 1u);
  EXPECT_EQ(graph_model_vertex_volume(g2, p2, 0), 2u);
}

TEST(PartitionType, ValidatesAndWeighs) {
  const std::vector<Index> w{3, 1, 2, 2};
  const Partition pi(2, {0, 1, 1, 0}, w, 0.1);
  EXPECT_EQ(pi.part_weights(), (std::vector<Index>{5, 3}));
  EXPECT_DOUBLE_EQ(pi.balance_ratio(), 5.0 / 4.0 - 1.0);
  EXPECT_FALSE(pi.is_balanced());
  EXPECT_TRUE(Partition(2, {0, 0, 1, 1}, w, 0.0).is_balanced());
  EXPECT_THROW(Partition(2, {0, 0, 0, 0}, w, 0.1), Error);  // empty part
  EXPECT_THROW(Partition(2, {0, 2, 1, 0}, w, 0.1), Error);  // id out of range
  EXPECT_THROW(Partition(2, {0, 1, 1}, w, 0.1), Error);     // short assignment
  EXPECT_DOUBLE_EQ(balance_cap(100, 4, 0.01), 25.25);

  const UGraph g = build_graph_model(SparseMatrix::identity(5));
  EXPECT_THROW(evaluate_graph_cut(g, pi), Error);
}

TEST(StochasticHypergraph, FullSampleMatchesColumnNetModel) {
  const auto a = normalize_adjacency(oracle::random_undirected(16, 0.2, 3));
  const auto s = build_stochastic_hypergraph(a, MiniBatchSpec{16}, 1, 9);
  EXPECT_EQ(s, build_hypergraph_model(a));
  EXPECT_THROW(build_stochastic_hypergraph(a, MiniBatchSpec{16}, 0, 9), Error);
  EXPECT_THROW(build_stochastic_hypergraph(a, MiniBatchSpec{0}, 1, 9), Error);
}

TEST(StochasticHypergraph, IdenticalBatchesDuplicateNets) {
  const auto a = normalize_adjacency(oracle::random_undirected(16, 0.2, 4));
  const auto s = build_stochastic_hypergraph(a, MiniBatchSpec{16}, 2, 1);
  ASSERT_EQ(s.n_nets(), 32u);
  for (Index j = 0; j < 16; ++j) EXPECT_EQ(s.pins(j), s.pins(j + 16));
}

TEST(StochasticHypergraph, NetCountAndAdditivity) {
  const auto a = normalize_adjacency(oracle::random_undirected(32, 0.15, 5));
  const MiniBatchSpec spec{10};
  const auto s = build_stochastic_hypergraph(a, spec, 10, 77);
  EXPECT_EQ(s.n_nets(), 100u);

  // Replaying the batch stream gives the same batches; the merged cut is the
  // sum of per-batch cuts.
  BatchSampler stream(32, spec, 77);
  const auto owner = oracle::random_owner(32, 4, 5);
  const Partition pi(4, owner, s.vertex_weight(), 10.0);
  Index total = 0;
  for (int b = 0; b < 10; ++b) {
    const auto batch = stream.next();
    const auto hb = build_batch_hypergraph(a, batch);
    EXPECT_EQ(hb.n_nets(), batch.size());
    total += evaluate_hypergraph_cut(hb, pi).cut_value;
  }
  EXPECT_EQ(evaluate_hypergraph_cut(s, pi).cut_value, total);
}

TEST(Hoeffding, ClosedFormValues) {
  EXPECT_EQ(hoeffding_min_nets(2, 1.0, 2.0 / std::exp(2.0)), 1u);
  EXPECT_EQ(hoeffding_min_nets(2, 0.1, 0.5), 70u);
  EXPECT_EQ(hoeffding_min_nets(27, 0.1, 0.5), 46857u);
  EXPECT_THROW(hoeffding_min_nets(1, 0.1, 0.5), Error);
  EXPECT_THROW(hoeffding_min_nets(4, 0.0, 0.5), Error);
  EXPECT_THROW(hoeffding_min_nets(4, 0.1, 1.0), Error);
}

TEST(Hoeffding, Monotone) {
  for (Index p = 2; p < 40; ++p) {
    EXPECT_LE(hoeffding_min_nets(p, 0.2, 0.3), hoeffding_min_nets(p + 1, 0.2, 0.3));
  }
  for (double theta = 0.05; theta < 2.0; theta += 0.05) {
    EXPECT_GE(hoeffding_min_nets(8, theta, 0.3), hoeffding_min_nets(8, theta + 0.05, 0.3));
  }
  for (double delta = 0.05; delta < 0.9; delta += 0.05) {
    EXPECT_GE(hoeffding_min_nets(8, 0.2, delta), hoeffding_min_nets(8, 0.2, delta + 0.05));
  }
}

TEST(TextFormats, HypergraphAndPartitionRoundTrip) {
  const auto a = normalize_adjacency(oracle::random_directed(12, 0.2, 6));
  const auto h = build_hypergraph_model(a);
  std::stringstream hs;
  write_hypergraph(hs, h);
  EXPECT_EQ(read_hypergraph(hs), h);

  const Partition pi(3, oracle::random_owner(12, 3, 6), h.vertex_weight(), 10.0);
  std::stringstream ps;
  write_partition(ps, pi);
  EXPECT_EQ(read_partition_assignment(ps, 12), pi.assignment());

  std::stringstream short_file("0\n1\n");
  EXPECT_THROW(read_partition_assignment(short_file, 3), Error);
  std::stringstream bad("2 1\n0 5\n");
  EXPECT_THROW(read_hypergraph(bad), Error);
}
