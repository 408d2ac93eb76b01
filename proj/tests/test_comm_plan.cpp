#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace gcnpart;

namespace {

void expect_plan_invariants(const CommPlan& plan, const SparseMatrix& a) {
  for (Index m = 0; m < plan.p; ++m) {
    EXPECT_TRUE(plan.send[m][m].empty());
    for (Index n = 0; n < plan.p; ++n) {
      const auto& rows = plan.send[m][n];
      for (Index k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(plan.owner[rows[k]], m);
        if (k > 0) EXPECT_LT(rows[k - 1], rows[k]);
      }
      const auto& senders = plan.recv_from[n];
      const bool listed = std::find(senders.begin(), senders.end(), m) != senders.end();
      EXPECT_EQ(listed, !rows.empty());
      // Exactly the rows of m referenced by some row of n.
      std::set<Index> want;
      for (Index i = 0; i < a.rows(); ++i) {
        if (plan.owner[i] != n || m == n) continue;
        for (Index j : a.row_cols(i)) {
          if (plan.owner[j] == m) want.insert(j);
        }
      }
      EXPECT_EQ(std::vector<Index>(want.begin(), want.end()), rows);
    }
  }
}

}  // namespace

TEST(CommPlan, SingleProcessorSendsNothing) {
  const auto a = normalize_adjacency(oracle::random_undirected(10, 0.3, 1));
  const auto plan = build_comm_plan(a, std::vector<Index>(10, 0), 1);
  EXPECT_TRUE(plan.send[0][0].empty());
  const auto v = plan_volume(plan, 16);
  EXPECT_EQ(v.total_words, 0u);
  EXPECT_EQ(v.total_msgs, 0u);
}

TEST(CommPlan, SixVertexInstance) {
  const auto a = normalize_adjacency(oracle::six_vertex_graph());
  const auto plan = build_comm_plan(a, oracle::six_vertex_parts(), 3);
  // The third part (v5, v6) needs v1, v2 from the first and v4 from the second, once.
  EXPECT_EQ(plan.send[0][2], (std::vector<Index>{0, 1}));
  EXPECT_EQ(plan.send[1][2], (std::vector<Index>{3}));
  EXPECT_EQ(plan.recv_from[2], (std::vector<Index>{0, 1}));
  expect_plan_invariants(plan, a);

  const Index d = 5;
  const auto v = plan_volume(plan, d);
  Index to_third_words[2] = {0, 0};
  for (Index m = 0; m < 2; ++m) to_third_words[m] = plan.send[m][2].size() * d;
  EXPECT_EQ(to_third_words[0], 2 * d);
  EXPECT_EQ(to_third_words[1], d);
  const auto h = build_hypergraph_model(a);
  const Partition pi(3, oracle::six_vertex_parts(), h.vertex_weight(), 1.0);
  EXPECT_EQ(v.total_words, d * evaluate_hypergraph_cut(h, pi).cut_value);
}

TEST(CommPlan, BlockDiagonalHasNoTraffic) {
  std::vector<Triplet> t;
  for (Index b = 0; b < 3; ++b) {
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 4; ++j) {
        if (i != j) t.push_back({4 * b + i, 4 * b + j, 1.0});
      }
    }
  }
  const auto a = normalize_adjacency(SparseMatrix::from_triplets(12, 12, std::move(t)));
  std::vector<Index> owner(12);
  for (Index i = 0; i < 12; ++i) owner[i] = i / 4;
  const auto plan = build_comm_plan(a, owner, 3);
  EXPECT_EQ(plan_volume(plan, 8).total_words, 0u);
  for (const auto& senders : plan.recv_from) EXPECT_TRUE(senders.empty());
}

TEST(CommPlan, EmptyPlanVolumeIsZero) {
  CommPlan empty;
  const auto v = plan_volume(empty, 3);
  EXPECT_EQ(v.total_words, 0u);
  EXPECT_EQ(v.total_msgs, 0u);
}

TEST(CommPlan, RejectsIncompleteOwnership) {
  const auto a = normalize_adjacency(oracle::random_undirected(6, 0.3, 2));
  EXPECT_THROW(build_comm_plan(a, std::vector<Index>(5, 0), 2), Error);
  EXPECT_THROW(build_comm_plan(a, std::vector<Index>{0, 1, 2, 0, 1, 0}, 2), Error);
  EXPECT_THROW(build_comm_plan(SparseMatrix::zeros(2, 3), std::vector<Index>{0, 0}, 1), Error);
}

TEST(CommPlan, VolumeEqualsConnectivityCut) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const bool directed = seed % 3 == 0;
    const Index n = 20 + seed % 25;
    const auto adj = directed ? oracle::random_directed(n, 0.08, seed) : oracle::random_undirected(n, 0.1, seed);
    const auto a = normalize_adjacency(adj);
    const Index p = 2 + seed % 6;
    const auto owner = oracle::random_owner(n, p, seed * 7);
    const auto plan = build_comm_plan(a, owner, p);
    expect_plan_invariants(plan, a);

    const auto h = build_hypergraph_model(a);
    const Partition pi(p, owner, h.vertex_weight(), 10.0);
    const auto v = plan_volume(plan, 1);
    EXPECT_EQ(v.total_words, evaluate_hypergraph_cut(h, pi).cut_value) << "seed " << seed;
    EXPECT_EQ(v.total_words, oracle::lambda_cut(h.nets(), owner));
    EXPECT_EQ(v.total_words, oracle::distinct_remote_rows(a, owner));
    EXPECT_EQ(plan_volume(plan, 7).total_words, 7 * v.total_words);

    Index msgs = 0;
    for (Index m = 0; m < p; ++m) {
      Index mine = 0;
      for (Index k = 0; k < p; ++k) mine += !plan.send[m][k].empty();
      EXPECT_EQ(v.msg_count[m], mine);
      msgs += mine;
    }
    EXPECT_EQ(v.total_msgs, msgs);
  }
}

TEST(CommPlan, UndirectedPlanMatchesTransposePlan) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = normalize_adjacency(oracle::random_undirected(30, 0.1, seed));
    const auto owner = oracle::random_owner(30, 4, seed);
    EXPECT_EQ(build_comm_plan(a, owner, 4).send, build_comm_plan(transpose_sparse(a), owner, 4).send);
  }
}

TEST(CommPlan, ReceiverBlocksReproduceRowBlockProduct) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const Index n = 25;
    const auto a = normalize_adjacency(seed % 2 ? oracle::random_directed(n, 0.1, seed)
                                                : oracle::random_undirected(n, 0.12, seed));
    const Index p = 3 + seed % 3;
    const auto owner = oracle::random_owner(n, p, seed);
    const auto plan = build_comm_plan(a, owner, p);
    const auto h = oracle::random_dense(n, 4, seed + 50);
    const auto full = oracle::multiply(oracle::to_grid(a), oracle::to_grid(h));
    for (Index m = 0; m < p; ++m) {
      const auto& rows = plan.rows_of[m];
      auto got = spmm(plan.blocks[m].local, select_rows(h, rows));
      for (Index s = 0; s < plan.recv_from[m].size(); ++s) {
        const auto& list = plan.send[plan.recv_from[m][s]][m];
        const auto part = spmm(plan.blocks[m].from[s], select_rows(h, list));
        for (Index r = 0; r < got.rows(); ++r) {
          for (Index c = 0; c < got.cols(); ++c) got(r, c) += part(r, c);
        }
      }
      for (Index r = 0; r < rows.size(); ++r) {
        for (Index c = 0; c < 4; ++c) EXPECT_NEAR(got(r, c), full[rows[r]][c], 1e-13);
      }
    }
  }
}

TEST(CommPlan, JsonDumpCountsRows) {
  const auto a = normalize_adjacency(oracle::six_vertex_graph());
  const auto plan = build_comm_plan(a, oracle::six_vertex_parts(), 3);
  const auto j = plan_to_json(plan);
  EXPECT_EQ(j["p"], 3);
  EXPECT_EQ(j["total_rows"], plan_volume(plan, 1).total_words);
  Index rows = 0;
  for (const auto& pair : j["pairs"]) rows += pair["rows"].get<Index>();
  EXPECT_EQ(rows, j["total_rows"].get<Index>());
  EXPECT_EQ(j["ranks"].size(), 3u);
}
