// Compares random, graph-model and hypergraph-model partitions of a grid by
// the traffic they induce.

#include <cstdio>

#include "gcnpart/gcnpart.hpp"

using namespace gcnpart;

int main() {
  const SparseMatrix a_hat = normalize_adjacency(grid_graph(32, 32));
  const Hypergraph h = build_hypergraph_model(a_hat);
  const UGraph g = build_graph_model(a_hat);
  const std::vector<Index> dims{16, 16, 4};

  std::printf("  p  part  words/epoch  messages/phase  balance\n");
  for (Index p : {4, 8, 16}) {
    PartitionConfig pc;
    pc.p = p;
    pc.seed = 3;
    const Partition parts[] = {random_partition(h.vertex_weight(), pc), partition_graph_fm(g, pc),
                               partition_hypergraph_fm(h, pc)};
    const char* names[] = {"rp", "gp", "hp"};
    for (int k = 0; k < 3; ++k) {
      const CommPlan plan = build_comm_plan(a_hat, parts[k]);
      std::printf("%3zu  %4s  %11zu  %14zu  %.4f\n", p, names[k], predicted_total_volume(h, parts[k], dims),
                  plan_volume(plan, 1).total_msgs, parts[k].balance_ratio());
    }
  }
  return 0;
}
