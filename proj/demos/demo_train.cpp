// Trains a two-layer GCN on a small grid with 4 simulated ranks and checks the
// result against single-process training.

#include <cmath>
#include <cstdio>

#include "gcnpart/gcnpart.hpp"

using namespace gcnpart;

int main() {
  const SparseMatrix adj = grid_graph(8, 8);
  const Index n = adj.rows();
  const std::vector<Index> dims{6, 8, 3};

  TrainingData data{adj, false, random_features(n, dims.front(), 7), synthetic_labels(n, dims.back(), 7)};
  const GcnModel model = make_model(dims, Activation::ReLU, 0.05, 7);

  const SparseMatrix a_hat = normalize_adjacency(adj);
  const Hypergraph h = build_hypergraph_model(a_hat);
  PartitionConfig pc;
  pc.p = 4;
  pc.seed = 7;
  const Partition pi = partition_hypergraph_fm(h, pc);

  const TrainingResult dist = train_epochs(data, model, pi.assignment(), pc.p, 5, FullBatch{},
                                           Scheduler::MultiWorker);
  const SerialRun serial = train_serial(model, a_hat, a_hat, data.features, data.labels, 5);

  std::printf("epoch  loss(serial)   loss(4 ranks)  words  msgs\n");
  for (Index e = 0; e < dist.epochs.size(); ++e) {
    std::printf("%5zu  %.10f  %.10f  %5zu  %4zu\n", e, serial.losses[e], dist.epochs[e].loss,
                dist.epochs[e].total_words, dist.epochs[e].total_msgs);
  }
  std::printf("predicted words per epoch from the hypergraph cut: %zu\n",
              predicted_total_volume(h, pi, dims));
  double worst = 0.0;
  for (Index k = 0; k < dims.size() - 1; ++k) {
    const auto& a = serial.model.weights[k].data();
    const auto& b = dist.model.weights[k].data();
    for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  std::printf("max |W_serial - W_dist| = %g\n", worst);
  return worst < 1e-12 ? 0 : 1;
}
