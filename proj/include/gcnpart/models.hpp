#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gcnpart/error.hpp"
#include "gcnpart/rng.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

/// Undirected graph model: symmetrized off-diagonal pattern with unit edge
/// costs and row-nnz vertex weights.
struct UGraph {
  Index n_vertices = 0;
  std::vector<std::pair<Index, Index>> edges;  // i < j, sorted, unique
  std::vector<Index> vertex_weight;

  std::vector<std::vector<Index>> adjacency() const {
    std::vector<std::vector<Index>> adj(n_vertices);
    for (const auto& [i, j] : edges) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
  }
};

/// Hypergraph with unit net costs. Pin lists are sorted and duplicate-free.
class Hypergraph {
 public:
  Hypergraph() = default;

  Hypergraph(Index n_vertices, std::vector<std::vector<Index>> nets, std::vector<Index> vertex_weight)
      : n_vertices_(n_vertices), nets_(std::move(nets)), vertex_weight_(std::move(vertex_weight)) {
    constexpr const char* mod = "partition_models";
    detail::require(vertex_weight_.size() == n_vertices_, mod, "one weight per vertex required");
    for (const auto& pins : nets_) {
      detail::require(!pins.empty(), mod, "net without pins");
      for (Index k = 0; k < pins.size(); ++k) {
        detail::require(pins[k] < n_vertices_, mod, "pin out of range");
        detail::require(k == 0 || pins[k - 1] < pins[k], mod, "pins must be sorted and distinct");
      }
    }
  }

  Index n_vertices() const noexcept { return n_vertices_; }
  Index n_nets() const noexcept { return nets_.size(); }
  const std::vector<std::vector<Index>>& nets() const noexcept { return nets_; }
  const std::vector<Index>& pins(Index net) const { return nets_[net]; }
  Index net_cost(Index) const noexcept { return 1; }
  const std::vector<Index>& vertex_weight() const noexcept { return vertex_weight_; }

  Index n_pins() const {
    Index total = 0;
    for (const auto& pins : nets_) total += pins.size();
    return total;
  }

  /// Nets incident to each vertex, ascending.
  std::vector<std::vector<Index>> incidence() const {
    std::vector<std::vector<Index>> inc(n_vertices_);
    for (Index e = 0; e < nets_.size(); ++e) {
      for (Index v : nets_[e]) inc[v].push_back(e);
    }
    return inc;
  }

  bool operator==(const Hypergraph&) const = default;

 private:
  Index n_vertices_ = 0;
  std::vector<std::vector<Index>> nets_;
  std::vector<Index> vertex_weight_;
};

/// W_avg * (1 + epsilon); the largest admissible part weight.
inline double balance_cap(Index total_weight, Index p, double epsilon) {
  return static_cast<double>(total_weight) / static_cast<double>(p) * (1.0 + epsilon);
}

/// A p-way vertex assignment with its part weights.
class Partition {
 public:
  Partition() = default;

  Partition(Index p, std::vector<Index> assignment, std::span<const Index> vertex_weight,
            double epsilon)
      : p_(p), assignment_(std::move(assignment)), part_weights_(p, 0), epsilon_(epsilon) {
    constexpr const char* mod = "partition_models";
    detail::require(p_ >= 1, mod, "part count must be at least 1");
    detail::require(assignment_.size() == vertex_weight.size(), mod,
                    "assignment covers " + std::to_string(assignment_.size()) + " of " +
                        std::to_string(vertex_weight.size()) + " vertices");
    std::vector<Index> sizes(p_, 0);
    for (Index v = 0; v < assignment_.size(); ++v) {
      detail::require(assignment_[v] < p_, mod, "part id out of range for vertex " + std::to_string(v));
      part_weights_[assignment_[v]] += vertex_weight[v];
      ++sizes[assignment_[v]];
    }
    for (Index m = 0; m < p_; ++m) {
      detail::require(sizes[m] > 0, mod, "part " + std::to_string(m) + " is empty");
    }
  }

  Index p() const noexcept { return p_; }
  Index n_vertices() const noexcept { return assignment_.size(); }
  const std::vector<Index>& assignment() const noexcept { return assignment_; }
  Index part_of(Index v) const { return assignment_[v]; }
  const std::vector<Index>& part_weights() const noexcept { return part_weights_; }
  double epsilon() const noexcept { return epsilon_; }

  Index total_weight() const {
    Index total = 0;
    for (Index w : part_weights_) total += w;
    return total;
  }

  /// max_m W(V_m) / W_avg - 1.
  double balance_ratio() const {
    const double avg = static_cast<double>(total_weight()) / static_cast<double>(p_);
    if (avg == 0.0) return 0.0;
    const Index heaviest = *std::max_element(part_weights_.begin(), part_weights_.end());
    return static_cast<double>(heaviest) / avg - 1.0;
  }

  bool is_balanced() const {
    const double cap = balance_cap(total_weight(), p_, epsilon_);
    return std::all_of(part_weights_.begin(), part_weights_.end(),
                       [cap](Index w) { return static_cast<double>(w) <= cap; });
  }

  /// Vertex ids of each part, ascending.
  std::vector<std::vector<Index>> parts() const {
    std::vector<std::vector<Index>> out(p_);
    for (Index v = 0; v < assignment_.size(); ++v) out[assignment_[v]].push_back(v);
    return out;
  }

 private:
  Index p_ = 0;
  std::vector<Index> assignment_;
  std::vector<Index> part_weights_;
  double epsilon_ = 0.0;
};

struct CutReport {
  Index cut_value = 0;
  std::vector<Index> per_net_lambda;  // hypergraph cuts only
  double balance_ratio = 0.0;
};

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

inline std::vector<Index> row_nnz_weights(const SparseMatrix& a) {
  std::vector<Index> w(a.rows());
  for (Index i = 0; i < a.rows(); ++i) w[i] = a.row_nnz(i);
  return w;
}

inline UGraph build_graph_model(const SparseMatrix& a) {
  detail::require(a.is_square(), "partition_models", "graph model needs a square matrix");
  UGraph g;
  g.n_vertices = a.rows();
  g.vertex_weight = row_nnz_weights(a);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j : a.row_cols(i)) {
      if (i != j) g.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

/// Column-net model: net j pins every row with a nonzero in column j.
inline Hypergraph build_hypergraph_model(const SparseMatrix& a) {
  detail::require(a.is_square(), "partition_models", "hypergraph model needs a square matrix");
  for (Index i = 0; i < a.rows(); ++i) {
    detail::require(a.contains(i, i), "partition_models",
                    "missing diagonal entry in row " + std::to_string(i));
  }
  const SparseMatrix at = transpose_sparse(a);
  std::vector<std::vector<Index>> nets(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const auto rows = at.row_cols(j);
    nets[j].assign(rows.begin(), rows.end());
  }
  return Hypergraph(a.rows(), std::move(nets), row_nnz_weights(a));
}

// ---------------------------------------------------------------------------
// Cut metrics
// ---------------------------------------------------------------------------

namespace detail {

inline void require_cover(Index n, const Partition& pi) {
  require(pi.n_vertices() == n, "partition_models",
          "partition covers " + std::to_string(pi.n_vertices()) + " vertices, model has " +
              std::to_string(n));
}

}  // namespace detail

inline CutReport evaluate_graph_cut(const UGraph& g, const Partition& pi) {
  detail::require_cover(g.n_vertices, pi);
  CutReport report;
  for (const auto& [i, j] : g.edges) {
    if (pi.part_of(i) != pi.part_of(j)) ++report.cut_value;
  }
  report.balance_ratio = pi.balance_ratio();
  return report;
}

/// Number of distinct parts among `pins` under `assignment`.
inline Index connectivity(std::span<const Index> pins, std::span<const Index> assignment,
                          std::vector<Index>& scratch_parts) {
  scratch_parts.clear();
  for (Index v : pins) scratch_parts.push_back(assignment[v]);
  std::sort(scratch_parts.begin(), scratch_parts.end());
  return static_cast<Index>(std::unique(scratch_parts.begin(), scratch_parts.end()) -
                            scratch_parts.begin());
}

/// Connectivity-1 cut of an arbitrary assignment (parts need not be non-empty).
inline Index connectivity_cut(const Hypergraph& h, std::span<const Index> assignment) {
  detail::require(assignment.size() == h.n_vertices(), "partition_models", "assignment size mismatch");
  std::vector<Index> scratch;
  Index cut = 0;
  for (Index e = 0; e < h.n_nets(); ++e) {
    cut += h.net_cost(e) * (connectivity(h.pins(e), assignment, scratch) - 1);
  }
  return cut;
}

inline CutReport evaluate_hypergraph_cut(const Hypergraph& h, const Partition& pi) {
  detail::require_cover(h.n_vertices(), pi);
  CutReport report;
  report.per_net_lambda.reserve(h.n_nets());
  std::vector<Index> scratch;
  for (Index e = 0; e < h.n_nets(); ++e) {
    const Index lambda = connectivity(h.pins(e), pi.assignment(), scratch);
    report.per_net_lambda.push_back(lambda);
    report.cut_value += h.net_cost(e) * (lambda - 1);
  }
  report.balance_ratio = pi.balance_ratio();
  return report;
}

/// Words moved in one epoch (feedforward + backprop) under the hypergraph
/// model: sum_j (lambda_j - 1) * sum_k (d_{k-1} + d_k).
inline Index predicted_total_volume(const Hypergraph& h, const Partition& pi, std::span<const Index> dims) {
  detail::require(dims.size() >= 2, "partition_models", "dims must list d_0..d_L with L >= 1");
  Index per_net = 0;
  for (Index k = 1; k < dims.size(); ++k) per_net += dims[k - 1] + dims[k];
  return evaluate_hypergraph_cut(h, pi).cut_value * per_net;
}

/// Row transfers attributed to vertex v's feature row by the graph model: one
/// per cut edge incident to v.
inline Index graph_model_vertex_volume(const UGraph& g, const Partition& pi, Index v) {
  detail::require_cover(g.n_vertices, pi);
  Index count = 0;
  for (const auto& [i, j] : g.edges) {
    if ((i == v || j == v) && pi.part_of(i) != pi.part_of(j)) ++count;
  }
  return count;
}

/// Row transfers per layer and phase implied by the graph model: each cut edge
/// is charged in both directions.
inline Index graph_model_row_volume(const UGraph& g, const Partition& pi) {
  return 2 * evaluate_graph_cut(g, pi).cut_value;
}

// ---------------------------------------------------------------------------
// Stochastic hypergraph
// ---------------------------------------------------------------------------

/// Uniform vertex sampling without replacement; a batch induces the
/// vertex-induced subgraph.
struct MiniBatchSpec {
  Index batch_size = 0;
};

/// Sorted ids of one uniformly sampled batch.
inline std::vector<Index> sample_batch(Index n, const MiniBatchSpec& spec, Rng& rng) {
  detail::require(spec.batch_size >= 1, "partition_models", "empty sampled subgraph (batch size 0)");
  detail::require(spec.batch_size <= n, "partition_models", "batch size exceeds vertex count");
  std::vector<Index> ids(n);
  for (Index i = 0; i < n; ++i) ids[i] = i;
  for (Index k = 0; k < spec.batch_size; ++k) {
    std::swap(ids[k], ids[k + rng.below(n - k)]);
  }
  ids.resize(spec.batch_size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Batch stream used both for stochastic-hypergraph construction and for
/// mini-batch training.
class BatchSampler {
 public:
  BatchSampler(Index n, MiniBatchSpec spec, std::uint64_t seed)
      : n_(n), spec_(spec), rng_(Rng::derive(seed, 0x6261'7463'68ULL)) {}

  std::vector<Index> next() { return sample_batch(n_, spec_, rng_); }

 private:
  Index n_;
  MiniBatchSpec spec_;
  Rng rng_;
};

/// Column nets of the self-looped subgraph induced by `batch` (sorted global
/// ids), appended to `nets` with global pin ids.
inline void append_batch_nets(const SparseMatrix& a_transposed,
                              std::span<const Index> batch, std::vector<Index>& in_batch_stamp,
                              Index stamp, std::vector<std::vector<Index>>& nets) {
  for (Index v : batch) in_batch_stamp[v] = stamp;
  for (Index j : batch) {
    std::vector<Index> pins;
    for (Index i : a_transposed.row_cols(j)) {
      if (in_batch_stamp[i] == stamp) pins.push_back(i);
    }
    if (!std::binary_search(pins.begin(), pins.end(), j)) {
      pins.insert(std::lower_bound(pins.begin(), pins.end(), j), j);
    }
    nets.push_back(std::move(pins));
  }
}

/// Vertex weights |cols(A(i,:)) ∪ {i}|.
inline std::vector<Index> self_looped_row_weights(const SparseMatrix& a) {
  std::vector<Index> w(a.rows());
  for (Index i = 0; i < a.rows(); ++i) w[i] = a.row_nnz(i) + (a.contains(i, i) ? 0 : 1);
  return w;
}

/// Hypergraph of one batch over the global vertex set.
inline Hypergraph build_batch_hypergraph(const SparseMatrix& a, std::span<const Index> batch) {
  detail::require(a.is_square(), "partition_models", "batch hypergraph needs a square matrix");
  detail::require(!batch.empty(), "partition_models", "empty sampled subgraph");
  std::vector<Index> stamp(a.rows(), 0);
  std::vector<std::vector<Index>> nets;
  append_batch_nets(transpose_sparse(a), batch, stamp, 1, nets);
  return Hypergraph(a.rows(), std::move(nets), self_looped_row_weights(a));
}

/// Union of the column-net hypergraphs of b sampled batches.
inline Hypergraph build_stochastic_hypergraph(const SparseMatrix& a, const MiniBatchSpec& sampler,
                                              Index b, std::uint64_t seed) {
  detail::require(a.is_square(), "partition_models", "stochastic hypergraph needs a square matrix");
  detail::require(b >= 1, "partition_models", "need at least one batch");
  const SparseMatrix at = transpose_sparse(a);
  BatchSampler stream(a.rows(), sampler, seed);
  std::vector<Index> stamp(a.rows(), 0);
  std::vector<std::vector<Index>> nets;
  for (Index i = 0; i < b; ++i) {
    const auto batch = stream.next();
    append_batch_nets(at, batch, stamp, i + 1, nets);
  }
  return Hypergraph(a.rows(), std::move(nets), self_looped_row_weights(a));
}

/// Fewest nets for which the mean sampled connectivity is within theta of its
/// expectation with probability at least 1 - delta:
/// ceil((p-1)^2 / (2 theta^2) * ln(2 / delta)).
inline std::uint64_t hoeffding_min_nets(Index p, double theta, double delta) {
  detail::require(p >= 2, "partition_models", "bound is degenerate for p < 2");
  detail::require(theta > 0.0 && std::isfinite(theta), "partition_models", "theta must be positive");
  detail::require(delta > 0.0 && delta < 1.0, "partition_models", "delta must lie in (0, 1)");
  const double spread = static_cast<double>(p - 1);
  const double bound = spread * spread / (2.0 * theta * theta) * std::log(2.0 / delta);
  // Absorb rounding in the logarithm so exact-integer bounds do not round up.
  return static_cast<std::uint64_t>(std::ceil(bound * (1.0 - 1e-12)));
}

// ---------------------------------------------------------------------------
// Text formats
//
// Hypergraph:  "<n_vertices> <n_nets>" header, one line of 0-based pins per
//              net, then an optional line with n_vertices weights.
// Partition:   one 0-based part id per line, line i for vertex i.
// Lines starting with '%' or '#' are comments.
// ---------------------------------------------------------------------------

namespace detail {

inline bool next_content_line(std::istream& in, std::string& line, Index& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%' || line[first] == '#') continue;
    return true;
  }
  return false;
}

inline std::vector<Index> parse_indices(const std::string& line, Index line_no, const char* mod) {
  std::istringstream ss(line);
  std::vector<Index> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok.size() && tok[0] != '-', mod,
            "line " + std::to_string(line_no) + ": expected a non-negative integer, got '" + tok + "'");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

}  // namespace detail

inline void write_hypergraph(std::ostream& out, const Hypergraph& h) {
  out << h.n_vertices() << ' ' << h.n_nets() << '\n';
  for (const auto& pins : h.nets()) {
    for (Index k = 0; k < pins.size(); ++k) out << (k ? " " : "") << pins[k];
    out << '\n';
  }
  for (Index v = 0; v < h.n_vertices(); ++v) out << (v ? " " : "") << h.vertex_weight()[v];
  out << '\n';
}

inline Hypergraph read_hypergraph(std::istream& in) {
  constexpr const char* mod = "partition_models";
  std::string line;
  Index line_no = 0;
  detail::require(detail::next_content_line(in, line, line_no), mod, "missing hypergraph header");
  const auto header = detail::parse_indices(line, line_no, mod);
  detail::require(header.size() == 2, mod, "line " + std::to_string(line_no) +
                                               ": header must be '<n_vertices> <n_nets>'");
  const Index n = header[0];
  std::vector<std::vector<Index>> nets;
  for (Index e = 0; e < header[1]; ++e) {
    detail::require(detail::next_content_line(in, line, line_no), mod,
                    "expected " + std::to_string(header[1]) + " nets, found " + std::to_string(e));
    auto pins = detail::parse_indices(line, line_no, mod);
    std::sort(pins.begin(), pins.end());
    pins.erase(std::unique(pins.begin(), pins.end()), pins.end());
    for (Index v : pins) {
      detail::require(v < n, mod, "line " + std::to_string(line_no) + ": pin " + std::to_string(v) +
                                      " out of range");
    }
    nets.push_back(std::move(pins));
  }
  std::vector<Index> weights(n, 1);
  if (detail::next_content_line(in, line, line_no)) {
    weights = detail::parse_indices(line, line_no, mod);
    detail::require(weights.size() == n, mod,
                    "line " + std::to_string(line_no) + ": weight line needs " + std::to_string(n) + " entries");
  }
  return Hypergraph(n, std::move(nets), std::move(weights));
}

inline void write_partition(std::ostream& out, const Partition& pi) {
  for (Index part : pi.assignment()) out << part << '\n';
}

/// Reads a part-id-per-line file produced by any partitioner.
inline std::vector<Index> read_partition_assignment(std::istream& in, Index n_vertices) {
  constexpr const char* mod = "partition_models";
  std::vector<Index> assignment;
  std::string line;
  Index line_no = 0;
  while (detail::next_content_line(in, line, line_no)) {
    const auto values = detail::parse_indices(line, line_no, mod);
    detail::require(values.size() == 1, mod, "line " + std::to_string(line_no) + ": expected one part id");
    assignment.push_back(values[0]);
  }
  detail::require(assignment.size() == n_vertices, mod,
                  "partition file lists " + std::to_string(assignment.size()) + " vertices, expected " +
                      std::to_string(n_vertices));
  return assignment;
}

}  // namespace gcnpart
