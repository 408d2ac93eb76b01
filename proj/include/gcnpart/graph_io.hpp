#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gcnpart/error.hpp"
#include "gcnpart/rng.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

enum class GraphFormat { EdgeList, MatrixMarket };

/// Edge list: one "u v" pair per line, 0-based. An optional "n=<count>" line
/// (bare or after '#'/'%') declares the vertex count; otherwise it is the
/// largest id + 1. Undirected lists get both directions.
///
/// MatrixMarket: coordinate format, 1-based. Values are ignored; symmetric
/// files are mirrored, general files are taken as directed adjacency and
/// symmetrized when `directed` is false.
///
/// Either way the result is a unit-valued pattern without self loops
/// (normalization adds them) and with duplicates collapsed.
inline SparseMatrix parse_graph(std::istream& in, GraphFormat format, bool directed) {
  constexpr const char* mod = "cli";
  std::vector<Triplet> entries;
  auto add = [&](Index i, Index j) {
    if (i == j) return;
    entries.push_back({i, j, 1.0});
    if (!directed) entries.push_back({j, i, 1.0});
  };
  auto pattern = [](Index n, std::vector<Triplet> e) {
    const SparseMatrix m = SparseMatrix::from_triplets(n, n, std::move(e));
    return SparseMatrix(n, n, std::vector<Index>(m.row_offsets().begin(), m.row_offsets().end()),
                        std::vector<Index>(m.col_indices().begin(), m.col_indices().end()),
                        std::vector<Real>(m.nnz(), 1.0));
  };
  auto at_line = [](Index line_no) { return "line " + std::to_string(line_no) + ": "; };

  std::string line;
  Index line_no = 0;
  if (format == GraphFormat::EdgeList) {
    Index declared = 0;
    bool has_declared = false;
    Index max_id = 0;
    bool any = false;
    while (std::getline(in, line)) {
      ++line_no;
      std::string body = line;
      const auto first = body.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      body = body.substr(first);
      bool comment = false;
      if (body[0] == '#' || body[0] == '%') {
        comment = true;
        body = body.substr(1);
        body.erase(0, body.find_first_not_of(" \t"));
      }
      if (body.rfind("n=", 0) == 0 || body.rfind("n =", 0) == 0) {
        const auto eq = body.find('=');
        std::istringstream ss(body.substr(eq + 1));
        long long n = -1;
        detail::require(static_cast<bool>(ss >> n) && n >= 0, mod, at_line(line_no) + "bad vertex count");
        declared = static_cast<Index>(n);
        has_declared = true;
        continue;
      }
      if (comment) continue;
      std::istringstream ss(body);
      long long u = -1, v = -1;
      detail::require(static_cast<bool>(ss >> u >> v), mod, at_line(line_no) + "expected 'u v'");
      detail::require(u >= 0 && v >= 0, mod, at_line(line_no) + "negative vertex id");
      std::string rest;
      if (ss >> rest) {
        // A third column (weight) is tolerated and ignored.
        detail::require(rest.find_first_not_of("0123456789.eE+-") == std::string::npos, mod,
                        at_line(line_no) + "unexpected token '" + rest + "'");
      }
      if (has_declared) {
        detail::require(static_cast<Index>(u) < declared && static_cast<Index>(v) < declared, mod,
                        at_line(line_no) + "vertex id out of declared range n=" + std::to_string(declared));
      }
      max_id = std::max({max_id, static_cast<Index>(u), static_cast<Index>(v)});
      any = true;
      add(static_cast<Index>(u), static_cast<Index>(v));
    }
    const Index n = has_declared ? declared : (any ? max_id + 1 : 0);
    return pattern(n, std::move(entries));
  }

  detail::require(static_cast<bool>(std::getline(in, line)), mod, "empty MatrixMarket file");
  ++line_no;
  std::istringstream banner(line);
  std::string tag, object, layout, field, symmetry;
  banner >> tag >> object >> layout >> field >> symmetry;
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(), ::tolower);
  std::transform(layout.begin(), layout.end(), layout.begin(), ::tolower);
  std::transform(field.begin(), field.end(), field.begin(), ::tolower);
  detail::require(tag == "%%MatrixMarket", mod, at_line(1) + "missing %%MatrixMarket banner");
  detail::require(layout == "coordinate", mod, at_line(1) + "only coordinate MatrixMarket files are supported");
  detail::require(symmetry == "general" || symmetry == "symmetric" || symmetry == "skew-symmetric" ||
                      symmetry == "hermitian",
                  mod, at_line(1) + "unknown symmetry '" + symmetry + "'");
  const bool mirrored = symmetry != "general";
  const bool keep_direction = directed && !mirrored;

  long long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    std::istringstream ss(line);
    detail::require(static_cast<bool>(ss >> rows >> cols >> nnz), mod, at_line(line_no) + "bad size line");
    break;
  }
  detail::require(rows >= 0 && rows == cols, mod, "adjacency matrix must be square");
  const Index n = static_cast<Index>(rows);
  long long seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    std::istringstream ss(line);
    long long i = 0, j = 0;
    detail::require(static_cast<bool>(ss >> i >> j), mod, at_line(line_no) + "expected 'row col [value]'");
    detail::require(i >= 1 && j >= 1 && i <= rows && j <= cols, mod,
                    at_line(line_no) + "index out of declared range");
    const Index r = static_cast<Index>(i - 1), c = static_cast<Index>(j - 1);
    if (r != c) {
      entries.push_back({r, c, 1.0});
      if (!keep_direction) entries.push_back({c, r, 1.0});
    }
    ++seen;
  }
  detail::require(seen == nnz, mod,
                  "MatrixMarket header declares " + std::to_string(nnz) + " entries, found " + std::to_string(seen));
  return pattern(n, std::move(entries));
}

inline SparseMatrix load_graph(const std::string& path, GraphFormat format, bool directed) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), "cli", "cannot read graph file '" + path + "'");
  return parse_graph(in, format, directed);
}

inline bool is_structurally_symmetric(const SparseMatrix& a) {
  if (!a.is_square()) return false;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j : a.row_cols(i)) {
      if (!a.contains(j, i)) return false;
    }
  }
  return true;
}

/// Coordinate pattern file; symmetric patterns store the lower triangle.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  const bool symmetric = is_structurally_symmetric(a);
  out << "%%MatrixMarket matrix coordinate pattern " << (symmetric ? "symmetric" : "general") << '\n';
  Index count = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j : a.row_cols(i)) {
      if (!symmetric || j <= i) ++count;
    }
  }
  out << a.rows() << ' ' << a.cols() << ' ' << count << '\n';
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j : a.row_cols(i)) {
      if (!symmetric || j <= i) out << i + 1 << ' ' << j + 1 << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic graphs (unit-valued, undirected unless stated, no self loops)
// ---------------------------------------------------------------------------

inline SparseMatrix from_edge_pairs(Index n, const std::vector<std::pair<Index, Index>>& edges, bool directed) {
  std::vector<Triplet> t;
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    t.push_back({u, v, 1.0});
    if (!directed) t.push_back({v, u, 1.0});
  }
  const SparseMatrix m = SparseMatrix::from_triplets(n, n, std::move(t));
  return SparseMatrix(n, n, std::vector<Index>(m.row_offsets().begin(), m.row_offsets().end()),
                      std::vector<Index>(m.col_indices().begin(), m.col_indices().end()),
                      std::vector<Real>(m.nnz(), 1.0));
}

/// rows x cols 4-neighbour grid, vertex r*cols + c.
inline SparseMatrix grid_graph(Index rows, Index cols) {
  std::vector<std::pair<Index, Index>> edges;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index v = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + cols);
    }
  }
  return from_edge_pairs(rows * cols, edges, false);
}

/// Two communities (vertices < n/2 and the rest). Inside each, degree/2 random
/// permutations contribute edges v -- sigma(v), giving a near-regular random
/// graph; `bridges` random edges then join the communities.
inline SparseMatrix two_community_graph(Index n, Index degree, Index bridges, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x636f6d6dULL);
  std::vector<std::pair<Index, Index>> edges;
  const Index half = n / 2;
  const Index base[2] = {0, half};
  const Index size[2] = {half, n - half};
  for (int c = 0; c < 2; ++c) {
    std::vector<Index> perm(size[c]);
    for (Index r = 0; r < degree / 2; ++r) {
      for (Index i = 0; i < size[c]; ++i) perm[i] = i;
      rng.shuffle(std::span<Index>(perm));
      for (Index i = 0; i < size[c]; ++i) edges.emplace_back(base[c] + i, base[c] + perm[i]);
    }
  }
  for (Index k = 0; k < bridges && half > 0 && n - half > 0; ++k) {
    edges.emplace_back(static_cast<Index>(rng.below(half)), half + static_cast<Index>(rng.below(n - half)));
  }
  return from_edge_pairs(n, edges, false);
}

/// Uniform random graph with about n * avg_degree / 2 edges (or that many
/// directed arcs when `directed`).
inline SparseMatrix random_graph(Index n, double avg_degree, std::uint64_t seed, bool directed = false) {
  Rng rng = Rng::derive(seed, 0x72616e64ULL);
  const auto target = static_cast<Index>(static_cast<double>(n) * avg_degree / (directed ? 1.0 : 2.0));
  std::vector<std::pair<Index, Index>> edges;
  for (Index k = 0; k < target && n > 1; ++k) {
    const Index u = static_cast<Index>(rng.below(n));
    const Index v = static_cast<Index>(rng.below(n));
    if (u != v) edges.emplace_back(u, v);
  }
  return from_edge_pairs(n, edges, directed);
}

}  // namespace gcnpart
