#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcnpart/error.hpp"
#include "gcnpart/models.hpp"
#include "gcnpart/rng.hpp"

namespace gcnpart {

struct PartitionConfig {
  Index p = 1;
  double epsilon = 0.01;
  std::uint64_t seed = 1;
  Index fm_passes = 8;
  bool refinement = true;
  Index initial_trials = 4;  // region-growing starts per bisection; best cut kept
};

// ---------------------------------------------------------------------------
// Random partitioning
// ---------------------------------------------------------------------------

namespace detail {

inline void check_config(const PartitionConfig& cfg, Index n) {
  require(cfg.p >= 1, "partitioner", "p must be at least 1");
  require(cfg.epsilon >= 0.0, "partitioner", "epsilon must be non-negative");
  require(cfg.p <= n, "partitioner",
          "p = " + std::to_string(cfg.p) + " exceeds vertex count " + std::to_string(n));
}

inline bool is_power_of_two(Index p) { return p != 0 && (p & (p - 1)) == 0; }


/// Fills empty parts, then drains the heaviest part while it exceeds `cap`:
/// first by moves that fit, then by weight-reducing swaps that fit, and as a
/// last resort by moves or swaps that only lower the heaviest part, and then by
/// equal-weight transfer chains through other parts. Within a tier the best
/// connectivity-1 gain wins, then the lower vertex id. Each step
/// lowers the descending-sorted part weight vector lexicographically, so the
/// loop ends.
inline void rebalance_parts(std::vector<Index>& assignment, std::span<const Index> weights, Index p, double cap,
                            const std::vector<std::vector<Index>>& nets,
                            const std::vector<std::vector<Index>>& incidence) {
  constexpr Index kNone = std::numeric_limits<Index>::max();
  const Index n = assignment.size();
  std::vector<Index> part_weight(p, 0), part_size(p, 0);
  for (Index v = 0; v < n; ++v) {
    part_weight[assignment[v]] += weights[v];
    ++part_size[assignment[v]];
  }
  Index total = 0;
  for (Index w : part_weight) total += w;
  require(static_cast<double>(p) * std::floor(cap) >= static_cast<double>(total), "partitioner",
          "balance infeasible: " + std::to_string(p) + " parts of weight at most " +
              std::to_string(static_cast<Index>(std::floor(cap))) + " cannot hold total weight " +
              std::to_string(total));
  std::vector<Index> counts(nets.size() * p, 0);
  for (Index e = 0; e < nets.size(); ++e) {
    for (Index v : nets[e]) ++counts[e * p + assignment[v]];
  }
  auto gain = [&](Index v, Index from, Index to) {
    long long g = 0;
    for (Index e : incidence[v]) {
      if (counts[e * p + from] == 1) ++g;
      if (counts[e * p + to] == 0) --g;
    }
    return g;
  };
  auto move = [&](Index v, Index to) {
    const Index from = assignment[v];
    for (Index e : incidence[v]) {
      --counts[e * p + from];
      ++counts[e * p + to];
    }
    part_weight[from] -= weights[v];
    --part_size[from];
    part_weight[to] += weights[v];
    ++part_size[to];
    assignment[v] = to;
  };
  auto fits = [&](Index weight) { return static_cast<double>(weight) <= cap; };

  // Tier 4: a chain s -> m1 -> ... -> t whose every hop shifts exactly d
  // weight by exchanging a few vertices (X leaves, Y enters, w(X) - w(Y) = d),
  // so only s and t change weight. Smallest d first; a target within the cap
  // is preferred over one that merely stays below s.
  auto transfer_chain = [&](Index s) {
    constexpr Index kMaxSwap = 8;  // vertices per hop
    constexpr std::uint8_t kOff = 255;
    std::vector<std::map<Index, std::vector<Index>>> by_weight(p);
    Index max_w = 0;
    for (Index v = 0; v < n; ++v) {
      by_weight[assignment[v]][weights[v]].push_back(v);
      max_w = std::max(max_w, weights[v]);
    }
    const long long range = static_cast<long long>(kMaxSwap * max_w);
    const Index width = static_cast<Index>(2 * range + 1);
    // Signed weights of the candidate items for an a -> b exchange.
    auto items_of = [&](Index a, Index b) {
      std::vector<long long> items;
      for (const auto& [w, ids] : by_weight[a]) items.insert(items.end(), std::min(ids.size(), kMaxSwap), w);
      for (const auto& [w, ids] : by_weight[b]) items.insert(items.end(), std::min(ids.size(), kMaxSwap), -static_cast<long long>(w));
      return items;
    };
    // Fewest items reaching each difference; layers kept for backtracking.
    auto knapsack = [&](const std::vector<long long>& items, bool keep_layers,
                        std::vector<std::vector<std::uint8_t>>* layers) {
      std::vector<std::uint8_t> best(width, kOff);
      best[range] = 0;
      if (keep_layers) layers->push_back(best);
      for (long long item : items) {
        std::vector<std::uint8_t> next = best;
        for (Index i = 0; i < width; ++i) {
          if (best[i] >= kMaxSwap) continue;
          const long long j = static_cast<long long>(i) + item;
          if (j < 0 || j >= static_cast<long long>(width)) continue;
          next[j] = std::min<std::uint8_t>(next[j], best[i] + 1);
        }
        best = std::move(next);
        if (keep_layers) layers->push_back(best);
      }
      return best;
    };
    std::map<std::pair<Index, Index>, std::vector<std::uint8_t>> tables;
    auto reachable = [&](Index a, Index b, Index d) {
      auto it = tables.find({a, b});
      if (it == tables.end()) it = tables.emplace(std::pair(a, b), knapsack(items_of(a, b), false, nullptr)).first;
      return static_cast<long long>(d) <= range && it->second[range + d] <= kMaxSwap;
    };
    // Highest-gain members of `ids` leaving `from` for `to`, lowest id on ties.
    // Vertices already claimed by another hop of the same chain are skipped.
    std::vector<bool> taken(n, false);
    auto choose = [&](const std::vector<Index>& ids, Index count, Index from, Index to) {
      std::vector<std::pair<long long, Index>> ranked;
      for (Index v : ids) {
        if (!taken[v]) ranked.emplace_back(-gain(v, from, to), v);
      }
      std::sort(ranked.begin(), ranked.end());
      std::vector<Index> out;
      for (Index k = 0; k < count && k < ranked.size(); ++k) {
        out.push_back(ranked[k].second);
        taken[ranked[k].second] = true;
      }
      return out;
    };

    for (int strict = 1; strict >= 0; --strict) {
      for (Index d = 1; static_cast<long long>(d) <= range; ++d) {
        // A hop that cannot be realized next to the rest of its chain is
        // blocked and the search repeated.
        std::set<std::pair<Index, Index>> blocked;
        for (;;) {
          std::vector<Index> prev(p, kNone);
          std::vector<Index> queue{s};
          prev[s] = s;
          Index target = p;
          for (Index head = 0; head < queue.size() && target == p; ++head) {
            const Index a = queue[head];
            for (Index b = 0; b < p; ++b) {
              if (prev[b] != kNone || blocked.count({a, b}) || !reachable(a, b, d)) continue;
              prev[b] = a;
              queue.push_back(b);
              const Index after = part_weight[b] + d;
              if (strict ? fits(after) : after < part_weight[s]) {
                target = b;
                break;
              }
            }
          }
          if (target == p) break;
          // Choose every hop's vertices before moving any.
          std::vector<std::pair<Index, Index>> plan;
          std::pair<Index, Index> failed{kNone, kNone};
          std::fill(taken.begin(), taken.end(), false);
          for (Index b = target; b != s && failed.first == kNone; b = prev[b]) {
            const Index a = prev[b];
            const auto items = items_of(a, b);
            std::vector<std::vector<std::uint8_t>> layers;
            knapsack(items, true, &layers);
            std::map<long long, Index> used;
            long long diff = static_cast<long long>(d);
            for (Index i = items.size(); i > 0; --i) {
              if (layers[i][range + diff] == layers[i - 1][range + diff]) continue;
              ++used[items[i - 1]];
              diff -= items[i - 1];
            }
            for (const auto& [signed_w, count] : used) {
              const bool out = signed_w > 0;
              const Index w = static_cast<Index>(out ? signed_w : -signed_w);
              const Index from = out ? a : b, to = out ? b : a;
              const auto picked = choose(by_weight[from].at(w), count, from, to);
              if (picked.size() != count) failed = {a, b};
              for (Index v : picked) plan.emplace_back(v, to);
            }
          }
          if (failed.first != kNone) {
            blocked.insert(failed);
            continue;
          }
          for (const auto& [v, to] : plan) move(v, to);
          return true;
        }
      }
    }
    return false;
  };

  for (Index guard = 0;; ++guard) {
    require(guard <= 8 * n + 4 * p, "partitioner", "rebalancing did not converge");
    Index empty = p;
    for (Index m = 0; m < p && empty == p; ++m) {
      if (part_size[m] == 0) empty = m;
    }
    if (empty != p) {
      Index donor = p;
      for (Index m = 0; m < p; ++m) {
        if (part_size[m] >= 2 && (donor == p || part_weight[m] > part_weight[donor])) donor = m;
      }
      require(donor != p, "partitioner", "more parts than vertices");
      Index best_v = kNone;
      long long best_gain = 0;
      for (Index v = 0; v < n; ++v) {
        if (assignment[v] != donor) continue;
        const long long g = gain(v, donor, empty);
        if (best_v == kNone || g > best_gain) {
          best_v = v;
          best_gain = g;
        }
      }
      move(best_v, empty);
      continue;
    }
    Index s = 0;
    for (Index m = 1; m < p; ++m) {
      if (part_weight[m] > part_weight[s]) s = m;
    }
    if (fits(part_weight[s])) return;
    if (part_size[s] < 2) break;

    std::vector<Index> members;
    for (Index v = 0; v < n; ++v) {
      if (assignment[v] == s) members.push_back(v);
    }
    // Tier 1: a single move that fits.
    Index best_v = kNone, best_to = p;
    long long best_gain = 0;
    for (Index v : members) {
      for (Index to = 0; to < p; ++to) {
        if (to == s || !fits(part_weight[to] + weights[v])) continue;
        const long long g = gain(v, s, to);
        if (best_v == kNone || g > best_gain) {
          best_v = v;
          best_to = to;
          best_gain = g;
        }
      }
    }
    if (best_v != kNone) {
      move(best_v, best_to);
      continue;
    }

    // Swap gains are evaluated independently for both vertices.
    std::vector<long long> out_gain(members.size() * p, 0);
    for (Index i = 0; i < members.size(); ++i) {
      for (Index to = 0; to < p; ++to) {
        if (to != s) out_gain[i * p + to] = gain(members[i], s, to);
      }
    }
    std::vector<long long> in_gain(n, 0);
    for (Index u = 0; u < n; ++u) {
      if (assignment[u] != s) in_gain[u] = gain(u, assignment[u], s);
    }
    auto search = [&](bool strict_cap) {
      Index sv = kNone, su = kNone, sto = p;
      long long sg = 0;
      Index s_peak = 0;
      auto consider = [&](Index v, Index u, Index to, long long g, Index peak) {
        const bool better = sv == kNone || (strict_cap ? g > sg : (peak < s_peak || (peak == s_peak && g > sg)));
        if (better) {
          sv = v;
          su = u;
          sto = to;
          sg = g;
          s_peak = peak;
        }
      };
      for (Index i = 0; i < members.size(); ++i) {
        const Index v = members[i];
        if (!strict_cap) {
          for (Index to = 0; to < p; ++to) {
            if (to == s) continue;
            const Index after_to = part_weight[to] + weights[v];
            if (after_to >= part_weight[s]) continue;
            consider(v, kNone, to, out_gain[i * p + to], std::max(after_to, part_weight[s] - weights[v]));
          }
        }
        for (Index u = 0; u < n; ++u) {
          const Index to = assignment[u];
          if (to == s || weights[u] >= weights[v]) continue;
          const Index after_to = part_weight[to] - weights[u] + weights[v];
          if (strict_cap ? !fits(after_to) : after_to >= part_weight[s]) continue;
          const Index after_s = part_weight[s] - weights[v] + weights[u];
          consider(v, u, to, out_gain[i * p + to] + in_gain[u], std::max(after_to, after_s));
        }
      }
      return std::tuple(sv, su, sto);
    };
    // Tier 2: swaps that keep the partner within the cap; tier 3: anything
    // that lowers the heaviest part.
    auto [v, u, to] = search(true);
    if (v == kNone) std::tie(v, u, to) = search(false);
    if (v != kNone) {
      move(v, to);
      if (u != kNone) move(u, s);
      continue;
    }
    if (!transfer_chain(s)) break;
  }
  fail("partitioner",
       "balance not reached: no rebalancing step found (parts may need exact weights; try a larger epsilon)");
}

}  // namespace detail

/// Seeded uniform assignment, then repaired: empty parts are filled and
/// overweight parts drained until every part is within the cap.
inline Partition random_partition(std::span<const Index> weights, const PartitionConfig& cfg) {
  const Index n = weights.size();
  detail::check_config(cfg, n);
  const Index p = cfg.p;
  Rng rng = Rng::derive(cfg.seed, 0x7270ULL);
  std::vector<Index> assignment(n);
  for (Index v = 0; v < n; ++v) assignment[v] = static_cast<Index>(rng.below(p));

  Index total = 0;
  for (Index w : weights) total += w;
  const double cap = balance_cap(total, p, cfg.epsilon);
  for (Index w : weights) {
    detail::require(static_cast<double>(w) <= cap, "partitioner",
                    "balance infeasible: a vertex of weight " + std::to_string(w) +
                        " exceeds the part cap");
  }

  const std::vector<std::vector<Index>> no_nets;
  const std::vector<std::vector<Index>> no_incidence(n);
  detail::rebalance_parts(assignment, weights, p, cap, no_nets, no_incidence);
  return Partition(p, std::move(assignment), weights, cfg.epsilon);
}

// ---------------------------------------------------------------------------
// Two-way FM state
// ---------------------------------------------------------------------------

/// Bipartition of a net list with per-net side counters. `gain(v)` is the exact
/// reduction of the cut if v switches sides; both are maintained
/// incrementally under `move`.
class BisectionState {
 public:
  using GainCallback = std::function<void(Index vertex, long long old_gain, long long new_gain)>;

  BisectionState(std::span<const std::vector<Index>> nets, std::span<const Index> weights,
                 std::vector<std::uint8_t> side)
      : nets_(nets), weights_(weights), side_(std::move(side)), incidence_(weights.size()),
        counts_(2 * nets.size(), 0), gain_(weights.size(), 0) {
    detail::require(side_.size() == weights_.size(), "partitioner", "side vector size mismatch");
    for (Index e = 0; e < nets_.size(); ++e) {
      for (Index v : nets_[e]) {
        incidence_[v].push_back(e);
        ++counts_[2 * e + side_[v]];
      }
    }
    for (Index v = 0; v < weights_.size(); ++v) side_weight_[side_[v]] += weights_[v];
    for (Index e = 0; e < nets_.size(); ++e) {
      if (counts_[2 * e] > 0 && counts_[2 * e + 1] > 0) ++cut_;
    }
    for (Index v = 0; v < weights_.size(); ++v) {
      const std::uint8_t s = side_[v];
      long long g = 0;
      for (Index e : incidence_[v]) {
        if (counts_[2 * e + s] == 1) ++g;
        if (counts_[2 * e + (1 - s)] == 0) --g;
      }
      gain_[v] = g;
    }
  }

  Index cut() const noexcept { return cut_; }
  long long gain(Index v) const { return gain_[v]; }
  std::uint8_t side(Index v) const { return side_[v]; }
  const std::vector<std::uint8_t>& sides() const noexcept { return side_; }
  Index side_weight(int s) const { return side_weight_[s]; }
  Index n_vertices() const noexcept { return weights_.size(); }
  Index weight(Index v) const { return weights_[v]; }

  /// Cut recomputed from scratch.
  Index recompute_cut() const {
    Index cut = 0;
    for (const auto& pins : nets_) {
      bool seen[2] = {false, false};
      for (Index v : pins) seen[side_[v]] = true;
      if (seen[0] && seen[1]) ++cut;
    }
    return cut;
  }

  void move(Index v, const GainCallback& on_change = {}) {
    const std::uint8_t from = side_[v];
    const std::uint8_t to = 1 - from;
    auto bump = [&](Index u, long long delta) {
      const long long old = gain_[u];
      gain_[u] += delta;
      if (on_change) on_change(u, old, gain_[u]);
    };
    auto unique_on = [&](Index e, std::uint8_t s) {
      for (Index u : nets_[e]) {
        if (u != v && side_[u] == s) return u;
      }
      return v;
    };
    for (Index e : incidence_[v]) {
      Index& n_from = counts_[2 * e + from];
      Index& n_to = counts_[2 * e + to];
      if (n_to == 0) {
        for (Index u : nets_[e]) {
          if (u != v) bump(u, +1);
        }
        if (n_from > 1) ++cut_;
      } else if (n_to == 1) {
        bump(unique_on(e, to), -1);
      }
      --n_from;
      ++n_to;
      if (n_from == 0) {
        for (Index u : nets_[e]) {
          if (u != v) bump(u, -1);
        }
        if (n_to > 1) --cut_;
      } else if (n_from == 1) {
        bump(unique_on(e, from), +1);
      }
    }
    side_weight_[from] -= weights_[v];
    side_weight_[to] += weights_[v];
    side_[v] = to;
    const long long old = gain_[v];
    gain_[v] = -old;
    if (on_change) on_change(v, old, gain_[v]);
  }

 private:
  std::span<const std::vector<Index>> nets_;
  std::span<const Index> weights_;
  std::vector<std::uint8_t> side_;
  std::vector<std::vector<Index>> incidence_;
  std::vector<Index> counts_;
  std::vector<long long> gain_;
  Index side_weight_[2] = {0, 0};
  Index cut_ = 0;
};

/// Outcome of one FM pass: cut before, cut after rollback, applied moves.
struct FmPassResult {
  Index start_cut = 0;
  Index end_cut = 0;
  Index applied_moves = 0;
};

/// One FM pass: repeatedly move the unlocked vertex of highest gain (ties to
/// the lower id) whose move keeps the target side within its cap, then roll
/// back to the best prefix.
inline FmPassResult fm_pass(BisectionState& state, const double caps[2]) {
  const Index n = state.n_vertices();
  using Key = std::pair<long long, Index>;
  std::set<Key> queue[2];
  std::vector<bool> locked(n, false);
  for (Index v = 0; v < n; ++v) queue[state.side(v)].insert({-state.gain(v), v});
  auto on_change = [&](Index u, long long old_gain, long long new_gain) {
    if (locked[u]) return;
    auto& q = queue[state.side(u)];
    q.erase({-old_gain, u});
    q.insert({-new_gain, u});
  };

  FmPassResult result;
  result.start_cut = state.cut();
  std::vector<Index> moves;
  long long running = 0;
  long long best = 0;
  Index best_len = 0;
  const Index patience = std::max<Index>(64, n / 8);

  for (;;) {
    Index pick = n;
    long long pick_gain = 0;
    for (int s = 0; s < 2; ++s) {
      const double room = caps[1 - s] - static_cast<double>(state.side_weight(1 - s));
      for (const auto& [neg_gain, v] : queue[s]) {
        if (static_cast<double>(state.weight(v)) > room) continue;
        if (pick == n || -neg_gain > pick_gain || (-neg_gain == pick_gain && v < pick)) {
          pick = v;
          pick_gain = -neg_gain;
        }
        break;
      }
    }
    if (pick == n) break;
    queue[state.side(pick)].erase({-state.gain(pick), pick});
    locked[pick] = true;
    state.move(pick, on_change);
    moves.push_back(pick);
    running += pick_gain;
    if (running > best) {
      best = running;
      best_len = moves.size();
    }
    if (moves.size() - best_len > patience) break;
  }
  for (Index k = moves.size(); k > best_len; --k) state.move(moves[k - 1]);
  result.end_cut = state.cut();
  result.applied_moves = best_len;
  return result;
}

// ---------------------------------------------------------------------------
// Recursive bisection
// ---------------------------------------------------------------------------

namespace detail {

/// Net list over local vertex ids 0..n-1.
struct NetList {
  std::vector<std::vector<Index>> nets;
  std::vector<Index> weights;
};

/// BFS region growing from random seeds into side 0 until its weight reaches
/// `target0`; vertices that would overflow `cap0` are skipped.
inline std::vector<std::uint8_t> grow_region(const NetList& g, const std::vector<std::vector<Index>>& inc,
                                             double target0, double cap0, Rng& rng) {
  const Index n = g.weights.size();
  std::vector<std::uint8_t> side(n, 1);
  std::vector<bool> queued(n, false);
  std::vector<bool> net_seen(g.nets.size(), false);
  std::vector<Index> order(n);
  for (Index v = 0; v < n; ++v) order[v] = v;
  rng.shuffle(std::span<Index>(order));
  Index next_seed = 0;
  double weight0 = 0.0;
  std::vector<Index> frontier;
  Index head = 0;
  while (weight0 < target0) {
    if (head == frontier.size()) {
      while (next_seed < n && queued[order[next_seed]]) ++next_seed;
      if (next_seed == n) break;
      queued[order[next_seed]] = true;
      frontier.push_back(order[next_seed]);
    }
    const Index v = frontier[head++];
    if (weight0 + static_cast<double>(g.weights[v]) > cap0) continue;
    side[v] = 0;
    weight0 += static_cast<double>(g.weights[v]);
    for (Index e : inc[v]) {
      if (net_seen[e]) continue;
      net_seen[e] = true;
      for (Index u : g.nets[e]) {
        if (!queued[u]) {
          queued[u] = true;
          frontier.push_back(u);
        }
      }
    }
  }
  return side;
}

inline std::vector<std::uint8_t> bisect(const NetList& g, double target0, double cap0, double cap1,
                                        const PartitionConfig& cfg, std::uint64_t stream) {
  std::vector<std::vector<Index>> inc(g.weights.size());
  for (Index e = 0; e < g.nets.size(); ++e) {
    for (Index v : g.nets[e]) inc[v].push_back(e);
  }
  const double caps[2] = {cap0, cap1};
  std::vector<std::uint8_t> best;
  Index best_cut = std::numeric_limits<Index>::max();
  const Index trials = std::max<Index>(1, cfg.initial_trials);
  for (Index t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(cfg.seed, stream * 64 + t);
    BisectionState state(g.nets, g.weights, grow_region(g, inc, target0, cap0, rng));
    if (static_cast<double>(state.side_weight(1)) > cap1) continue;
    if (cfg.refinement) {
      for (Index pass = 0; pass < cfg.fm_passes; ++pass) {
        const FmPassResult r = fm_pass(state, caps);
        if (r.end_cut == r.start_cut) break;
      }
    }
    if (state.cut() < best_cut) {
      best_cut = state.cut();
      best = state.sides();
    }
  }
  require(!best.empty(), "partitioner", "balance infeasible at a bisection step");
  return best;
}

/// k-way objective is connectivity-1 over `nets` (a graph passes its edges as
/// two-pin nets, for which this equals the edge cut).
class RecursiveBisection {
 public:
  RecursiveBisection(Index n, const std::vector<std::vector<Index>>& nets, std::span<const Index> weights,
                     const PartitionConfig& cfg)
      : nets_(nets), weights_(weights), cfg_(cfg), incidence_(n), local_of_(n, kNone),
        net_stamp_(nets.size(), 0), assignment_(n, 0) {
    for (Index e = 0; e < nets_.size(); ++e) {
      for (Index v : nets_[e]) incidence_[v].push_back(e);
    }
    total_weight_ = 0;
    for (Index w : weights_) {
      total_weight_ += w;
      max_weight_ = std::max(max_weight_, w);
    }
    Index levels = 0;
    while ((Index{1} << levels) < cfg_.p) ++levels;
    level_slack_ = levels == 0 ? 0.0 : std::pow(1.0 + cfg_.epsilon, 1.0 / static_cast<double>(levels)) - 1.0;
  }

  std::vector<Index> run() {
    std::vector<Index> all(weights_.size());
    for (Index v = 0; v < all.size(); ++v) all[v] = v;
    split(all, cfg_.p, 0);
    rebalance();
    return assignment_;
  }

 private:
  static constexpr Index kNone = std::numeric_limits<Index>::max();

  void split(const std::vector<Index>& vertices, Index k, Index first_part) {
    if (k == 1) {
      for (Index v : vertices) assignment_[v] = first_part;
      return;
    }
    const Index k0 = k / 2;
    NetList local;
    local.weights.reserve(vertices.size());
    double weight = 0.0;
    for (Index i = 0; i < vertices.size(); ++i) {
      local_of_[vertices[i]] = i;
      local.weights.push_back(weights_[vertices[i]]);
      weight += static_cast<double>(weights_[vertices[i]]);
    }
    ++stamp_;
    for (Index v : vertices) {
      for (Index e : incidence_[v]) {
        if (net_stamp_[e] == stamp_) continue;
        net_stamp_[e] = stamp_;
        std::vector<Index> pins;
        for (Index u : nets_[e]) {
          if (local_of_[u] != kNone) pins.push_back(local_of_[u]);
        }
        if (pins.size() >= 2) local.nets.push_back(std::move(pins));
      }
    }
    for (Index v : vertices) local_of_[v] = kNone;

    const double target0 = weight * static_cast<double>(k0) / static_cast<double>(k);
    const double target1 = weight - target0;
    const double w_max = static_cast<double>(max_weight_);
    const double cap0 = target0 + std::max(target0 * level_slack_, w_max);
    const double cap1 = target1 + std::max(target1 * level_slack_, w_max);
    const auto side = bisect(local, target0, cap0, cap1, cfg_, ++calls_);

    std::vector<Index> left, right;
    for (Index i = 0; i < vertices.size(); ++i) (side[i] == 0 ? left : right).push_back(vertices[i]);
    split(left, k0, first_part);
    split(right, k - k0, first_part + k0);
  }

  void rebalance() {
    rebalance_parts(assignment_, weights_, cfg_.p, balance_cap(total_weight_, cfg_.p, cfg_.epsilon), nets_,
                    incidence_);
  }

  const std::vector<std::vector<Index>>& nets_;
  std::span<const Index> weights_;
  PartitionConfig cfg_;
  std::vector<std::vector<Index>> incidence_;
  std::vector<Index> local_of_;
  std::vector<Index> net_stamp_;
  std::vector<Index> assignment_;
  Index stamp_ = 0;
  std::uint64_t calls_ = 0;
  Index total_weight_ = 0;
  Index max_weight_ = 0;
  double level_slack_ = 0.0;
};

inline Partition partition_netlist(Index n, const std::vector<std::vector<Index>>& nets,
                                   std::span<const Index> weights, const PartitionConfig& cfg) {
  check_config(cfg, n);
  require(is_power_of_two(cfg.p), "partitioner",
          "recursive bisection needs p to be a power of two (got " + std::to_string(cfg.p) +
              "); use a partition file for other p");
  RecursiveBisection rb(n, nets, weights, cfg);
  Partition pi(cfg.p, rb.run(), weights, cfg.epsilon);
  require(pi.is_balanced(), "partitioner", "balance infeasible");
  return pi;
}

}  // namespace detail

/// Recursive bisection with FM refinement minimizing the edge cut.
inline Partition partition_graph_fm(const UGraph& g, const PartitionConfig& cfg) {
  std::vector<std::vector<Index>> nets;
  nets.reserve(g.edges.size());
  for (const auto& [i, j] : g.edges) nets.push_back({i, j});
  return detail::partition_netlist(g.n_vertices, nets, g.vertex_weight, cfg);
}

/// Recursive bisection with FM refinement minimizing the connectivity-1 cut.
inline Partition partition_hypergraph_fm(const Hypergraph& h, const PartitionConfig& cfg) {
  return detail::partition_netlist(h.n_vertices(), h.nets(), h.vertex_weight(), cfg);
}

struct SamplerConfig {
  MiniBatchSpec batch;
  std::uint64_t seed = 1;
};

/// Partitions the merged hypergraph of b sampled batches.
inline Partition partition_stochastic(const SparseMatrix& a, const SamplerConfig& sampler, Index b,
                                      const PartitionConfig& cfg) {
  const Hypergraph h = build_stochastic_hypergraph(a, sampler.batch, b, sampler.seed);
  return partition_hypergraph_fm(h, cfg);
}

}  // namespace gcnpart
