#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcnpart/error.hpp"
#include "gcnpart/models.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

/// Local pieces of a receiver's row block: columns it owns (renumbered to its
/// local rows) and, per sender in ascending rank order, the columns it
/// receives (renumbered to positions in that sender's send list).
struct ReceiverBlocks {
  SparseMatrix local;
  std::vector<SparseMatrix> from;  // parallel to CommPlan::recv_from[m]
};

/// Point-to-point schedule for one operand matrix under a row partition.
///
/// send[m][n] lists, ascending, the rows P_m owns that P_n's rows reference;
/// recv_from[m] lists the senders of P_m in ascending order.
struct CommPlan {
  Index p = 0;
  std::vector<Index> owner;
  std::vector<std::vector<Index>> rows_of;
  std::vector<std::vector<std::vector<Index>>> send;
  std::vector<std::vector<Index>> recv_from;
  std::vector<ReceiverBlocks> blocks;

  const std::vector<Index>& rows_to(Index from, Index to) const { return send[from][to]; }
};

/// `owner[i]` is the part of row i; parts may be empty (batches).
inline CommPlan build_comm_plan(const SparseMatrix& a, std::span<const Index> owner, Index p) {
  constexpr const char* mod = "comm_plan";
  detail::require(a.is_square(), mod, "operand matrix must be square");
  detail::require(owner.size() == a.rows(), mod,
                  "row without owner: partition covers " + std::to_string(owner.size()) + " of " +
                      std::to_string(a.rows()) + " rows");
  detail::require(p >= 1, mod, "p must be at least 1");
  const Index n = a.rows();
  CommPlan plan;
  plan.p = p;
  plan.owner.assign(owner.begin(), owner.end());
  plan.rows_of.assign(p, {});
  plan.send.assign(p, std::vector<std::vector<Index>>(p));
  plan.recv_from.assign(p, {});
  for (Index i = 0; i < n; ++i) {
    detail::require(owner[i] < p, mod, "owner of row " + std::to_string(i) + " out of range");
    plan.rows_of[owner[i]].push_back(i);
  }

  std::vector<Index> stamp(n, p);
  for (Index m = 0; m < p; ++m) {
    for (Index i : plan.rows_of[m]) {
      for (Index j : a.row_cols(i)) {
        const Index src = owner[j];
        if (src == m || stamp[j] == m) continue;
        stamp[j] = m;
        plan.send[src][m].push_back(j);
      }
    }
  }
  for (Index src = 0; src < p; ++src) {
    for (Index dst = 0; dst < p; ++dst) {
      auto& rows = plan.send[src][dst];
      std::sort(rows.begin(), rows.end());
      if (!rows.empty()) plan.recv_from[dst].push_back(src);
    }
  }

  // Column renumbering: local_pos[j] is j's row inside its owner's block, or
  // its position in the send list toward the current receiver.
  std::vector<Index> local_pos(n);
  for (Index m = 0; m < p; ++m) {
    for (Index k = 0; k < plan.rows_of[m].size(); ++k) local_pos[plan.rows_of[m][k]] = k;
  }
  std::vector<Index> sender_slot(p, p);
  std::vector<Index> send_pos(n);
  plan.blocks.resize(p);
  for (Index m = 0; m < p; ++m) {
    const auto& rows = plan.rows_of[m];
    for (Index s = 0; s < plan.recv_from[m].size(); ++s) {
      const Index src = plan.recv_from[m][s];
      sender_slot[src] = s;
      const auto& list = plan.send[src][m];
      for (Index k = 0; k < list.size(); ++k) send_pos[list[k]] = k;
    }
    const Index senders = plan.recv_from[m].size();
    std::vector<std::vector<Index>> offs(senders + 1, std::vector<Index>(1, 0));
    std::vector<std::vector<Index>> cols(senders + 1);
    std::vector<std::vector<Real>> vals(senders + 1);
    for (Index i : rows) {
      const auto rc = a.row_cols(i);
      const auto rv = a.row_values(i);
      for (Index e = 0; e < rc.size(); ++e) {
        const Index j = rc[e];
        const Index slot = owner[j] == m ? senders : sender_slot[owner[j]];
        cols[slot].push_back(owner[j] == m ? local_pos[j] : send_pos[j]);
        vals[slot].push_back(rv[e]);
      }
      for (Index s = 0; s <= senders; ++s) offs[s].push_back(cols[s].size());
    }
    ReceiverBlocks& b = plan.blocks[m];
    b.local = SparseMatrix(rows.size(), rows.size(), std::move(offs[senders]), std::move(cols[senders]),
                           std::move(vals[senders]));
    for (Index s = 0; s < senders; ++s) {
      const Index width = plan.send[plan.recv_from[m][s]][m].size();
      b.from.emplace_back(rows.size(), width, std::move(offs[s]), std::move(cols[s]), std::move(vals[s]));
    }
    for (Index src : plan.recv_from[m]) sender_slot[src] = p;
  }
  return plan;
}

inline CommPlan build_comm_plan(const SparseMatrix& a, const Partition& pi) {
  return build_comm_plan(a, pi.assignment(), pi.p());
}

struct PlanVolume {
  std::vector<Index> sent_words;
  Index total_words = 0;
  std::vector<Index> msg_count;
  Index total_msgs = 0;
};

/// Words and messages one layer-phase sends when rows are d wide.
inline PlanVolume plan_volume(const CommPlan& plan, Index d) {
  PlanVolume v;
  v.sent_words.assign(plan.p, 0);
  v.msg_count.assign(plan.p, 0);
  for (Index m = 0; m < plan.p; ++m) {
    for (Index n = 0; n < plan.p; ++n) {
      const Index rows = plan.send[m][n].size();
      if (rows == 0) continue;
      v.sent_words[m] += rows * d;
      ++v.msg_count[m];
    }
    v.total_words += v.sent_words[m];
    v.total_msgs += v.msg_count[m];
  }
  return v;
}

/// Per-pair row counts and per-rank totals, for the CLI's plan dump.
inline nlohmann::ordered_json plan_to_json(const CommPlan& plan) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  nlohmann::ordered_json ranks = nlohmann::ordered_json::array();
  const PlanVolume v = plan_volume(plan, 1);
  for (Index m = 0; m < plan.p; ++m) {
    for (Index n = 0; n < plan.p; ++n) {
      if (plan.send[m][n].empty()) continue;
      pairs.push_back({{"from", m}, {"to", n}, {"rows", plan.send[m][n].size()}});
    }
    ranks.push_back({{"rank", m},
                     {"owned_rows", plan.rows_of[m].size()},
                     {"rows_sent", v.sent_words[m]},
                     {"messages_sent", v.msg_count[m]},
                     {"senders", plan.recv_from[m]}});
  }
  nlohmann::ordered_json out;
  out["p"] = plan.p;
  out["total_rows"] = v.total_words;
  out["total_messages"] = v.total_msgs;
  out["pairs"] = std::move(pairs);
  out["ranks"] = std::move(ranks);
  return out;
}

}  // namespace gcnpart
