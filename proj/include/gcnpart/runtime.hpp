#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "gcnpart/comm_plan.hpp"
#include "gcnpart/error.hpp"
#include "gcnpart/gcn.hpp"
#include "gcnpart/models.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

enum class Phase : std::uint8_t { Forward = 0, Backward = 1 };

struct MessageTag {
  std::uint64_t step = 0;
  Phase phase = Phase::Forward;
  Index layer = 0;

  bool operator==(const MessageTag&) const = default;
};

struct MessageRecord {
  MessageTag tag;
  Index from = 0;
  Index to = 0;
  Index rows = 0;
  Index cols = 0;

  auto key() const { return std::tuple(tag.step, tag.phase, tag.layer, from, to); }
};

/// Elementwise sum of one contribution per rank, accumulated in rank order.
inline DenseMatrix allreduce_sum(std::span<const DenseMatrix> contributions) {
  detail::require(!contributions.empty(), "dist_runtime", "allreduce needs at least one contribution");
  DenseMatrix total = contributions[0];
  for (Index r = 1; r < contributions.size(); ++r) {
    detail::require(contributions[r].rows() == total.rows() && contributions[r].cols() == total.cols(),
                    "dist_runtime", "allreduce shape mismatch from rank " + std::to_string(r));
    add_inplace(total, contributions[r]);
  }
  return total;
}

/// Unbounded FIFO channel per ordered rank pair, a sum-allreduce collective,
/// and cumulative traffic counters. Safe to use from one thread per rank.
class SimNetwork {
 public:
  explicit SimNetwork(Index p)
      : p_(p), channels_(p * p), words_(p * p, 0), messages_(p * p, 0), reduce_seq_(p, 0),
        collect_seq_(p, 0), finished_(p, false) {
    detail::require(p >= 1, "dist_runtime", "network needs at least one rank");
  }

  Index p() const noexcept { return p_; }

  /// Non-blocking.
  void send(Index from, Index to, MessageTag tag, DenseMatrix payload) {
    detail::require(from < p_ && to < p_ && from != to, "dist_runtime", "invalid channel");
    std::lock_guard lock(mu_);
    words_[from * p_ + to] += payload.rows() * payload.cols();
    ++messages_[from * p_ + to];
    log_.push_back({tag, from, to, payload.rows(), payload.cols()});
    channels_[from * p_ + to].push_back({tag, std::move(payload)});
    cv_.notify_all();
  }

  /// Next message on the (from, to) channel; blocks while the sender may still
  /// send. With `blocking` false an empty channel is an error.
  DenseMatrix receive(Index to, Index from, MessageTag expected, bool blocking) {
    std::unique_lock lock(mu_);
    auto& channel = channels_[from * p_ + to];
    if (blocking) {
      cv_.wait(lock, [&] { return !channel.empty() || finished_[from] || aborted_; });
    }
    if (aborted_) throw Error("dist_runtime", "aborted: another rank failed");
    detail::require(!channel.empty(), "dist_runtime",
                    "missing expected message from rank " + std::to_string(from) + " to rank " +
                        std::to_string(to) + " (layer " + std::to_string(expected.layer) + ")");
    Envelope env = std::move(channel.front());
    channel.pop_front();
    detail::require(env.tag == expected, "dist_runtime",
                    "unexpected message from rank " + std::to_string(from) + " to rank " + std::to_string(to));
    return std::move(env.payload);
  }

  /// Deposits this rank's contribution to its next allreduce.
  void post_reduce(Index rank, DenseMatrix contribution) {
    std::lock_guard lock(mu_);
    const std::uint64_t seq = reduce_seq_[rank]++;
    Slot& slot = slots_[seq];
    if (slot.parts.empty()) slot.parts.resize(p_);
    reduce_words_ += contribution.rows() * contribution.cols();
    slot.parts[rank] = std::move(contribution);
    if (++slot.arrived == p_) {
      try {
        slot.result = allreduce_sum(slot.parts);
      } catch (const Error& e) {
        slot.error = e.what();
      }
      slot.done = true;
      cv_.notify_all();
    }
  }

  /// Result of this rank's oldest uncollected allreduce.
  DenseMatrix collect_reduce(Index rank, bool blocking) {
    std::unique_lock lock(mu_);
    const std::uint64_t seq = collect_seq_[rank];
    auto it = slots_.find(seq);
    detail::require(it != slots_.end(), "dist_runtime", "collect without a posted contribution");
    Slot& slot = it->second;
    if (blocking) cv_.wait(lock, [&] { return slot.done || aborted_; });
    if (aborted_) throw Error("dist_runtime", "aborted: another rank failed");
    detail::require(slot.done, "dist_runtime", "allreduce incomplete: not every rank contributed");
    if (!slot.error.empty()) throw Error("dist_runtime", slot.error);
    DenseMatrix result = slot.result;
    ++collect_seq_[rank];
    if (++slot.collected == p_) slots_.erase(it);
    return result;
  }

  void mark_finished(Index rank) {
    std::lock_guard lock(mu_);
    finished_[rank] = true;
    cv_.notify_all();
  }

  void reset_finished() {
    std::lock_guard lock(mu_);
    std::fill(finished_.begin(), finished_.end(), false);
  }

  void abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    cv_.notify_all();
  }

  Index words(Index from, Index to) const {
    std::lock_guard lock(mu_);
    return words_[from * p_ + to];
  }
  Index messages(Index from, Index to) const {
    std::lock_guard lock(mu_);
    return messages_[from * p_ + to];
  }
  Index reduce_words() const {
    std::lock_guard lock(mu_);
    return reduce_words_;
  }

  /// Sent-message log in canonical (step, phase, layer, from, to) order.
  std::vector<MessageRecord> log() const {
    std::lock_guard lock(mu_);
    auto out = log_;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    return out;
  }

  bool channels_empty() const {
    std::lock_guard lock(mu_);
    return std::all_of(channels_.begin(), channels_.end(), [](const auto& c) { return c.empty(); });
  }

 private:
  struct Envelope {
    MessageTag tag;
    DenseMatrix payload;
  };
  struct Slot {
    std::vector<DenseMatrix> parts;
    Index arrived = 0;
    Index collected = 0;
    bool done = false;
    DenseMatrix result;
    std::string error;
  };

  Index p_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::deque<Envelope>> channels_;
  std::vector<Index> words_;
  std::vector<Index> messages_;
  std::vector<MessageRecord> log_;
  std::vector<std::uint64_t> reduce_seq_;
  std::vector<std::uint64_t> collect_seq_;
  std::map<std::uint64_t, Slot> slots_;
  std::vector<bool> finished_;
  Index reduce_words_ = 0;
  bool aborted_ = false;
};

/// Everything one simulated processor holds. Feature, preactivation and
/// gradient blocks share the row ids of the adjacency block.
struct ProcState {
  Index rank = 0;
  SparseRowBlock a_fwd;
  SparseRowBlock a_bwd;
  std::shared_ptr<const CommPlan> plan_fwd;
  std::shared_ptr<const CommPlan> plan_bwd;
  GcnModel model;  // replica of every W^k
  std::vector<DenseRowBlock> h;  // k = 0..L
  std::vector<DenseRowBlock> z;  // k = 0..L, z[0] unused
  std::vector<DenseRowBlock> g;  // k = 1..L
  LabelSet labels;               // local row positions
  Real label_normalizer = 1.0;   // global labeled count
  Real loss = 0.0;               // global loss after the last backprop
  std::uint64_t step = 0;
};

struct ScatterInput {
  const SparseMatrix& a_hat;
  const SparseMatrix* a_back = nullptr;  // Â^T for directed inputs; null reuses a_hat
  const DenseMatrix& h0;
  const LabelSet& labels;
  std::span<const Index> owner;
  Index p = 1;
};

/// Distributes rows per the partition and replicates the model.
inline std::vector<ProcState> scatter(const ScatterInput& in, const GcnModel& model) {
  constexpr const char* mod = "dist_runtime";
  model.validate();
  detail::require(in.a_hat.is_square(), mod, "adjacency must be square");
  detail::require(in.h0.rows() == in.a_hat.rows() && in.h0.cols() == model.dims[0], mod,
                  "H^0 shape mismatch");
  detail::require(in.owner.size() == in.a_hat.rows(), mod, "partition does not cover every row");
  const SparseMatrix& a_back = in.a_back ? *in.a_back : in.a_hat;
  detail::require(a_back.rows() == in.a_hat.rows() && a_back.is_square(), mod, "backward operand shape mismatch");

  auto plan_fwd = std::make_shared<const CommPlan>(build_comm_plan(in.a_hat, in.owner, in.p));
  auto plan_bwd = in.a_back ? std::make_shared<const CommPlan>(build_comm_plan(a_back, in.owner, in.p))
                            : plan_fwd;

  std::vector<ProcState> states(in.p);
  std::vector<std::vector<std::pair<Index, Index>>> local_labels(in.p);
  const auto& rows_of = plan_fwd->rows_of;
  for (Index k = 0; k < in.labels.size(); ++k) {
    const Index id = in.labels.ids()[k];
    detail::require(id < in.owner.size(), mod, "labeled id out of range");
    const auto& rows = rows_of[in.owner[id]];
    const Index pos = static_cast<Index>(std::lower_bound(rows.begin(), rows.end(), id) - rows.begin());
    local_labels[in.owner[id]].emplace_back(pos, in.labels.labels()[k]);
  }
  for (Index m = 0; m < in.p; ++m) {
    ProcState& s = states[m];
    s.rank = m;
    const auto& rows = rows_of[m];
    s.a_fwd = SparseRowBlock(rows, select_sparse_rows(in.a_hat, rows));
    s.a_bwd = SparseRowBlock(rows, select_sparse_rows(a_back, rows));
    s.plan_fwd = plan_fwd;
    s.plan_bwd = plan_bwd;
    s.model = model;
    s.h.assign(model.layers() + 1, {});
    s.z.assign(model.layers() + 1, {});
    s.g.assign(model.layers() + 1, {});
    s.h[0] = DenseRowBlock(rows, select_rows(in.h0, rows));
    s.labels = LabelSet(std::move(local_labels[m]), in.labels.n_classes());
    s.label_normalizer = static_cast<Real>(in.labels.size());
  }
  return states;
}

enum class Scheduler { SingleThreaded, MultiWorker };

namespace detail {

enum class RoundKind {
  ForwardSend,
  ForwardCompute,
  Loss,
  LossReduce,
  BackwardSend,
  BackwardCompute,
  BackwardReduce,
  Finish
};

struct Round {
  RoundKind kind;
  Index layer = 0;
};

inline void post_sends(ProcState& s, SimNetwork& net, const CommPlan& plan, const DenseRowBlock& block,
                       MessageTag tag) {
  for (Index n = 0; n < plan.p; ++n) {
    const auto& rows = plan.send[s.rank][n];
    if (rows.empty()) continue;
    net.send(s.rank, n, tag, gather_rows(block, rows));
  }
}

/// A_m X where X's remote rows arrive from the plan's senders.
inline DenseMatrix gather_product(ProcState& s, SimNetwork& net, const CommPlan& plan, const DenseRowBlock& block,
                                  MessageTag tag, bool blocking,
                                  const std::function<DenseMatrix(DenseMatrix)>& finish) {
  const ReceiverBlocks& rb = plan.blocks[s.rank];
  DenseMatrix acc = finish(spmm(rb.local, block.local));
  for (Index k = 0; k < plan.recv_from[s.rank].size(); ++k) {
    const Index src = plan.recv_from[s.rank][k];
    DenseMatrix remote = net.receive(s.rank, src, tag, blocking);
    require(remote.rows() == plan.send[src][s.rank].size() && remote.cols() == block.local.cols(),
            "dist_runtime", "received payload shape mismatch from rank " + std::to_string(src));
    add_inplace(acc, finish(spmm(rb.from[k], remote)));
  }
  return acc;
}

inline void run_round(ProcState& s, SimNetwork& net, const Round& r, bool blocking) {
  const GcnModel& model = s.model;
  const std::vector<Index>& rows = s.a_fwd.global_row_ids;
  const Index k = r.layer;
  switch (r.kind) {
    case RoundKind::ForwardSend:
      post_sends(s, net, *s.plan_fwd, s.h[k - 1], {s.step, Phase::Forward, k});
      break;
    case RoundKind::ForwardCompute: {
      const DenseMatrix& w = model.weights[k - 1];
      DenseMatrix z = gather_product(s, net, *s.plan_fwd, s.h[k - 1], {s.step, Phase::Forward, k}, blocking,
                                     [&w](DenseMatrix ah) { return dmm(ah, w); });
      s.h[k] = DenseRowBlock(rows, activate(z, model.activation));
      s.z[k] = DenseRowBlock(rows, std::move(z));
      break;
    }
    case RoundKind::Loss: {
      const Index last = model.layers();
      const DenseMatrix& out = s.h[last].local;
      LossAndGrad lg =
          s.labels.empty()
              ? LossAndGrad{0.0, DenseMatrix(out.rows(), out.cols())}
              : nll_rows(out, s.labels.ids(), s.labels.labels(), s.label_normalizer);
      s.g[last] = DenseRowBlock(rows, hadamard(lg.grad, activation_derivative(s.z[last].local, model.activation)));
      net.post_reduce(s.rank, DenseMatrix(1, 1, lg.loss));
      break;
    }
    case RoundKind::LossReduce:
      s.loss = net.collect_reduce(s.rank, blocking)(0, 0) / s.label_normalizer;
      break;
    case RoundKind::BackwardSend:
      post_sends(s, net, *s.plan_bwd, s.g[k], {s.step, Phase::Backward, k});
      break;
    case RoundKind::BackwardCompute: {
      DenseMatrix ag = gather_product(s, net, *s.plan_bwd, s.g[k], {s.step, Phase::Backward, k}, blocking,
                                      [](DenseMatrix x) { return x; });
      if (k > 1) {
        const DenseMatrix sk = dmm(ag, transpose(model.weights[k - 1]));
        s.g[k - 1] = DenseRowBlock(rows, hadamard(sk, activation_derivative(s.z[k - 1].local, model.activation)));
      }
      net.post_reduce(s.rank, tdmm(s.h[k - 1].local, ag));
      break;
    }
    case RoundKind::BackwardReduce: {
      const DenseMatrix dw = net.collect_reduce(s.rank, blocking);
      apply_update_inplace(s.model.weights[k - 1], dw, s.model.learning_rate);
      break;
    }
    case RoundKind::Finish:
      ++s.step;
      break;
  }
}

inline void require_nonempty_states(const std::vector<ProcState>& states) {
  require(!states.empty(), "dist_runtime", "no processor states");
}

inline std::vector<Round> forward_rounds(Index layers) {
  std::vector<Round> out;
  for (Index k = 1; k <= layers; ++k) {
    out.push_back({RoundKind::ForwardSend, k});
    out.push_back({RoundKind::ForwardCompute, k});
  }
  return out;
}

inline std::vector<Round> backward_rounds(Index layers) {
  std::vector<Round> out{{RoundKind::Loss, layers}, {RoundKind::LossReduce, layers}};
  for (Index k = layers; k >= 1; --k) {
    out.push_back({RoundKind::BackwardSend, k});
    out.push_back({RoundKind::BackwardCompute, k});
    out.push_back({RoundKind::BackwardReduce, k});
  }
  out.push_back({RoundKind::Finish, 0});
  return out;
}

/// Round-based execution on the calling thread, or one worker per rank that
/// blocks only on receives and collectives. Both evaluate identical
/// arithmetic in identical order.
inline void execute(std::vector<ProcState>& states, SimNetwork& net, const std::vector<Round>& rounds,
                    Scheduler scheduler) {
  require(states.size() == net.p(), "dist_runtime", "state count does not match network size");
  if (scheduler == Scheduler::SingleThreaded) {
    for (const Round& r : rounds) {
      for (ProcState& s : states) run_round(s, net, r, false);
    }
    return;
  }
  net.reset_finished();
  std::vector<std::exception_ptr> errors(states.size());
  std::vector<std::thread> workers;
  workers.reserve(states.size());
  for (Index m = 0; m < states.size(); ++m) {
    workers.emplace_back([&, m] {
      try {
        for (const Round& r : rounds) run_round(states[m], net, r, true);
      } catch (...) {
        errors[m] = std::current_exception();
        net.abort();
      }
      net.mark_finished(m);
    });
  }
  for (auto& t : workers) t.join();
  // Prefer the root cause over the "aborted" errors it triggered elsewhere.
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (std::string(err.what()).find("aborted") == std::string::npos) std::rethrow_exception(e);
    } catch (...) {
      std::rethrow_exception(e);
    }
    if (!first) first = e;
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace detail

/// Parallel feedforward: per layer, post row sends, multiply the local block,
/// then fold in each sender's rows in ascending rank order.
inline void parallel_feedforward(std::vector<ProcState>& states, SimNetwork& net,
                                 Scheduler scheduler = Scheduler::SingleThreaded) {
  detail::require_nonempty_states(states);
  detail::execute(states, net, detail::forward_rounds(states.front().model.layers()), scheduler);
}

/// Parallel backpropagation and weight update; requires a preceding forward.
inline void parallel_backprop(std::vector<ProcState>& states, SimNetwork& net,
                              Scheduler scheduler = Scheduler::SingleThreaded) {
  detail::require_nonempty_states(states);
  for (const auto& s : states) {
    detail::require(s.h.back().local.rows() == s.a_fwd.size(), "dist_runtime",
                    "backprop needs forward traces");
  }
  detail::execute(states, net, detail::backward_rounds(states.front().model.layers()), scheduler);
}

/// One forward + backward step as a single execution.
inline void parallel_step(std::vector<ProcState>& states, SimNetwork& net, Scheduler scheduler) {
  detail::require_nonempty_states(states);
  auto rounds = detail::forward_rounds(states.front().model.layers());
  const auto back = detail::backward_rounds(states.front().model.layers());
  rounds.insert(rounds.end(), back.begin(), back.end());
  detail::execute(states, net, rounds, scheduler);
}

/// Concatenates a per-rank block family back into a global matrix.
inline DenseMatrix gather_global(const std::vector<ProcState>& states, Index n,
                                 const std::function<const DenseRowBlock&(const ProcState&)>& pick) {
  const Index cols = pick(states.front()).local.cols();
  DenseMatrix out(n, cols);
  for (const auto& s : states) {
    const DenseRowBlock& b = pick(s);
    for (Index i = 0; i < b.size(); ++i) {
      const auto src = b.local.row(i);
      std::copy(src.begin(), src.end(), out.row(b.global_row_ids[i]).begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Epoch driver
// ---------------------------------------------------------------------------

struct EpochMetrics {
  Index total_words = 0;
  Index max_words_per_proc = 0;
  double avg_words_per_proc = 0.0;
  Index total_msgs = 0;
  Index max_msgs_per_proc = 0;
  double avg_msgs_per_proc = 0.0;
  Index forward_words = 0;
  Index backward_words = 0;
  Index allreduce_words = 0;
  double wallclock_seconds = 0.0;  // informational
  Real loss = 0.0;
  bool replicas_identical = true;
};

/// Per-step record; in full-batch mode one per epoch.
struct StepRecord {
  std::vector<Index> batch;  // empty in full-batch mode
  Index forward_words = 0;
  Index backward_words = 0;
  Real loss = 0.0;
};

struct FullBatch {};

struct MiniBatch {
  MiniBatchSpec spec;
  Index batches_per_epoch = 1;
  std::uint64_t seed = 1;
};

using TrainingMode = std::variant<FullBatch, MiniBatch>;

/// Raw input; normalization happens per (sub)graph.
struct TrainingData {
  SparseMatrix adjacency;
  bool directed = false;
  DenseMatrix features;
  LabelSet labels;
};

struct TrainingResult {
  std::vector<EpochMetrics> epochs;
  std::vector<StepRecord> steps;
  std::vector<MessageRecord> messages;
  GcnModel model;  // rank 0's replica
  DenseMatrix final_output;  // H^L of the last forward pass (full-batch only)
};

namespace detail {

struct CounterSnapshot {
  std::vector<Index> words;
  std::vector<Index> msgs;
  Index reduce_words = 0;
};

inline CounterSnapshot snapshot(const SimNetwork& net) {
  CounterSnapshot s;
  const Index p = net.p();
  s.words.resize(p * p);
  s.msgs.resize(p * p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      s.words[a * p + b] = net.words(a, b);
      s.msgs[a * p + b] = net.messages(a, b);
    }
  }
  s.reduce_words = net.reduce_words();
  return s;
}

inline void fill_traffic(EpochMetrics& m, const CounterSnapshot& before, const CounterSnapshot& after, Index p) {
  for (Index a = 0; a < p; ++a) {
    Index w = 0, c = 0;
    for (Index b = 0; b < p; ++b) {
      w += after.words[a * p + b] - before.words[a * p + b];
      c += after.msgs[a * p + b] - before.msgs[a * p + b];
    }
    m.total_words += w;
    m.total_msgs += c;
    m.max_words_per_proc = std::max(m.max_words_per_proc, w);
    m.max_msgs_per_proc = std::max(m.max_msgs_per_proc, c);
  }
  m.avg_words_per_proc = static_cast<double>(m.total_words) / static_cast<double>(p);
  m.avg_msgs_per_proc = static_cast<double>(m.total_msgs) / static_cast<double>(p);
  m.allreduce_words = after.reduce_words - before.reduce_words;
}

inline bool replicas_identical(const std::vector<ProcState>& states) {
  for (const auto& s : states) {
    if (s.model.weights != states.front().model.weights) return false;
  }
  return true;
}

/// Normalized operands of a (sub)graph: Â and, for directed input, Â^T.
struct Operands {
  SparseMatrix a_hat;
  std::optional<SparseMatrix> a_back;
};

inline Operands make_operands(const SparseMatrix& adjacency, bool directed) {
  Operands ops{normalize_adjacency(adjacency, true), std::nullopt};
  if (directed) ops.a_back = transpose_sparse(ops.a_hat);
  return ops;
}

}  // namespace detail

/// Runs `epochs` of training under a fixed row partition. Full-batch epochs are
/// one step on the whole graph; mini-batch epochs are `batches_per_epoch`
/// steps on sampled induced subgraphs, each with its own communication plan
/// restricted to the batch.
inline TrainingResult train_epochs(const TrainingData& data, const GcnModel& initial,
                                   std::span<const Index> owner, Index p, Index epochs,
                                   const TrainingMode& mode, Scheduler scheduler) {
  constexpr const char* mod = "dist_runtime";
  detail::require(owner.size() == data.adjacency.rows(), mod, "partition does not cover every row");
  const Index n = data.adjacency.rows();
  TrainingResult result;
  result.model = initial;
  SimNetwork net(p);
  std::uint64_t step = 0;

  auto run_step = [&](std::vector<ProcState>& states, StepRecord& rec) {
    for (auto& s : states) s.step = step;
    const auto before = detail::snapshot(net);
    parallel_step(states, net, scheduler);
    const auto after = detail::snapshot(net);
    ++step;
    for (const auto& m : net.log()) {
      if (m.tag.step != step - 1) continue;
      (m.tag.phase == Phase::Forward ? rec.forward_words : rec.backward_words) += m.rows * m.cols;
    }
    rec.loss = states.front().loss;
    return std::pair(before, after);
  };

  if (std::holds_alternative<FullBatch>(mode)) {
    const auto ops = detail::make_operands(data.adjacency, data.directed);
    auto states = scatter({ops.a_hat, ops.a_back ? &*ops.a_back : nullptr, data.features, data.labels, owner, p},
                          initial);
    for (Index e = 0; e < epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      StepRecord rec;
      const auto [before, after] = run_step(states, rec);
      EpochMetrics m;
      detail::fill_traffic(m, before, after, p);
      m.forward_words = rec.forward_words;
      m.backward_words = rec.backward_words;
      m.loss = rec.loss;
      m.replicas_identical = detail::replicas_identical(states);
      m.wallclock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.epochs.push_back(m);
      result.steps.push_back(std::move(rec));
    }
    result.model = states.front().model;
    if (epochs > 0) {
      result.final_output = gather_global(states, n, [&](const ProcState& s) -> const DenseRowBlock& {
        return s.h.back();
      });
    }
  } else {
    const MiniBatch& mb = std::get<MiniBatch>(mode);
    detail::require(mb.batches_per_epoch >= 1, mod, "mini-batch mode needs at least one batch per epoch");
    BatchSampler sampler(n, mb.spec, mb.seed);
    GcnModel model = initial;
    for (Index e = 0; e < epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      EpochMetrics m;
      Real loss_sum = 0.0;
      for (Index b = 0; b < mb.batches_per_epoch; ++b) {
        StepRecord rec;
        rec.batch = sampler.next();
        const SparseMatrix sub = induced_submatrix(data.adjacency, rec.batch);
        const auto ops = detail::make_operands(sub, data.directed);
        const DenseMatrix h0 = select_rows(data.features, rec.batch);
        const LabelSet labels = data.labels.restrict_to(rec.batch);
        std::vector<Index> sub_owner(rec.batch.size());
        for (Index i = 0; i < rec.batch.size(); ++i) sub_owner[i] = owner[rec.batch[i]];
        auto states = scatter({ops.a_hat, ops.a_back ? &*ops.a_back : nullptr, h0, labels, sub_owner, p}, model);
        if (labels.empty()) {
          for (auto& s : states) s.label_normalizer = 1.0;
        }
        const auto [before, after] = run_step(states, rec);
        EpochMetrics part;
        detail::fill_traffic(part, before, after, p);
        m.total_words += part.total_words;
        m.total_msgs += part.total_msgs;
        m.allreduce_words += part.allreduce_words;
        m.forward_words += rec.forward_words;
        m.backward_words += rec.backward_words;
        m.replicas_identical = m.replicas_identical && detail::replicas_identical(states);
        loss_sum += rec.loss;
        model = states.front().model;
        result.steps.push_back(std::move(rec));
      }
      // Per-proc maxima over the whole epoch.
      std::vector<Index> w(p, 0), c(p, 0);
      for (const auto& rec : net.log()) {
        if (rec.tag.step + mb.batches_per_epoch < step) continue;
        w[rec.from] += rec.rows * rec.cols;
        ++c[rec.from];
      }
      m.max_words_per_proc = *std::max_element(w.begin(), w.end());
      m.max_msgs_per_proc = *std::max_element(c.begin(), c.end());
      m.avg_words_per_proc = static_cast<double>(m.total_words) / static_cast<double>(p);
      m.avg_msgs_per_proc = static_cast<double>(m.total_msgs) / static_cast<double>(p);
      m.loss = loss_sum / static_cast<Real>(mb.batches_per_epoch);
      m.wallclock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.epochs.push_back(m);
    }
    result.model = model;
  }
  result.messages = net.log();
  return result;
}

}  // namespace gcnpart
