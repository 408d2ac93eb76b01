#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gcnpart/error.hpp"
#include "gcnpart/rng.hpp"
#include "gcnpart/sparse.hpp"

namespace gcnpart {

enum class Activation { ReLU, Identity };

struct ActivationResult {
  DenseMatrix h;
  DenseMatrix dh;
};

/// max(z, 0) and its derivative; the derivative at 0 is taken as 0.
inline ActivationResult relu_and_derivative(const DenseMatrix& z) {
  ActivationResult out{DenseMatrix(z.rows(), z.cols()), DenseMatrix(z.rows(), z.cols())};
  for (Index k = 0; k < z.data().size(); ++k) {
    const Real v = z.data()[k];
    out.h.data()[k] = v > 0.0 ? v : 0.0;
    out.dh.data()[k] = v > 0.0 ? 1.0 : 0.0;
  }
  return out;
}

inline DenseMatrix activate(const DenseMatrix& z, Activation act) {
  return act == Activation::ReLU ? relu_and_derivative(z).h : z;
}

inline DenseMatrix activation_derivative(const DenseMatrix& z, Activation act) {
  return act == Activation::ReLU ? relu_and_derivative(z).dh : DenseMatrix(z.rows(), z.cols(), 1.0);
}

/// Layer weights W^1..W^L (stored at index k-1), shared activation and step size.
struct GcnModel {
  std::vector<Index> dims;
  std::vector<DenseMatrix> weights;
  Activation activation = Activation::ReLU;
  Real learning_rate = 0.01;

  Index layers() const noexcept { return weights.size(); }

  void validate() const {
    detail::require(dims.size() >= 2, "gcn_serial", "need at least one layer (dims d_0..d_L)");
    detail::require(weights.size() + 1 == dims.size(), "gcn_serial",
                    "weight count must equal number of layers");
    for (Index k = 0; k < weights.size(); ++k) {
      detail::require(weights[k].rows() == dims[k] && weights[k].cols() == dims[k + 1], "gcn_serial",
                      "W^" + std::to_string(k + 1) + " has wrong shape");
    }
    detail::require(learning_rate > 0.0 && std::isfinite(learning_rate), "gcn_serial",
                    "learning rate must be positive and finite");
  }
};

/// Seeded uniform initialization in [-1/sqrt(d_{k-1}), 1/sqrt(d_{k-1})].
inline GcnModel make_model(std::vector<Index> dims, Activation act, Real learning_rate,
                           std::uint64_t seed) {
  GcnModel model;
  model.dims = std::move(dims);
  model.activation = act;
  model.learning_rate = learning_rate;
  detail::require(model.dims.size() >= 2, "gcn_serial", "need at least one layer (dims d_0..d_L)");
  Rng rng = Rng::derive(seed, 0x6763'6e69'6e69'74ULL);
  for (Index k = 1; k < model.dims.size(); ++k) {
    detail::require(model.dims[k - 1] > 0 && model.dims[k] > 0, "gcn_serial",
                    "layer dimensions must be positive");
    const Real bound = 1.0 / std::sqrt(static_cast<Real>(model.dims[k - 1]));
    DenseMatrix w(model.dims[k - 1], model.dims[k]);
    for (Real& v : w.data()) v = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
  }
  model.validate();
  return model;
}

/// z[k], h[k] for k = 0..L; z[0] is empty because H^0 is the input.
struct ForwardTrace {
  std::vector<DenseMatrix> z;
  std::vector<DenseMatrix> h;
};

/// Labeled vertices sorted by id.
class LabelSet {
 public:
  LabelSet() = default;

  LabelSet(std::vector<std::pair<Index, Index>> id_label, Index n_classes) : n_classes_(n_classes) {
    std::sort(id_label.begin(), id_label.end());
    for (Index k = 0; k < id_label.size(); ++k) {
      detail::require(k == 0 || id_label[k - 1].first != id_label[k].first, "gcn_serial",
                      "duplicate labeled id " + std::to_string(id_label[k].first));
      detail::require(id_label[k].second < n_classes, "gcn_serial", "label out of range");
      ids_.push_back(id_label[k].first);
      labels_.push_back(id_label[k].second);
    }
  }

  const std::vector<Index>& ids() const noexcept { return ids_; }
  const std::vector<Index>& labels() const noexcept { return labels_; }
  Index n_classes() const noexcept { return n_classes_; }
  Index size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  /// Labels that fall in the sorted id subset, renumbered to positions in it.
  LabelSet restrict_to(std::span<const Index> sorted_ids) const {
    std::vector<std::pair<Index, Index>> kept;
    Index pos = 0;
    for (Index k = 0; k < ids_.size(); ++k) {
      while (pos < sorted_ids.size() && sorted_ids[pos] < ids_[k]) ++pos;
      if (pos < sorted_ids.size() && sorted_ids[pos] == ids_[k]) kept.emplace_back(pos, labels_[k]);
    }
    return LabelSet(std::move(kept), n_classes_);
  }

 private:
  std::vector<Index> ids_;
  std::vector<Index> labels_;
  Index n_classes_ = 0;
};

struct LossAndGrad {
  Real loss = 0.0;
  DenseMatrix grad;
};

namespace detail {

/// Sum of -log softmax(h[row])[label] over `rows`, and the gradient of that
/// sum divided by `normalizer`. `rows` index into h.
inline LossAndGrad nll_rows(const DenseMatrix& h, std::span<const Index> rows,
                            std::span<const Index> labels, Real normalizer) {
  LossAndGrad out{0.0, DenseMatrix(h.rows(), h.cols())};
  std::vector<Real> prob(h.cols());
  for (Index k = 0; k < rows.size(); ++k) {
    const auto logits = h.row(rows[k]);
    Real peak = -std::numeric_limits<Real>::infinity();
    for (Real v : logits) peak = std::max(peak, v);
    Real total = 0.0;
    for (Index c = 0; c < logits.size(); ++c) {
      prob[c] = std::exp(logits[c] - peak);
      total += prob[c];
    }
    out.loss += std::log(total) + peak - logits[labels[k]];
    auto g = out.grad.row(rows[k]);
    for (Index c = 0; c < logits.size(); ++c) {
      g[c] = (prob[c] / total - (c == labels[k] ? 1.0 : 0.0)) / normalizer;
    }
  }
  return out;
}

}  // namespace detail

/// Mean negative log-likelihood of softmax(hL) over the labeled rows and its
/// gradient with respect to hL. Unlabeled rows get zero gradient.
inline LossAndGrad nll_loss_and_grad(const DenseMatrix& h_last, const LabelSet& labels) {
  detail::require(!labels.empty(), "gcn_serial", "empty label set");
  detail::require(h_last.cols() == labels.n_classes(), "gcn_serial",
                  "output width must equal the number of classes");
  for (Index id : labels.ids()) {
    detail::require(id < h_last.rows(), "gcn_serial", "labeled id out of range");
  }
  const Real count = static_cast<Real>(labels.size());
  auto out = detail::nll_rows(h_last, labels.ids(), labels.labels(), count);
  out.loss /= count;
  return out;
}

inline ForwardTrace feedforward(const GcnModel& model, const SparseMatrix& a_hat, const DenseMatrix& h0) {
  model.validate();
  detail::require(a_hat.is_square(), "gcn_serial", "adjacency must be square");
  detail::require(h0.rows() == a_hat.rows() && h0.cols() == model.dims[0], "gcn_serial",
                  "H^0 must be n x d_0");
  ForwardTrace trace;
  trace.z.emplace_back();
  trace.h.push_back(h0);
  for (Index k = 0; k < model.layers(); ++k) {
    DenseMatrix z = dmm(spmm(a_hat, trace.h.back()), model.weights[k]);
    trace.h.push_back(activate(z, model.activation));
    trace.z.push_back(std::move(z));
  }
  return trace;
}

/// grads_w[k-1] = ΔW^k; g[k] = G^k for k = 1..L (g[0] is left empty).
struct BackpropResult {
  std::vector<DenseMatrix> grads_w;
  std::vector<DenseMatrix> g;
};

inline BackpropResult backprop(const GcnModel& model, const SparseMatrix& a_back,
                               const ForwardTrace& trace, const DenseMatrix& grad_last) {
  model.validate();
  const Index layers = model.layers();
  detail::require(trace.h.size() == layers + 1 && trace.z.size() == layers + 1, "gcn_serial",
                  "trace does not match model depth");
  detail::require(grad_last.rows() == trace.h.back().rows() &&
                      grad_last.cols() == trace.h.back().cols(),
                  "gcn_serial", "loss gradient shape mismatch");
  BackpropResult out;
  out.grads_w.resize(layers);
  out.g.resize(layers + 1);
  out.g[layers] = hadamard(grad_last, activation_derivative(trace.z[layers], model.activation));
  for (Index k = layers; k >= 1; --k) {
    const DenseMatrix ag = spmm(a_back, out.g[k]);
    out.grads_w[k - 1] = tdmm(trace.h[k - 1], ag);
    if (k > 1) {
      const DenseMatrix s = dmm(ag, transpose(model.weights[k - 1]));
      out.g[k - 1] = hadamard(s, activation_derivative(trace.z[k - 1], model.activation));
    }
  }
  return out;
}

inline void apply_update_inplace(DenseMatrix& w, const DenseMatrix& dw, Real eta) {
  detail::require(w.rows() == dw.rows() && w.cols() == dw.cols(), "gcn_serial",
                  "gradient shape mismatch");
  for (Index k = 0; k < w.data().size(); ++k) w.data()[k] -= eta * dw.data()[k];
}

inline GcnModel apply_update(GcnModel model, const std::vector<DenseMatrix>& grads_w) {
  detail::require(grads_w.size() == model.layers(), "gcn_serial", "gradient count mismatch");
  for (Index k = 0; k < model.layers(); ++k) {
    apply_update_inplace(model.weights[k], grads_w[k], model.learning_rate);
  }
  return model;
}

/// Row-wise argmax of the output layer.
inline std::vector<Index> predict_classes(const DenseMatrix& h_last) {
  std::vector<Index> out(h_last.rows());
  for (Index i = 0; i < h_last.rows(); ++i) {
    const auto r = h_last.row(i);
    out[i] = static_cast<Index>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

struct SerialRun {
  GcnModel model;
  std::vector<Real> losses;
  DenseMatrix last_output;
};

/// Full-batch gradient descent. losses[e] is the loss of epoch e's forward pass.
inline SerialRun train_serial(GcnModel model, const SparseMatrix& a_fwd, const SparseMatrix& a_back,
                              const DenseMatrix& h0, const LabelSet& labels, Index epochs) {
  SerialRun run;
  for (Index e = 0; e < epochs; ++e) {
    const ForwardTrace trace = feedforward(model, a_fwd, h0);
    const LossAndGrad lg = nll_loss_and_grad(trace.h.back(), labels);
    run.losses.push_back(lg.loss);
    const BackpropResult bp = backprop(model, a_back, trace, lg.grad);
    model = apply_update(std::move(model), bp.grads_w);
    run.last_output = trace.h.back();
  }
  run.model = std::move(model);
  return run;
}

}  // namespace gcnpart
