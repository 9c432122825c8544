#include "logreg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emo2vec {

LogRegParams logreg_init(std::string dataset_name, std::size_t dim,
                         std::size_t classes) {
  if (dim == 0 || classes == 0) {
    throw std::invalid_argument("logreg_init: empty shape");
  }
  LogRegParams p;
  p.dataset_name = std::move(dataset_name);
  p.weights = DenseMatrix(dim, classes);
  p.bias.assign(classes, 0.0);
  return p;
}

std::vector<double> mean_pool(const DenseMatrix& emb, std::size_t true_len) {
  std::vector<double> out(emb.cols, 0.0);
  if (true_len == 0) return out;
  if (true_len > emb.rows) {
    throw std::invalid_argument("mean_pool: true_len exceeds rows");
  }
  for (std::size_t t = 0; t < true_len; ++t) {
    auto row = emb.row(t);
    for (std::size_t c = 0; c < emb.cols; ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(true_len);
  for (double& v : out) v *= inv;
  return out;
}

void mean_pool_backward(std::span<const double> feature_grad,
                        std::size_t true_len, DenseMatrix& emb_grad) {
  if (true_len == 0) return;
  if (feature_grad.size() != emb_grad.cols || true_len > emb_grad.rows) {
    throw std::invalid_argument("mean_pool_backward: shape mismatch");
  }
  const double inv = 1.0 / static_cast<double>(true_len);
  for (std::size_t t = 0; t < true_len; ++t) {
    auto row = emb_grad.row(t);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += feature_grad[c] * inv;
  }
}

std::vector<double> logreg_forward(std::span<const double> features,
                                   const LogRegParams& params) {
  if (features.size() != params.dim()) {
    throw std::invalid_argument("logreg_forward: feature dim mismatch");
  }
  std::vector<double> logits(params.bias);
  for (std::size_t d = 0; d < params.dim(); ++d) {
    const double f = features[d];
    if (f == 0.0) continue;
    for (std::size_t c = 0; c < params.classes(); ++c) {
      logits[c] += f * params.weights(d, c);
    }
  }
  return softmax(logits);
}

LogRegGradients::LogRegGradients(const LogRegParams& params) {
  weights = DenseMatrix(params.weights.rows, params.weights.cols);
  bias.assign(params.bias.size(), 0.0);
}

void LogRegGradients::zero() {
  weights.zero();
  std::fill(bias.begin(), bias.end(), 0.0);
}

double logreg_backward(std::span<const double> features,
                       const LogRegParams& params,
                       std::span<const double> probs, int gold,
                       LogRegGradients& grads,
                       std::vector<double>& feature_grad) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= params.classes()) {
    throw std::invalid_argument("logreg_backward: gold label out of range");
  }
  const double loss = nll_loss(probs, static_cast<std::size_t>(gold));
  std::vector<double> dlogits = nll_logit_grad(probs, static_cast<std::size_t>(gold));

  feature_grad.assign(params.dim(), 0.0);
  for (std::size_t c = 0; c < params.classes(); ++c) grads.bias[c] += dlogits[c];
  for (std::size_t d = 0; d < params.dim(); ++d) {
    double acc = 0.0;
    for (std::size_t c = 0; c < params.classes(); ++c) {
      grads.weights(d, c) += features[d] * dlogits[c];
      acc += params.weights(d, c) * dlogits[c];
    }
    feature_grad[d] = acc;
  }
  return loss;
}

namespace {

double squared_norm(const DenseMatrix& m) {
  double acc = 0.0;
  for (double v : m.values) acc += v * v;
  return acc;
}

}  // namespace

double l2_penalty(const std::vector<LogRegParams>& heads, bool exact_norm) {
  double total = 0.0;
  for (const LogRegParams& head : heads) {
    const double sq = squared_norm(head.weights);
    total += exact_norm ? std::sqrt(sq) : sq;
  }
  return total;
}

void l2_penalty_backward(const LogRegParams& head, bool exact_norm,
                         double scale, LogRegGradients& grads) {
  if (grads.weights.rows != head.weights.rows ||
      grads.weights.cols != head.weights.cols) {
    throw std::invalid_argument("l2_penalty_backward: shape mismatch");
  }
  if (exact_norm) {
    const double norm = std::sqrt(squared_norm(head.weights));
    if (norm == 0.0) return;  // subgradient 0 at the origin
    const double inv = scale / norm;
    for (std::size_t i = 0; i < head.weights.values.size(); ++i) {
      grads.weights.values[i] += inv * head.weights.values[i];
    }
  } else {
    for (std::size_t i = 0; i < head.weights.values.size(); ++i) {
      grads.weights.values[i] += 2.0 * scale * head.weights.values[i];
    }
  }
}

}  // namespace emo2vec
