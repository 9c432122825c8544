#pragma once

#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace emo2vec {

// Per-dataset classifier: mean-pooled embedding features -> affine -> softmax.
struct LogRegParams {
  std::string dataset_name;
  DenseMatrix weights;       // dim x classes
  std::vector<double> bias;  // classes

  std::size_t dim() const { return weights.rows; }
  std::size_t classes() const { return weights.cols; }
};

LogRegParams logreg_init(std::string dataset_name, std::size_t dim,
                         std::size_t classes);

// Average of the first true_len rows; PAD rows never contribute. true_len of
// zero yields the zero vector (degenerate inputs exist after cleaning).
std::vector<double> mean_pool(const DenseMatrix& emb, std::size_t true_len);

// Spreads a feature gradient back over the pooled rows (each gets 1/true_len
// of it). Accumulates into emb_grad.
void mean_pool_backward(std::span<const double> feature_grad,
                        std::size_t true_len, DenseMatrix& emb_grad);

std::vector<double> logreg_forward(std::span<const double> features,
                                   const LogRegParams& params);

struct LogRegGradients {
  DenseMatrix weights;
  std::vector<double> bias;

  explicit LogRegGradients(const LogRegParams& params);
  void zero();
};

// NLL against `gold` with softmax gradients. Parameter gradients accumulate
// into `grads`; feature_grad is overwritten. Returns the loss.
double logreg_backward(std::span<const double> features,
                       const LogRegParams& params,
                       std::span<const double> probs, int gold,
                       LogRegGradients& grads,
                       std::vector<double>& feature_grad);

// Regularization over all head weights, biases excluded. The default is the
// squared L2 norm (standard weight decay); exact_norm switches to the literal
// norm with subgradient 0 at the origin.
double l2_penalty(const std::vector<LogRegParams>& heads,
                  bool exact_norm = false);

// grads.weights += scale * d(penalty(head))/d(weights).
void l2_penalty_backward(const LogRegParams& head, bool exact_norm,
                         double scale, LogRegGradients& grads);

}  // namespace emo2vec
