#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace emo2vec {

class Rng;

// Multi-width convolution bank -> ReLU -> max-over-time -> affine -> softmax.
// Filters are stored width-major, filter-index-minor; that order also fixes
// the layout of the pooled feature vector.
struct CnnParams {
  std::vector<std::size_t> widths;  // e.g. {1, 3, 5, 7}
  std::size_t per_width = 0;        // filters per width
  std::size_t dim = 0;              // embedding dim k
  std::size_t classes = 0;

  std::vector<DenseMatrix> filters;  // J = widths * per_width, each w x dim
  std::vector<double> filter_bias;   // J
  DenseMatrix output_w;              // J x classes
  std::vector<double> output_b;      // classes

  std::size_t filter_count() const { return widths.size() * per_width; }
  std::size_t width_of(std::size_t j) const { return widths[j / per_width]; }
  std::size_t max_width() const;
};

// Filters uniform in +-sqrt(6/(w*dim+1)); biases and the output layer start
// at zero, so an untrained net predicts the uniform distribution.
CnnParams cnn_init(std::vector<std::size_t> widths, std::size_t per_width,
                   std::size_t dim, std::size_t classes, Rng& rng);

struct CnnActivations {
  std::vector<std::vector<double>> conv;      // per filter, pre-ReLU
  std::vector<std::vector<double>> relu_out;  // per filter
  std::vector<double> pooled;                 // fm, length J
  std::vector<std::size_t> argmax;            // pool winner per filter
  std::vector<double> logits;
  std::vector<double> probs;
};

CnnActivations cnn_forward(const DenseMatrix& emb, const CnnParams& params);

// Gradient buffers shaped like CnnParams. Backward accumulates (+=) so a
// mini-batch can share one instance.
struct CnnGradients {
  std::vector<DenseMatrix> filters;
  std::vector<double> filter_bias;
  DenseMatrix output_w;
  std::vector<double> output_b;

  explicit CnnGradients(const CnnParams& params);
  void zero();
};

// NLL loss against `gold` plus full backward pass. Parameter gradients
// accumulate into `grads`; emb_grad is overwritten (it is per-sentence).
// Returns the loss.
double cnn_backward(const DenseMatrix& emb, const CnnParams& params,
                    const CnnActivations& acts, int gold, CnnGradients& grads,
                    DenseMatrix& emb_grad);

}  // namespace emo2vec
