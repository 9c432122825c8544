#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace emo2vec {

// Row-major dense matrix, 64-bit floats throughout. Gradient checks at 1e-4
// tolerance are not reliable in 32-bit.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows * cols, row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    return values[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  void zero() { std::fill(values.begin(), values.end(), 0.0); }
  bool all_finite() const;
};

// Valid 1-D convolution over the time axis: emb is M x k, filter is w x k,
// output has length M - w + 1 with out[t] = <emb[t:t+w], filter> + bias.
std::vector<double> conv1d_forward(const DenseMatrix& emb,
                                   const DenseMatrix& filter, double bias);

// Adjoint of conv1d_forward. Accumulates (+=) into the gradient buffers so a
// batch or a filter bank can share them.
void conv1d_backward(const DenseMatrix& emb, const DenseMatrix& filter,
                     std::span<const double> upstream, DenseMatrix& emb_grad,
                     DenseMatrix& filter_grad, double& bias_grad);

std::vector<double> relu(std::span<const double> x);
// Subgradient at exactly 0 is 0, so reruns are deterministic.
std::vector<double> relu_backward(std::span<const double> x,
                                  std::span<const double> upstream);

struct PoolResult {
  double value;
  std::size_t argmax;  // first index attaining the max
};
PoolResult maxpool_time(std::span<const double> seq);
// One-hot routing of the pooled gradient back to the argmax position.
std::vector<double> maxpool_backward(std::size_t seq_len, std::size_t argmax,
                                     double upstream);

// Max-subtracted softmax; entries in (0,1], sums to 1 within 1e-9.
std::vector<double> softmax(std::span<const double> logits);

// -log(max(probs[gold], 1e-12)); the clamp avoids -log(0) on saturated input.
double nll_loss(std::span<const double> probs, std::size_t gold);
// d(nll)/d(logits) = probs - onehot(gold), valid when probs came from softmax.
std::vector<double> nll_logit_grad(std::span<const double> probs,
                                   std::size_t gold);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;  // first moment, shaped like the parameter
  std::vector<double> v;  // second moment, elementwise >= 0

  explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

// One Adam update in place. Throws on non-finite gradients.
void adam_step(std::span<double> param, std::span<const double> grad,
               AdamState& state, const AdamConfig& cfg);

// Central-difference gradient of loss_fn with respect to params. loss_fn is
// evaluated against the current contents of params; entries are perturbed in
// place and restored. This is the testing oracle for every analytic gradient.
std::vector<double> finite_diff_grad(const std::function<double()>& loss_fn,
                                     std::span<double> params, double h = 1e-4);

}  // namespace emo2vec
