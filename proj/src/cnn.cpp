#include "cnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rng.hpp"

namespace emo2vec {

std::size_t CnnParams::max_width() const {
  return *std::max_element(widths.begin(), widths.end());
}

CnnParams cnn_init(std::vector<std::size_t> widths, std::size_t per_width,
                   std::size_t dim, std::size_t classes, Rng& rng) {
  if (widths.empty() || per_width == 0 || dim == 0 || classes == 0) {
    throw std::invalid_argument("cnn_init: empty configuration");
  }
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("cnn_init: zero filter width");
  }
  CnnParams p;
  p.widths = std::move(widths);
  p.per_width = per_width;
  p.dim = dim;
  p.classes = classes;
  const std::size_t count = p.filter_count();
  p.filters.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t w = p.width_of(j);
    DenseMatrix f(w, dim);
    const double bound = std::sqrt(6.0 / (static_cast<double>(w * dim) + 1.0));
    for (double& v : f.values) v = rng.next_uniform(-bound, bound);
    p.filters.push_back(std::move(f));
  }
  p.filter_bias.assign(count, 0.0);
  p.output_w = DenseMatrix(count, classes);
  p.output_b.assign(classes, 0.0);
  return p;
}

CnnActivations cnn_forward(const DenseMatrix& emb, const CnnParams& params) {
  const std::size_t count = params.filter_count();
  if (emb.cols != params.dim) {
    throw std::invalid_argument("cnn_forward: embedding dim mismatch");
  }
  CnnActivations acts;
  acts.conv.resize(count);
  acts.relu_out.resize(count);
  acts.pooled.resize(count);
  acts.argmax.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    acts.conv[j] = conv1d_forward(emb, params.filters[j], params.filter_bias[j]);
    acts.relu_out[j] = relu(acts.conv[j]);
    PoolResult pooled = maxpool_time(acts.relu_out[j]);
    acts.pooled[j] = pooled.value;
    acts.argmax[j] = pooled.argmax;
  }
  acts.logits.assign(params.classes, 0.0);
  for (std::size_t c = 0; c < params.classes; ++c) acts.logits[c] = params.output_b[c];
  for (std::size_t j = 0; j < count; ++j) {
    const double fm = acts.pooled[j];
    if (fm == 0.0) continue;
    for (std::size_t c = 0; c < params.classes; ++c) {
      acts.logits[c] += fm * params.output_w(j, c);
    }
  }
  acts.probs = softmax(acts.logits);
  return acts;
}

CnnGradients::CnnGradients(const CnnParams& params) {
  filters.reserve(params.filters.size());
  for (const DenseMatrix& f : params.filters) {
    filters.emplace_back(f.rows, f.cols);
  }
  filter_bias.assign(params.filter_bias.size(), 0.0);
  output_w = DenseMatrix(params.output_w.rows, params.output_w.cols);
  output_b.assign(params.output_b.size(), 0.0);
}

void CnnGradients::zero() {
  for (DenseMatrix& f : filters) f.zero();
  std::fill(filter_bias.begin(), filter_bias.end(), 0.0);
  output_w.zero();
  std::fill(output_b.begin(), output_b.end(), 0.0);
}

double cnn_backward(const DenseMatrix& emb, const CnnParams& params,
                    const CnnActivations& acts, int gold, CnnGradients& grads,
                    DenseMatrix& emb_grad) {
  const std::size_t count = params.filter_count();
  if (gold < 0 || static_cast<std::size_t>(gold) >= params.classes) {
    throw std::invalid_argument("cnn_backward: gold label out of range");
  }
  const double loss = nll_loss(acts.probs, static_cast<std::size_t>(gold));
  std::vector<double> dlogits =
      nll_logit_grad(acts.probs, static_cast<std::size_t>(gold));

  emb_grad = DenseMatrix(emb.rows, emb.cols);
  for (std::size_t c = 0; c < params.classes; ++c) grads.output_b[c] += dlogits[c];

  for (std::size_t j = 0; j < count; ++j) {
    double dpooled = 0.0;
    for (std::size_t c = 0; c < params.classes; ++c) {
      grads.output_w(j, c) += acts.pooled[j] * dlogits[c];
      dpooled += params.output_w(j, c) * dlogits[c];
    }
    // Pool routes to one position; the ReLU mask kills it when conv <= 0.
    const std::size_t t = acts.argmax[j];
    if (acts.conv[j][t] <= 0.0 || dpooled == 0.0) continue;
    std::vector<double> upstream(acts.conv[j].size(), 0.0);
    upstream[t] = dpooled;
    conv1d_backward(emb, params.filters[j], upstream, emb_grad,
                    grads.filters[j], grads.filter_bias[j]);
  }
  return loss;
}

}  // namespace emo2vec
