#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace emo2vec {

bool DenseMatrix::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> conv1d_forward(const DenseMatrix& emb,
                                   const DenseMatrix& filter, double bias) {
  const std::size_t m = emb.rows;
  const std::size_t w = filter.rows;
  const std::size_t k = emb.cols;
  if (w == 0 || k == 0) throw std::invalid_argument("conv1d: empty filter");
  if (filter.cols != k) throw std::invalid_argument("conv1d: filter width mismatch");
  if (m < w) throw std::runtime_error("sentence shorter than filter");

  std::vector<double> out(m - w + 1);
  for (std::size_t t = 0; t + w <= m; ++t) {
    double acc = bias;
    for (std::size_t r = 0; r < w; ++r) {
      const double* e = emb.values.data() + (t + r) * k;
      const double* f = filter.values.data() + r * k;
      for (std::size_t c = 0; c < k; ++c) acc += e[c] * f[c];
    }
    out[t] = acc;
  }
  return out;
}

void conv1d_backward(const DenseMatrix& emb, const DenseMatrix& filter,
                     std::span<const double> upstream, DenseMatrix& emb_grad,
                     DenseMatrix& filter_grad, double& bias_grad) {
  const std::size_t m = emb.rows;
  const std::size_t w = filter.rows;
  const std::size_t k = emb.cols;
  if (m < w) throw std::runtime_error("sentence shorter than filter");
  if (upstream.size() != m - w + 1 || filter.cols != k ||
      emb_grad.rows != m || emb_grad.cols != k || filter_grad.rows != w ||
      filter_grad.cols != k) {
    throw std::invalid_argument("conv1d_backward: shape mismatch");
  }

  for (std::size_t t = 0; t + w <= m; ++t) {
    const double u = upstream[t];
    if (u == 0.0) continue;
    bias_grad += u;
    for (std::size_t r = 0; r < w; ++r) {
      const double* e = emb.values.data() + (t + r) * k;
      const double* f = filter.values.data() + r * k;
      double* ge = emb_grad.values.data() + (t + r) * k;
      double* gf = filter_grad.values.data() + r * k;
      for (std::size_t c = 0; c < k; ++c) {
        gf[c] += u * e[c];
        ge[c] += u * f[c];
      }
    }
  }
}

std::vector<double> relu(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

std::vector<double> relu_backward(std::span<const double> x,
                                  std::span<const double> upstream) {
  if (x.size() != upstream.size()) {
    throw std::invalid_argument("relu_backward: shape mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  }
  return out;
}

PoolResult maxpool_time(std::span<const double> seq) {
  if (seq.empty()) throw std::invalid_argument("maxpool_time: empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq[i] > seq[best]) best = i;
  }
  return {seq[best], best};
}

std::vector<double> maxpool_backward(std::size_t seq_len, std::size_t argmax,
                                     double upstream) {
  if (argmax >= seq_len) throw std::invalid_argument("maxpool_backward: bad argmax");
  std::vector<double> out(seq_len, 0.0);
  out[argmax] = upstream;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  double maxv = logits[0];
  for (double z : logits) maxv = std::max(maxv, z);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - maxv);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double nll_loss(std::span<const double> probs, std::size_t gold) {
  if (gold >= probs.size()) throw std::invalid_argument("nll_loss: gold label out of range");
  return -std::log(std::max(probs[gold], 1e-12));
}

std::vector<double> nll_logit_grad(std::span<const double> probs,
                                   std::size_t gold) {
  if (gold >= probs.size()) throw std::invalid_argument("nll_logit_grad: gold label out of range");
  std::vector<double> g(probs.begin(), probs.end());
  g[gold] -= 1.0;
  return g;
}

void adam_step(std::span<double> param, std::span<const double> grad,
               AdamState& state, const AdamConfig& cfg) {
  if (param.size() != grad.size() || state.m.size() != param.size() ||
      state.v.size() != param.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::runtime_error("gradient exploded");
  }
  state.step += 1;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

std::vector<double> finite_diff_grad(const std::function<double()>& loss_fn,
                                     std::span<double> params, double h) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double fp = loss_fn();
    params[i] = saved - h;
    const double fm = loss_fn();
    params[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace emo2vec
