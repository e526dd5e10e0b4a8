#include "ratebench/kernel/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace ratebench::kernel {

namespace {

void require_2d(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + ": expected rank-2 tensor, got " +
                                t.shape_str());
  }
}

}  // namespace

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_2d(x, "dense");
  require_2d(w, "dense");
  const std::size_t n = x.dim(0), d_in = x.dim(1);
  const std::size_t d_out = w.dim(1);
  if (w.dim(0) != d_in) {
    throw std::invalid_argument("dense: weight shape " + w.shape_str() +
                                " does not accept input " + x.shape_str());
  }
  if (b.rank() != 1 || b.dim(0) != d_out) {
    throw std::invalid_argument("dense: bias shape " + b.shape_str());
  }
  Tensor y({n, d_out});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d_in;
    double* yi = y.data() + i * d_out;
    for (std::size_t o = 0; o < d_out; ++o) yi[o] = b[o];
    for (std::size_t k = 0; k < d_in; ++k) {
      const double xv = xi[k];
      if (xv == 0.0) continue;
      const double* wk = w.data() + k * d_out;
      for (std::size_t o = 0; o < d_out; ++o) yi[o] += xv * wk[o];
    }
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y,
                    Tensor* grad_x, Tensor& grad_w, Tensor& grad_b) {
  const std::size_t n = x.dim(0), d_in = x.dim(1), d_out = w.dim(1);
  if (grad_y.dim(0) != n || grad_y.dim(1) != d_out) {
    throw std::invalid_argument("dense_backward: grad shape " + grad_y.shape_str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = grad_y.data() + i * d_out;
    const double* xi = x.data() + i * d_in;
    for (std::size_t o = 0; o < d_out; ++o) grad_b[o] += gi[o];
    for (std::size_t k = 0; k < d_in; ++k) {
      double* gw = grad_w.data() + k * d_out;
      const double xv = xi[k];
      for (std::size_t o = 0; o < d_out; ++o) gw[o] += xv * gi[o];
    }
    if (grad_x) {
      double* gx = grad_x->data() + i * d_in;
      for (std::size_t k = 0; k < d_in; ++k) {
        const double* wk = w.data() + k * d_out;
        double acc = 0.0;
        for (std::size_t o = 0; o < d_out; ++o) acc += wk[o] * gi[o];
        gx[k] += acc;
      }
    }
  }
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) {
    if (v < 0.0) v = 0.0;
  }
  return y;
}

void relu_backward(const Tensor& x, const Tensor& grad_y, Tensor& grad_x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) grad_x[i] += grad_y[i];
  }
}

Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache& cache, double eps) {
  require_2d(x, "layer_norm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  cache.normed = Tensor({n, d});
  cache.rstd.assign(n, 0.0);
  Tensor y({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xi[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    cache.rstd[i] = rstd;
    double* ni = cache.normed.data() + i * d;
    double* yi = y.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      ni[j] = (xi[j] - mean) * rstd;
      yi[j] = ni[j] * gain[j] + bias[j];
    }
  }
  return y;
}

void layer_norm_backward(const LayerNormCache& cache, const Tensor& gain,
                         const Tensor& grad_y, Tensor& grad_x, Tensor& grad_gain,
                         Tensor& grad_bias) {
  const std::size_t n = cache.normed.dim(0), d = cache.normed.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = grad_y.data() + i * d;
    const double* ni = cache.normed.data() + i * d;
    // dL/dnormed, plus the two row reductions of the norm backward.
    double sum_g = 0.0, sum_gn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double gh = gi[j] * gain[j];
      sum_g += gh;
      sum_gn += gh * ni[j];
      grad_gain[j] += gi[j] * ni[j];
      grad_bias[j] += gi[j];
    }
    const double inv_d = 1.0 / static_cast<double>(d);
    const double rstd = cache.rstd[i];
    double* gx = grad_x.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double gh = gi[j] * gain[j];
      gx[j] += rstd * (gh - inv_d * sum_g - ni[j] * inv_d * sum_gn);
    }
  }
}

void softmax_rows_inplace(Tensor& t) {
  const std::size_t rows = t.rank() == 2 ? t.dim(0) : 1;
  const std::size_t d = t.rank() == 2 ? t.dim(1) : t.dim(0);
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = t.data() + i * d;
    double mx = row[0];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
  }
}

double cross_entropy_5way(const Tensor& logits, int target_class, Tensor& grad_logits) {
  if (logits.size() != 5) {
    throw std::invalid_argument("cross_entropy_5way: expected 5 logits, got " +
                                logits.shape_str());
  }
  if (target_class < 0 || target_class > 4) {
    throw std::invalid_argument("cross_entropy_5way: target class out of [0,4]");
  }
  Tensor probs = logits;
  softmax_rows_inplace(probs);
  grad_logits = probs;
  grad_logits[static_cast<std::size_t>(target_class)] -= 1.0;
  const double p = probs[static_cast<std::size_t>(target_class)];
  return -std::log(p);
}

double cross_entropy_5way(const Tensor& logits, int target_class) {
  Tensor scratch;
  return cross_entropy_5way(logits, target_class, scratch);
}

double mse(const Tensor& predictions, const Tensor& labels, Tensor& grad_predictions) {
  if (predictions.size() == 0) throw std::invalid_argument("mse: empty input");
  require_same_shape(predictions, labels, "mse");
  const std::size_t n = predictions.size();
  grad_predictions = Tensor(predictions.shape());
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = predictions[i] - labels[i];
    loss += diff * diff;
    grad_predictions[i] = 2.0 * diff * inv_n;
  }
  return loss * inv_n;
}

double mse(const Tensor& predictions, const Tensor& labels) {
  Tensor scratch;
  return mse(predictions, labels, scratch);
}

void dropout_forward_inplace(Tensor& x, double p, Rng& rng, Tensor& mask) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p outside [0,1)");
  mask = Tensor(x.shape());
  if (p == 0.0) {
    mask.fill(1.0);
    return;
  }
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = rng.uniform01() >= p ? scale : 0.0;
    mask[i] = keep;
    x[i] *= keep;
  }
}

void dropout_backward_inplace(const Tensor& mask, Tensor& grad) {
  require_same_shape(mask, grad, "dropout_backward");
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
}

}  // namespace ratebench::kernel
