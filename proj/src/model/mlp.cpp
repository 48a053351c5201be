#include "fairdyn/model/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fairdyn/common/error.hpp"
#include "fairdyn/simd/kernels.hpp"

namespace fairdyn::model {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  require(sizes_.size() >= 2, ErrorCode::kInvalidArgument, "network needs an input and an output size");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    require(sizes_[l] >= 1 && sizes_[l + 1] >= 1, ErrorCode::kInvalidArgument, "layer widths must be positive");
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::init(Rng& rng, double scale) {
  std::fill(params_.begin(), params_.end(), 0.0);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double sd = scale / std::sqrt(static_cast<double>(sizes_[l]));
    double* w = params_.data() + weight_offset(l);
    for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) w[i] = rng.normal(0.0, sd);
  }
}

const double* Mlp::forward(const double* x, std::size_t rows, Workspace& ws) const {
  const auto& k = simd::kernels();
  const std::size_t layers = num_layers();
  ws.act.resize(layers + 1);
  ws.act[0].assign(x, x + rows * sizes_[0]);
  for (std::size_t l = 0; l < layers; ++l) {
    auto& y = ws.act[l + 1];
    y.resize(rows * sizes_[l + 1]);
    k.dense(ws.act[l].data(), rows, sizes_[l], params_.data() + weight_offset(l), params_.data() + bias_offset(l),
            sizes_[l + 1], y.data());
    if (l + 1 < layers) k.softsign(y.data(), y.data(), y.size());
  }
  return ws.act[layers].data();
}

void Mlp::backward(Workspace& ws, const double* grad_output, std::size_t rows, std::span<double> grad) const {
  require(grad.size() == params_.size(), ErrorCode::kInvalidArgument, "gradient buffer size");
  const auto& k = simd::kernels();
  const std::size_t layers = num_layers();
  ws.delta.assign(grad_output, grad_output + rows * output_dim());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* x = ws.act[l].data();
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = ws.delta.data() + r * out;
      k.axpy(1.0, d, gb, out);
      for (std::size_t i = 0; i < in; ++i) k.axpy(x[r * in + i], d, gw + i * out, out);
    }
    if (l == 0) break;
    // delta for the previous layer: (delta W^T) * softsign'(act)
    const double* w = params_.data() + weight_offset(l);
    ws.delta_next.resize(rows * in);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = ws.delta.data() + r * out;
      for (std::size_t i = 0; i < in; ++i) ws.delta_next[r * in + i] = k.dot(w + i * out, d, out);
    }
    k.softsign_backward(x, ws.delta_next.data(), ws.delta_next.data(), rows * in);
    std::swap(ws.delta, ws.delta_next);
  }
}

double clamp_logvar(double raw, double min_logvar, double max_logvar) {
  const double upper = max_logvar - softplus(max_logvar - raw);
  // The two soft sides overlap by ~exp(min - max); the hard clamp removes it.
  return std::clamp(min_logvar + softplus(upper - min_logvar), min_logvar, max_logvar);
}

double gaussian_nll(const double* out, const double* target, std::size_t rows, std::size_t dims, double min_logvar,
                    double max_logvar, double* grad_out) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* o = out + r * 2 * dims;
    const double* y = target + r * dims;
    for (std::size_t d = 0; d < dims; ++d) {
      const double raw = o[dims + d];
      const double upper = max_logvar - softplus(max_logvar - raw);
      const double soft = min_logvar + softplus(upper - min_logvar);
      const double lv = std::clamp(soft, min_logvar, max_logvar);
      const double inv_var = std::exp(-lv);
      const double err = y[d] - o[d];
      total += 0.5 * (err * err * inv_var + lv + log2pi);
      if (grad_out != nullptr) {
        double* g = grad_out + r * 2 * dims;
        g[d] = -err * inv_var * inv_rows;
        const double dlv = 0.5 * (1.0 - err * err * inv_var);
        const double dsoft = soft == lv ? sigmoid(upper - min_logvar) * sigmoid(max_logvar - raw) : 0.0;
        g[dims + d] = dlv * dsoft * inv_rows;
      }
    }
  }
  return total * inv_rows;
}

double squared_loss(const double* out, const double* target, std::size_t rows, std::size_t dims, double* grad_out) {
  const double inv_rows = 1.0 / static_cast<double>(rows);
  double total = 0.0;
  for (std::size_t i = 0; i < rows * dims; ++i) {
    const double err = out[i] - target[i];
    total += 0.5 * err * err;
    if (grad_out != nullptr) grad_out[i] = err * inv_rows;
  }
  return total * inv_rows;
}

}  // namespace fairdyn::model
