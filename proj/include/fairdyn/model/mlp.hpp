#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairdyn/common/rng.hpp"

namespace fairdyn::model {

// Fully connected network with softsign hidden layers and a linear output.
// Parameters live in one flat vector: for each layer, the in x out weight
// matrix (row-major) followed by the out biases.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}
  explicit Mlp(std::vector<std::size_t> sizes);

  // Weights ~ N(0, scale^2 / fan_in), biases zero.
  void init(Rng& rng, double scale = 1.0);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  // Offsets of layer l's weights and biases inside params().
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer] * sizes_[layer + 1]; }

  struct Workspace {
    std::vector<std::vector<double>> act;  // act[0] = input, act[l] = layer l output
    std::vector<double> delta;
    std::vector<double> delta_next;
    std::vector<double> scratch;  // free for callers, e.g. normalised inputs
  };

  // Output rows x output_dim, valid until the workspace is reused.
  const double* forward(const double* x, std::size_t rows, Workspace& ws) const;

  // Accumulates d loss / d params into grad given d loss / d output, using
  // the activations left in `ws` by forward().
  void backward(Workspace& ws, const double* grad_output, std::size_t rows, std::span<double> grad) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Mean over rows of the diagonal Gaussian negative log-likelihood. `out` rows
// hold dims means followed by dims raw log-variances; the raw values pass
// through a soft clamp into [min_logvar, max_logvar]. Writes d loss / d out
// into grad_out when it is non-null.
double gaussian_nll(const double* out, const double* target, std::size_t rows, std::size_t dims, double min_logvar,
                    double max_logvar, double* grad_out);

// The soft clamp applied to raw log-variance heads.
double clamp_logvar(double raw, double min_logvar, double max_logvar);

// Mean over rows of 0.5 * sum (out - target)^2.
double squared_loss(const double* out, const double* target, std::size_t rows, std::size_t dims, double* grad_out);

}  // namespace fairdyn::model
