#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/common/rng.hpp"
#include "fairdyn/model/mlp.hpp"

namespace fairdyn::model {

enum class Optimizer { kSgd, kAdam };

struct EnsembleConfig {
  std::size_t ensemble_size = 5;
  std::vector<std::size_t> hidden_layers{32, 32};
  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double weight_init_scale = 1.0;
  double min_logvar = -10.0;
  double max_logvar = 2.0;
  Optimizer optimizer = Optimizer::kSgd;
  bool bootstrap = true;  // each member trains on its own with-replacement resample
  std::size_t workers = 1;

  void validate() const;
};

struct TrainingReport {
  double initial_nll = 0.0;        // mean over members before the first update
  std::vector<double> epoch_nll;   // mean over members after each epoch
};

struct Prediction {
  std::vector<double> mean_next_state;
  double mean_reward = 0.0;
  std::vector<double> var_next_state;
  double var_reward = 0.0;
};

// Ensemble of Gaussian MLPs over the input concat(one-hot z, s, a). Each
// member predicts the mean and log-variance of (s' - s, r); inputs are
// standardised with statistics from the most recent fit.
class EnsembleModel {
 public:
  EnsembleModel() = default;
  EnsembleModel(std::size_t state_dim, std::size_t action_dim, EnsembleConfig config);

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  std::size_t input_dim() const noexcept { return 2 + state_dim_ + action_dim_; }
  std::size_t target_dim() const noexcept { return state_dim_ + 1; }
  std::size_t size() const noexcept { return members_.size(); }
  bool trained() const noexcept { return trained_; }
  const EnsembleConfig& config() const noexcept { return config_; }
  const Mlp& member(std::size_t b) const { return members_.at(b); }
  Mlp& member(std::size_t b) { return members_.at(b); }
  std::span<const double> input_mean() const noexcept { return mean_; }
  std::span<const double> input_std() const noexcept { return std_; }

  // Trains every member, continuing from the current weights. Normalisation
  // statistics are recomputed from `data`, and the first layer is rescaled so
  // that the network function is unchanged by the new statistics.
  // epochs overrides config().epochs when given.
  TrainingReport fit(const causal::TrajectoryDataset& data, std::uint64_t seed,
                     std::optional<std::size_t> epochs = std::nullopt);

  // Raw input row -> normalised input row.
  void normalize(const double* raw, double* out) const;
  void denormalize(const double* normalized, double* out) const;

  Prediction predict(std::size_t member, causal::Group z, std::span<const double> s, std::span<const double> a) const;

  // Rows of raw inputs -> rows of [mean delta-s, mean r, logvar delta-s,
  // logvar r] with the log-variances already clamped. Thread-safe as long as
  // each thread owns its workspace.
  void predict_batch(std::size_t member, const double* raw_inputs, std::size_t rows, double* out,
                     Mlp::Workspace& ws) const;

  // Gaussian draw of (s', r); applies the state projector when one is set.
  std::pair<std::vector<double>, double> sample_transition(std::size_t member, causal::Group z,
                                                           std::span<const double> s, std::span<const double> a,
                                                           Rng& rng) const;

  using StateProjector = std::function<void(std::span<double>)>;
  void set_state_projector(StateProjector p) { projector_ = std::move(p); }
  const StateProjector& state_projector() const noexcept { return projector_; }

  // Mean NLL of one member on the given records.
  double evaluate_nll(std::size_t member, const causal::TrajectoryDataset& data) const;

  void save(const std::filesystem::path& path) const;
  std::string to_json() const;
  // Throws kLayoutMismatch when the stored layout differs from the expected
  // state/action dimensions.
  static EnsembleModel load(const std::filesystem::path& path, std::size_t state_dim, std::size_t action_dim);
  static EnsembleModel from_json(const std::string& text, std::size_t state_dim, std::size_t action_dim);

 private:
  void build_rows(const causal::TrajectoryDataset& data, std::vector<double>& x, std::vector<double>& y) const;
  void refit_normalization(const std::vector<double>& raw_x, std::size_t rows);

  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  EnsembleConfig config_;
  std::vector<Mlp> members_;
  std::vector<double> mean_;
  std::vector<double> std_;
  bool trained_ = false;
  StateProjector projector_;
};

// One input row in the model layout.
void encode_input(causal::Group z, std::span<const double> s, std::span<const double> a, double* out);

struct GradCheckOptions {
  std::size_t input_dim = 4;
  std::size_t target_dim = 2;
  std::size_t rows = 8;
  bool squared_loss = false;  // plain regression loss instead of the Gaussian NLL
};

// Max relative error between backprop and central finite differences
// (h = 1e-5) over all parameters of a random network with config's hidden
// layers. Relative error is |g - f| / max(|g|, |f|, 1e-5).
double grad_check(const EnsembleConfig& config, std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace fairdyn::model
