#include "fairdyn/causal/discretization.hpp"

#include <cmath>
#include <string>

#include "fairdyn/common/error.hpp"

namespace fairdyn::causal {

std::size_t AxisBins::bin_of(double v) const noexcept {
  if (!(v > lo)) return 0;  // also catches NaN
  if (v >= hi) return bins - 1;
  const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
  return b >= bins ? bins - 1 : b;
}

AxisBins AxisBins::integers(long lo, long hi) {
  return AxisBins{static_cast<double>(lo) - 0.5, static_cast<double>(hi) + 0.5,
                  static_cast<std::size_t>(hi - lo + 1)};
}

void DiscretizationSpec::validate() const {
  auto check = [](const AxisBins& a, const char* what, std::size_t i) {
    require(a.bins >= 1, ErrorCode::kDegenerateSpec, std::string(what) + " axis " + std::to_string(i) + " has zero bins");
    require(std::isfinite(a.lo) && std::isfinite(a.hi) && a.lo < a.hi, ErrorCode::kDegenerateSpec,
            std::string(what) + " axis " + std::to_string(i) + " has zero width");
  };
  for (std::size_t i = 0; i < state_axes.size(); ++i) check(state_axes[i], "state", i);
  for (std::size_t i = 0; i < action_axes.size(); ++i) check(action_axes[i], "action", i);
  require(laplace_alpha >= 0.0, ErrorCode::kDegenerateSpec, "laplace_alpha must be nonnegative");
}

void DiscretizationSpec::validate_dims(std::size_t state_dim, std::size_t action_dim) const {
  validate();
  require(state_axes.size() == state_dim && action_axes.size() == action_dim, ErrorCode::kInvalidArgument,
          "discretization axes do not match dataset dimensions");
}

double DiscretizationSpec::grid_size() const {
  double g = 1.0;
  for (const auto& a : state_axes) g *= static_cast<double>(a.bins);
  for (const auto& a : action_axes) g *= static_cast<double>(a.bins);
  return g;
}

std::uint64_t DiscretizationSpec::bin_of(std::span<const double> state, std::span<const double> action) const {
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < state_axes.size(); ++i) id = id * state_axes[i].bins + state_axes[i].bin_of(state[i]);
  for (std::size_t i = 0; i < action_axes.size(); ++i)
    id = id * action_axes[i].bins + action_axes[i].bin_of(action[i]);
  return id;
}

DiscretizationSpec DiscretizationSpec::uniform(std::size_t state_dim, double lo, double hi, std::size_t state_bins,
                                               std::size_t action_dim, long action_lo, long action_hi,
                                               double alpha) {
  DiscretizationSpec spec;
  spec.state_axes.assign(state_dim, AxisBins{lo, hi, state_bins});
  spec.action_axes.assign(action_dim, AxisBins::integers(action_lo, action_hi));
  spec.laplace_alpha = alpha;
  spec.validate();
  return spec;
}

}  // namespace fairdyn::causal
