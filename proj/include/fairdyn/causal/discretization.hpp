#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fairdyn::causal {

struct AxisBins {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 1;

  // Equal-width bin of v; values outside [lo, hi] land in the edge bins.
  std::size_t bin_of(double v) const noexcept;

  // Bins centred on the integers lo..hi, so each integer maps to its own bin.
  static AxisBins integers(long lo, long hi);
};

// Joint (state, action) grid used by the plug-in estimators. Bin ids are the
// mixed-radix index over state axes followed by action axes.
struct DiscretizationSpec {
  std::vector<AxisBins> state_axes;
  std::vector<AxisBins> action_axes;
  double laplace_alpha = 1.0;
  // Fit next-state means on s' - s instead of s'. For a fixed state both give
  // the same NDE(S'), but within a coarse bin the groups' states can sit at
  // different positions and the increment is far less sensitive to that.
  bool next_state_increment = false;

  // Throws kDegenerateSpec for zero-width axes, zero bins or negative alpha.
  void validate() const;
  void validate_dims(std::size_t state_dim, std::size_t action_dim) const;

  // Total number of cells in the joint grid. A double, since products of
  // many axes get large.
  double grid_size() const;
  std::uint64_t bin_of(std::span<const double> state, std::span<const double> action) const;

  static DiscretizationSpec uniform(std::size_t state_dim, double lo, double hi, std::size_t state_bins,
                                    std::size_t action_dim, long action_lo, long action_hi,
                                    double alpha = 1.0);
};

}  // namespace fairdyn::causal
