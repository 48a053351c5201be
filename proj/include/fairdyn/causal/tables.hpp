#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/discretization.hpp"

namespace fairdyn::causal {

// One occupied (s, a) cell with per-group plug-in quantities.
struct TableCell {
  std::uint64_t bin = 0;
  std::array<double, 2> count{0.0, 0.0};
  // P^(s, a | z) after smoothing.
  std::array<double, 2> probability{0.0, 0.0};
  // E^[R | z, s, a]; meaningful only when observed[z].
  std::array<double, 2> mean_reward{0.0, 0.0};
  // E^[S' | z, s, a], state_dim entries per group.
  std::array<std::vector<double>, 2> mean_next_state;
  std::array<bool, 2> observed{false, false};

  bool common() const noexcept { return observed[0] && observed[1]; }
};

// Conditional reward / next-state means and smoothed mediator probabilities
// for both groups. Cells are kept sorted by bin id, so every sum over them
// runs in a fixed order.
class ConditionalTables {
 public:
  ConditionalTables() = default;

  // Build from explicit values (hand-built examples, outcome/mediator splicing).
  // residual_mass[z] is the probability assigned to grid cells not listed.
  static ConditionalTables from_cells(std::size_t state_dim, std::vector<TableCell> cells,
                                      std::array<double, 2> residual_mass = {0.0, 0.0});

  std::size_t state_dim() const noexcept { return state_dim_; }
  const std::vector<TableCell>& cells() const noexcept { return cells_; }
  std::array<double, 2> residual_mass() const noexcept { return residual_mass_; }

  // Sum of P^(.|z) over the whole grid (listed cells plus residual).
  double total_probability(Group g) const;

  // Cells observed under both groups; the estimators sum over these only.
  std::size_t common_cells() const;
  // Records falling in common cells.
  std::size_t n_effective() const;

  // Tables with mediator probabilities from *this and outcome means from
  // `outcomes`, restricted to bins present in both.
  ConditionalTables with_outcomes_from(const ConditionalTables& outcomes) const;

 private:
  std::size_t state_dim_ = 0;
  std::vector<TableCell> cells_;
  std::array<double, 2> residual_mass_{0.0, 0.0};
};

ConditionalTables fit_tables(const TrajectoryDataset& data, const DiscretizationSpec& spec);

}  // namespace fairdyn::causal
