#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fairdyn::causal {

// Binary sensitive attribute. z0 is the reference group of every contrast.
enum class Group : std::uint8_t { kZ0 = 0, kZ1 = 1 };

constexpr std::size_t index_of(Group g) noexcept { return static_cast<std::size_t>(g); }
constexpr Group other(Group g) noexcept { return g == Group::kZ0 ? Group::kZ1 : Group::kZ0; }
Group group_from_int(long value);

struct TransitionRecord {
  Group group = Group::kZ0;
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  std::uint32_t step = 0;
};

// Logged per-group transitions. Dimensions are fixed at construction and
// every appended record is checked against them.
class TrajectoryDataset {
 public:
  TrajectoryDataset(std::size_t state_dim, std::size_t action_dim, double discount = 0.99);

  void add(TransitionRecord record);
  void reserve(std::size_t n) { records_.reserve(n); }

  const std::vector<TransitionRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  double discount() const noexcept { return discount_; }

  std::size_t count(Group g) const noexcept { return group_counts_[index_of(g)]; }
  std::uint32_t max_step() const noexcept { return max_step_; }

  // Records whose step index equals `step`, same dimensions and discount.
  TrajectoryDataset filter_step(std::uint32_t step) const;
  // Same records with z0 and z1 exchanged.
  TrajectoryDataset swap_groups() const;

  // Throws kEmptyDataset / kEmptyGroup.
  void require_nonempty() const;
  void require_both_groups() const;

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  double discount_;
  std::vector<TransitionRecord> records_;
  std::size_t group_counts_[2] = {0, 0};
  std::uint32_t max_step_ = 0;
};

}  // namespace fairdyn::causal
