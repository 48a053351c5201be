#include "fairdyn/causal/dataset.hpp"

#include <cmath>
#include <string>

#include "fairdyn/common/error.hpp"

namespace fairdyn::causal {

Group group_from_int(long value) {
  require(value == 0 || value == 1, ErrorCode::kInvalidArgument,
          "group label must be 0 or 1, got " + std::to_string(value));
  return value == 0 ? Group::kZ0 : Group::kZ1;
}

TrajectoryDataset::TrajectoryDataset(std::size_t state_dim, std::size_t action_dim, double discount)
    : state_dim_(state_dim), action_dim_(action_dim), discount_(discount) {
  require(state_dim > 0 && action_dim > 0, ErrorCode::kInvalidArgument, "dimensions must be positive");
  require(discount >= 0.0 && discount < 1.0, ErrorCode::kInvalidArgument, "discount must lie in [0, 1)");
}

void TrajectoryDataset::add(TransitionRecord record) {
  require(record.state.size() == state_dim_ && record.next_state.size() == state_dim_, ErrorCode::kInvalidArgument,
          "state dimension mismatch");
  require(record.action.size() == action_dim_, ErrorCode::kInvalidArgument, "action dimension mismatch");
  require(std::isfinite(record.reward), ErrorCode::kNonFinite, "reward must be finite");
  ++group_counts_[index_of(record.group)];
  if (record.step > max_step_) max_step_ = record.step;
  records_.push_back(std::move(record));
}

TrajectoryDataset TrajectoryDataset::filter_step(std::uint32_t step) const {
  TrajectoryDataset out(state_dim_, action_dim_, discount_);
  for (const auto& r : records_) {
    if (r.step == step) out.add(r);
  }
  return out;
}

TrajectoryDataset TrajectoryDataset::swap_groups() const {
  TrajectoryDataset out(state_dim_, action_dim_, discount_);
  out.reserve(records_.size());
  for (auto r : records_) {
    r.group = other(r.group);
    out.add(std::move(r));
  }
  return out;
}

void TrajectoryDataset::require_nonempty() const {
  require(!records_.empty(), ErrorCode::kEmptyDataset, "dataset has no records");
}

void TrajectoryDataset::require_both_groups() const {
  require_nonempty();
  require(group_counts_[0] > 0, ErrorCode::kEmptyGroup, "no records for group z0");
  require(group_counts_[1] > 0, ErrorCode::kEmptyGroup, "no records for group z1");
}

}  // namespace fairdyn::causal
