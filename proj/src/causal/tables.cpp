#include "fairdyn/causal/tables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairdyn/common/error.hpp"
#include "indexed.hpp"

namespace fairdyn::causal {

ConditionalTables ConditionalTables::from_cells(std::size_t state_dim, std::vector<TableCell> cells,
                                                std::array<double, 2> residual_mass) {
  std::sort(cells.begin(), cells.end(), [](const TableCell& a, const TableCell& b) { return a.bin < b.bin; });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& c = cells[i];
    require(i == 0 || cells[i - 1].bin != c.bin, ErrorCode::kInvalidArgument,
            "duplicate bin " + std::to_string(c.bin));
    for (std::size_t g = 0; g < 2; ++g) {
      require(c.probability[g] >= 0.0, ErrorCode::kInvalidArgument, "negative cell probability");
      if (c.mean_next_state[g].empty()) c.mean_next_state[g].assign(state_dim, 0.0);
      require(c.mean_next_state[g].size() == state_dim, ErrorCode::kInvalidArgument, "next-state mean dimension");
    }
  }
  ConditionalTables t;
  t.state_dim_ = state_dim;
  t.cells_ = std::move(cells);
  t.residual_mass_ = residual_mass;
  return t;
}

double ConditionalTables::total_probability(Group g) const {
  const std::size_t z = index_of(g);
  double total = residual_mass_[z];
  for (const auto& c : cells_) total += c.probability[z];
  return total;
}

std::size_t ConditionalTables::common_cells() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const TableCell& c) { return c.common(); }));
}

std::size_t ConditionalTables::n_effective() const {
  double n = 0.0;
  for (const auto& c : cells_) {
    if (c.common()) n += c.count[0] + c.count[1];
  }
  return static_cast<std::size_t>(std::llround(n));
}

ConditionalTables ConditionalTables::with_outcomes_from(const ConditionalTables& outcomes) const {
  require(outcomes.state_dim_ == state_dim_, ErrorCode::kInvalidArgument, "state dimension mismatch");
  std::vector<TableCell> merged;
  merged.reserve(cells_.size());
  auto it = outcomes.cells_.begin();
  for (const auto& c : cells_) {
    while (it != outcomes.cells_.end() && it->bin < c.bin) ++it;
    TableCell m = c;
    if (it != outcomes.cells_.end() && it->bin == c.bin) {
      m.count = it->count;
      m.mean_reward = it->mean_reward;
      m.mean_next_state = it->mean_next_state;
      m.observed = it->observed;
    } else {
      m.count = {0.0, 0.0};
      m.observed = {false, false};
    }
    merged.push_back(std::move(m));
  }
  return from_cells(state_dim_, std::move(merged), residual_mass_);
}

namespace detail {

IndexedRecords index_records(const TrajectoryDataset& data, const DiscretizationSpec& spec) {
  data.require_both_groups();
  spec.validate_dims(data.state_dim(), data.action_dim());

  IndexedRecords rec;
  rec.state_dim = data.state_dim();
  rec.grid_size = spec.grid_size();
  rec.alpha = spec.laplace_alpha;

  const auto& records = data.records();
  const std::size_t n = records.size();
  std::vector<std::uint64_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = spec.bin_of(records[i].state, records[i].action);

  rec.bins = raw;
  std::sort(rec.bins.begin(), rec.bins.end());
  rec.bins.erase(std::unique(rec.bins.begin(), rec.bins.end()), rec.bins.end());

  rec.cell.resize(n);
  rec.group.resize(n);
  rec.reward.resize(n);
  rec.next_state.resize(n * rec.state_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pos = std::lower_bound(rec.bins.begin(), rec.bins.end(), raw[i]) - rec.bins.begin();
    rec.cell[i] = static_cast<std::uint32_t>(pos);
    rec.group[i] = static_cast<std::uint8_t>(records[i].group);
    rec.reward[i] = records[i].reward;
    double* out = rec.next_state.data() + i * rec.state_dim;
    for (std::size_t j = 0; j < rec.state_dim; ++j) {
      out[j] = records[i].next_state[j] - (spec.next_state_increment ? records[i].state[j] : 0.0);
    }
    rec.by_group[rec.group[i]].push_back(static_cast<std::uint32_t>(i));
  }
  return rec;
}

ConditionalTables build_tables(const IndexedRecords& rec, std::span<const std::uint32_t> multiplicity) {
  const std::size_t k = rec.bins.size();
  const std::size_t d = rec.state_dim;
  std::vector<double> count(2 * k, 0.0);
  std::vector<double> reward_sum(2 * k, 0.0);
  std::vector<double> next_sum(2 * k * d, 0.0);
  std::array<double, 2> total{0.0, 0.0};

  const bool weighted = !multiplicity.empty();
  for (std::size_t i = 0; i < rec.cell.size(); ++i) {
    const double w = weighted ? static_cast<double>(multiplicity[i]) : 1.0;
    if (w == 0.0) continue;
    const std::size_t slot = rec.group[i] * k + rec.cell[i];
    count[slot] += w;
    reward_sum[slot] += w * rec.reward[i];
    const double* ns = rec.next_state.data() + i * d;
    double* acc = next_sum.data() + slot * d;
    for (std::size_t j = 0; j < d; ++j) acc[j] += w * ns[j];
    total[rec.group[i]] += w;
  }
  require(total[0] > 0.0, ErrorCode::kEmptyGroup, "no records for group z0");
  require(total[1] > 0.0, ErrorCode::kEmptyGroup, "no records for group z1");

  std::array<double, 2> denom{total[0] + rec.alpha * rec.grid_size, total[1] + rec.alpha * rec.grid_size};
  std::vector<TableCell> cells;
  cells.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0.0 && count[k + c] == 0.0) continue;
    TableCell cell;
    cell.bin = rec.bins[c];
    for (std::size_t g = 0; g < 2; ++g) {
      const std::size_t slot = g * k + c;
      const double n = count[slot];
      cell.count[g] = n;
      cell.probability[g] = (n + rec.alpha) / denom[g];
      cell.observed[g] = n > 0.0;
      cell.mean_next_state[g].assign(d, 0.0);
      if (n > 0.0) {
        cell.mean_reward[g] = reward_sum[slot] / n;
        for (std::size_t j = 0; j < d; ++j) cell.mean_next_state[g][j] = next_sum[slot * d + j] / n;
      }
    }
    cells.push_back(std::move(cell));
  }
  const double unlisted = rec.grid_size - static_cast<double>(cells.size());
  const std::array<double, 2> residual{unlisted * rec.alpha / denom[0], unlisted * rec.alpha / denom[1]};
  return ConditionalTables::from_cells(d, std::move(cells), residual);
}

}  // namespace detail

ConditionalTables fit_tables(const TrajectoryDataset& data, const DiscretizationSpec& spec) {
  const auto rec = detail::index_records(data, spec);
  return detail::build_tables(rec, {});
}

}  // namespace fairdyn::causal
