#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/discretization.hpp"
#include "fairdyn/causal/tables.hpp"

namespace fairdyn::causal::detail {

// Records flattened and mapped onto the dense list of occupied bins, so that
// fitting and every bootstrap replicate are single passes over arrays.
struct IndexedRecords {
  std::size_t state_dim = 0;
  double grid_size = 1.0;
  double alpha = 0.0;
  std::vector<std::uint64_t> bins;  // sorted, unique
  std::vector<std::uint32_t> cell;  // record -> position in bins
  std::vector<std::uint8_t> group;
  std::vector<double> reward;
  std::vector<double> next_state;  // record-major, state_dim per record
  std::array<std::vector<std::uint32_t>, 2> by_group;
};

IndexedRecords index_records(const TrajectoryDataset& data, const DiscretizationSpec& spec);

// multiplicity[i] copies of record i; an empty span means one copy each.
ConditionalTables build_tables(const IndexedRecords& rec, std::span<const std::uint32_t> multiplicity);

}  // namespace fairdyn::causal::detail
