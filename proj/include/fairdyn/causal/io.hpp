#pragma once

#include <filesystem>
#include <iosfwd>

#include "fairdyn/causal/dataset.hpp"
#include "fairdyn/causal/effects.hpp"

namespace fairdyn::causal {

// One record per line: {"z":0,"s":[...],"a":[...],"r":0.0,"s2":[...],"t":0}
TrajectoryDataset read_jsonl(std::istream& in, double discount = 0.99);
TrajectoryDataset read_jsonl_file(const std::filesystem::path& path, double discount = 0.99);
void write_jsonl(const TrajectoryDataset& data, std::ostream& out);
void write_jsonl_file(const TrajectoryDataset& data, const std::filesystem::path& path);

// CSV with header `kind,step,value,stderr,n`. Pooled estimates use step
// "all"; vector estimates emit one row per component as KIND[d].
void write_effects_csv(std::ostream& out, const EffectSet& effects);
void write_decomposition_csv(std::ostream& out, const DecompositionReport& report);

}  // namespace fairdyn::causal
