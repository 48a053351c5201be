#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairdyn/analytic/logistic.hpp"
#include "fairdyn/envs/envs.hpp"
#include "fairdyn/planner/learn.hpp"

namespace fairdyn::harness {

// ---- analytic sweep -------------------------------------------------------

struct AnalyticConfig {
  double lo = -2.5;
  double hi = 2.5;
  std::size_t points = 101;
  // Each setting fixes w1 = w2 = w3 = w.
  std::vector<double> shared_weights{0.1, 3.0};

  void validate() const;
};

struct AnalyticSetting {
  double w = 0.0;
  std::vector<analytic::SweepRow> rows;
};

std::vector<AnalyticSetting> run_analytic(const AnalyticConfig& config);

// Writes analytic_w<w>.csv per setting plus manifest.json.
std::vector<AnalyticSetting> run_analytic(const AnalyticConfig& config, const std::filesystem::path& out_dir);

// ---- detection sweep ------------------------------------------------------

enum class Channel { kReward, kTransition };
std::string_view to_string(Channel channel);
Channel channel_from_string(std::string_view name);

struct DetectConfig {
  envs::EnvParams env = envs::preset(envs::EnvKind::kAllocation, "detect");
  Channel channel = Channel::kReward;
  std::size_t grid = 8;
  double lo = 0.0;
  double hi = 0.0;  // 0 picks the default range for the env and channel
  std::size_t episodes = 200;
  std::size_t resamples = 200;
  double tau_multiplier = 3.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  double range_hi() const;
  void validate() const;
};

struct HeatmapCell {
  double row_param = 0.0;  // advantage parameter of the first group
  double col_param = 0.0;  // advantage parameter of the second group
  double nde = 0.0;        // NDE(R), or the largest-magnitude NDE(S') component
  double std_error = 0.0;
  double tau = 0.0;
};

struct HeatmapResult {
  Channel channel = Channel::kReward;
  std::size_t grid = 0;
  std::vector<double> axis;
  std::vector<HeatmapCell> cells;  // row-major, grid * grid

  const HeatmapCell& at(std::size_t row, std::size_t col) const { return cells.at(row * grid + col); }
};

HeatmapResult run_detect(const DetectConfig& config);
// Writes detect_<channel>.csv plus manifest.json.
HeatmapResult run_detect(const DetectConfig& config, const std::filesystem::path& out_dir);

void write_heatmap_csv(std::ostream& out, const HeatmapResult& result);

// ---- training comparison --------------------------------------------------

struct TrainConfig {
  envs::EnvParams env = envs::preset(envs::EnvKind::kAllocation, "unfair");
  std::vector<planner::Mode> algos{planner::Mode::kPets, planner::Mode::kFairA, planner::Mode::kFairS,
                                   planner::Mode::kInsightFair};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  planner::LearnConfig learn;  // learn.seed is replaced per run
  std::size_t workers = 1;

  void validate() const;
};

struct TrainRun {
  planner::Mode algo = planner::Mode::kPets;
  std::uint64_t seed = 0;
  planner::LearnResult result;
};

std::vector<TrainRun> run_train(const TrainConfig& config);
// Per run: train_<algo>_seed<S>_epochs.csv and _episode.csv (last planned
// episode); per algo: train_<algo>_mean.csv; plus manifest.json.
std::vector<TrainRun> run_train(const TrainConfig& config, const std::filesystem::path& out_dir);

// Seed-averaged learning curve: epoch,return,gap,abs_gap.
void write_mean_curve_csv(std::ostream& out, const std::vector<const TrainRun*>& runs);

// Experiment presets used by the CLI when no config file is given.
planner::LearnConfig default_learn_config();

// JSON form of the learn loop knobs; keys absent from `j` keep the value in
// `base`. Unknown keys throw kInvalidArgument.
planner::LearnConfig parse_learn_config(const nlohmann::json& j, planner::LearnConfig base);
nlohmann::ordered_json learn_config_json(const planner::LearnConfig& config);

// ---- CSV and SVG ----------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  std::vector<double> numeric(std::size_t col) const;
};

// Comma-separated, no quoting. Throws kMalformedCsv on a missing header, no
// data rows, or ragged rows.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

enum class PlotKind { kLines, kHeatmap, kBars };
PlotKind plot_kind_from_string(std::string_view name);

// lines: first column is x, every other numeric column is a series.
// heatmap: first three columns are row value, column value, cell value.
// bars: first column is the label, second the height.
std::string emit_svg(const CsvTable& table, PlotKind kind, const std::string& title);

// ---- manifest -------------------------------------------------------------

// Git blob hash: sha1("blob <size>\0" + content), lowercase hex.
std::string git_blob_sha1(std::string_view content);

struct Manifest {
  std::string command;
  nlohmann::ordered_json config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> outputs;  // file names relative to the output directory

  // Includes the config hash and blob hashes of inputs and outputs; no
  // timestamps, so reruns produce identical manifests.
  nlohmann::ordered_json to_json(const std::filesystem::path& out_dir) const;
  void write(const std::filesystem::path& out_dir) const;
};

// Writes text to out_dir / name, creating the directory; throws kIo.
void write_text_file(const std::filesystem::path& out_dir, const std::string& name, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fairdyn::harness
