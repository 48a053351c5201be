#include "fairdyn/causal/io.hpp"

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "fairdyn/common/error.hpp"
#include "fairdyn/common/format.hpp"

namespace fairdyn::causal {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<double> read_vector(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  require(it != j.end(), ErrorCode::kInvalidArgument,
          "line " + std::to_string(line) + ": missing key '" + key + "'");
  if (it->is_number()) return {it->get<double>()};
  require(it->is_array(), ErrorCode::kInvalidArgument,
          "line " + std::to_string(line) + ": '" + key + "' must be a number or array");
  return it->get<std::vector<double>>();
}

void write_row(std::ostream& out, std::string_view kind, const std::string& step, double value, double se,
               std::size_t n) {
  out << kind << ',' << step << ',' << format_number(value) << ',' << format_number(se) << ',' << n << '\n';
}

void write_estimate(std::ostream& out, const EffectEstimate& e, const std::string& step) {
  const auto kind = to_string(e.kind);
  if (e.value.size() == 1) {
    write_row(out, kind, step, e.value[0], e.std_error[0], e.n_effective);
    return;
  }
  for (std::size_t d = 0; d < e.value.size(); ++d) {
    write_row(out, std::string(kind) + "[" + std::to_string(d) + "]", step, e.value[d], e.std_error[d],
              e.n_effective);
  }
}

}  // namespace

TrajectoryDataset read_jsonl(std::istream& in, double discount) {
  std::optional<TrajectoryDataset> data;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kInvalidArgument, "line " + std::to_string(line) + ": " + e.what());
    }
    TransitionRecord rec;
    require(j.contains("z") && j["z"].is_number_integer(), ErrorCode::kInvalidArgument,
            "line " + std::to_string(line) + ": 'z' must be 0 or 1");
    rec.group = group_from_int(j["z"].get<long>());
    rec.state = read_vector(j, "s", line);
    rec.action = read_vector(j, "a", line);
    rec.next_state = read_vector(j, "s2", line);
    require(j.contains("r") && j["r"].is_number(), ErrorCode::kInvalidArgument,
            "line " + std::to_string(line) + ": 'r' must be a number");
    rec.reward = j["r"].get<double>();
    if (j.contains("t")) rec.step = j["t"].get<std::uint32_t>();
    if (!data) data.emplace(rec.state.size(), rec.action.size(), discount);
    data->add(std::move(rec));
  }
  require(data.has_value(), ErrorCode::kEmptyDataset, "no records in input");
  return std::move(*data);
}

TrajectoryDataset read_jsonl_file(const std::filesystem::path& path, double discount) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  return read_jsonl(in, discount);
}

void write_jsonl(const TrajectoryDataset& data, std::ostream& out) {
  for (const auto& rec : data.records()) {
    ordered_json j;
    j["z"] = static_cast<int>(index_of(rec.group));
    j["s"] = rec.state;
    j["a"] = rec.action;
    j["r"] = rec.reward;
    j["s2"] = rec.next_state;
    j["t"] = rec.step;
    out << j.dump() << '\n';
  }
}

void write_jsonl_file(const TrajectoryDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  write_jsonl(data, out);
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

void write_effects_csv(std::ostream& out, const EffectSet& effects) {
  out << "kind,step,value,stderr,n\n";
  for (const auto* e : {&effects.te, &effects.nde, &effects.nie, &effects.nde_next_state}) {
    write_estimate(out, *e, "all");
  }
}

void write_decomposition_csv(std::ostream& out, const DecompositionReport& report) {
  out << "kind,step,value,stderr,n\n";
  for (const auto& s : report.per_step) {
    const auto step = std::to_string(s.step);
    write_estimate(out, s.te, step);
    write_estimate(out, s.nde, step);
    write_estimate(out, s.nie, step);
  }
  write_estimate(out, report.te_return, "all");
}

}  // namespace fairdyn::causal
