#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "fairdyn/common/error.hpp"
#include "fairdyn/harness/harness.hpp"

namespace fairdyn::harness {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::string hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += kDigits[bytes[i] >> 4];
    out += kDigits[bytes[i] & 0xf];
  }
  return out;
}

}  // namespace

planner::LearnConfig parse_learn_config(const nlohmann::json& j, planner::LearnConfig base) {
  require(j.is_object(), ErrorCode::kInvalidArgument, "learn config must be a JSON object");
  std::set<std::string> seen;
  try {
    auto& p = base.plan;
    take(j, "horizon", p.horizon, seen);
    take(j, "population", p.population, seen);
    take(j, "elites", p.elites, seen);
    take(j, "iterations", p.iterations, seen);
    take(j, "particles", p.particles, seen);
    take(j, "penalty", p.penalty, seen);
    take(j, "state_penalty", p.state_penalty, seen);
    take(j, "epsilon", p.epsilon, seen);
    take(j, "discount", p.discount, seen);
    take(j, "init_std_fraction", p.init_std_fraction, seen);
    take(j, "min_std", p.min_std, seen);
    take(j, "elite_retention", p.elite_retention, seen);
    auto& m = base.model;
    take(j, "ensemble_size", m.ensemble_size, seen);
    take(j, "hidden_layers", m.hidden_layers, seen);
    take(j, "learning_rate", m.learning_rate, seen);
    take(j, "batch_size", m.batch_size, seen);
    take(j, "weight_init_scale", m.weight_init_scale, seen);
    take(j, "min_logvar", m.min_logvar, seen);
    take(j, "max_logvar", m.max_logvar, seen);
    take(j, "bootstrap", m.bootstrap, seen);
    seen.insert("optimizer");
    if (j.contains("optimizer")) {
      const auto name = j.at("optimizer").get<std::string>();
      require(name == "adam" || name == "sgd", ErrorCode::kInvalidArgument, "optimizer must be adam or sgd");
      m.optimizer = name == "adam" ? model::Optimizer::kAdam : model::Optimizer::kSgd;
    }
    take(j, "epochs", base.epochs, seen);
    take(j, "initial_episodes", base.initial_episodes, seen);
    take(j, "first_fit_epochs", base.first_fit_epochs, seen);
    take(j, "fit_epochs", base.fit_epochs, seen);
    take(j, "df_resamples", base.df_resamples, seen);
    take(j, "df_multiplier", base.df_multiplier, seen);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("learn config: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    require(seen.count(key) > 0, ErrorCode::kInvalidArgument, "unknown learn config key '" + key + "'");
  }
  return base;
}

nlohmann::ordered_json learn_config_json(const planner::LearnConfig& c) {
  const auto& p = c.plan;
  const auto& m = c.model;
  return {{"horizon", p.horizon},
          {"population", p.population},
          {"elites", p.elites},
          {"iterations", p.iterations},
          {"particles", p.particles},
          {"penalty", p.penalty},
          {"state_penalty", p.state_penalty},
          {"epsilon", p.epsilon},
          {"discount", p.discount},
          {"init_std_fraction", p.init_std_fraction},
          {"min_std", p.min_std},
          {"elite_retention", p.elite_retention},
          {"ensemble_size", m.ensemble_size},
          {"hidden_layers", m.hidden_layers},
          {"learning_rate", m.learning_rate},
          {"batch_size", m.batch_size},
          {"weight_init_scale", m.weight_init_scale},
          {"min_logvar", m.min_logvar},
          {"max_logvar", m.max_logvar},
          {"bootstrap", m.bootstrap},
          {"optimizer", m.optimizer == model::Optimizer::kAdam ? "adam" : "sgd"},
          {"epochs", c.epochs},
          {"initial_episodes", c.initial_episodes},
          {"first_fit_epochs", c.first_fit_epochs},
          {"fit_epochs", c.fit_epochs},
          {"df_resamples", c.df_resamples},
          {"df_multiplier", c.df_multiplier}};
}

std::string git_blob_sha1(std::string_view content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx.get(), head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx.get(), content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) == 1;
  require(ok, ErrorCode::kIo, "sha1 digest failed");
  return hex(digest.data(), len);
}

nlohmann::ordered_json Manifest::to_json(const std::filesystem::path& out_dir) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = config;
  j["config_hash"] = git_blob_sha1(config.dump());
  j["seeds"] = seeds;
  nlohmann::ordered_json in = nlohmann::ordered_json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.generic_string()}, {"blob", git_blob_sha1(read_text_file(p))}});
  j["inputs"] = in;
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& name : outputs) {
    out.push_back({{"file", name}, {"blob", git_blob_sha1(read_text_file(out_dir / name))}});
  }
  j["outputs"] = out;
  return j;
}

void Manifest::write(const std::filesystem::path& out_dir) const {
  write_text_file(out_dir, "manifest.json", to_json(out_dir).dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& out_dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + out_dir.string());
  const auto path = out_dir / name;
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  out.close();
  require(!out.fail(), ErrorCode::kIo, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::kMalformedCsv, "no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric(std::size_t col) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const std::string& cell = row.at(col);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    require(res.ec == std::errc() && res.ptr == cell.data() + cell.size(), ErrorCode::kMalformedCsv,
            "non-numeric cell '" + cell + "' in column " + header.at(col));
    out.push_back(v);
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  CsvTable t;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto row = split(line);
    require(row.size() == t.header.size(), ErrorCode::kMalformedCsv,
            "row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(row.size()) + " cells, header has " +
                std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  require(have_header, ErrorCode::kMalformedCsv, "missing header");
  require(!t.rows.empty(), ErrorCode::kMalformedCsv, "no data rows");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

}  // namespace fairdyn::harness
