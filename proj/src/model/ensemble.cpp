#include "fairdyn/model/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairdyn/common/error.hpp"
#include "fairdyn/common/parallel.hpp"

namespace fairdyn::model {

namespace {

constexpr double kStdFloor = 1e-6;
constexpr const char* kFormat = "fairdyn-ensemble";
constexpr int kVersion = 1;

struct AdamState {
  std::vector<double> m, v;
  std::size_t t = 0;
};

void optimizer_step(const EnsembleConfig& cfg, std::span<double> params, std::span<const double> grad,
                    AdamState& state) {
  if (cfg.optimizer == Optimizer::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    params[i] -= cfg.learning_rate * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + eps);
  }
}

double rows_nll(const Mlp& net, const EnsembleConfig& cfg, const double* x, const double* y, std::size_t rows,
                std::size_t dims, Mlp::Workspace& ws) {
  const double* out = net.forward(x, rows, ws);
  return gaussian_nll(out, y, rows, dims, cfg.min_logvar, cfg.max_logvar, nullptr);
}

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

void EnsembleConfig::validate() const {
  require(ensemble_size >= 1, ErrorCode::kInvalidArgument, "ensemble_size must be at least 1");
  for (auto w : hidden_layers) require(w >= 1, ErrorCode::kInvalidArgument, "hidden widths must be positive");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
          "learning_rate must be positive");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be at least 1");
  require(min_logvar < max_logvar, ErrorCode::kInvalidArgument, "min_logvar must be below max_logvar");
  require(weight_init_scale > 0.0, ErrorCode::kInvalidArgument, "weight_init_scale must be positive");
}

void encode_input(causal::Group z, std::span<const double> s, std::span<const double> a, double* out) {
  out[0] = z == causal::Group::kZ0 ? 1.0 : 0.0;
  out[1] = z == causal::Group::kZ1 ? 1.0 : 0.0;
  std::copy(s.begin(), s.end(), out + 2);
  std::copy(a.begin(), a.end(), out + 2 + s.size());
}

EnsembleModel::EnsembleModel(std::size_t state_dim, std::size_t action_dim, EnsembleConfig config)
    : state_dim_(state_dim), action_dim_(action_dim), config_(std::move(config)) {
  config_.validate();
  require(state_dim_ >= 1 && action_dim_ >= 1, ErrorCode::kInvalidArgument, "state and action dims must be >= 1");
  const auto sizes = layer_sizes(input_dim(), config_.hidden_layers, 2 * target_dim());
  members_.assign(config_.ensemble_size, Mlp(sizes));
  mean_.assign(input_dim(), 0.0);
  std_.assign(input_dim(), 1.0);
}

void EnsembleModel::build_rows(const causal::TrajectoryDataset& data, std::vector<double>& x,
                               std::vector<double>& y) const {
  require(data.state_dim() == state_dim_ && data.action_dim() == action_dim_, ErrorCode::kLayoutMismatch,
          "dataset dimensions do not match the model");
  const std::size_t n = data.size();
  x.resize(n * input_dim());
  y.resize(n * target_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = data.records()[i];
    encode_input(r.group, r.state, r.action, x.data() + i * input_dim());
    double* t = y.data() + i * target_dim();
    for (std::size_t d = 0; d < state_dim_; ++d) t[d] = r.next_state[d] - r.state[d];
    t[state_dim_] = r.reward;
  }
}

void EnsembleModel::refit_normalization(const std::vector<double>& raw_x, std::size_t rows) {
  const std::size_t in = input_dim();
  std::vector<double> m(in, 0.0), s(in, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < in; ++i) m[i] += raw_x[r * in + i];
  for (auto& v : m) v /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < in; ++i) s[i] += (raw_x[r * in + i] - m[i]) * (raw_x[r * in + i] - m[i]);
  for (auto& v : s) v = std::max(std::sqrt(v / static_cast<double>(rows)), kStdFloor);

  if (trained_) {
    // Fold the change of statistics into the first layer.
    for (auto& net : members_) {
      const std::size_t out = net.sizes()[1];
      double* w = net.params().data() + net.weight_offset(0);
      double* b = net.params().data() + net.bias_offset(0);
      for (std::size_t i = 0; i < in; ++i) {
        const double shift = (m[i] - mean_[i]) / std_[i];
        for (std::size_t o = 0; o < out; ++o) b[o] += w[i * out + o] * shift;
        const double scale = s[i] / std_[i];
        for (std::size_t o = 0; o < out; ++o) w[i * out + o] *= scale;
      }
    }
  }
  mean_ = std::move(m);
  std_ = std::move(s);
}

void EnsembleModel::normalize(const double* raw, double* out) const {
  for (std::size_t i = 0; i < mean_.size(); ++i) out[i] = (raw[i] - mean_[i]) / std_[i];
}

void EnsembleModel::denormalize(const double* normalized, double* out) const {
  for (std::size_t i = 0; i < mean_.size(); ++i) out[i] = normalized[i] * std_[i] + mean_[i];
}

TrainingReport EnsembleModel::fit(const causal::TrajectoryDataset& data, std::uint64_t seed,
                                  std::optional<std::size_t> epochs_override) {
  data.require_nonempty();
  const std::size_t epochs = epochs_override.value_or(config_.epochs);
  TrainingReport report;
  if (epochs == 0) return report;

  const std::size_t n = data.size();
  const std::size_t in = input_dim(), dims = target_dim(), out_dim = 2 * dims;
  std::vector<double> raw_x, y;
  build_rows(data, raw_x, y);
  refit_normalization(raw_x, n);
  std::vector<double> x(raw_x.size());
  for (std::size_t r = 0; r < n; ++r) normalize(raw_x.data() + r * in, x.data() + r * in);

  const Rng base(seed);
  if (!trained_) {
    for (std::size_t b = 0; b < members_.size(); ++b) {
      Rng init = base.substream(1000 + b);
      members_[b].init(init, config_.weight_init_scale);
    }
  }

  const std::size_t B = members_.size();
  std::vector<std::vector<double>> member_nll(B, std::vector<double>(epochs + 1, 0.0));
  parallel_for(B, config_.workers, [&](std::size_t b) {
    Rng rng = base.substream(b);
    Mlp& net = members_[b];
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = config_.bootstrap ? rng.index(n) : i;
    // Training resample laid out contiguously.
    std::vector<double> bx(n * in), by(n * dims);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(x.data() + idx[i] * in, in, bx.data() + i * in);
      std::copy_n(y.data() + idx[i] * dims, dims, by.data() + i * dims);
    }
    Mlp::Workspace ws;
    member_nll[b][0] = rows_nll(net, config_, bx.data(), by.data(), n, dims, ws);

    AdamState adam;
    std::vector<double> grad(net.num_params()), gout, mx, my;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t e = 0; e < epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (std::size_t start = 0; start < n; start += config_.batch_size) {
        const std::size_t rows = std::min(config_.batch_size, n - start);
        mx.resize(rows * in);
        my.resize(rows * dims);
        gout.resize(rows * out_dim);
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(bx.data() + order[start + r] * in, in, mx.data() + r * in);
          std::copy_n(by.data() + order[start + r] * dims, dims, my.data() + r * dims);
        }
        const double* out = net.forward(mx.data(), rows, ws);
        gaussian_nll(out, my.data(), rows, dims, config_.min_logvar, config_.max_logvar, gout.data());
        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(ws, gout.data(), rows, grad);
        optimizer_step(config_, net.params(), grad, adam);
      }
      const double nll = rows_nll(net, config_, bx.data(), by.data(), n, dims, ws);
      require(std::isfinite(nll), ErrorCode::kNonFinite,
              "training loss diverged (try a smaller learning_rate)");
      member_nll[b][e + 1] = nll;
    }
  });

  for (std::size_t e = 0; e <= epochs; ++e) {
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) total += member_nll[b][e];
    if (e == 0) {
      report.initial_nll = total / static_cast<double>(B);
    } else {
      report.epoch_nll.push_back(total / static_cast<double>(B));
    }
  }
  trained_ = true;
  return report;
}

void EnsembleModel::predict_batch(std::size_t member, const double* raw_inputs, std::size_t rows, double* out,
                                  Mlp::Workspace& ws) const {
  require(trained_, ErrorCode::kUntrainedModel, "model has not been fitted");
  const Mlp& net = members_.at(member);
  const std::size_t in = input_dim(), dims = target_dim();
  ws.scratch.resize(rows * in);
  for (std::size_t r = 0; r < rows; ++r) normalize(raw_inputs + r * in, ws.scratch.data() + r * in);
  const double* y = net.forward(ws.scratch.data(), rows, ws);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = y + r * 2 * dims;
    double* dst = out + r * 2 * dims;
    for (std::size_t d = 0; d < dims; ++d) dst[d] = src[d];
    for (std::size_t d = 0; d < dims; ++d)
      dst[dims + d] = clamp_logvar(src[dims + d], config_.min_logvar, config_.max_logvar);
  }
}

Prediction EnsembleModel::predict(std::size_t member, causal::Group z, std::span<const double> s,
                                  std::span<const double> a) const {
  require(s.size() == state_dim_ && a.size() == action_dim_, ErrorCode::kLayoutMismatch, "input dimensions");
  std::vector<double> raw(input_dim()), out(2 * target_dim());
  encode_input(z, s, a, raw.data());
  Mlp::Workspace ws;
  predict_batch(member, raw.data(), 1, out.data(), ws);
  Prediction p;
  const std::size_t dims = target_dim();
  for (std::size_t d = 0; d < state_dim_; ++d) {
    p.mean_next_state.push_back(s[d] + out[d]);
    p.var_next_state.push_back(std::exp(out[dims + d]));
  }
  p.mean_reward = out[state_dim_];
  p.var_reward = std::exp(out[dims + state_dim_]);
  return p;
}

std::pair<std::vector<double>, double> EnsembleModel::sample_transition(std::size_t member, causal::Group z,
                                                                        std::span<const double> s,
                                                                        std::span<const double> a, Rng& rng) const {
  const Prediction p = predict(member, z, s, a);
  std::vector<double> next(state_dim_);
  for (std::size_t d = 0; d < state_dim_; ++d) next[d] = rng.normal(p.mean_next_state[d], std::sqrt(p.var_next_state[d]));
  const double r = rng.normal(p.mean_reward, std::sqrt(p.var_reward));
  if (projector_) projector_(next);
  return {std::move(next), r};
}

double EnsembleModel::evaluate_nll(std::size_t member, const causal::TrajectoryDataset& data) const {
  require(trained_, ErrorCode::kUntrainedModel, "model has not been fitted");
  data.require_nonempty();
  std::vector<double> raw_x, y;
  build_rows(data, raw_x, y);
  const std::size_t n = data.size(), in = input_dim();
  std::vector<double> x(raw_x.size());
  for (std::size_t r = 0; r < n; ++r) normalize(raw_x.data() + r * in, x.data() + r * in);
  Mlp::Workspace ws;
  return rows_nll(members_.at(member), config_, x.data(), y.data(), n, target_dim(), ws);
}

std::string EnsembleModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = {{"ensemble_size", config_.ensemble_size},
                 {"hidden_layers", config_.hidden_layers},
                 {"learning_rate", config_.learning_rate},
                 {"epochs", config_.epochs},
                 {"batch_size", config_.batch_size},
                 {"weight_init_scale", config_.weight_init_scale},
                 {"min_logvar", config_.min_logvar},
                 {"max_logvar", config_.max_logvar},
                 {"optimizer", config_.optimizer == Optimizer::kAdam ? "adam" : "sgd"},
                 {"bootstrap", config_.bootstrap}};
  j["layout"] = {{"state_dim", state_dim_}, {"action_dim", action_dim_}, {"input_dim", input_dim()},
                 {"output_dim", 2 * target_dim()}};
  j["trained"] = trained_;
  j["normalization"] = {{"mean", mean_}, {"std", std_}};
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& m : members_) {
    members.push_back(std::vector<double>(m.params().begin(), m.params().end()));
  }
  j["members"] = std::move(members);
  return j.dump();
}

void EnsembleModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << to_json();
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

EnsembleModel EnsembleModel::from_json(const std::string& text, std::size_t state_dim, std::size_t action_dim) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("checkpoint: ") + e.what());
  }
  require(j.value("format", "") == kFormat && j.value("version", 0) == kVersion, ErrorCode::kInvalidArgument,
          "not a supported checkpoint");
  const auto& layout = j.at("layout");
  require(layout.at("state_dim").get<std::size_t>() == state_dim &&
              layout.at("action_dim").get<std::size_t>() == action_dim,
          ErrorCode::kLayoutMismatch, "checkpoint input layout does not match the environment");
  const auto& c = j.at("config");
  EnsembleConfig cfg;
  cfg.ensemble_size = c.at("ensemble_size").get<std::size_t>();
  cfg.hidden_layers = c.at("hidden_layers").get<std::vector<std::size_t>>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.epochs = c.at("epochs").get<std::size_t>();
  cfg.batch_size = c.at("batch_size").get<std::size_t>();
  cfg.weight_init_scale = c.at("weight_init_scale").get<double>();
  cfg.min_logvar = c.at("min_logvar").get<double>();
  cfg.max_logvar = c.at("max_logvar").get<double>();
  cfg.optimizer = c.at("optimizer").get<std::string>() == "adam" ? Optimizer::kAdam : Optimizer::kSgd;
  cfg.bootstrap = c.at("bootstrap").get<bool>();

  EnsembleModel m(state_dim, action_dim, cfg);
  require(layout.at("input_dim").get<std::size_t>() == m.input_dim() &&
              layout.at("output_dim").get<std::size_t>() == 2 * m.target_dim(),
          ErrorCode::kLayoutMismatch, "checkpoint network layout does not match");
  m.mean_ = j.at("normalization").at("mean").get<std::vector<double>>();
  m.std_ = j.at("normalization").at("std").get<std::vector<double>>();
  require(m.mean_.size() == m.input_dim() && m.std_.size() == m.input_dim(), ErrorCode::kLayoutMismatch,
          "normalization size does not match");
  const auto& members = j.at("members");
  require(members.size() == cfg.ensemble_size, ErrorCode::kLayoutMismatch, "member count does not match");
  for (std::size_t b = 0; b < cfg.ensemble_size; ++b) {
    const auto params = members[b].get<std::vector<double>>();
    require(params.size() == m.members_[b].num_params(), ErrorCode::kLayoutMismatch, "member parameter count");
    std::copy(params.begin(), params.end(), m.members_[b].params().begin());
  }
  m.trained_ = j.value("trained", true);
  return m;
}

EnsembleModel EnsembleModel::load(const std::filesystem::path& path, std::size_t state_dim, std::size_t action_dim) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), state_dim, action_dim);
}

double grad_check(const EnsembleConfig& config, std::uint64_t seed, const GradCheckOptions& options) {
  Rng rng(seed);
  const std::size_t out_dim = options.squared_loss ? options.target_dim : 2 * options.target_dim;
  Mlp net(layer_sizes(options.input_dim, config.hidden_layers, out_dim));
  net.init(rng, config.weight_init_scale);
  // Nonzero biases so every path is exercised.
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    double* b = net.params().data() + net.bias_offset(l);
    for (std::size_t o = 0; o < net.sizes()[l + 1]; ++o) b[o] = rng.normal(0.0, 0.3);
  }
  std::vector<double> x(options.rows * options.input_dim), y(options.rows * options.target_dim);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();

  Mlp::Workspace ws;
  auto loss = [&](double* gout) {
    const double* out = net.forward(x.data(), options.rows, ws);
    return options.squared_loss
               ? squared_loss(out, y.data(), options.rows, options.target_dim, gout)
               : gaussian_nll(out, y.data(), options.rows, options.target_dim, config.min_logvar, config.max_logvar,
                              gout);
  };
  std::vector<double> gout(options.rows * out_dim), grad(net.num_params(), 0.0);
  loss(gout.data());
  net.backward(ws, gout.data(), options.rows, grad);

  constexpr double h = 1e-5;
  double worst = 0.0;
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss(nullptr);
    params[i] = keep - h;
    const double down = loss(nullptr);
    params[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::fabs(grad[i]), std::fabs(fd), 1e-5});
    worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
  }
  return worst;
}

}  // namespace fairdyn::model
