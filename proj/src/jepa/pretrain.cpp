#include "privi/jepa/pretrain.hpp"

#include <cmath>

#include "privi/classifier/checkpoint.hpp"
#include "privi/common/error.hpp"
#include "privi/common/numfmt.hpp"
#include "privi/common/rng.hpp"
#include "privi/numerics/ops.hpp"
#include "privi/numerics/optim.hpp"

namespace privi::jepa {

void JepaConfig::validate() const {
  require(grid.size() >= 2, "jepa grid needs at least two tokens");
  require(mask_ratio > 0.0 && mask_ratio < 1.0, "mask_ratio must be in (0, 1)");
  require(block.t <= grid.t && block.h <= grid.h && block.w <= grid.w && block.size() > 0,
          "mask block does not fit the grid");
  require(ema_start >= 0.0 && ema_start <= 1.0 && ema_end >= 0.0 && ema_end <= 1.0, "momentum must be in [0, 1]");
  require(heads >= 1 && dim % heads == 0, "dim must be divisible by heads");
  require(input_dim >= 1 && encoder_depth >= 1 && predictor_depth >= 1, "jepa depths and dims must be positive");
  require(steps >= 1 && batch >= 1 && lr > 0.0, "steps, batch and lr must be positive");
}

double JepaConfig::momentum_at(std::size_t step) const {
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(steps));
  return ema_start + (ema_end - ema_start) * frac;
}

nlohmann::json JepaConfig::to_json() const {
  return {{"grid", {grid.t, grid.h, grid.w}},
          {"input_dim", input_dim},
          {"dim", dim},
          {"heads", heads},
          {"encoder_depth", encoder_depth},
          {"predictor_depth", predictor_depth},
          {"mask_ratio", mask_ratio},
          {"block", {block.t, block.h, block.w}},
          {"ema_start", ema_start},
          {"ema_end", ema_end},
          {"steps", steps},
          {"batch", batch},
          {"warmup_steps", warmup_steps},
          {"lr", lr},
          {"ema_target", ema_target},
          {"seed", seed}};
}

JepaConfig JepaConfig::from_json(const nlohmann::json& j) {
  JepaConfig c;
  const auto triple = [](const nlohmann::json& v) {
    const auto a = v.get<std::vector<std::size_t>>();
    require(a.size() == 3, "grid and block take three extents");
    return a;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "grid") {
      const auto a = triple(value);
      c.grid = {a[0], a[1], a[2]};
    } else if (key == "block") {
      const auto a = triple(value);
      c.block = {a[0], a[1], a[2]};
    } else if (key == "input_dim") c.input_dim = value.get<std::size_t>();
    else if (key == "dim") c.dim = value.get<std::size_t>();
    else if (key == "heads") c.heads = value.get<std::size_t>();
    else if (key == "encoder_depth") c.encoder_depth = value.get<std::size_t>();
    else if (key == "predictor_depth") c.predictor_depth = value.get<std::size_t>();
    else if (key == "mask_ratio") c.mask_ratio = value.get<double>();
    else if (key == "ema_start") c.ema_start = value.get<double>();
    else if (key == "ema_end") c.ema_end = value.get<double>();
    else if (key == "steps") c.steps = value.get<std::size_t>();
    else if (key == "batch") c.batch = value.get<std::size_t>();
    else if (key == "warmup_steps") c.warmup_steps = value.get<std::size_t>();
    else if (key == "lr") c.lr = value.get<double>();
    else if (key == "ema_target") c.ema_target = value.get<bool>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ContractError("unknown jepa config key '" + key + "'");
  }
  c.validate();
  return c;
}

JepaConfig JepaConfig::full_scale_preset() {
  JepaConfig c;
  c.grid = {8, 14, 14};
  c.input_dim = 1536;  // 2 x 16 x 16 RGB patch
  c.dim = 1024;
  c.heads = 16;
  c.encoder_depth = 24;
  c.predictor_depth = 12;
  c.mask_ratio = 0.9;
  c.block = {8, 4, 4};
  c.steps = 75000;
  c.batch = 80;
  c.warmup_steps = 1000;
  c.lr = 1.5e-5;
  return c;
}

ClipStream moving_pattern_stream(const JepaConfig& config, std::uint64_t seed, std::size_t objects) {
  const JepaConfig c = config;
  return [c, seed, objects](std::size_t step, std::size_t item) {
    Rng rng(seed, splitmix64(step) ^ (item + 1));
    const std::size_t n = c.grid.size(), d = c.input_dim;
    std::vector<double> v(n * d);
    for (auto& x : v) x = rng.normal(0.0, 0.1);
    for (std::size_t k = 0; k < objects; ++k) {
      std::vector<double> feature(d);
      for (auto& f : feature) f = rng.normal();
      const double y0 = rng.uniform(0.0, static_cast<double>(c.grid.h));
      const double x0 = rng.uniform(0.0, static_cast<double>(c.grid.w));
      const double vy = static_cast<double>(rng.index(3)) - 1.0;
      const double vx = static_cast<double>(rng.index(3)) - 1.0;
      for (std::size_t t = 0; t < c.grid.t; ++t) {
        const double cy = y0 + vy * static_cast<double>(t), cx = x0 + vx * static_cast<double>(t);
        for (std::size_t h = 0; h < c.grid.h; ++h)
          for (std::size_t w = 0; w < c.grid.w; ++w) {
            const auto wrap = [](double a, double extent) {
              const double m = std::fmod(std::fabs(a), extent);
              return std::min(m, extent - m);
            };
            const double dy = wrap(static_cast<double>(h) - cy, static_cast<double>(c.grid.h));
            const double dx = wrap(static_cast<double>(w) - cx, static_cast<double>(c.grid.w));
            const double weight = std::exp(-(dy * dy + dx * dx) / 2.0);
            const std::size_t row = c.grid.index(t, h, w);
            for (std::size_t j = 0; j < d; ++j) v[row * d + j] += weight * feature[j];
          }
      }
    }
    return nn::Tensor::from({n, d}, std::move(v));
  };
}

namespace {

std::vector<std::vector<double>> snapshot(const std::vector<nn::Tensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore(std::vector<nn::Tensor>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i)
    std::copy(values[i].begin(), values[i].end(), params[i].mutable_data().begin());
}

}  // namespace

PretrainResult run_pretrain(const JepaConfig& config, const ClipStream& stream, const StepObserver& observer) {
  config.validate();
  require(static_cast<bool>(stream), "run_pretrain: empty clip stream");
  Rng init(config.seed, 0x7e9a);
  PretrainResult r;
  r.context_encoder = Encoder::create(config.input_dim, config.dim, config.encoder_depth, config.heads, init);
  r.predictor = Predictor::create(config.dim, config.predictor_depth, config.heads, init);
  r.target_encoder = config.ema_target ? r.context_encoder.clone() : r.context_encoder;

  const nn::Tensor positions = sincos_positions(config.grid.size(), config.dim);
  const std::vector<std::size_t> all = [&] {
    std::vector<std::size_t> v(config.grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
  }();

  std::vector<nn::Tensor> trainable = r.context_encoder.parameters();
  for (auto& p : r.predictor.parameters()) trainable.push_back(p);
  nn::Adam adam(trainable, nn::LrSchedule::constant(config.lr, config.warmup_steps, config.steps));
  auto context_params = r.context_encoder.parameters();
  auto target_params = r.target_encoder.parameters();

  for (std::size_t step = 1; step <= config.steps; ++step) {
    adam.zero_grad();
    nn::Tensor total;
    std::vector<nn::Tensor> target_rows;
    for (std::size_t b = 0; b < config.batch; ++b) {
      const nn::Tensor tokens = stream(step, b);
      require(tokens.rows() == config.grid.size() && tokens.cols() == config.input_dim,
              "clip stream returned tokens of the wrong shape");
      const MaskSpec mask = sample_mask(config.grid, config.mask_ratio, config.block, config.seed,
                                        step * config.batch + b);
      nn::Tensor loss =
          jepa_loss(r.context_encoder, r.predictor, r.target_encoder, tokens, mask, positions, config.ema_target);
      total = total.defined() ? nn::add(total, loss) : loss;
      target_rows.push_back(r.target_encoder.forward(tokens, all, positions).detach());
    }
    nn::Tensor loss = nn::scale(total, 1.0 / static_cast<double>(config.batch));
    const double value = loss.item();
    if (!std::isfinite(value)) {
      r.aborted = true;
      r.abort_reason = "non-finite loss at step " + std::to_string(step);
      break;
    }
    const auto before = snapshot(trainable);
    loss.backward();
    double lr = 0.0;
    try {
      lr = adam.step();
    } catch (const FaultError& e) {
      restore(trainable, before);
      r.aborted = true;
      r.abort_reason = e.what();
      break;
    }
    if (config.ema_target) ema_update(target_params, context_params, config.momentum_at(step));
    r.diagnostics.push_back({step, value, mean_dimension_variance(nn::concat_rows(target_rows)), lr});
    r.completed_steps = step;
    if (observer) observer(step, r);
  }
  for (auto& p : trainable) p.zero_grad();
  return r;
}

std::string diagnostics_to_jsonl(const std::vector<JepaDiagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics)
    out += "{\"step\":" + std::to_string(d.step) + ",\"loss\":" + format_decimal(d.loss) +
           ",\"target_variance\":" + format_decimal(d.target_variance) + ",\"lr\":" + format_decimal(d.lr, 9) + "}\n";
  return out;
}

void save_jepa_checkpoint(const std::filesystem::path& path, const JepaConfig& config, const PretrainResult& result) {
  std::vector<nn::Tensor> params = result.context_encoder.parameters();
  for (auto& p : result.predictor.parameters()) params.push_back(p);
  for (auto& p : result.target_encoder.parameters()) params.push_back(p);
  write_param_file(path, "PVJP", config.to_json(), params);
}

}  // namespace privi::jepa
