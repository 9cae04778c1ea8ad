// SPDX-License-Identifier: Apache-2.0
#include "treeseek/trainer.hpp"

#include "parallel.hpp"
#include "treeseek/log.hpp"
#include "treeseek/loss.hpp"
#include "treeseek/optim.hpp"
#include "treeseek/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace treeseek {

void TrainConfig::validate() const {
  const auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  need(batch_size >= 2, "batch_size must be >= 2");
  need(steps >= 1, "steps must be >= 1");
  need(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  need(warmup_fraction >= 0.0 && warmup_fraction < 1.0, "warmup_fraction must be in [0, 1)");
  need(weight_decay >= 0.0, "weight_decay must be >= 0");
  need(pooling_ratio > 0.0 && pooling_ratio <= 1.0, "pooling_ratio must be in (0, 1]");
  need(depth >= 1, "depth must be >= 1");
  need(eps >= 0.0 && eps <= 1.0, "eps must be in [0, 1]");
  need(hidden >= 0, "hidden must be >= 0");
  need(jobs >= 1, "jobs must be >= 1");
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["steps"] = steps;
  j["lr"] = lr;
  j["warmup_fraction"] = warmup_fraction;
  j["weight_decay"] = weight_decay;
  j["seed"] = seed;
  j["pooling"] = std::string(to_string(pooling));
  j["pooling_ratio"] = pooling_ratio;
  j["no_node_type"] = no_node_type;
  j["undirected"] = undirected;
  j["mlp_adapter"] = mlp_adapter;
  j["depth"] = depth;
  j["eps"] = eps;
  j["hidden"] = hidden;
  j["pool_last"] = pool_last;
  j["jobs"] = jobs;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(std::string_view text, const TrainConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  TrainConfig c = base;
  static const char* const known[] = {
      "batch_size", "steps", "lr", "warmup_fraction", "weight_decay", "seed",
      "pooling", "pooling_ratio", "no_node_type", "undirected", "mlp_adapter",
      "depth", "eps", "hidden", "pool_last", "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw UsageError("config: unknown key '" + key + "'");
    }
  }
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    if (j.contains("pooling")) c.pooling = parse_pooling_method(j.at("pooling").get<std::string>());
    c.pooling_ratio = j.value("pooling_ratio", c.pooling_ratio);
    c.no_node_type = j.value("no_node_type", c.no_node_type);
    c.undirected = j.value("undirected", c.undirected);
    c.mlp_adapter = j.value("mlp_adapter", c.mlp_adapter);
    c.depth = j.value("depth", c.depth);
    c.eps = j.value("eps", c.eps);
    c.hidden = j.value("hidden", c.hidden);
    c.pool_last = j.value("pool_last", c.pool_last);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  return from_json(text, TrainConfig{});
}

double lr_at(int step, const TrainConfig& config) {
  const int warm = static_cast<int>(std::floor(config.warmup_fraction * config.steps));
  if (step < warm) return config.lr * static_cast<double>(step) / static_cast<double>(warm);
  const int span = config.steps - 1 - warm;
  if (span <= 0) return config.lr;
  const double progress = static_cast<double>(step - warm) / static_cast<double>(span);
  return config.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

ModelConfig model_config_for(const TrainConfig& config, const Pipeline& pipeline) {
  ModelConfig m;
  m.content_dim = pipeline.provider().dim();
  m.type_width = pipeline.feature_width() - m.content_dim;
  m.hidden = config.hidden;
  m.depth = config.depth;
  m.eps = config.eps;
  m.pooling = config.pooling;
  m.ratio = config.pooling_ratio;
  m.pool_last = config.pool_last;
  m.mlp_adapter = config.mlp_adapter;
  return m;
}

namespace {

// Yields batches from successive seeded shuffles of [0, n).
class BatchSampler {
public:
  BatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed)
      : order_(n), batch_(std::min(batch, n)), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > order_.size()) reshuffle();
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return out;
  }

private:
  void reshuffle() {
    rng_.shuffle(order_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  SplitMix64 rng_;
};

EmbeddingVector forward_sample(const GnnModel& model, const EncodedSample& s,
                               ForwardTrace* trace) {
  return model_forward(model, s.graph, s.root_embedding, trace);
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<EncodedSample>& samples,
                  GnnModel model, const std::function<void(const StepLog&)>& on_step) {
  config.validate();
  if (samples.size() < static_cast<std::size_t>(config.batch_size)) {
    throw UsageError("training needs at least batch_size (" + std::to_string(config.batch_size) +
                     ") samples, got " + std::to_string(samples.size()));
  }

  AdamW opt({0.9, 0.999, 1e-8, config.weight_decay});
  BatchSampler sampler(samples.size(), static_cast<std::size_t>(config.batch_size), config.seed);
  const int out_dim = model.config.output_size();
  const std::size_t group = static_cast<std::size_t>(config.jobs);

  TrainResult result;
  GnnModel grads = GnnModel::zeros_like(model);
  std::vector<GnnModel> partial(group, grads);

  for (int step = 0; step < config.steps; ++step) {
    const auto batch = sampler.next();
    const std::size_t b = batch.size();
    std::vector<ForwardTrace> traces(b);
    Eigen::MatrixXd codes(b, out_dim);
    Eigen::MatrixXd texts(b, out_dim);
    detail::parallel_for(b, config.jobs, [&](std::size_t i) {
      codes.row(static_cast<Eigen::Index>(i)) =
          forward_sample(model, samples[batch[i]], &traces[i]).transpose();
    });
    for (std::size_t i = 0; i < b; ++i) {
      texts.row(static_cast<Eigen::Index>(i)) = samples[batch[i]].text_embedding.transpose();
    }

    const double tau = model.tau();
    const LossResult loss = contrastive_loss(codes, texts, tau);
    if (!std::isfinite(loss.loss)) {
      std::ostringstream msg;
      msg << "loss became non-finite at step " << step << " (lr " << lr_at(step, config)
          << ", tau " << tau << ", sigma(lambda) " << model.sigma_lambda() << ")";
      throw TrainingDiverged(msg.str());
    }

    // Per-sample gradients are computed `group` at a time and summed in batch
    // order, so the floating-point result is independent of the thread count.
    grads.set_zero();
    for (std::size_t start = 0; start < b; start += group) {
      const std::size_t count = std::min(group, b - start);
      detail::parallel_for(count, config.jobs, [&](std::size_t k) {
        partial[k].set_zero();
        const std::size_t i = start + k;
        model_backward(model, traces[i],
                       loss.d_code.row(static_cast<Eigen::Index>(i)).transpose(), partial[k]);
      });
      for (std::size_t k = 0; k < count; ++k) grads += partial[k];
    }
    // tau = exp(-log_inv_tau) unless clamped.
    if (std::exp(-model.log_inv_tau) >= GnnModel::kMinTau) {
      grads.log_inv_tau += loss.d_tau * -tau;
    }

    const double lr = lr_at(step, config);
    StepLog row{step, loss.loss, lr, model.sigma_lambda(), tau};
    opt.step(model, grads, lr);
    result.log.push_back(row);
    log::debug("step " + std::to_string(step) + " loss " + std::to_string(loss.loss));
    if (on_step) on_step(row);
  }
  result.model = std::move(model);
  return result;
}

Eigen::MatrixXd embed_codes(const GnnModel& model, const std::vector<EncodedSample>& samples,
                            int jobs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), model.config.output_size());
  detail::parallel_for(samples.size(), jobs, [&](std::size_t i) {
    out.row(static_cast<Eigen::Index>(i)) = forward_sample(model, samples[i], nullptr).transpose();
  });
  return out;
}

Eigen::MatrixXd text_matrix(const std::vector<EncodedSample>& samples) {
  if (samples.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()),
                      samples.front().text_embedding.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = samples[i].text_embedding.transpose();
  }
  return out;
}

std::string metrics_csv(const std::vector<StepLog>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,lr,sigma_lambda,tau\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.loss << ',' << r.lr << ',' << r.sigma_lambda << ',' << r.tau << '\n';
  }
  return os.str();
}

}  // namespace treeseek
