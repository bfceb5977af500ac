#include "lstma/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lstma/parallel.hpp"
#include "lstma/random.hpp"

namespace lstma {

namespace {

void add_into(CaptionerParams& acc, const CaptionerParams& g) {
  auto dst = acc.blocks();
  const auto src = g.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) axpy(1.0, src[b].values, dst[b].values);
}

void scale(CaptionerParams& p, double factor) {
  for (auto& block : p.blocks()) {
    for (double& v : block.values) v *= factor;
  }
}

struct ExampleGrad {
  CaptionerParams grad;
  double loss = 0.0;
};

ExampleGrad example_gradient(Variant variant, const CaptionerParams& params,
                             const CaptionRecord& rec, const TrainingExample& ex) {
  ForwardCache cache = forward(variant, params, rec.features, rec.attributes, ex.words);
  return {backward(params, cache), cache.loss};
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
  if (embed_dim < 1 || hidden_dim < 1) throw std::invalid_argument("model sizes must be >= 1");
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
}

std::vector<TrainingExample> make_examples(const std::vector<CaptionRecord>& records,
                                           const Vocabulary& vocab) {
  std::vector<TrainingExample> out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& caption : records[r].captions) out.push_back({r, encode(caption, vocab)});
  }
  return out;
}

ModelDims model_dims(const TrainConfig& config, const std::vector<CaptionRecord>& records,
                     const Vocabulary& vocab) {
  if (records.empty()) throw std::invalid_argument("dataset is empty");
  ModelDims d;
  d.image_dim = records.front().features.values.dim();
  d.attr_dim = records.front().attributes.probs.dim();
  d.vocab_size = vocab.size();
  d.embed_dim = config.embed_dim;
  d.hidden_dim = config.hidden_dim;
  d.validate();
  return d;
}

TrainResult sgd_train(const TrainConfig& config, const std::vector<CaptionRecord>& records,
                      const Vocabulary& vocab, const ProgressFn& progress) {
  config.validate();
  const ModelDims dims = model_dims(config, records, vocab);
  const std::vector<TrainingExample> examples = make_examples(records, vocab);

  TrainResult result;
  result.params = CaptionerParams::random(dims, config.seed, config.init_scale);
  result.loss_history.reserve(config.max_iters);
  result.initial_dataset_loss = dataset_loss(config.variant, result.params, records, examples);

  Rng rng(config.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::vector<std::size_t> batch;
  std::vector<ExampleGrad> grads;
  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    batch.clear();
    while (batch.size() < config.batch_size) {
      if (cursor == order.size()) {
        // A new epoch starts only once the previous one is fully consumed.
        if (!batch.empty()) break;
        rng.shuffle(std::span(order));
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    // Canonical reduction order: the same example set always sums identically.
    std::sort(batch.begin(), batch.end());

    grads.assign(batch.size(), {});
    try {
      parallel_for(batch.size(), config.threads, [&](std::size_t i) {
        const TrainingExample& ex = examples[batch[i]];
        grads[i] = example_gradient(config.variant, result.params, records[ex.record], ex);
      });
    } catch (const std::domain_error&) {
      throw TrainingError("non-finite activations at iteration " + std::to_string(iter + 1));
    }

    CaptionerParams total(dims);
    double loss_sum = 0.0;
    for (const auto& g : grads) {
      add_into(total, g.grad);
      loss_sum += g.loss;
    }
    const double mean_loss = loss_sum / static_cast<double>(batch.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("non-finite loss at iteration " + std::to_string(iter + 1));
    }
    scale(total, 1.0 / static_cast<double>(batch.size()));
    if (config.clip_norm) clip_global_norm(total, *config.clip_norm);

    double lr = config.lr;
    if (config.lr_decay_every > 0) {
      lr *= std::pow(config.lr_decay_factor, static_cast<double>(iter / config.lr_decay_every));
    }
    if (lr != 0.0) {
      auto dst = result.params.blocks();
      const auto src = std::as_const(total).blocks();
      for (std::size_t b = 0; b < dst.size(); ++b) axpy(-lr, src[b].values, dst[b].values);
    }

    result.loss_history.push_back(mean_loss);
    if (progress) progress(iter + 1, mean_loss);
    if (config.eval_every > 0 && (iter + 1) % config.eval_every == 0) {
      result.eval_history.push_back(
          {iter + 1, dataset_loss(config.variant, result.params, records, examples)});
    }
  }
  result.final_dataset_loss = dataset_loss(config.variant, result.params, records, examples);
  return result;
}

std::vector<TrainResult> train_ensemble(const TrainConfig& config,
                                        const std::vector<CaptionRecord>& records,
                                        const Vocabulary& vocab, std::size_t members) {
  if (members < 1) throw std::invalid_argument("ensemble needs at least one member");
  std::vector<TrainResult> out;
  for (std::size_t m = 0; m < members; ++m) {
    TrainConfig member = config;
    member.seed = config.seed + m;
    out.push_back(sgd_train(member, records, vocab));
  }
  return out;
}

double dataset_loss(Variant variant, const CaptionerParams& params,
                    const std::vector<CaptionRecord>& records,
                    const std::vector<TrainingExample>& examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto& rec = records.at(ex.record);
    total += forward_loss(variant, params, rec.features, rec.attributes, ex.words);
  }
  return total / static_cast<double>(examples.size());
}

double global_norm(const CaptionerParams& grad) {
  double sq = 0.0;
  for (const auto& block : grad.blocks()) sq += dot(block.values, block.values);
  return std::sqrt(sq);
}

double clip_global_norm(CaptionerParams& grad, double max_norm) {
  const double norm = global_norm(grad);
  if (norm > max_norm) scale(grad, max_norm / norm);
  return norm;
}

std::string loss_history_csv(const std::vector<double>& history) {
  std::string out = "iteration,mean_loss\n";
  char line[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i + 1, history[i]);
    out += line;
  }
  return out;
}

}  // namespace lstma
