#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lstma/captioner.hpp"
#include "lstma/data.hpp"
#include "lstma/vocab.hpp"

namespace lstma {

struct TrainConfig {
  Variant variant = Variant::A1;
  double lr = 0.01;
  std::size_t batch_size = 32;
  std::size_t max_iters = 2000;
  std::optional<double> clip_norm = 5.0;
  std::uint64_t seed = 1;
  /// Full-dataset loss is recorded every `eval_every` iterations (0: never).
  std::size_t eval_every = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 64;
  /// Half-width of the uniform init; 0.08 stalls 64-unit models on a plateau.
  double init_scale = 0.3;
  /// Step decay, off when zero: lr * factor^(iter / every).
  std::size_t lr_decay_every = 0;
  double lr_decay_factor = 0.5;
  std::size_t threads = 1;

  void validate() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One (image, caption) pair.
struct TrainingExample {
  std::size_t record = 0;
  TokenSequence words;
};

std::vector<TrainingExample> make_examples(const std::vector<CaptionRecord>& records,
                                           const Vocabulary& vocab);

ModelDims model_dims(const TrainConfig& config, const std::vector<CaptionRecord>& records,
                     const Vocabulary& vocab);

struct EvalPoint {
  std::size_t iteration = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  CaptionerParams params;
  std::vector<double> loss_history;  // mean batch loss, one entry per iteration
  std::vector<EvalPoint> eval_history;
  double initial_dataset_loss = 0.0;  // mean over all pairs, before the first update
  double final_dataset_loss = 0.0;    // mean over all pairs, after the last update
};

using ProgressFn = std::function<void(std::size_t iteration, double batch_loss)>;

/// Minibatch SGD on the mean per-caption sentence loss. Batches come from an
/// epoch-wise seeded shuffle of all (image, caption) pairs; the final partial
/// batch of an epoch is kept. Throws TrainingError on a non-finite loss.
TrainResult sgd_train(const TrainConfig& config, const std::vector<CaptionRecord>& records,
                      const Vocabulary& vocab, const ProgressFn& progress = {});

/// `members` independent runs with seeds seed, seed+1, ...
std::vector<TrainResult> train_ensemble(const TrainConfig& config,
                                        const std::vector<CaptionRecord>& records,
                                        const Vocabulary& vocab, std::size_t members = 5);

/// Mean sentence loss over the given examples.
double dataset_loss(Variant variant, const CaptionerParams& params,
                    const std::vector<CaptionRecord>& records,
                    const std::vector<TrainingExample>& examples);

double global_norm(const CaptionerParams& grad);

/// Rescales `grad` so its global norm is at most `max_norm`; returns the norm
/// before clipping.
double clip_global_norm(CaptionerParams& grad, double max_norm);

/// "iteration,mean_loss" rows, iterations counted from 1.
std::string loss_history_csv(const std::vector<double>& history);

}  // namespace lstma
