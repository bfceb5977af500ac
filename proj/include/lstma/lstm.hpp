#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lstma/math.hpp"

namespace lstma {

/// Weights of one gate: pre-activation = input * x + recurrent * h_prev + bias.
struct GateWeights {
  Mat input;      // H x D_e
  Mat recurrent;  // H x H
  Vec bias;       // H

  GateWeights() = default;
  GateWeights(std::size_t input_dim, std::size_t hidden_dim)
      : input(hidden_dim, input_dim), recurrent(hidden_dim, hidden_dim), bias(hidden_dim) {}

  bool operator==(const GateWeights&) const = default;
};

/// Single-layer LSTM without peepholes. Gate order (cell input, input,
/// forget, output) is also the serialization order.
struct LSTMParams {
  GateWeights cell;
  GateWeights input_gate;
  GateWeights forget_gate;
  GateWeights output_gate;

  LSTMParams() = default;
  LSTMParams(std::size_t input_dim, std::size_t hidden_dim)
      : cell(input_dim, hidden_dim),
        input_gate(input_dim, hidden_dim),
        forget_gate(input_dim, hidden_dim),
        output_gate(input_dim, hidden_dim) {}

  std::size_t input_dim() const { return cell.input.cols(); }
  std::size_t hidden_dim() const { return cell.input.rows(); }

  /// Throws std::invalid_argument if the blocks disagree on dimensions.
  void validate() const;

  bool operator==(const LSTMParams&) const = default;
};

struct LSTMState {
  Vec h;
  Vec c;

  static LSTMState zeros(std::size_t hidden_dim) { return {Vec(hidden_dim), Vec(hidden_dim)}; }

  bool operator==(const LSTMState&) const = default;
};

/// Everything the backward pass needs from one forward step.
struct StepCache {
  Vec x;
  Vec h_prev;
  Vec c_prev;
  Vec g;  // cell input, tanh
  Vec i;
  Vec f;
  Vec c;
  Vec o;
  Vec h;
};

std::pair<LSTMState, StepCache> lstm_step(const LSTMParams& params, const Vec& x,
                                          const LSTMState& prev);

struct LSTMTrace {
  std::vector<LSTMState> states;  // states[t] is the state after step t
  std::vector<StepCache> caches;
};

LSTMTrace lstm_forward(const LSTMParams& params, const std::vector<Vec>& inputs,
                       const LSTMState& init);

struct LSTMGradients {
  LSTMParams params;
  std::vector<Vec> inputs;
  LSTMState init;
};

/// Backpropagation through time for L = sum_t <dh[t], h^t>. dh[t] is the
/// gradient arriving at h^t from outside the recurrence (e.g. a loss head).
LSTMGradients lstm_backward(const LSTMParams& params, const std::vector<StepCache>& caches,
                            const std::vector<Vec>& dh);

}  // namespace lstma
