#include "lstma/lstm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lstma {

namespace {

void check_gate(const GateWeights& gate, std::size_t in, std::size_t hidden, const char* name) {
  const bool ok = gate.input.rows() == hidden && gate.input.cols() == in &&
                  gate.recurrent.rows() == hidden && gate.recurrent.cols() == hidden &&
                  gate.bias.dim() == hidden;
  if (!ok) throw std::invalid_argument(std::string("LSTMParams: inconsistent ") + name + " block");
}

void check_state(const LSTMState& s, std::size_t hidden) {
  if (s.h.dim() != hidden || s.c.dim() != hidden) {
    throw std::invalid_argument("lstm: state dimension " + std::to_string(s.h.dim()) + "/" +
                                std::to_string(s.c.dim()) + ", expected " +
                                std::to_string(hidden));
  }
}

void accumulate_gate(GateWeights& grad, const GateWeights& weights, const Vec& dpre,
                     const StepCache& step, Vec& dx, Vec& dh_prev) {
  outer_acc(grad.input, dpre.values(), step.x.values());
  outer_acc(grad.recurrent, dpre.values(), step.h_prev.values());
  axpy(1.0, dpre.values(), grad.bias.values());
  matvec_transpose_acc(weights.input, dpre.values(), dx.values());
  matvec_transpose_acc(weights.recurrent, dpre.values(), dh_prev.values());
}

}  // namespace

void LSTMParams::validate() const {
  const std::size_t in = input_dim();
  const std::size_t hidden = hidden_dim();
  if (in == 0 || hidden == 0) throw std::invalid_argument("LSTMParams: zero dimension");
  check_gate(cell, in, hidden, "cell");
  check_gate(input_gate, in, hidden, "input gate");
  check_gate(forget_gate, in, hidden, "forget gate");
  check_gate(output_gate, in, hidden, "output gate");
}

std::pair<LSTMState, StepCache> lstm_step(const LSTMParams& params, const Vec& x,
                                          const LSTMState& prev) {
  const std::size_t hidden = params.hidden_dim();
  if (x.dim() != params.input_dim()) {
    throw std::invalid_argument("lstm_step: input dimension " + std::to_string(x.dim()) +
                                ", expected " + std::to_string(params.input_dim()));
  }
  check_state(prev, hidden);

  StepCache step;
  step.x = x;
  step.h_prev = prev.h;
  step.c_prev = prev.c;
  step.g = tanh(affine(params.cell.input, x, params.cell.recurrent, prev.h, params.cell.bias));
  step.i = sigmoid(affine(params.input_gate.input, x, params.input_gate.recurrent, prev.h,
                          params.input_gate.bias));
  step.f = sigmoid(affine(params.forget_gate.input, x, params.forget_gate.recurrent, prev.h,
                          params.forget_gate.bias));
  step.o = sigmoid(affine(params.output_gate.input, x, params.output_gate.recurrent, prev.h,
                          params.output_gate.bias));
  step.c = Vec(hidden);
  step.h = Vec(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    step.c[k] = step.g[k] * step.i[k] + prev.c[k] * step.f[k];
    step.h[k] = std::tanh(step.c[k]) * step.o[k];
  }
  LSTMState next{step.h, step.c};
  return {std::move(next), std::move(step)};
}

LSTMTrace lstm_forward(const LSTMParams& params, const std::vector<Vec>& inputs,
                       const LSTMState& init) {
  LSTMTrace trace;
  trace.states.reserve(inputs.size());
  trace.caches.reserve(inputs.size());
  const LSTMState* prev = &init;
  for (const Vec& x : inputs) {
    auto [state, cache] = lstm_step(params, x, *prev);
    trace.states.push_back(std::move(state));
    trace.caches.push_back(std::move(cache));
    prev = &trace.states.back();
  }
  return trace;
}

LSTMGradients lstm_backward(const LSTMParams& params, const std::vector<StepCache>& caches,
                            const std::vector<Vec>& dh) {
  if (caches.size() != dh.size()) {
    throw std::invalid_argument("lstm_backward: " + std::to_string(caches.size()) +
                                " caches but " + std::to_string(dh.size()) + " gradients");
  }
  const std::size_t hidden = params.hidden_dim();
  const std::size_t in = params.input_dim();

  LSTMGradients grads;
  grads.params = LSTMParams(in, hidden);
  grads.inputs.assign(caches.size(), Vec(in));

  Vec dh_next(hidden);
  Vec dc_next(hidden);
  Vec dpre_g(hidden), dpre_i(hidden), dpre_f(hidden), dpre_o(hidden);

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& s = caches[t];
    if (dh[t].dim() != hidden) {
      throw std::invalid_argument("lstm_backward: gradient at step " + std::to_string(t) +
                                  " has dimension " + std::to_string(dh[t].dim()));
    }
    Vec dc_prev(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      const double dh_total = dh[t][k] + dh_next[k];
      const double tc = std::tanh(s.c[k]);
      const double d_o = dh_total * tc;
      const double dc = dh_total * s.o[k] * (1.0 - tc * tc) + dc_next[k];
      dpre_g[k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
      dpre_i[k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
      dpre_f[k] = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      dpre_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
      dc_prev[k] = dc * s.f[k];
    }
    Vec dh_prev(hidden);
    Vec& dx = grads.inputs[t];
    accumulate_gate(grads.params.cell, params.cell, dpre_g, s, dx, dh_prev);
    accumulate_gate(grads.params.input_gate, params.input_gate, dpre_i, s, dx, dh_prev);
    accumulate_gate(grads.params.forget_gate, params.forget_gate, dpre_f, s, dx, dh_prev);
    accumulate_gate(grads.params.output_gate, params.output_gate, dpre_o, s, dx, dh_prev);
    dh_next = std::move(dh_prev);
    dc_next = std::move(dc_prev);
  }
  grads.init = {std::move(dh_next), std::move(dc_next)};
  return grads;
}

}  // namespace lstma
