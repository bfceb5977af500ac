#include "lstma/captioner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "lstma/random.hpp"

namespace lstma {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + " has dimension " + std::to_string(got) +
                                ", expected " + std::to_string(want));
  }
}

void check_inputs(const CaptionerParams& params, const ImageFeatures& image,
                  const AttributeVector& attrs) {
  require_dim(image.values.dim(), params.image_embed.cols(), "image features");
  require_dim(attrs.probs.dim(), params.attr_embed.cols(), "attribute vector");
}

void check_words(const TokenSequence& words, std::size_t vocab_size) {
  if (words.ids.size() < 2 || words.ids.front() != kBos || words.ids.back() != kEos) {
    throw std::invalid_argument("sentence must start with the start sign and end with the end sign");
  }
  for (std::size_t id : words.ids) {
    if (id >= vocab_size) {
      throw std::invalid_argument("word index " + std::to_string(id) +
                                  " outside vocabulary of " + std::to_string(vocab_size));
    }
  }
}

Vec per_step_extra(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                   const AttributeVector& attrs) {
  switch (variant) {
    case Variant::A4:
      return matvec(params.image_embed, image.values);
    case Variant::A5:
      return matvec(params.attr_embed, attrs.probs);
    default:
      return {};
  }
}

// Embedding lookup of `word` plus the optional per-step addend. Shared by the
// training schedule and decoding so both produce bit-identical inputs.
Vec word_input(const CaptionerParams& params, std::size_t word, const Vec& extra) {
  const Mat& emb = params.word_embed;
  if (word >= emb.cols()) {
    throw std::invalid_argument("word index " + std::to_string(word) +
                                " outside vocabulary of " + std::to_string(emb.cols()));
  }
  Vec x(emb.rows());
  for (std::size_t r = 0; r < emb.rows(); ++r) x[r] = emb(r, word);
  if (!extra.empty()) axpy(1.0, extra.values(), x.values());
  return x;
}

Vec output_logits(const CaptionerParams& params, const Vec& h) { return matvec(params.output, h); }

// -log softmax(logits)[target], via log-sum-exp.
double neg_log_prob(const Vec& logits, std::size_t target) {
  const auto v = logits.values();
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double z : v) total += std::exp(z - peak);
  return -(v[target] - peak - std::log(total));
}

}  // namespace

Variant parse_variant(std::string_view name) {
  std::string lower;
  for (char ch : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower.size() == 2 && lower[0] == 'a' && lower[1] >= '1' && lower[1] <= '5') {
    return static_cast<Variant>(lower[1] - '0');
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected a1..a5)");
}

std::string to_string(Variant v) { return "a" + std::to_string(static_cast<int>(v)); }

std::size_t encode_length(Variant v) {
  return (v == Variant::A2 || v == Variant::A3) ? 2 : 1;
}

void ModelDims::validate() const {
  if (image_dim == 0 || attr_dim == 0 || embed_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("model dimensions must be positive: " + describe());
  }
  if (vocab_size <= kNumReserved) {
    throw std::invalid_argument("vocabulary must hold at least one word beyond the reserved tokens");
  }
}

std::string ModelDims::describe() const {
  return "D_v=" + std::to_string(image_dim) + " D_a=" + std::to_string(attr_dim) +
         " D_s=" + std::to_string(vocab_size) + " D_e=" + std::to_string(embed_dim) +
         " H=" + std::to_string(hidden_dim);
}

void AttributeVector::validate() const {
  for (double p : probs.values()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("attribute probability " + std::to_string(p) +
                                  " outside [0, 1]");
    }
  }
}

CaptionerParams::CaptionerParams(const ModelDims& d)
    : attr_embed(d.embed_dim, d.attr_dim),
      image_embed(d.embed_dim, d.image_dim),
      word_embed(d.embed_dim, d.vocab_size),
      output(d.vocab_size, d.hidden_dim),
      lstm(d.embed_dim, d.hidden_dim) {}

CaptionerParams CaptionerParams::random(const ModelDims& dims, std::uint64_t seed, double scale) {
  dims.validate();
  CaptionerParams p(dims);
  Rng rng(seed);
  for (auto& block : p.blocks()) {
    for (double& v : block.values) v = rng.uniform(-scale, scale);
  }
  return p;
}

ModelDims CaptionerParams::dims() const {
  return {image_embed.cols(), attr_embed.cols(), word_embed.cols(), lstm.input_dim(),
          lstm.hidden_dim()};
}

void CaptionerParams::validate() const {
  const ModelDims d = dims();
  d.validate();
  lstm.validate();
  const bool ok = attr_embed.rows() == d.embed_dim && image_embed.rows() == d.embed_dim &&
                  word_embed.rows() == d.embed_dim && output.rows() == d.vocab_size &&
                  output.cols() == d.hidden_dim;
  if (!ok) throw std::invalid_argument("CaptionerParams: inconsistent block shapes");
}

namespace {

template <typename Block, typename Self>
std::vector<Block> collect_blocks(Self& p) {
  std::vector<Block> out;
  out.push_back({"attr_embed", p.attr_embed.values()});
  out.push_back({"image_embed", p.image_embed.values()});
  out.push_back({"word_embed", p.word_embed.values()});
  out.push_back({"output", p.output.values()});
  auto add_gate = [&out](auto& gate, std::string_view input, std::string_view recurrent,
                         std::string_view bias) {
    out.push_back({input, gate.input.values()});
    out.push_back({recurrent, gate.recurrent.values()});
    out.push_back({bias, gate.bias.values()});
  };
  add_gate(p.lstm.cell, "lstm.cell.input", "lstm.cell.recurrent", "lstm.cell.bias");
  add_gate(p.lstm.input_gate, "lstm.input_gate.input", "lstm.input_gate.recurrent",
           "lstm.input_gate.bias");
  add_gate(p.lstm.forget_gate, "lstm.forget_gate.input", "lstm.forget_gate.recurrent",
           "lstm.forget_gate.bias");
  add_gate(p.lstm.output_gate, "lstm.output_gate.input", "lstm.output_gate.recurrent",
           "lstm.output_gate.bias");
  return out;
}

}  // namespace

std::vector<ParamBlock> CaptionerParams::blocks() { return collect_blocks<ParamBlock>(*this); }

std::vector<ConstParamBlock> CaptionerParams::blocks() const {
  return collect_blocks<ConstParamBlock>(*this);
}

std::size_t CaptionerParams::num_values() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.values.size();
  return n;
}

std::size_t InputSchedule::num_targets() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.target.has_value(); }));
}

std::vector<Vec> InputSchedule::inputs() const {
  std::vector<Vec> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.input);
  return out;
}

InputSchedule build_schedule(Variant variant, const CaptionerParams& params,
                             const ImageFeatures& image, const AttributeVector& attrs,
                             const TokenSequence& words) {
  check_inputs(params, image, attrs);
  check_words(words, params.word_embed.cols());

  InputSchedule schedule;
  auto push_attrs = [&] {
    schedule.steps.push_back({matvec(params.attr_embed, attrs.probs), StepSource::Attributes, 0, false, false, std::nullopt});
  };
  auto push_image = [&] {
    schedule.steps.push_back({matvec(params.image_embed, image.values), StepSource::Image, 0, false, false, std::nullopt});
  };
  switch (variant) {
    case Variant::A1:
    case Variant::A4:
      push_attrs();
      break;
    case Variant::A2:
      push_image();
      push_attrs();
      break;
    case Variant::A3:
      push_attrs();
      push_image();
      break;
    case Variant::A5:
      push_image();
      break;
  }
  schedule.encode_len = schedule.steps.size();

  const Vec extra = per_step_extra(variant, params, image, attrs);
  for (std::size_t t = 0; t + 1 < words.ids.size(); ++t) {
    ScheduleStep step;
    step.input = word_input(params, words.ids[t], extra);
    step.source = StepSource::Word;
    step.word = words.ids[t];
    step.plus_image = variant == Variant::A4;
    step.plus_attrs = variant == Variant::A5;
    step.target = words.ids[t + 1];
    schedule.steps.push_back(std::move(step));
  }
  return schedule;
}

ForwardCache forward(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                     const AttributeVector& attrs, const TokenSequence& words) {
  ForwardCache cache;
  cache.variant = variant;
  cache.dims = params.dims();
  cache.image = image;
  cache.attrs = attrs;
  cache.schedule = build_schedule(variant, params, image, attrs, words);
  cache.trace = lstm_forward(params.lstm, cache.schedule.inputs(),
                             LSTMState::zeros(params.lstm.hidden_dim()));
  for (std::size_t t = 0; t < cache.schedule.steps.size(); ++t) {
    const auto& target = cache.schedule.steps[t].target;
    if (!target) continue;
    const Vec logits = output_logits(params, cache.trace.states[t].h);
    cache.loss += neg_log_prob(logits, *target);
    cache.probs.push_back(softmax(logits));
  }
  return cache;
}

double forward_loss(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                    const AttributeVector& attrs, const TokenSequence& words) {
  return forward(variant, params, image, attrs, words).loss;
}

CaptionerParams backward(const CaptionerParams& params, const ForwardCache& cache) {
  if (params.dims() != cache.dims) {
    throw std::invalid_argument("backward: cache built for " + cache.dims.describe() +
                                ", params are " + params.dims().describe());
  }
  const auto& steps = cache.schedule.steps;
  if (cache.trace.caches.size() != steps.size() || cache.probs.size() != cache.schedule.num_targets()) {
    throw std::invalid_argument("backward: cache is inconsistent with its schedule");
  }
  const std::size_t hidden = params.lstm.hidden_dim();

  CaptionerParams grad(cache.dims);
  std::vector<Vec> dh(steps.size(), Vec(hidden));
  std::size_t k = 0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (!steps[t].target) continue;
    Vec dlogits = cache.probs[k++];
    dlogits[*steps[t].target] -= 1.0;
    outer_acc(grad.output, dlogits.values(), cache.trace.states[t].h.values());
    matvec_transpose_acc(params.output, dlogits.values(), dh[t].values());
  }

  LSTMGradients lg = lstm_backward(params.lstm, cache.trace.caches, dh);
  grad.lstm = std::move(lg.params);

  const auto image = cache.image.values.values();
  const auto attrs = cache.attrs.probs.values();
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto dx = lg.inputs[t].values();
    const ScheduleStep& s = steps[t];
    switch (s.source) {
      case StepSource::Attributes:
        outer_acc(grad.attr_embed, dx, attrs);
        break;
      case StepSource::Image:
        outer_acc(grad.image_embed, dx, image);
        break;
      case StepSource::Word:
        for (std::size_t r = 0; r < dx.size(); ++r) grad.word_embed(r, s.word) += dx[r];
        break;
    }
    if (s.plus_image) outer_acc(grad.image_embed, dx, image);
    if (s.plus_attrs) outer_acc(grad.attr_embed, dx, attrs);
  }
  return grad;
}

Conditioning condition(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                       const AttributeVector& attrs) {
  check_inputs(params, image, attrs);
  Conditioning out;
  out.state = LSTMState::zeros(params.lstm.hidden_dim());
  auto feed = [&](const Vec& x) { out.state = lstm_step(params.lstm, x, out.state).first; };
  const Vec attr_in = matvec(params.attr_embed, attrs.probs);
  const Vec image_in = matvec(params.image_embed, image.values);
  switch (variant) {
    case Variant::A1:
    case Variant::A4:
      feed(attr_in);
      break;
    case Variant::A2:
      feed(image_in);
      feed(attr_in);
      break;
    case Variant::A3:
      feed(attr_in);
      feed(image_in);
      break;
    case Variant::A5:
      feed(image_in);
      break;
  }
  out.step_extra = per_step_extra(variant, params, image, attrs);
  return out;
}

std::pair<Vec, LSTMState> predict_next(const CaptionerParams& params, const Vec& step_extra,
                                       const LSTMState& state, std::size_t last_word) {
  LSTMState next = lstm_step(params.lstm, word_input(params, last_word, step_extra), state).first;
  Vec dist = softmax(output_logits(params, next.h));
  return {std::move(dist), std::move(next)};
}

std::pair<Vec, LSTMState> predict_next(Variant variant, const CaptionerParams& params,
                                       const LSTMState& state, std::size_t last_word,
                                       const ImageFeatures& image, const AttributeVector& attrs) {
  check_inputs(params, image, attrs);
  return predict_next(params, per_step_extra(variant, params, image, attrs), state, last_word);
}

}  // namespace lstma
