#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lstma/lstm.hpp"
#include "lstma/math.hpp"
#include "lstma/vocab.hpp"

namespace lstma {

/// Where image features and attributes enter the LSTM.
///   A1: attributes once, before the first word.
///   A2: image, then attributes, before the first word.
///   A3: attributes, then image, before the first word.
///   A4: attributes once; image added to every word input.
///   A5: image once; attributes added to every word input.
enum class Variant { A1 = 1, A2 = 2, A3 = 3, A4 = 4, A5 = 5 };

inline constexpr std::array<Variant, 5> kAllVariants{Variant::A1, Variant::A2, Variant::A3,
                                                     Variant::A4, Variant::A5};

/// Accepts "a1".."a5" (any case).
Variant parse_variant(std::string_view name);
std::string to_string(Variant v);

/// Number of conditioning steps fed before the start sign.
std::size_t encode_length(Variant v);

struct ModelDims {
  std::size_t image_dim = 0;   // D_v
  std::size_t attr_dim = 0;    // D_a
  std::size_t vocab_size = 0;  // D_s
  std::size_t embed_dim = 0;   // D_e, LSTM input size
  std::size_t hidden_dim = 0;  // H

  void validate() const;
  std::string describe() const;
  bool operator==(const ModelDims&) const = default;
};

struct ImageFeatures {
  Vec values;
};

/// Per-attribute detection probabilities, each in [0, 1]. Not renormalized.
struct AttributeVector {
  Vec probs;

  /// Throws std::invalid_argument if any entry lies outside [0, 1].
  void validate() const;
};

struct ParamBlock {
  std::string_view name;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string_view name;
  std::span<const double> values;
};

struct CaptionerParams {
  Mat attr_embed;   // D_e x D_a
  Mat image_embed;  // D_e x D_v
  Mat word_embed;   // D_e x D_s, column w is the embedding of word w
  Mat output;       // D_s x H, softmax layer without bias
  LSTMParams lstm;

  CaptionerParams() = default;
  /// All-zero parameters of the given shape.
  explicit CaptionerParams(const ModelDims& dims);

  /// Uniform in [-scale, scale].
  static CaptionerParams random(const ModelDims& dims, std::uint64_t seed, double scale = 0.08);

  ModelDims dims() const;
  void validate() const;

  /// Every learnable block in serialization order.
  std::vector<ParamBlock> blocks();
  std::vector<ConstParamBlock> blocks() const;
  std::size_t num_values() const;

  bool operator==(const CaptionerParams&) const = default;
};

enum class StepSource { Attributes, Image, Word };

struct ScheduleStep {
  Vec input;
  StepSource source = StepSource::Word;
  std::size_t word = 0;     // valid when source == Word
  bool plus_image = false;  // A4 decode steps
  bool plus_attrs = false;  // A5 decode steps
  std::optional<std::size_t> target;
};

struct InputSchedule {
  std::vector<ScheduleStep> steps;
  std::size_t encode_len = 0;

  std::size_t num_targets() const;
  std::vector<Vec> inputs() const;
};

/// Throws std::invalid_argument if `words` is not framed by the start and end
/// signs, contains an out-of-range index, or a feature dimension is wrong.
InputSchedule build_schedule(Variant variant, const CaptionerParams& params,
                             const ImageFeatures& image, const AttributeVector& attrs,
                             const TokenSequence& words);

struct ForwardCache {
  Variant variant = Variant::A1;
  ModelDims dims;
  ImageFeatures image;
  AttributeVector attrs;
  InputSchedule schedule;
  LSTMTrace trace;
  std::vector<Vec> probs;  // one distribution per predicting step
  double loss = 0.0;
};

/// Sentence negative log-likelihood under teacher forcing, with everything
/// needed for `backward`.
ForwardCache forward(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                     const AttributeVector& attrs, const TokenSequence& words);

double forward_loss(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                    const AttributeVector& attrs, const TokenSequence& words);

/// d(loss)/d(params), shaped like params.
CaptionerParams backward(const CaptionerParams& params, const ForwardCache& cache);

/// State after the encode steps and the vector added to every word input
/// (empty for A1-A3).
struct Conditioning {
  LSTMState state;
  Vec step_extra;
};

Conditioning condition(Variant variant, const CaptionerParams& params, const ImageFeatures& image,
                       const AttributeVector& attrs);

/// Word distribution after feeding `last_word` from `state`.
std::pair<Vec, LSTMState> predict_next(const CaptionerParams& params, const Vec& step_extra,
                                       const LSTMState& state, std::size_t last_word);

std::pair<Vec, LSTMState> predict_next(Variant variant, const CaptionerParams& params,
                                       const LSTMState& state, std::size_t last_word,
                                       const ImageFeatures& image, const AttributeVector& attrs);

}  // namespace lstma
