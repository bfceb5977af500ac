#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lstma/captioner.hpp"

namespace lstma {

/// How member distributions are combined. Arithmetic is the mean of the
/// probabilities; Geometric is the renormalized mean of log-probabilities.
enum class Fusion { Arithmetic, Geometric };

Fusion parse_fusion(std::string_view name);

struct DecodeConfig {
  std::size_t beam_size = 3;
  std::size_t max_len = 20;  // generated words, end sign included
  bool length_norm = false;
  Fusion fusion = Fusion::Arithmetic;

  void validate() const;
};

struct DecodedSentence {
  std::vector<std::size_t> words;  // generated words; ends with the end sign iff finished
  double logprob = 0.0;
  bool finished = false;

  /// Framed as [start, words..., end]; the end sign is appended when the
  /// sentence hit max_len unfinished.
  TokenSequence sequence() const;
};

/// Live hypothesis during beam search: one recurrent state per member.
struct BeamHypothesis {
  std::vector<std::size_t> words;
  double logprob = 0.0;
  std::vector<LSTMState> states;
  bool finished = false;
};

/// Per-image conditioning of every ensemble member. Throws if `models` is
/// empty or the members disagree on dimensions.
std::vector<Conditioning> condition_ensemble(std::span<const CaptionerParams> models,
                                             Variant variant, const ImageFeatures& image,
                                             const AttributeVector& attrs);

/// Fused next-word distribution and each member's next state.
std::pair<Vec, std::vector<LSTMState>> ensemble_predict(
    std::span<const CaptionerParams> models, std::span<const Conditioning> conditioning,
    std::span<const LSTMState> states, std::size_t last_word, Fusion fusion = Fusion::Arithmetic);

std::pair<Vec, std::vector<LSTMState>> ensemble_predict(
    std::span<const CaptionerParams> models, std::span<const LSTMState> states,
    std::size_t last_word, Variant variant, const ImageFeatures& image,
    const AttributeVector& attrs, Fusion fusion = Fusion::Arithmetic);

/// Feeds the most probable word back until the end sign or max_len. The
/// start sign and the unknown-word token are never emitted.
DecodedSentence greedy_decode(std::span<const CaptionerParams> models, Variant variant,
                              const ImageFeatures& image, const AttributeVector& attrs,
                              const DecodeConfig& config);

/// Keeps the top-k partial sentences per step. Finished sentences leave the
/// beam for a completed pool; the result is completed plus still-live
/// hypotheses, best first.
std::vector<DecodedSentence> beam_search(std::span<const CaptionerParams> models, Variant variant,
                                         const ImageFeatures& image, const AttributeVector& attrs,
                                         const DecodeConfig& config);

/// Log-probability of generating exactly `words` (after the start sign) under
/// the fused distribution.
double score_words(std::span<const CaptionerParams> models, Variant variant,
                   const ImageFeatures& image, const AttributeVector& attrs,
                   std::span<const std::size_t> words, Fusion fusion = Fusion::Arithmetic);

/// "id<TAB>caption<TAB>logprob" line, without trailing newline.
std::string format_caption_line(const std::string& id, const std::string& caption, double logprob);

}  // namespace lstma
