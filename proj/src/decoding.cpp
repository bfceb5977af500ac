#include "lstma/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace lstma {

namespace {

bool emittable(std::size_t word) { return word != kBos && word != kUnk; }

void check_ensemble(std::span<const CaptionerParams> models) {
  if (models.empty()) throw std::invalid_argument("ensemble has no members");
  const ModelDims d = models.front().dims();
  for (const auto& m : models) {
    if (m.dims() != d) {
      throw std::invalid_argument("ensemble members disagree on dimensions: " + d.describe() +
                                  " vs " + m.dims().describe());
    }
  }
}

Vec fuse(const std::vector<Vec>& dists, Fusion fusion) {
  const std::size_t n = dists.front().dim();
  const double inv = 1.0 / static_cast<double>(dists.size());
  Vec out(n);
  if (dists.size() == 1) return dists.front();
  if (fusion == Fusion::Arithmetic) {
    for (const auto& d : dists) axpy(1.0, d.values(), out.values());
    for (double& v : out.values()) v *= inv;
    return out;
  }
  for (const auto& d : dists) {
    for (std::size_t w = 0; w < n; ++w) out[w] += std::log(d[w]) * inv;
  }
  return softmax(out);
}

std::vector<LSTMState> initial_states(std::span<const Conditioning> conditioning) {
  std::vector<LSTMState> states;
  for (const auto& c : conditioning) states.push_back(c.state);
  return states;
}

struct Candidate {
  double logprob;
  std::size_t parent;
  std::size_t word;
};

}  // namespace

Fusion parse_fusion(std::string_view name) {
  if (name == "arithmetic" || name == "mean") return Fusion::Arithmetic;
  if (name == "geometric") return Fusion::Geometric;
  throw std::invalid_argument("unknown fusion '" + std::string(name) + "'");
}

void DecodeConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
}

TokenSequence DecodedSentence::sequence() const {
  TokenSequence seq;
  seq.ids.push_back(kBos);
  seq.ids.insert(seq.ids.end(), words.begin(), words.end());
  if (!finished) seq.ids.push_back(kEos);
  return seq;
}

std::vector<Conditioning> condition_ensemble(std::span<const CaptionerParams> models,
                                             Variant variant, const ImageFeatures& image,
                                             const AttributeVector& attrs) {
  check_ensemble(models);
  std::vector<Conditioning> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(condition(variant, m, image, attrs));
  return out;
}

std::pair<Vec, std::vector<LSTMState>> ensemble_predict(std::span<const CaptionerParams> models,
                                                        std::span<const Conditioning> conditioning,
                                                        std::span<const LSTMState> states,
                                                        std::size_t last_word, Fusion fusion) {
  if (models.empty()) throw std::invalid_argument("ensemble has no members");
  if (conditioning.size() != models.size() || states.size() != models.size()) {
    throw std::invalid_argument("ensemble_predict: states not aligned with members");
  }
  std::vector<Vec> dists;
  std::vector<LSTMState> next;
  dists.reserve(models.size());
  next.reserve(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    auto [dist, state] = predict_next(models[m], conditioning[m].step_extra, states[m], last_word);
    dists.push_back(std::move(dist));
    next.push_back(std::move(state));
  }
  return {fuse(dists, fusion), std::move(next)};
}

std::pair<Vec, std::vector<LSTMState>> ensemble_predict(std::span<const CaptionerParams> models,
                                                        std::span<const LSTMState> states,
                                                        std::size_t last_word, Variant variant,
                                                        const ImageFeatures& image,
                                                        const AttributeVector& attrs,
                                                        Fusion fusion) {
  const auto cond = condition_ensemble(models, variant, image, attrs);
  return ensemble_predict(models, cond, states, last_word, fusion);
}

DecodedSentence greedy_decode(std::span<const CaptionerParams> models, Variant variant,
                              const ImageFeatures& image, const AttributeVector& attrs,
                              const DecodeConfig& config) {
  config.validate();
  const auto cond = condition_ensemble(models, variant, image, attrs);
  std::vector<LSTMState> states = initial_states(cond);
  DecodedSentence out;
  std::size_t last = kBos;
  while (out.words.size() < config.max_len) {
    auto [dist, next] = ensemble_predict(models, cond, states, last, config.fusion);
    std::size_t best = kEos;
    for (std::size_t w = 0; w < dist.dim(); ++w) {
      if (emittable(w) && dist[w] > dist[best]) best = w;
    }
    out.words.push_back(best);
    out.logprob += std::log(dist[best]);
    states = std::move(next);
    last = best;
    if (best == kEos) {
      out.finished = true;
      break;
    }
  }
  return out;
}

std::vector<DecodedSentence> beam_search(std::span<const CaptionerParams> models, Variant variant,
                                         const ImageFeatures& image, const AttributeVector& attrs,
                                         const DecodeConfig& config) {
  config.validate();
  const auto cond = condition_ensemble(models, variant, image, attrs);

  std::vector<BeamHypothesis> live(1);
  live.front().states = initial_states(cond);
  std::vector<BeamHypothesis> completed;

  std::vector<Candidate> candidates;
  for (std::size_t len = 0; len < config.max_len && !live.empty(); ++len) {
    candidates.clear();
    std::vector<std::vector<LSTMState>> next_states(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const std::size_t last = live[h].words.empty() ? kBos : live[h].words.back();
      auto [dist, next] = ensemble_predict(models, cond, live[h].states, last, config.fusion);
      next_states[h] = std::move(next);
      for (std::size_t w = 0; w < dist.dim(); ++w) {
        if (emittable(w)) candidates.push_back({live[h].logprob + std::log(dist[w]), h, w});
      }
    }
    const std::size_t keep = std::min(config.beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.logprob != b.logprob) return a.logprob > b.logprob;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.word < b.word;
                      });

    std::vector<BeamHypothesis> next_live;
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = candidates[c];
      BeamHypothesis hyp;
      hyp.words = live[cand.parent].words;
      hyp.words.push_back(cand.word);
      hyp.logprob = cand.logprob;
      hyp.states = next_states[cand.parent];
      hyp.finished = cand.word == kEos;
      if (hyp.finished) {
        hyp.states.clear();
        completed.push_back(std::move(hyp));
      } else {
        next_live.push_back(std::move(hyp));
      }
    }
    live = std::move(next_live);
  }

  std::vector<DecodedSentence> out;
  out.reserve(completed.size() + live.size());
  for (auto* pool : {&completed, &live}) {
    for (auto& hyp : *pool) out.push_back({std::move(hyp.words), hyp.logprob, hyp.finished});
  }
  auto rank = [&](const DecodedSentence& s) {
    return config.length_norm ? s.logprob / static_cast<double>(s.words.size()) : s.logprob;
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const auto& a, const auto& b) { return rank(a) > rank(b); });
  return out;
}

double score_words(std::span<const CaptionerParams> models, Variant variant,
                   const ImageFeatures& image, const AttributeVector& attrs,
                   std::span<const std::size_t> words, Fusion fusion) {
  const auto cond = condition_ensemble(models, variant, image, attrs);
  std::vector<LSTMState> states = initial_states(cond);
  double logprob = 0.0;
  std::size_t last = kBos;
  for (std::size_t w : words) {
    auto [dist, next] = ensemble_predict(models, cond, states, last, fusion);
    if (w >= dist.dim()) throw std::invalid_argument("word index outside vocabulary");
    logprob += std::log(dist[w]);
    states = std::move(next);
    last = w;
  }
  return logprob;
}

std::string format_caption_line(const std::string& id, const std::string& caption, double logprob) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", logprob);
  return id + "\t" + caption + "\t" + buf;
}

}  // namespace lstma
