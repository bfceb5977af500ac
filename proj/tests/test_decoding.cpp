#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "lstma/decoding.hpp"
#include "lstma/training.hpp"

using namespace lstma;

namespace {

const ModelDims kDims{7, 5, 12, 6, 6};

// Zero weights with saturating biases give a constant positive hidden state;
// a large output row for `word` then puts almost all mass on it.
CaptionerParams rigged(std::size_t word, double weight = 10.0) {
  CaptionerParams p(kDims);
  p.lstm.cell.bias.fill(5.0);
  p.lstm.input_gate.bias.fill(5.0);
  p.lstm.output_gate.bias.fill(5.0);
  for (double& v : p.output.row(word)) v = weight;
  return p;
}

ImageFeatures image_of(std::uint64_t seed) {
  Vec v(7);
  for (std::size_t i = 0; i < 7; ++i) v[i] = std::sin(static_cast<double>(seed * 7 + i));
  return {v};
}

AttributeVector attrs_of(std::uint64_t seed) {
  Vec v(5);
  for (std::size_t i = 0; i < 5; ++i) v[i] = 0.5 + 0.5 * std::cos(static_cast<double>(seed * 5 + i));
  return {v};
}

double chain_logprob(const CaptionerParams& p, Variant v, const ImageFeatures& image,
                     const AttributeVector& attrs, const std::vector<std::size_t>& words) {
  const Conditioning cond = condition(v, p, image, attrs);
  LSTMState state = cond.state;
  std::size_t last = kBos;
  double total = 0.0;
  for (std::size_t w : words) {
    auto [probs, next] = predict_next(p, cond.step_extra, state, last);
    total += std::log(probs[w]);
    state = next;
    last = w;
  }
  return total;
}

}  // namespace

TEST_CASE("decode config and fusion names") {
  CHECK_THROWS(DecodeConfig{0, 20, false, Fusion::Arithmetic}.validate());
  CHECK_THROWS(DecodeConfig{3, 0, false, Fusion::Arithmetic}.validate());
  CHECK(parse_fusion("arithmetic") == Fusion::Arithmetic);
  CHECK(parse_fusion("geometric") == Fusion::Geometric);
  CHECK_THROWS(parse_fusion("median"));
}

TEST_CASE("greedy follows a forced word until max_len") {
  const CaptionerParams p = rigged(7);
  const std::vector<CaptionerParams> models{p};
  DecodeConfig cfg;
  cfg.max_len = 6;
  const DecodedSentence s = greedy_decode(models, Variant::A1, image_of(1), attrs_of(1), cfg);
  CHECK(s.words == std::vector<std::size_t>(6, 7));
  CHECK_FALSE(s.finished);
  CHECK(s.sequence().ids.front() == kBos);
  CHECK(s.sequence().ids.back() == kEos);
  CHECK(s.sequence().ids.size() == 8);
}

TEST_CASE("greedy stops immediately on the end sign") {
  const std::vector<CaptionerParams> models{rigged(kEos)};
  const DecodedSentence s = greedy_decode(models, Variant::A2, image_of(2), attrs_of(2), {});
  CHECK(s.finished);
  CHECK(s.words == std::vector<std::size_t>{kEos});
  CHECK(s.sequence().ids == std::vector<std::size_t>{kBos, kEos});
}

TEST_CASE("start sign and unknown word are never emitted") {
  const std::vector<CaptionerParams> bos{rigged(kBos)};
  const std::vector<CaptionerParams> unk{rigged(kUnk)};
  DecodeConfig cfg;
  cfg.max_len = 4;
  cfg.beam_size = 4;
  for (const auto* models : {&bos, &unk}) {
    const auto g = greedy_decode(*models, Variant::A1, image_of(3), attrs_of(3), cfg);
    for (std::size_t w : g.words) CHECK((w != kBos && w != kUnk));
    for (const auto& s : beam_search(*models, Variant::A1, image_of(3), attrs_of(3), cfg)) {
      for (std::size_t w : s.words) CHECK((w != kBos && w != kUnk));
    }
  }
}

TEST_CASE("beam of one equals greedy") {
  auto records = generate_toy_dataset({7, 100, 32, 0.1, 0.0});
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c;
  c.embed_dim = c.hidden_dim = 16;
  c.max_iters = 40;
  for (Variant v : {Variant::A1, Variant::A4}) {
    c.variant = v;
    const std::vector<CaptionerParams> models{sgd_train(c, records, vocab).params};
    DecodeConfig cfg;
    cfg.beam_size = 1;
    for (const auto& r : records) {
      const auto g = greedy_decode(models, v, r.features, r.attributes, cfg);
      const auto b = beam_search(models, v, r.features, r.attributes, cfg);
      REQUIRE_FALSE(b.empty());
      CHECK(b.front().words == g.words);
      CHECK(b.front().logprob == g.logprob);
    }
  }
}

TEST_CASE("full-width beam matches brute-force enumeration of two-word sentences") {
  for (Variant v : kAllVariants) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const CaptionerParams p = CaptionerParams::random(kDims, seed, 1.0);
      const std::vector<CaptionerParams> models{p};
      const auto image = image_of(seed);
      const auto attrs = attrs_of(seed);

      double best = -std::numeric_limits<double>::infinity();
      std::vector<std::size_t> best_words;
      auto consider = [&](std::vector<std::size_t> words) {
        const double lp = chain_logprob(p, v, image, attrs, words);
        if (lp > best) {
          best = lp;
          best_words = words;
        }
      };
      consider({kEos});
      for (std::size_t a = 0; a < kDims.vocab_size; ++a) {
        if (a == kBos || a == kUnk || a == kEos) continue;
        for (std::size_t b = 0; b < kDims.vocab_size; ++b) {
          if (b == kBos || b == kUnk) continue;
          consider({a, b});
        }
      }

      DecodeConfig cfg;
      cfg.beam_size = kDims.vocab_size;
      cfg.max_len = 2;
      const auto beams = beam_search(models, v, image, attrs, cfg);
      REQUIRE_FALSE(beams.empty());
      CHECK(beams.front().words == best_words);
      CHECK(std::abs(beams.front().logprob - best) <= 1e-12);
      for (std::size_t i = 1; i < beams.size(); ++i) CHECK(beams[i - 1].logprob >= beams[i].logprob);
    }
  }
}

TEST_CASE("beam logprobs agree with rescoring") {
  for (Variant v : kAllVariants) {
    const std::vector<CaptionerParams> models{CaptionerParams::random(kDims, 40, 0.8),
                                              CaptionerParams::random(kDims, 41, 0.8)};
    for (Fusion fusion : {Fusion::Arithmetic, Fusion::Geometric}) {
      DecodeConfig cfg;
      cfg.beam_size = 4;
      cfg.max_len = 6;
      cfg.fusion = fusion;
      for (const auto& s : beam_search(models, v, image_of(5), attrs_of(5), cfg)) {
        const double rescored = score_words(models, v, image_of(5), attrs_of(5), s.words, fusion);
        CHECK(std::abs(s.logprob - rescored) <= 1e-12);
      }
    }
  }
}

TEST_CASE("length normalization ranks by mean log-probability") {
  const std::vector<CaptionerParams> models{CaptionerParams::random(kDims, 50, 1.0)};
  DecodeConfig cfg;
  cfg.beam_size = 5;
  cfg.max_len = 5;
  cfg.length_norm = true;
  const auto beams = beam_search(models, Variant::A3, image_of(6), attrs_of(6), cfg);
  for (std::size_t i = 1; i < beams.size(); ++i) {
    CHECK(beams[i - 1].logprob / static_cast<double>(beams[i - 1].words.size()) >=
          beams[i].logprob / static_cast<double>(beams[i].words.size()));
  }
}

TEST_CASE("ensemble fusion") {
  const auto image = image_of(7);
  const auto attrs = attrs_of(7);
  const CaptionerParams a = CaptionerParams::random(kDims, 60, 0.5);

  for (Variant v : kAllVariants) {
    const Conditioning cond = condition(v, a, image, attrs);
    const auto [single, single_state] = predict_next(a, cond.step_extra, cond.state, kBos);

    const std::vector<CaptionerParams> one{a};
    const auto [fused, states] =
        ensemble_predict(one, std::vector<LSTMState>{cond.state}, kBos, v, image, attrs);
    CHECK(fused == single);
    CHECK(states[0] == single_state);

    const std::vector<CaptionerParams> twins{a, a};
    const std::vector<LSTMState> twin_states{cond.state, cond.state};
    for (Fusion f : {Fusion::Arithmetic, Fusion::Geometric}) {
      const auto [twin, unused] = ensemble_predict(twins, twin_states, kBos, v, image, attrs, f);
      for (std::size_t w = 0; w < twin.dim(); ++w) CHECK(std::abs(twin[w] - single[w]) <= 1e-12);
    }
  }

  const std::vector<CaptionerParams> split{rigged(5, 50.0), rigged(6, 50.0)};
  const auto conds = condition_ensemble(split, Variant::A1, image, attrs);
  const std::vector<LSTMState> starts{conds[0].state, conds[1].state};
  const auto [mix, unused] = ensemble_predict(split, conds, starts, kBos);
  CHECK(std::abs(mix[5] - 0.5) <= 1e-9);
  CHECK(std::abs(mix[6] - 0.5) <= 1e-9);

  const std::vector<CaptionerParams> mismatched{a, CaptionerParams::random({7, 5, 13, 6, 6}, 1)};
  CHECK_THROWS(condition_ensemble(mismatched, Variant::A1, image, attrs));
  CHECK_THROWS(condition_ensemble(std::vector<CaptionerParams>{}, Variant::A1, image, attrs));
}

TEST_CASE("overfit toy model reproduces its training caption") {
  auto records = generate_toy_dataset({7, 3, 32, 0.1, 0.0});
  for (auto& r : records) r.captions.resize(1);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c;
  c.variant = Variant::A2;
  c.lr = 0.1;
  c.max_iters = 400;
  const std::vector<CaptionerParams> models{sgd_train(c, records, vocab).params};
  for (const auto& r : records) {
    const auto s = greedy_decode(models, c.variant, r.features, r.attributes, {});
    CHECK(decode(s.sequence(), vocab) == decode(encode(r.captions[0], vocab), vocab));
  }
}

TEST_CASE("caption line format") {
  CHECK(format_caption_line("img-3", "a red ball", -1.5) == "img-3\ta red ball\t-1.5");
}
