#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lstma/captioner.hpp"
#include "lstma/gradcheck.hpp"
#include "lstma/random.hpp"

using namespace lstma;

namespace {

const ModelDims kSmall{7, 5, 12, 6, 6};

ImageFeatures random_image(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(dim);
  for (double& x : v.values()) x = rng.uniform(-1.0, 1.0);
  return {v};
}

AttributeVector random_attrs(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(dim);
  for (double& x : v.values()) x = rng.uniform();
  return {v};
}

TokenSequence random_sentence(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  TokenSequence s;
  s.ids.push_back(kBos);
  for (std::size_t t = 0; t + 1 < n; ++t) s.ids.push_back(kNumReserved + rng.below(vocab - kNumReserved));
  s.ids.push_back(kEos);
  return s;
}

// Independent loss: embeddings, LSTM and softmax written out with plain loops.
double scalar_loss(Variant variant, const CaptionerParams& p, const ImageFeatures& image,
                   const AttributeVector& attrs, const TokenSequence& words) {
  const std::size_t de = p.dims().embed_dim, hd = p.dims().hidden_dim, ds = p.dims().vocab_size;
  auto embed = [&](const Mat& m, const Vec& v) {
    std::vector<double> out(de, 0.0);
    for (std::size_t r = 0; r < de; ++r) {
      for (std::size_t c = 0; c < v.dim(); ++c) out[r] += m(r, c) * v[c];
    }
    return out;
  };
  const auto img = embed(p.image_embed, image.values);
  const auto att = embed(p.attr_embed, attrs.probs);

  std::vector<std::vector<double>> xs;
  switch (variant) {
    case Variant::A1:
    case Variant::A4:
      xs = {att};
      break;
    case Variant::A2:
      xs = {img, att};
      break;
    case Variant::A3:
      xs = {att, img};
      break;
    case Variant::A5:
      xs = {img};
      break;
  }
  const std::size_t encode = xs.size();
  for (std::size_t t = 0; t + 1 < words.ids.size(); ++t) {
    std::vector<double> x(de);
    for (std::size_t r = 0; r < de; ++r) {
      x[r] = p.word_embed(r, words.ids[t]);
      if (variant == Variant::A4) x[r] += img[r];
      if (variant == Variant::A5) x[r] += att[r];
    }
    xs.push_back(x);
  }

  std::vector<double> h(hd, 0.0), c(hd, 0.0);
  double loss = 0.0;
  auto gate = [&](const GateWeights& g, std::size_t r, const std::vector<double>& x) {
    double s = g.bias[r];
    for (std::size_t j = 0; j < de; ++j) s += g.input(r, j) * x[j];
    for (std::size_t j = 0; j < hd; ++j) s += g.recurrent(r, j) * h[j];
    return s;
  };
  for (std::size_t t = 0; t < xs.size(); ++t) {
    std::vector<double> nh(hd), nc(hd);
    for (std::size_t r = 0; r < hd; ++r) {
      const double g = std::tanh(gate(p.lstm.cell, r, xs[t]));
      const double i = 1.0 / (1.0 + std::exp(-gate(p.lstm.input_gate, r, xs[t])));
      const double f = 1.0 / (1.0 + std::exp(-gate(p.lstm.forget_gate, r, xs[t])));
      const double o = 1.0 / (1.0 + std::exp(-gate(p.lstm.output_gate, r, xs[t])));
      nc[r] = g * i + c[r] * f;
      nh[r] = std::tanh(nc[r]) * o;
    }
    h = nh;
    c = nc;
    if (t < encode) continue;
    std::vector<double> logits(ds, 0.0);
    for (std::size_t w = 0; w < ds; ++w) {
      for (std::size_t j = 0; j < hd; ++j) logits[w] += p.output(w, j) * h[j];
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    loss -= std::log(std::exp(logits[words.ids[t - encode + 1]]) / z);
  }
  return loss;
}

}  // namespace

TEST_CASE("variant names") {
  CHECK(parse_variant("a3") == Variant::A3);
  CHECK(parse_variant("A5") == Variant::A5);
  CHECK(to_string(Variant::A2) == "a2");
  CHECK_THROWS(parse_variant("a6"));
  CHECK_THROWS(parse_variant(""));
}

TEST_CASE("schedule shapes for every variant and length") {
  const auto params = CaptionerParams::random(kSmall, 1);
  const auto image = random_image(7, 2);
  const auto attrs = random_attrs(5, 3);
  for (Variant v : kAllVariants) {
    const std::size_t expected_encode =
        (v == Variant::A2 || v == Variant::A3) ? 2 : 1;
    CHECK(encode_length(v) == expected_encode);
    for (std::size_t n = 1; n <= 20; ++n) {
      const auto s = build_schedule(v, params, image, attrs, random_sentence(n, 12, n));
      CHECK(s.encode_len == expected_encode);
      CHECK(s.num_targets() == n);
      CHECK(s.steps.size() == expected_encode + n);
      for (std::size_t t = 0; t < s.encode_len; ++t) CHECK_FALSE(s.steps[t].target.has_value());
    }
  }
}

TEST_CASE("A2 and A3 encode the same vectors in swapped order") {
  const auto params = CaptionerParams::random(kSmall, 4);
  const auto image = random_image(7, 5);
  const auto attrs = random_attrs(5, 6);
  const auto words = random_sentence(3, 12, 7);
  const auto a2 = build_schedule(Variant::A2, params, image, attrs, words);
  const auto a3 = build_schedule(Variant::A3, params, image, attrs, words);
  CHECK(a2.steps[0].source == StepSource::Image);
  CHECK(a3.steps[0].source == StepSource::Attributes);
  CHECK(a2.steps[0].input == a3.steps[1].input);
  CHECK(a2.steps[1].input == a3.steps[0].input);
  for (std::size_t t = 2; t < a2.steps.size(); ++t) CHECK(a2.steps[t].input == a3.steps[t].input);
}

TEST_CASE("A4 without image equals A1 step for step") {
  const auto params = CaptionerParams::random(kSmall, 8);
  const ImageFeatures zero{Vec(7)};
  const auto attrs = random_attrs(5, 9);
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto words = random_sentence(n, 12, 100 + n);
    const auto a1 = build_schedule(Variant::A1, params, zero, attrs, words);
    const auto a4 = build_schedule(Variant::A4, params, zero, attrs, words);
    REQUIRE(a1.steps.size() == a4.steps.size());
    for (std::size_t t = 0; t < a1.steps.size(); ++t) CHECK(a1.steps[t].input == a4.steps[t].input);
    CHECK(forward_loss(Variant::A1, params, zero, attrs, words) ==
          forward_loss(Variant::A4, params, zero, attrs, words));
  }
}

TEST_CASE("A5 without attributes is the image-only schedule") {
  const auto params = CaptionerParams::random(kSmall, 10);
  const auto image = random_image(7, 11);
  const AttributeVector zero{Vec(5)};
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto words = random_sentence(n, 12, 200 + n);
    const auto s = build_schedule(Variant::A5, params, image, zero, words);
    CHECK(s.steps[0].input == matvec(params.image_embed, image.values));
    for (std::size_t t = 1; t < s.steps.size(); ++t) {
      Vec plain(6);
      for (std::size_t r = 0; r < 6; ++r) plain[r] = params.word_embed(r, words.ids[t - 1]);
      CHECK(s.steps[t].input == plain);
    }
  }
}

TEST_CASE("schedule rejects malformed input") {
  const auto params = CaptionerParams::random(kSmall, 12);
  const auto image = random_image(7, 13);
  const auto attrs = random_attrs(5, 14);
  CHECK_THROWS_AS(build_schedule(Variant::A1, params, image, attrs, TokenSequence{{kBos, 4}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(Variant::A1, params, image, attrs, TokenSequence{{4, kEos}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(Variant::A1, params, image, attrs, TokenSequence{{kBos, 99, kEos}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(Variant::A2, params, random_image(6, 1), attrs,
                                 TokenSequence{{kBos, kEos}}),
                  std::invalid_argument);
  CHECK_THROWS(AttributeVector{Vec{0.5, 1.5}}.validate());
}

TEST_CASE("zero output layer gives the uniform loss") {
  for (Variant v : kAllVariants) {
    auto params = CaptionerParams::random(kSmall, 15);
    params.output.fill(0.0);
    for (std::size_t n = 1; n <= 20; ++n) {
      const double loss =
          forward_loss(v, params, random_image(7, n), random_attrs(5, n), random_sentence(n, 12, n));
      CHECK(std::abs(loss - static_cast<double>(n) * std::log(12.0)) <= 1e-9);
    }
  }
}

TEST_CASE("loss matches the scalar reference") {
  for (Variant v : kAllVariants) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto params = CaptionerParams::random(kSmall, seed, 0.5);
      const auto image = random_image(7, seed + 10);
      const auto attrs = random_attrs(5, seed + 20);
      const auto words = random_sentence(4, 12, seed + 30);
      const double loss = forward_loss(v, params, image, attrs, words);
      CHECK(loss >= 0.0);
      CHECK(std::abs(loss - scalar_loss(v, params, image, attrs, words)) <= 1e-12);
    }
  }
}

TEST_CASE("loss-head gradient on a single step") {
  const auto params = CaptionerParams::random(kSmall, 16, 0.5);
  const auto image = random_image(7, 17);
  const auto attrs = random_attrs(5, 18);
  const TokenSequence words{{kBos, kEos}};
  const ForwardCache cache = forward(Variant::A1, params, image, attrs, words);
  const CaptionerParams grad = backward(params, cache);
  const Vec& h = cache.trace.states[1].h;
  const Vec& p = cache.probs[0];
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(std::abs(grad.output(kEos, j) - (p[kEos] - 1.0) * h[j]) <= 1e-15);
    CHECK(std::abs(grad.output(5, j) - p[5] * h[j]) <= 1e-15);
  }
}

TEST_CASE("unused blocks get zero gradient") {
  const auto params = CaptionerParams::random(kSmall, 19, 0.5);
  const auto cache = forward(Variant::A1, params, random_image(7, 20), random_attrs(5, 21),
                             random_sentence(4, 12, 22));
  CHECK(backward(params, cache).image_embed == Mat(6, 7));
}

TEST_CASE("full gradient check for every variant") {
  for (Variant v : kAllVariants) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GradCheckReport report = gradient_check(v, seed);
      CHECK(report.passed);
      CHECK(report.max_rel_error <= 1e-4);
      CHECK(report.blocks.size() == CaptionerParams(kSmall).blocks().size());
    }
  }
}

TEST_CASE("corrupted gradient fails the check") {
  GradCheckOptions options;
  options.corrupt_gradient = true;
  const GradCheckReport report = gradient_check(Variant::A3, 1, options);
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error > 1e-4);
}

TEST_CASE("teacher-forced prediction reproduces the training distributions") {
  for (Variant v : kAllVariants) {
    const auto params = CaptionerParams::random(kSmall, 23, 0.5);
    const auto image = random_image(7, 24);
    const auto attrs = random_attrs(5, 25);
    const auto words = random_sentence(6, 12, 26);
    const ForwardCache cache = forward(v, params, image, attrs, words);
    const Conditioning cond = condition(v, params, image, attrs);
    LSTMState state = cond.state;
    for (std::size_t t = 0; t + 1 < words.ids.size(); ++t) {
      auto [probs, next] = predict_next(params, cond.step_extra, state, words.ids[t]);
      CHECK(probs == cache.probs[t]);
      double sum = 0.0;
      for (double p : probs.values()) sum += p;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      const auto [again, again_state] = predict_next(v, params, state, words.ids[t], image, attrs);
      CHECK(again == probs);
      state = next;
    }
  }
}

TEST_CASE("A5 with zero attributes predicts like a plain word step") {
  const auto params = CaptionerParams::random(kSmall, 27, 0.5);
  const auto image = random_image(7, 28);
  const AttributeVector zero{Vec(5)};
  const Conditioning cond = condition(Variant::A5, params, image, zero);
  const auto with_extra = predict_next(params, cond.step_extra, cond.state, kBos);
  const auto plain = predict_next(params, Vec{}, cond.state, kBos);
  CHECK(with_extra.first == plain.first);
}

TEST_CASE("one SGD step on a single caption lowers its loss") {
  for (Variant v : kAllVariants) {
    auto params = CaptionerParams::random(kSmall, 29, 0.3);
    const auto image = random_image(7, 30);
    const auto attrs = random_attrs(5, 31);
    const auto words = random_sentence(5, 12, 32);
    const ForwardCache cache = forward(v, params, image, attrs, words);
    const CaptionerParams grad = backward(params, cache);
    auto dst = params.blocks();
    const auto src = grad.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) axpy(-0.05, src[b].values, dst[b].values);
    CHECK(forward_loss(v, params, image, attrs, words) < cache.loss);
  }
}

TEST_CASE("parameter blocks and init range") {
  const auto params = CaptionerParams::random(kSmall, 33, 0.08);
  std::size_t total = 0;
  for (const auto& block : params.blocks()) {
    total += block.values.size();
    for (double v : block.values) {
      CHECK(v >= -0.08);
      CHECK(v <= 0.08);
    }
  }
  CHECK(total == params.num_values());
  CHECK(params.dims() == kSmall);
  CHECK(CaptionerParams::random(kSmall, 33, 0.08) == params);
  CHECK_FALSE(CaptionerParams::random(kSmall, 34, 0.08) == params);
  CHECK_THROWS(ModelDims{7, 5, 3, 6, 6}.validate());
}
