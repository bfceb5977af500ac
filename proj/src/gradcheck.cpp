#include "lstma/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lstma/random.hpp"

namespace lstma {

GradCheckInstance make_instance(const GradCheckOptions& options, std::uint64_t seed) {
  const ModelDims& d = options.dims;
  GradCheckInstance inst;
  inst.params = CaptionerParams::random(d, seed, options.init_scale);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  inst.image.values = Vec(d.image_dim);
  for (double& v : inst.image.values.values()) v = rng.normal();
  inst.attrs.probs = Vec(d.attr_dim);
  for (double& v : inst.attrs.probs.values()) v = rng.uniform();
  inst.words.ids.push_back(kBos);
  for (std::size_t t = 1; t < options.num_targets; ++t) {
    inst.words.ids.push_back(kNumReserved + rng.below(d.vocab_size - kNumReserved));
  }
  inst.words.ids.push_back(kEos);
  return inst;
}

GradCheckReport gradient_check(Variant variant, std::uint64_t seed,
                               const GradCheckOptions& options) {
  GradCheckInstance inst = make_instance(options, seed);
  const ForwardCache cache = forward(variant, inst.params, inst.image, inst.attrs, inst.words);
  CaptionerParams analytic = backward(inst.params, cache);
  if (options.corrupt_gradient) {
    auto blocks = analytic.blocks();
    blocks.back().values[0] += 1.0;
  }

  GradCheckReport report;
  report.variant = variant;
  report.seed = seed;
  auto params_blocks = inst.params.blocks();
  const auto grad_blocks = std::as_const(analytic).blocks();
  for (std::size_t b = 0; b < params_blocks.size(); ++b) {
    BlockCheck check{std::string(params_blocks[b].name), params_blocks[b].values.size(), 0.0};
    auto values = params_blocks[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.epsilon;
      const double up = forward_loss(variant, inst.params, inst.image, inst.attrs, inst.words);
      values[i] = saved - options.epsilon;
      const double down = forward_loss(variant, inst.params, inst.image, inst.attrs, inst.words);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double err =
          std::abs(grad_blocks[b].values[i] - numeric) / std::max(1.0, std::abs(numeric));
      check.max_rel_error = std::max(check.max_rel_error, err);
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.blocks.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace lstma
