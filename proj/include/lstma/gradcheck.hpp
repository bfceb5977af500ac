#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lstma/captioner.hpp"

namespace lstma {

struct GradCheckOptions {
  ModelDims dims{7, 5, 12, 6, 6};
  std::size_t num_targets = 4;  // N_s
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  double init_scale = 0.5;
  /// Negative control: perturb one analytic gradient entry before comparing.
  bool corrupt_gradient = false;
};

struct BlockCheck {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  Variant variant = Variant::A1;
  std::uint64_t seed = 0;
  std::vector<BlockCheck> blocks;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Random instance (params, image, attributes, sentence) for the given seed.
struct GradCheckInstance {
  CaptionerParams params;
  ImageFeatures image;
  AttributeVector attrs;
  TokenSequence words;
};

GradCheckInstance make_instance(const GradCheckOptions& options, std::uint64_t seed);

/// Compares backward() against central differences of forward_loss() for
/// every parameter. Error is |analytic - numeric| / max(1, |numeric|).
GradCheckReport gradient_check(Variant variant, std::uint64_t seed,
                               const GradCheckOptions& options = {});

}  // namespace lstma
