#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lstma/captioner.hpp"
#include "lstma/vocab.hpp"

namespace lstma {

struct CaptionRecord {
  std::string id;
  ImageFeatures features;
  AttributeVector attributes;
  std::vector<std::string> captions;
};

/// Scene description behind one synthetic image. Indices refer to
/// toy_objects(), toy_colors() and toy_relations().
struct ToyScene {
  std::vector<std::size_t> objects;  // 1-3 distinct objects
  std::vector<std::size_t> colors;   // one per object
  std::size_t relation = 0;          // meaningful with 2+ objects
};

const std::vector<std::string>& toy_objects();
const std::vector<std::string>& toy_colors();
const std::vector<std::string>& toy_relations();

/// Attribute vocabulary of the synthetic data: object words then color words.
AttributeVocab toy_attribute_vocab();

/// Deterministic in (seed, index).
ToyScene toy_scene(std::uint64_t seed, std::size_t index);

/// Template realizations of a scene; captions[0] is the canonical one.
std::vector<std::string> toy_captions(const ToyScene& scene);

struct ToyDatasetOptions {
  std::uint64_t seed = 7;
  std::size_t count = 50;
  std::size_t image_dim = 32;
  double feature_noise = 0.1;
  /// Fraction by which each attribute entry is blended with uniform noise; 0
  /// models a perfect detector.
  double attr_noise = 0.0;
};

/// Features are a fixed random projection of the scene's (object, color) and
/// relation indicators plus Gaussian noise; attributes are presence
/// indicators over toy_attribute_vocab(); 2-5 captions per scene.
std::vector<CaptionRecord> generate_toy_dataset(const ToyDatasetOptions& options);

/// One JSON object per line with keys id, features, attributes, captions.
std::string serialize_dataset(const std::vector<CaptionRecord>& records);
std::vector<CaptionRecord> parse_dataset(const std::string& text);

void save_dataset(const std::vector<CaptionRecord>& records, const std::filesystem::path& path);
std::vector<CaptionRecord> load_dataset(const std::filesystem::path& path);

/// Every caption of every record, in order.
std::vector<std::string> all_captions(const std::vector<CaptionRecord>& records);

}  // namespace lstma
