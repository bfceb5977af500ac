#include "lstma/data.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "lstma/io.hpp"
#include "lstma/random.hpp"

namespace lstma {

namespace {

using nlohmann::json;

constexpr std::uint64_t kProjectionSeed = 0x4c535441ULL;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Relation phrase read in the other direction ("on" <-> "under").
const std::vector<std::string>& inverse_relations() {
  static const std::vector<std::string> inv{"next to", "under", "on", "in front of", "behind"};
  return inv;
}

std::size_t encoding_dim() { return toy_objects().size() * toy_colors().size() + toy_relations().size(); }

std::vector<double> scene_encoding(const ToyScene& scene) {
  std::vector<double> e(encoding_dim(), 0.0);
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    e[scene.objects[k] * toy_colors().size() + scene.colors[k]] = 1.0;
  }
  if (scene.objects.size() > 1) {
    e[toy_objects().size() * toy_colors().size() + scene.relation] = 1.0;
  }
  return e;
}

const Mat& projection(std::size_t image_dim) {
  thread_local std::size_t cached_dim = 0;
  thread_local Mat cached;
  if (cached_dim != image_dim) {
    Rng rng(kProjectionSeed);
    cached = Mat(image_dim, encoding_dim());
    for (double& v : cached.values()) v = 0.5 * rng.normal();
    cached_dim = image_dim;
  }
  return cached;
}

std::string fill(std::string text, const std::vector<std::pair<std::string, std::string>>& subs) {
  for (const auto& [key, value] : subs) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
      text.replace(pos, key.size(), value);
      pos += value.size();
    }
  }
  return text;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw std::runtime_error("dataset line " + std::to_string(line) + ": " + what);
}

const json& field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) fail_at(line, std::string("missing field '") + name + "'");
  return *it;
}

Vec number_array(const json& value, const char* name, std::size_t line) {
  if (!value.is_array()) fail_at(line, std::string("field '") + name + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) fail_at(line, std::string("field '") + name + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return Vec(std::move(out));
}

}  // namespace

const std::vector<std::string>& toy_objects() {
  static const std::vector<std::string> v{"ball", "box", "cup", "dog", "cat", "car", "chair", "tree"};
  return v;
}

const std::vector<std::string>& toy_colors() {
  static const std::vector<std::string> v{"red", "blue", "green", "yellow", "white", "black"};
  return v;
}

const std::vector<std::string>& toy_relations() {
  static const std::vector<std::string> v{"next to", "on", "under", "behind", "in front of"};
  return v;
}

AttributeVocab toy_attribute_vocab() {
  AttributeVocab av;
  av.tokens = toy_objects();
  av.tokens.insert(av.tokens.end(), toy_colors().begin(), toy_colors().end());
  return av;
}

ToyScene toy_scene(std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix(splitmix(seed) ^ index));
  ToyScene scene;
  const std::size_t n = 1 + rng.below(3);
  std::vector<std::size_t> pool(toy_objects().size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  rng.shuffle(std::span(pool));
  for (std::size_t k = 0; k < n; ++k) {
    scene.objects.push_back(pool[k]);
    scene.colors.push_back(rng.below(toy_colors().size()));
  }
  scene.relation = rng.below(toy_relations().size());
  return scene;
}

std::vector<std::string> toy_captions(const ToyScene& scene) {
  std::vector<std::pair<std::string, std::string>> subs;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const std::string slot = std::to_string(k + 1);
    subs.push_back({"{o" + slot + "}", toy_objects()[scene.objects[k]]});
    subs.push_back({"{c" + slot + "}", toy_colors()[scene.colors[k]]});
  }
  subs.push_back({"{rel}", toy_relations()[scene.relation]});
  subs.push_back({"{inv}", inverse_relations()[scene.relation]});

  static const std::vector<std::vector<std::string>> templates{
      {"a {c1} {o1}", "there is a {c1} {o1}", "a {c1} {o1} in the picture",
       "a picture of a {c1} {o1}", "the {o1} is {c1}"},
      {"a {c1} {o1} {rel} a {c2} {o2}", "there is a {c1} {o1} {rel} a {c2} {o2}",
       "a {c2} {o2} {inv} a {c1} {o1}", "a {c1} {o1} and a {c2} {o2}",
       "the {o1} is {c1} and the {o2} is {c2}"},
      {"a {c1} {o1} {rel} a {c2} {o2} and a {c3} {o3}",
       "there is a {c1} {o1} {rel} a {c2} {o2} and a {c3} {o3}",
       "a {c2} {o2} {inv} a {c1} {o1} and a {c3} {o3}",
       "a {c1} {o1} and a {c2} {o2} and a {c3} {o3}",
       "a {c1} {o1} {rel} a {c2} {o2} with a {c3} {o3}"},
  };
  std::vector<std::string> out;
  for (const auto& t : templates.at(scene.objects.size() - 1)) out.push_back(fill(t, subs));
  return out;
}

std::vector<CaptionRecord> generate_toy_dataset(const ToyDatasetOptions& options) {
  if (options.count < 1) throw std::invalid_argument("toy dataset needs at least one scene");
  if (options.image_dim < 8) throw std::invalid_argument("toy dataset needs d_v >= 8");
  if (options.attr_noise < 0.0 || options.attr_noise > 1.0) {
    throw std::invalid_argument("attribute noise must lie in [0, 1]");
  }
  const Mat& proj = projection(options.image_dim);
  const AttributeVocab av = toy_attribute_vocab();

  std::vector<CaptionRecord> records;
  records.reserve(options.count);
  for (std::size_t idx = 0; idx < options.count; ++idx) {
    const ToyScene scene = toy_scene(options.seed, idx);
    Rng rng(splitmix(splitmix(options.seed + 1) ^ idx));

    CaptionRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "scene-%05zu", idx);
    rec.id = id;

    rec.features.values = matvec(proj, Vec(scene_encoding(scene)));
    for (double& v : rec.features.values.values()) v += options.feature_noise * rng.normal();

    std::vector<std::string> captions = toy_captions(scene);
    const std::size_t keep = 2 + rng.below(4);
    // Canonical caption always kept; the rest drawn without replacement.
    std::span<std::string> rest(captions.begin() + 1, captions.end());
    rng.shuffle(rest);
    captions.resize(keep);
    rec.captions = std::move(captions);

    std::vector<double> attrs(av.size(), 0.0);
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      attrs[scene.objects[k]] = 1.0;
      attrs[toy_objects().size() + scene.colors[k]] = 1.0;
    }
    for (double& a : attrs) {
      if (options.attr_noise > 0.0) a = (1.0 - options.attr_noise) * a + options.attr_noise * rng.uniform();
    }
    rec.attributes.probs = Vec(std::move(attrs));
    records.push_back(std::move(rec));
  }
  return records;
}

std::string serialize_dataset(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    json obj;
    obj["id"] = rec.id;
    obj["features"] = rec.features.values.raw();
    obj["attributes"] = rec.attributes.probs.raw();
    obj["captions"] = rec.captions;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<CaptionRecord> parse_dataset(const std::string& text) {
  std::vector<CaptionRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(line_no, std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object()) fail_at(line_no, "record is not an object");

    CaptionRecord rec;
    const json& id = field(obj, "id", line_no);
    if (!id.is_string()) fail_at(line_no, "field 'id' must be a string");
    rec.id = id.get<std::string>();
    rec.features.values = number_array(field(obj, "features", line_no), "features", line_no);
    rec.attributes.probs = number_array(field(obj, "attributes", line_no), "attributes", line_no);
    const json& caps = field(obj, "captions", line_no);
    if (!caps.is_array() || caps.empty()) fail_at(line_no, "field 'captions' must be a non-empty array");
    for (const auto& c : caps) {
      if (!c.is_string()) fail_at(line_no, "field 'captions' must hold strings");
      rec.captions.push_back(c.get<std::string>());
    }

    if (rec.features.values.empty()) fail_at(line_no, "field 'features' is empty");
    if (rec.attributes.probs.empty()) fail_at(line_no, "field 'attributes' is empty");
    if (!all_finite(rec.features.values.values())) fail_at(line_no, "non-finite feature value");
    try {
      rec.attributes.validate();
    } catch (const std::invalid_argument& e) {
      fail_at(line_no, e.what());
    }
    if (!records.empty()) {
      const auto& first = records.front();
      if (rec.features.values.dim() != first.features.values.dim() ||
          rec.attributes.probs.dim() != first.attributes.probs.dim()) {
        fail_at(line_no, "feature/attribute dimensions differ from the first record");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void save_dataset(const std::vector<CaptionRecord>& records, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(records));
}

std::vector<CaptionRecord> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

std::vector<std::string> all_captions(const std::vector<CaptionRecord>& records) {
  std::vector<std::string> out;
  for (const auto& rec : records) out.insert(out.end(), rec.captions.begin(), rec.captions.end());
  return out;
}

}  // namespace lstma
