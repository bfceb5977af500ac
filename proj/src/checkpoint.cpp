#include "lstma/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "lstma/io.hpp"

namespace lstma {

namespace {

constexpr char kMagic[4] = {'L', 'S', 'T', 'A'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw std::runtime_error("checkpoint truncated");
    std::array<unsigned char, sizeof(T)> bits;
    std::memcpy(bits.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const CaptionerParams& params, const CheckpointMeta& meta) {
  if (params.dims() != meta.dims) throw std::invalid_argument("checkpoint meta dims disagree with params");
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  for (std::uint64_t d : {meta.dims.image_dim, meta.dims.attr_dim, meta.dims.vocab_size,
                          meta.dims.embed_dim, meta.dims.hidden_dim}) {
    put<std::uint64_t>(out, d);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.variant));
  put<std::uint64_t>(out, meta.vocab_hash);
  put<std::uint64_t>(out, meta.step);
  for (const auto& block : params.blocks()) {
    for (double v : block.values) put<double>(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  Reader in(bytes);
  in.get<std::uint32_t>();
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ModelDims& d = ck.meta.dims;
  d.image_dim = in.get<std::uint64_t>();
  d.attr_dim = in.get<std::uint64_t>();
  d.vocab_size = in.get<std::uint64_t>();
  d.embed_dim = in.get<std::uint64_t>();
  d.hidden_dim = in.get<std::uint64_t>();
  const auto tag = in.get<std::uint32_t>();
  if (tag < 1 || tag > 5) throw std::runtime_error("checkpoint has unknown variant tag " + std::to_string(tag));
  ck.meta.variant = static_cast<Variant>(tag);
  ck.meta.vocab_hash = in.get<std::uint64_t>();
  ck.meta.step = in.get<std::uint64_t>();

  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint header: ") + e.what());
  }
  // Refuse absurd headers before allocating.
  const std::size_t expected_bytes =
      8 * (d.embed_dim * (d.attr_dim + d.image_dim + d.vocab_size) + d.vocab_size * d.hidden_dim +
           4 * (d.hidden_dim * (d.embed_dim + d.hidden_dim + 1)));
  if (bytes.size() < expected_bytes) throw std::runtime_error("checkpoint truncated");

  ck.params = CaptionerParams(d);
  for (auto& block : ck.params.blocks()) {
    for (double& v : block.values) v = in.get<double>();
  }
  if (!in.at_end()) throw std::runtime_error("checkpoint has trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const CaptionerParams& params,
                     const CheckpointMeta& meta) {
  write_file_atomic(path, serialize_checkpoint(params, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::optional<std::string> check_compatible(const CheckpointMeta& meta, Variant variant,
                                            const ModelDims& dims, std::uint64_t vocab_hash) {
  if (meta.dims != dims) {
    throw std::runtime_error("checkpoint dimensions " + meta.dims.describe() +
                             " do not match session " + dims.describe());
  }
  if (meta.vocab_hash != vocab_hash) {
    throw std::runtime_error("checkpoint was trained with a different vocabulary");
  }
  if (meta.variant != variant) {
    return "checkpoint was trained as " + to_string(meta.variant) + " but is used as " +
           to_string(variant);
  }
  return std::nullopt;
}

}  // namespace lstma
