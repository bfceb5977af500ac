#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lstma/captioner.hpp"

namespace lstma {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  Variant variant = Variant::A1;
  ModelDims dims;
  std::uint64_t vocab_hash = 0;
  std::uint64_t step = 0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  CaptionerParams params;
  CheckpointMeta meta;
};

// Layout (little-endian): "LSTA", u32 version, u64 x5 dims
// (D_v, D_a, D_s, D_e, H), u32 variant, u64 vocab hash, u64 step, then every
// parameter block in CaptionerParams::blocks() order as f64.
std::string serialize_checkpoint(const CaptionerParams& params, const CheckpointMeta& meta);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const CaptionerParams& params,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws if the checkpoint's dimensions or vocabulary differ from the
/// session's. A variant mismatch with matching dimensions is allowed and
/// reported as a warning message.
std::optional<std::string> check_compatible(const CheckpointMeta& meta, Variant variant,
                                            const ModelDims& dims, std::uint64_t vocab_hash);

}  // namespace lstma
