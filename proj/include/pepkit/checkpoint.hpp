#pragma once

#include <filesystem>

#include "pepkit/nn.hpp"

namespace pepkit {

struct Checkpoint {
  NetworkSpec spec;
  ParamVector params;
};

// Binary container, little-endian throughout:
//   magic "PEPCKPT1"
//   u32 layer count, then per layer: u32 input width, u32 output width,
//       u8 activation code (0 identity, 1 relu)
//   u64 parameter count P
//   P f64 values in layout order (weights row-major, then biases, per layer)
//   u32 CRC32 (zlib polynomial) of every preceding byte
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pepkit
