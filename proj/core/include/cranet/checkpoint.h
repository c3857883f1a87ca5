#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "cranet/model.h"

namespace cranet {

// Binary layout (all integers and floats little-endian):
//   "CRAE" | u32 version | u32 mode | u32 orientation | u64 N | u64 M | u64 d_p
//   | f64[] V, W, [T|U], c, b | u64 byte length | UTF-8 "key=value\n" lines
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  HyperParams hyper;
  std::size_t vector_count = 0;  // M: number of interaction vectors trained on

  bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cranet
