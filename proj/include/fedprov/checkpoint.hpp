#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedprov/models.hpp"
#include "fedprov/schema.hpp"

namespace fedprov {

/// A trained model plus the standardization its inputs need. Centralized and
/// local models carry one standardizer under the key "*"; federated models
/// carry one per province, since every client standardizes its own data.
struct Checkpoint {
  ParamVector params;
  std::vector<std::pair<std::string, Standardizer>> standardizers;

  /// The province's own standardizer, else "*", else nullptr.
  const Standardizer* standardizer_for(Province p) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary little-endian layout:
///   "FEDPROV\0"                      8-byte magic
///   u32 version                      currently 1
///   u8  family                       0 = logistic, 1 = mlp
///   u32 tensor count, then u64 rows, u64 cols per tensor
///   u32 standardizer count, then per entry: 4-byte key (ASCII, NUL padded),
///       14 f64 means, 14 f64 stds
///   u64 value count, then that many f64 parameter values in flatten order
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fedprov
