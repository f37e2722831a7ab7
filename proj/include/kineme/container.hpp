#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace kineme {

// Self-describing binary container used for codebooks and trained models.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "KINECNTR"
//   u32           format version (currently 1)
//   u32           kind (1 = codebook, 2 = model)
//   u64           header length H
//   H bytes       UTF-8 JSON header: scalar metadata plus a "matrices" object
//                 mapping name -> {rows, cols, offset} into the blob
//   u64           blob length B
//   B bytes       dense matrices, column-major, 64-bit IEEE doubles, LE
//   u64           FNV-1a checksum of every preceding byte
//
// Readers reject wrong magic/kind, unsupported versions, and any
// truncation or corruption via the trailing checksum.

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint32_t kKindCodebook = 1;
inline constexpr std::uint32_t kKindModel = 2;

struct Container {
    std::uint32_t kind = 0;
    nlohmann::json meta;
    std::map<std::string, Eigen::MatrixXd> matrices;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path, std::uint32_t expected_kind);

}  // namespace kineme
