#pragma once

#include <cstdint>
#include <string>

#include "locrb/training.hpp"

namespace locrb {

/// Versioned binary basis container: magic "LOCRBBAS", format version, config fingerprint,
/// seed, grid sizes, then per subdomain the vector count, tags and column-major values.
struct BasisFile {
  ReducedBasis basis;
  std::uint64_t fingerprint = 0;
};

std::string serialize_basis(const ReducedBasis& rb, const GridHierarchy& grid, std::uint64_t fingerprint);
BasisFile deserialize_basis(const std::string& bytes, const Discretization& disc);

void save_basis(const std::string& path, const ReducedBasis& rb, const GridHierarchy& grid, std::uint64_t fingerprint);
/// Throws ConfigError on a malformed container or a grid that does not match `disc`.
BasisFile load_basis(const std::string& path, const Discretization& disc);

}  // namespace locrb
