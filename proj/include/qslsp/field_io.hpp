#pragma once

#include <filesystem>

#include "qslsp/grid.hpp"

namespace qslsp {

/// CSV with header `index,x1,x2,x3,value` (box) or `index,r,value` (radial).
void write_field_csv(const std::filesystem::path& path, const ScalarField& f);

/// Little-endian container: 32-byte header (magic "QSLSPFLD", u32 kind, u32 n,
/// f64 spacing, f64 extent) followed by the values. Kind 1 is radial, 2 a box
/// centred at the origin, 3 a box whose centre (3 x f64) follows the header.
void write_field_binary(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_field_binary(const std::filesystem::path& path);

}  // namespace qslsp
