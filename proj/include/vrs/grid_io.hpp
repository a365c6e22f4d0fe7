#pragma once

#include <iosfwd>
#include <string>

#include "vrs/kernel_field.hpp"

namespace vrs {

// Binary layout (all little-endian):
//   char[8]  magic "VRSGRID1"
//   u64[3]   dims
//   f64[3]   spacing
//   f64[3]   origin
//   u8       space (0 = position, 1 = velocity)
//   u8       components (1 or 3)
//   u8[6]    zero padding
//   f64[...] values, x fastest, vector components interleaved per node
void write_grid(std::ostream& out, const GridField& field);
GridField read_grid(std::istream& in);

void save_grid(const std::string& path, const GridField& field);
GridField load_grid(const std::string& path);

}  // namespace vrs
