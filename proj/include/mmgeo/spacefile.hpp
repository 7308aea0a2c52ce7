#pragma once

// Line-oriented text format for finite mm-spaces:
//
//   mmspace v1 n=3 mode=metric
//   w 1/4
//   w 0
//   w 0.75
//   d 0
//   d 1 0
//   d 2 1 0
//
// Distance row i lists dist[i][0..i], diagonal included, so a nonzero
// diagonal is reported instead of silently assumed away. Values may be
// decimals or p/q and are parsed exactly.

#include <iosfwd>
#include <optional>
#include <string>

#include "mmgeo/mmcore.hpp"

namespace mmgeo {

struct LoadedSpace {
  MMSpace space;
  /// Exact copy of the file's values; always present, since every decimal
  /// literal is a rational.
  std::optional<ExactMMSpace> exact;
};

LoadedSpace read_space(std::istream& in);
LoadedSpace read_space_file(const std::string& path);

void write_space(std::ostream& out, const MMSpace& X);
void write_space(std::ostream& out, const ExactMMSpace& X);
void write_space_file(const std::string& path, const MMSpace& X);

/// Shortest decimal that round-trips to the same double.
std::string format_real(double value);

}  // namespace mmgeo
