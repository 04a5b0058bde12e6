#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "koopcast/linalg.hpp"

namespace koopcast {

// Named map of parameter tensors. Vectors are stored as n x 1 matrices,
// scalars as 1 x 1. std::map keeps key order fixed, so serialization and
// optimizer sweeps are deterministic.
using ParamSet = std::map<std::string, Matrix>;

// Flat key-value text checkpoint:
//   line 1:            "koopcast-checkpoint v1"
//   meta lines:        "meta <key> <value>"     (keys in sorted order)
//   tensor lines:      "tensor <key> <rows> <cols> <v_00> <v_01> ..."
//                      (row-major, keys in sorted order, %.17g values)
// The sorted field order makes the encoding byte-exact for a given content.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParamSet tensors;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::string& path);

// %.17g rendering shared by every text artifact the project writes.
std::string format_double(double v);

}  // namespace koopcast
