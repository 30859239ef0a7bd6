#pragma once

#include "mccop/gradcore/mlp.hpp"

#include <iosfwd>
#include <string>

namespace mccop {

// Binary parameter checkpoint, little-endian, version 1:
//
//   bytes 0..7   magic "MCCOPMLP"
//   u32          format version (1)
//   u32          activation (0 = softplus, 1 = relu)
//   f64          softplus beta
//   u32          spectral normalization flag (0/1)
//   u32          layer count N
//   N x (u32 outputs, u32 inputs)
//   per layer:   weight (outputs x inputs, row-major f64), bias (outputs f64),
//                u (outputs f64), v (inputs f64)
//
// Doubles are written as raw IEEE-754 bit patterns, so save/load is bit-exact.

inline constexpr char kCheckpointMagic[8] = {'M', 'C', 'C', 'O', 'P', 'M', 'L', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const MlpParameters<double>& params);
MlpParameters<double> read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const MlpParameters<double>& params);
MlpParameters<double> load_checkpoint(const std::string& path);

}  // namespace mccop
