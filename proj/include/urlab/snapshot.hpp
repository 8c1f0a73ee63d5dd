#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "urlab/adam.hpp"
#include "urlab/mlp.hpp"

namespace urlab::nn {

// Weight snapshot, little-endian binary:
//   magic "MLPSNAP1" (8 bytes)
//   u32 version (1)
//   u32 n_sizes, then n_sizes x u32 layer sizes
//   (n_sizes - 1) x u8 activation codes (0 identity, 1 relu, 2 tanh)
//   per layer: row-major float32 weights (out x in), then float32 biases
// The same block layout is embedded in agent checkpoints and ensemble files.
void save_mlp(std::ostream& out, const Mlp<float>& net);
Mlp<float> load_mlp(std::istream& in);

void save_mlp_file(const std::filesystem::path& path, const Mlp<float>& net);
Mlp<float> load_mlp_file(const std::filesystem::path& path);

// Optimizer block: u64 step count followed by float32 first/second moment
// arrays in layer order (weights then bias per layer).
void save_adam(std::ostream& out, const AdamOptimizer<float>& opt);
void load_adam(std::istream& in, AdamOptimizer<float>& opt);

}  // namespace urlab::nn
