#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmvae/autodiff.hpp"
#include "gmvae/errors.hpp"
#include "gmvae/rng.hpp"

namespace gmvae::data {

/// Unsigned-byte 3-D IDX image set (the MNIST container format).
struct IdxImageSet {
    int count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

/// Parses a big-endian IDX buffer with magic 0x00000803. Wrong magic raises
/// format_error, short buffers raise a truncation format_error.
IdxImageSet parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_idx(const IdxImageSet& set);

/// Reads a file, inflating it first when it carries the gzip magic.
IdxImageSet load_idx_file(const std::string& path);
std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes);

struct BinarizedDataset {
    int count = 0, dim = 0;
    double threshold = 0.5;
    std::vector<std::uint8_t> bits;  // count * dim, values in {0, 1}
};

/// pixel/255 > threshold -> 1 else 0; threshold must lie in (0, 1).
BinarizedDataset binarize(const IdxImageSet& images, double threshold);

/// Seeded shuffle of [0, count), first n retained, fixed-size batches with the
/// last partial batch kept.
std::vector<std::vector<int>> make_batches(int count, int n, int batch_size, Rng& rng);

/// Rows of the dataset gathered into a [batch x dim] tensor of 0/1 values.
ad::Tensor gather(const BinarizedDataset& ds, const std::vector<int>& indices);

/// Deterministic 28x28 digit-glyph corpus in the IDX layout: ten bitmap-font
/// digits with position jitter, stroke dropout and speckle noise, so the
/// binarized images keep an irreducible stochastic floor.
IdxImageSet synth_digits(int count, std::uint64_t seed);

struct CheckpointBlock {
    std::string name;
    ad::Tensor tensor;
};

struct Checkpoint {
    std::string meta_json;  // caller-owned metadata document
    std::vector<CheckpointBlock> blocks;
};

/// Layout: magic "GMVAE01\n", JSON header {meta, blocks:[{name,rows,cols}]}
/// terminated by a NUL byte, then little-endian float64 blocks in declaration
/// order.
void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<CheckpointBlock>& blocks);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gmvae::data
