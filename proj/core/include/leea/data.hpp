#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leea/rng.hpp"
#include "leea/tensor.hpp"

namespace leea {

/// Labeled grayscale images [N, rows, cols]. Loaded data is scaled to [0, 1];
/// synthetic data is unbounded.
struct Dataset {
  std::string name;
  Tensor images;
  std::vector<std::uint8_t> labels;
  std::size_t num_classes = 10;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t rows() const { return images.dim(1); }
  std::size_t cols() const { return images.dim(2); }

  Dataset subset(std::span<const std::size_t> indices) const;
  /// First n examples in file order.
  Dataset head(std::size_t n) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Big-endian IDX image/label pair. Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);
Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes);

/// Inverse of parse_idx for data in [0, 1] (pixels rounded to the nearest byte).
std::vector<std::uint8_t> encode_idx_images(const Dataset& data);
std::vector<std::uint8_t> encode_idx_labels(const Dataset& data);
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

struct DataSplit {
  Dataset train;
  Dataset validation;
};

/// Seeded shuffle of all indices; the first n_train go to train, the next
/// n_val to validation.
DataSplit split(const Dataset& data, std::size_t n_train, std::size_t n_val, std::uint64_t seed);

struct Batch {
  Tensor images;                      // [n, rows, cols]
  Tensor one_hot;                     // [n, classes]
  std::vector<std::uint8_t> labels;   // [n]
  std::vector<std::size_t> indices;   // positions in the source dataset
};

Tensor one_hot(std::span<const std::uint8_t> labels, std::size_t classes);

Batch make_batch(const Dataset& data, std::vector<std::size_t> indices);

/// n examples drawn uniformly at random. Without replacement (the default)
/// indices within one batch are distinct.
Batch sample_batch(const Dataset& data, std::size_t n, Rng& rng, bool with_replacement = false);

struct BlobSpec {
  std::size_t classes = 10;
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t per_class = 100;
  /// Distance between class centers in units of the per-pixel noise std.
  double separation = 4.0;
};

/// Gaussian clusters: class k is centered at (separation / sqrt 2) * u_k with
/// u_k a random unit vector, plus unit-variance isotropic noise. Examples are
/// interleaved by class.
Dataset synthetic_blobs(const BlobSpec& spec, std::uint64_t seed);

}  // namespace leea
