#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/tensor.hpp"

namespace forge {

enum class Split { train, test };

const char* to_string(Split split) noexcept;
Split parse_split(const std::string& text);

/// Labelled samples with values in [0, 1], stored row-major.
struct Dataset {
  Shape sample_shape;
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  Split split = Split::train;
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t features() const noexcept { return element_count(sample_shape); }

  /// All samples as an [N × features] tensor (ContractError when empty).
  Tensor inputs() const;
  Tensor inputs(std::span<const std::size_t> indices) const;
  std::span<const double> sample(std::size_t i) const;

  /// Samples `indices` in that order.
  Dataset take(std::span<const std::size_t> indices) const;
  /// The first `n` samples of a seeded permutation (all when n >= size).
  Dataset subset(std::size_t n, std::uint64_t seed) const;

  void validate() const;
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled by 1/255; samples have shape [1, rows, cols].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t classes = 10);
Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels, std::size_t classes = 10);

struct BlobSpec {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t count = 1000;
  double separation = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian clusters clipped to [0,1]^dim. Class centres depend only on
/// `spec.seed`, so train and test splits share them; samples differ by split.
/// Per-coordinate noise std is 0.15 / separation.
Dataset synth_blobs(const BlobSpec& spec, Split split = Split::train);

inline constexpr std::string_view kDatasetFormat = "forge-dataset";
inline constexpr int kDatasetFormatVersion = 1;

std::string serialize_dataset(const Dataset& data);
Dataset parse_dataset(std::string_view text);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace forge
