#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lod/distribution.hpp"
#include "lod/state_space.hpp"

namespace lod {

/// Decoded IDX image file: `count` images of rows x cols unsigned bytes,
/// row-major.
struct ImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t image, std::size_t r, std::size_t c) const {
    return pixels[(image * rows + r) * cols + c];
  }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

/// Throws ParseError (with byte offset) on bad magic, truncated header or
/// payload, or dimensions whose product overflows.
ImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_images(const ImageSet& images);

/// Reads a whole file, transparently inflating gzip.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);
ImageSet load_idx_images(const std::filesystem::path& path);

/// Pixel-to-level rule. Equal-width bins: level = floor(v * levels / 256).
enum class QuantizationPolicy { kEqualWidth };

std::string_view to_string(QuantizationPolicy policy);
std::size_t quantize_pixel(std::uint8_t value, std::size_t levels,
                           QuantizationPolicy policy = QuantizationPolicy::kEqualWidth);

/// Rectangular patch at a fixed image location. Each pixel becomes one
/// observed variable (row-major within the patch) with `levels` states.
struct PatchSpec {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 2;
  std::size_t width = 2;
  std::size_t levels = 3;
  QuantizationPolicy policy = QuantizationPolicy::kEqualWidth;

  StateSpace space() const { return StateSpace::uniform(height * width, levels); }
  /// DomainError if the patch leaves a rows x cols image or levels < 2.
  void validate(std::size_t image_rows = 28, std::size_t image_cols = 28) const;
};

bool patches_overlap(const PatchSpec& a, const PatchSpec& b);

/// Every patch valid and pairwise disjoint, else DomainError.
void validate_patch_set(std::span<const PatchSpec> patches, std::size_t image_rows = 28, std::size_t image_cols = 28);

/// Eight disjoint 2x2 patches around the image center, on a 2 x 4 grid
/// (rows 10 and 16, columns 8, 12, 16 and 20).
std::vector<PatchSpec> default_patch_locations();

/// Empirical distribution of a sample: per-state counts, their total T and
/// the normalized pmf.
class EmpiricalDataset {
 public:
  EmpiricalDataset(StateSpace space, std::vector<std::uint64_t> counts);

  const StateSpace& space() const noexcept { return pmf_.space(); }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  const Pmf& pmf() const noexcept { return pmf_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  Pmf pmf_;
};

EmpiricalDataset quantize_and_extract(const ImageSet& images, const PatchSpec& spec);

/// `samples` draws from (1 - strength) * product + strength * modes, where
/// `product` has random per-variable marginals and `modes` puts random
/// weights on a few random states. Reproducible from `seed`.
EmpiricalDataset synthetic_dataset(std::uint64_t seed, const StateSpace& space, double correlation_strength,
                                   std::uint64_t samples = 60000);

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json dataset_to_json(const EmpiricalDataset& data);
EmpiricalDataset dataset_from_json(const nlohmann::json& doc);
void save_dataset(const EmpiricalDataset& data, const std::filesystem::path& path);
EmpiricalDataset load_dataset(const std::filesystem::path& path);

}  // namespace lod
