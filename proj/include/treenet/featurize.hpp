#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "treenet/dataset.hpp"

namespace treenet {

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

/// 8-bit RGB raster, row-major. Both sides must be >= 3 pixels.
class ImageRGB8 {
 public:
  ImageRGB8(std::size_t width, std::size_t height, std::vector<Rgb8> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<Rgb8>& pixels() const noexcept { return pixels_; }
  const Rgb8& at(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Rgb8> pixels_;
};

/// Binary PPM ("P6", maxval 255) decoder.
ImageRGB8 load_ppm(const std::filesystem::path& path);
ImageRGB8 decode_ppm(const std::string& bytes);
std::string encode_ppm(const ImageRGB8& image);

/// Luma per pixel: floor(0.299 R + 0.587 G + 0.114 B + 0.5), evaluated in
/// exact integer arithmetic.
std::vector<std::uint8_t> grayscale(const ImageRGB8& image);

inline constexpr std::size_t kGrayBins = 64;
inline constexpr std::size_t kLbpBins = 59;
inline constexpr std::size_t kColorMoments = 6;
inline constexpr std::size_t kTextureFeatureCount = kGrayBins + kLbpBins + kColorMoments;

/// Maps each 8-bit LBP code to its histogram bin: the 58 uniform codes (at
/// most two circular 0/1 transitions) in ascending order, then 58 for the rest.
const std::array<std::uint8_t, 256>& uniform_lbp_bins();

/// LBP code of interior pixel (x, y). Neighbor i (bit i) starts east and
/// proceeds counter-clockwise; a neighbor >= center sets its bit.
std::uint8_t lbp_code(const std::vector<std::uint8_t>& gray, std::size_t width, std::size_t x,
                      std::size_t y);

/// 129 components: 64-bin gray histogram, 59-bin uniform LBP histogram (both
/// normalized to sum 1), then mean R,G,B and population std R,G,B of the
/// channels scaled to [0, 1].
std::vector<double> texture_features(const ImageRGB8& image);

std::vector<std::string> texture_feature_names();

struct FeaturizeResult {
  Dataset dataset;
  /// Files that failed to decode; they are skipped.
  std::vector<std::filesystem::path> unreadable;
};

/// One row per decodable image under root/<class>/; the class is the
/// subdirectory name. Rows are ordered lexicographically by path.
FeaturizeResult featurize_directory(const std::filesystem::path& root, std::size_t n_threads = 1);

}  // namespace treenet
