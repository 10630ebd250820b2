#include "treenet/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "treenet/error.hpp"
#include "treenet/parallel.hpp"

namespace treenet {

ImageRGB8::ImageRGB8(std::size_t width, std::size_t height, std::vector<Rgb8> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ < 3 || height_ < 3)
    throw Error(ErrorCode::InvalidArgument, "image must be at least 3x3");
  if (pixels_.size() != width_ * height_)
    throw Error(ErrorCode::DimensionMismatch, "pixel count does not match dimensions");
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  std::optional<unsigned long> next_number() {
    skip_space_and_comments();
    std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > (1UL << 31)) return std::nullopt;
      ++pos_;
    }
    if (pos_ == start) return std::nullopt;
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  bool consume_single_space() {
    if (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageRGB8 decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw Error(ErrorCode::BadMagic, "expected binary PPM (P6)");
  HeaderReader header(bytes);
  auto width = header.next_number();
  auto height = header.next_number();
  auto maxval = header.next_number();
  if (!width || !height || !maxval) throw Error(ErrorCode::TruncatedPixelData, "malformed PPM header");
  if (*maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(*maxval));
  if (!header.consume_single_space()) throw Error(ErrorCode::TruncatedPixelData, "missing raster");

  const std::size_t n = static_cast<std::size_t>(*width) * static_cast<std::size_t>(*height);
  const std::size_t offset = header.position();
  if (bytes.size() - offset < 3 * n)
    throw Error(ErrorCode::TruncatedPixelData,
                "expected " + std::to_string(n) + " pixels, found " +
                    std::to_string((bytes.size() - offset) / 3));
  std::vector<Rgb8> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    pixels[i] = {static_cast<std::uint8_t>(bytes[offset + 3 * i]),
                 static_cast<std::uint8_t>(bytes[offset + 3 * i + 1]),
                 static_cast<std::uint8_t>(bytes[offset + 3 * i + 2])};
  }
  return ImageRGB8(*width, *height, std::move(pixels));
}

ImageRGB8 load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

std::string encode_ppm(const ImageRGB8& image) {
  std::ostringstream out;
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (const Rgb8& p : image.pixels()) {
    out.put(static_cast<char>(p.r));
    out.put(static_cast<char>(p.g));
    out.put(static_cast<char>(p.b));
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Features

std::vector<std::uint8_t> grayscale(const ImageRGB8& image) {
  std::vector<std::uint8_t> gray;
  gray.reserve(image.pixels().size());
  for (const Rgb8& p : image.pixels()) {
    const unsigned weighted = 299u * p.r + 587u * p.g + 114u * p.b + 500u;
    gray.push_back(static_cast<std::uint8_t>(weighted / 1000u));
  }
  return gray;
}

const std::array<std::uint8_t, 256>& uniform_lbp_bins() {
  static const std::array<std::uint8_t, 256> table = [] {
    std::array<std::uint8_t, 256> bins{};
    std::uint8_t next = 0;
    for (unsigned code = 0; code < 256; ++code) {
      const unsigned rotated = ((code >> 1) | (code << 7)) & 0xFFu;
      const int transitions = __builtin_popcount(code ^ rotated);
      bins[code] = transitions <= 2 ? next++ : static_cast<std::uint8_t>(kLbpBins - 1);
    }
    return bins;
  }();
  return table;
}

std::uint8_t lbp_code(const std::vector<std::uint8_t>& gray, std::size_t width, std::size_t x,
                      std::size_t y) {
  // E, NE, N, NW, W, SW, S, SE with y growing downward.
  static constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
  const std::uint8_t center = gray[y * width + x];
  std::uint8_t code = 0;
  for (int i = 0; i < 8; ++i) {
    const std::size_t nx = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(x) + kDx[i]);
    const std::size_t ny = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + kDy[i]);
    if (gray[ny * width + nx] >= center) code |= static_cast<std::uint8_t>(1u << i);
  }
  return code;
}

std::vector<double> texture_features(const ImageRGB8& image) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const std::size_t n = w * h;
  const auto gray = grayscale(image);

  std::vector<double> out;
  out.reserve(kTextureFeatureCount);

  std::array<std::uint64_t, kGrayBins> gray_hist{};
  for (std::uint8_t v : gray) ++gray_hist[v / 4];
  for (auto c : gray_hist) out.push_back(static_cast<double>(c) / static_cast<double>(n));

  std::array<std::uint64_t, kLbpBins> lbp_hist{};
  const auto& bins = uniform_lbp_bins();
  for (std::size_t y = 1; y + 1 < h; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) ++lbp_hist[bins[lbp_code(gray, w, x, y)]];
  const double interior = static_cast<double>((w - 2) * (h - 2));
  for (auto c : lbp_hist) out.push_back(static_cast<double>(c) / interior);

  // Integer sums keep the moments independent of pixel order.
  std::array<std::uint64_t, 3> sum{}, sum_sq{};
  for (const Rgb8& p : image.pixels()) {
    const std::uint64_t ch[3] = {p.r, p.g, p.b};
    for (int c = 0; c < 3; ++c) {
      sum[c] += ch[c];
      sum_sq[c] += ch[c] * ch[c];
    }
  }
  const double nn = static_cast<double>(n);
  for (int c = 0; c < 3; ++c) out.push_back(static_cast<double>(sum[c]) / (255.0 * nn));
  for (int c = 0; c < 3; ++c) {
    // n * sum(x^2) - sum(x)^2 >= 0 exactly in integers.
    const unsigned __int128 centered =
        static_cast<unsigned __int128>(n) * sum_sq[c] - static_cast<unsigned __int128>(sum[c]) * sum[c];
    out.push_back(std::sqrt(static_cast<double>(centered)) / (255.0 * nn));
  }
  return out;
}

std::vector<std::string> texture_feature_names() {
  std::vector<std::string> names;
  names.reserve(kTextureFeatureCount);
  for (std::size_t i = 0; i < kGrayBins; ++i) names.push_back("gray_hist_" + std::to_string(i));
  for (std::size_t i = 0; i < kLbpBins; ++i) names.push_back("lbp_" + std::to_string(i));
  for (const char* m : {"mean_r", "mean_g", "mean_b", "std_r", "std_g", "std_b"}) names.emplace_back(m);
  return names;
}

FeaturizeResult featurize_directory(const std::filesystem::path& root, std::size_t n_threads) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(ErrorCode::IoError, root.string() + " is not a directory");

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.size() < 2)
    throw Error(ErrorCode::DegenerateTraining, root.string() + " needs >= 2 class subdirectories");

  struct Item {
    fs::path path;
    ClassId label;
  };
  std::vector<Item> items;
  std::vector<std::string> class_names;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (auto& f : files) items.push_back({std::move(f), static_cast<ClassId>(class_names.size())});
    class_names.push_back(dir.filename().string());
  }

  std::vector<std::optional<std::vector<double>>> rows(items.size());
  parallel_for(items.size(), n_threads, [&](std::size_t i) {
    try {
      rows[i] = texture_features(load_ppm(items[i].path));
    } catch (const Error&) {
      rows[i].reset();
    }
  });

  std::vector<fs::path> unreadable;
  std::vector<std::size_t> per_class(class_names.size(), 0);
  std::vector<double> values;
  std::vector<ClassId> labels;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!rows[i]) {
      unreadable.push_back(items[i].path);
      continue;
    }
    values.insert(values.end(), rows[i]->begin(), rows[i]->end());
    labels.push_back(items[i].label);
    ++per_class[items[i].label];
  }
  for (std::size_t k = 0; k < class_names.size(); ++k)
    if (per_class[k] == 0) throw Error(ErrorCode::EmptyClass, (root / class_names[k]).string());

  const std::size_t n = labels.size();
  return {Dataset(Matrix(n, kTextureFeatureCount, std::move(values)), std::move(labels),
                  std::move(class_names), texture_feature_names()),
          std::move(unreadable)};
}

}  // namespace treenet
