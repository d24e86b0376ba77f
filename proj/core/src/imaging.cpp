#include "secimg/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "secimg/error.hpp"

namespace secimg {

GrayImage::GrayImage(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), pixels_(height * width, fill) {}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != height_ * width_) {
    throw ShapeMismatch("pixel count does not match " + std::to_string(height_) + "x" +
                        std::to_string(width_));
  }
}

WidthScheme WidthScheme::fixed(std::size_t width) {
  if (width == 0) throw InvalidSize("fixed width must be at least 1");
  return {Kind::Fixed, width};
}

std::size_t WidthScheme::width_for(std::uint64_t file_size) const {
  switch (kind) {
    case Kind::NatarajTable: return width_nataraj(file_size);
    case Kind::Sqrt: return width_sqrt(file_size);
    case Kind::Fixed: break;
  }
  if (fixed_width == 0) throw InvalidSize("fixed width must be at least 1");
  return fixed_width;
}

std::size_t width_nataraj(std::uint64_t file_size) {
  if (file_size == 0) throw InvalidSize("file size must be positive");
  constexpr std::uint64_t kKB = 1024;
  // Upper bound (exclusive) of each band and its width.
  constexpr std::array<std::pair<std::uint64_t, std::size_t>, 7> kBands = {{
      {10 * kKB, 32},
      {30 * kKB, 64},
      {60 * kKB, 128},
      {100 * kKB, 256},
      {200 * kKB, 384},
      {500 * kKB, 512},
      {1000 * kKB, 768},
  }};
  for (const auto& [upper, width] : kBands) {
    if (file_size < upper) return width;
  }
  return 1024;
}

std::size_t width_sqrt(std::uint64_t file_size) {
  if (file_size == 0) throw InvalidSize("file size must be positive");
  auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(file_size)));
  while (root * root > file_size) --root;
  while ((root + 1) * (root + 1) <= file_size) ++root;
  // sqrt(n) >= root + 1/2  <=>  n > root^2 + root for integer n.
  if (file_size > root * root + root) ++root;
  return static_cast<std::size_t>(std::max<std::uint64_t>(root, 1));
}

GrayImage rasterize(std::span<const std::uint8_t> bytes, std::size_t width) {
  if (width == 0) throw InvalidSize("raster width must be at least 1");
  const std::size_t height = std::max<std::size_t>(1, (bytes.size() + width - 1) / width);
  std::vector<std::uint8_t> pixels(height * width, 0);
  std::copy(bytes.begin(), bytes.end(), pixels.begin());
  return GrayImage(height, width, std::move(pixels));
}

namespace {

struct Tap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;  // weight of `hi`
};

std::vector<Tap> taps(std::size_t in, std::size_t out, bool align_corners) {
  std::vector<Tap> result(out);
  const double max_index = static_cast<double>(in - 1);
  for (std::size_t i = 0; i < out; ++i) {
    double src;
    if (align_corners) {
      src = out > 1 ? static_cast<double>(i) * max_index / static_cast<double>(out - 1) : 0.0;
    } else {
      src = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) -
            0.5;
    }
    src = std::clamp(src, 0.0, max_index);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    result[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return result;
}

}  // namespace

GrayImage resize(const GrayImage& img, std::size_t target_h, std::size_t target_w,
                 ResizeOptions options) {
  if (target_h == 0 || target_w == 0) throw InvalidSize("resize target must be positive");
  if (img.empty()) throw ShapeMismatch("cannot resize an empty image");
  if (img.height() == target_h && img.width() == target_w) return img;

  const auto rows = taps(img.height(), target_h, options.align_corners);
  const auto cols = taps(img.width(), target_w, options.align_corners);
  GrayImage out(target_h, target_w);
  for (std::size_t y = 0; y < target_h; ++y) {
    const Tap& ty = rows[y];
    const auto top = img.row(ty.lo);
    const auto bottom = img.row(ty.hi);
    for (std::size_t x = 0; x < target_w; ++x) {
      const Tap& tx = cols[x];
      const double upper = top[tx.lo] + (top[tx.hi] - static_cast<double>(top[tx.lo])) * tx.frac;
      const double lower =
          bottom[tx.lo] + (bottom[tx.hi] - static_cast<double>(bottom[tx.lo])) * tx.frac;
      const double v = upper + (lower - upper) * ty.frac;
      out.at(y, x) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace secimg
