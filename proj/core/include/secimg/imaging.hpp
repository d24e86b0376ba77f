#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace secimg {

// Row-major 8-bit image; pixels().size() == width() * height() always.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t height, std::size_t width, std::uint8_t fill = 0);
  GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return std::span<const std::uint8_t>(pixels_).subspan(r * width_, width_);
  }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct WidthScheme {
  enum class Kind : std::uint8_t { NatarajTable, Sqrt, Fixed };

  Kind kind = Kind::Fixed;
  std::size_t fixed_width = 1024;

  static WidthScheme nataraj() { return {Kind::NatarajTable, 0}; }
  static WidthScheme sqrt() { return {Kind::Sqrt, 0}; }
  // Throws InvalidSize for width 0.
  static WidthScheme fixed(std::size_t width);

  std::size_t width_for(std::uint64_t file_size) const;
};

// Size-banded width table, half-open bands with 1KB = 1024 bytes.
// Throws InvalidSize for 0.
std::size_t width_nataraj(std::uint64_t file_size);

// round-half-up(sqrt(file_size)), at least 1. Throws InvalidSize for 0.
std::size_t width_sqrt(std::uint64_t file_size);

// Bytes fill rows left to right, top to bottom; the tail is zero padded.
// An empty buffer gives a single zero row.
GrayImage rasterize(std::span<const std::uint8_t> bytes, std::size_t width);

struct ResizeOptions {
  // false: pixel centers at (i + 0.5) * scale - 0.5, edges clamped.
  // true: corner pixels of input and output coincide.
  bool align_corners = false;
};

// Bilinear resampling in double precision; results rounded half up.
GrayImage resize(const GrayImage& img, std::size_t target_h, std::size_t target_w,
                 ResizeOptions options = {});

}  // namespace secimg
