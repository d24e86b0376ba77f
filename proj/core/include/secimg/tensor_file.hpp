#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "secimg/segmentation.hpp"

namespace secimg {

// MSIT container, little-endian throughout:
//   "MSIT" | u32 version=1 | u8 dtype=1 (uint8) | u32 channels | u32 height |
//   u32 width | channels*height*width bytes, channel-major then row-major.
namespace msit {
inline constexpr char kMagic[4] = {'M', 'S', 'I', 'T'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint8_t kDtypeU8 = 1;
inline constexpr std::size_t kHeaderSize = 4 + 4 + 1 + 12;
}  // namespace msit

struct TensorFile {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> payload;
};

void write_tensor(std::ostream& out, const TensorFile& tensor);
// Throws DataError on a bad header or truncated payload.
TensorFile read_tensor(std::istream& in);

TensorFile to_tensor(const ChannelStack& stack);
ChannelStack from_tensor(const TensorFile& tensor, std::string sample_id);

// Writes `stack` to out_path. Throws IoError.
void export_stack(const ChannelStack& stack, const std::string& out_path);
// The sample id is taken from the file name with its `.msit` suffix removed.
ChannelStack import_stack(const std::string& path);

// Writes `<sample_id>.c<index>.png` per channel into out_dir; returns the
// paths written. Throws IoError.
std::vector<std::string> export_png_channels(const ChannelStack& stack,
                                             const std::string& out_dir);
// Reads an 8-bit grayscale PNG back (used by tests and tooling).
GrayImage read_png_gray(const std::string& path);

}  // namespace secimg
