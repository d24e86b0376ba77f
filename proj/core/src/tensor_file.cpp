#include "secimg/tensor_file.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "secimg/error.hpp"

namespace secimg {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("MSIT header truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw ShapeMismatch(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_tensor(std::ostream& out, const TensorFile& tensor) {
  const std::uint64_t expected =
      static_cast<std::uint64_t>(tensor.channels) * tensor.height * tensor.width;
  if (tensor.payload.size() != expected) {
    throw ShapeMismatch("MSIT payload size does not match its header");
  }
  out.write(msit::kMagic, 4);
  put_u32(out, msit::kVersion);
  out.put(static_cast<char>(msit::kDtypeU8));
  put_u32(out, tensor.channels);
  put_u32(out, tensor.height);
  put_u32(out, tensor.width);
  out.write(reinterpret_cast<const char*>(tensor.payload.data()),
            static_cast<std::streamsize>(tensor.payload.size()));
}

TensorFile read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, msit::kMagic, 4) != 0) {
    throw DataError("not an MSIT file");
  }
  const std::uint32_t version = get_u32(in);
  if (version != msit::kVersion) {
    throw DataError("unsupported MSIT version " + std::to_string(version));
  }
  const int dtype = in.get();
  if (dtype != msit::kDtypeU8) throw DataError("unsupported MSIT dtype " + std::to_string(dtype));
  TensorFile t;
  t.channels = get_u32(in);
  t.height = get_u32(in);
  t.width = get_u32(in);
  if (t.channels == 0 || t.height == 0 || t.width == 0) {
    throw DataError("MSIT header has a zero dimension");
  }
  constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 40;
  const std::uint64_t plane = std::uint64_t{t.height} * t.width;
  if (plane > kMaxPayload / t.channels) throw DataError("MSIT payload size is implausible");
  const std::uint64_t n = plane * t.channels;
  // Grows in bounded chunks so a corrupt header cannot force a huge allocation.
  constexpr std::size_t kChunk = std::size_t{1} << 24;
  const auto total = static_cast<std::size_t>(n);
  while (t.payload.size() < total) {
    const std::size_t have = t.payload.size();
    const std::size_t step = std::min(kChunk, total - have);
    t.payload.resize(have + step);
    if (!in.read(reinterpret_cast<char*>(t.payload.data() + have),
                 static_cast<std::streamsize>(step))) {
      throw DataError("MSIT payload truncated");
    }
  }
  return t;
}

TensorFile to_tensor(const ChannelStack& stack) {
  if (!stack.uniform()) throw ShapeMismatch("stack channels differ in size or stack is empty");
  TensorFile t;
  t.channels = checked_u32(stack.channel_count(), "channel count");
  t.height = checked_u32(stack.height(), "height");
  t.width = checked_u32(stack.width(), "width");
  t.payload.reserve(static_cast<std::size_t>(t.channels) * t.height * t.width);
  for (const auto& ch : stack.channels) {
    t.payload.insert(t.payload.end(), ch.pixels().begin(), ch.pixels().end());
  }
  return t;
}

ChannelStack from_tensor(const TensorFile& tensor, std::string sample_id) {
  ChannelStack stack;
  stack.sample_id = std::move(sample_id);
  const std::size_t plane = static_cast<std::size_t>(tensor.height) * tensor.width;
  for (std::size_t c = 0; c < tensor.channels; ++c) {
    const auto first = tensor.payload.begin() + static_cast<std::ptrdiff_t>(c * plane);
    stack.channels.emplace_back(tensor.height, tensor.width,
                                std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(plane)));
  }
  return stack;
}

void export_stack(const ChannelStack& stack, const std::string& out_path) {
  const TensorFile tensor = to_tensor(stack);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + out_path);
  write_tensor(out, tensor);
  out.flush();
  if (!out) throw IoError("write failed: " + out_path);
}

ChannelStack import_stack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string id = std::filesystem::path(path).filename().string();
  if (id.size() > 5 && id.ends_with(".msit")) id.resize(id.size() - 5);
  return from_tensor(read_tensor(in), std::move(id));
}

}  // namespace secimg
