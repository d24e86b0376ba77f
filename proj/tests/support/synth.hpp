#pragma once

// Generators for synthetic samples used by property and end-to-end tests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "secimg/binfmt.hpp"

namespace secimg::testing {

inline const std::vector<std::string>& synthetic_section_names() {
  static const std::vector<std::string> names = {".text", ".rdata", ".data", ".rsrc",
                                                 ".idata", ".reloc", "UPX0",  "CODE"};
  return names;
}

// A SectionedBinary whose header span and sections tile the whole buffer.
// Section lengths lie in [0, max_len]; zero-length sections are kept.
inline SectionedBinary random_covered_binary(std::mt19937_64& rng, std::size_t max_len = 65536,
                                             bool with_header = true) {
  std::uniform_int_distribution<int> count_dist(1, 8);
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> header_dist(0, 1024);
  std::uniform_int_distribution<int> byte_dist(0, 255);
  std::uniform_int_distribution<std::size_t> name_dist(0, synthetic_section_names().size() - 1);

  SectionedBinary bin;
  bin.sample_id = "synthetic";
  std::size_t offset = 0;
  if (with_header) {
    const std::size_t h = header_dist(rng);
    bin.header_span = ByteSpan{0, h};
    offset = h;
  }
  const int n = count_dist(rng);
  for (int i = 0; i < n; ++i) {
    SectionRecord rec;
    rec.name = synthetic_section_names()[name_dist(rng)];
    rec.category = categorize_section(rec.name, std::nullopt);
    rec.start = offset;
    rec.length = len_dist(rng);
    offset += rec.length;
    bin.sections.push_back(rec);
  }
  bin.buffer.data.resize(offset);
  for (auto& b : bin.buffer.data) b = static_cast<std::uint8_t>(byte_dist(rng));
  return bin;
}

// BIG-2015 style hex dump of `data` starting at `origin`.
inline std::string to_bytes_text(const std::vector<std::uint8_t>& data, std::uint64_t origin,
                                 const std::vector<bool>* unknown = nullptr) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < data.size(); i += 16) {
    std::snprintf(buf, sizeof(buf), "%08llX", static_cast<unsigned long long>(origin + i));
    out += buf;
    for (std::size_t j = i; j < std::min(i + 16, data.size()); ++j) {
      if (unknown && (*unknown)[j]) {
        out += " ??";
      } else {
        std::snprintf(buf, sizeof(buf), " %02X", data[j]);
        out += buf;
      }
    }
    out += "\r\n";
  }
  return out;
}

struct AsmSection {
  std::string name;
  std::size_t start = 0;
  std::size_t length = 0;
};

// IDA-style listing: one `name:ADDR` line per 16 bytes of each section,
// with the first bytes listed and a pseudo instruction.
inline std::string to_asm_text(const std::vector<std::uint8_t>& data, std::uint64_t origin,
                               const std::vector<AsmSection>& sections) {
  std::string out;
  char buf[64];
  for (const auto& s : sections) {
    std::snprintf(buf, sizeof(buf), "%s:%08llX ; Segment type: Pure code\r\n", s.name.c_str(),
                  static_cast<unsigned long long>(origin + s.start));
    out += buf;
    for (std::size_t off = s.start; off < s.start + s.length; off += 16) {
      std::snprintf(buf, sizeof(buf), "%s:%08llX", s.name.c_str(),
                    static_cast<unsigned long long>(origin + off));
      out += buf;
      const std::size_t n = std::min<std::size_t>(4, s.start + s.length - off);
      for (std::size_t j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof(buf), " %02X", data[off + j]);
        out += buf;
      }
      out += "    db 0\r\n";
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

struct FamilyProfile {
  std::uint8_t text_lo, text_hi;
  std::uint8_t rsrc_lo, rsrc_hi;
};

// Three families whose .text and .rsrc byte values occupy disjoint ranges.
inline const std::vector<FamilyProfile>& three_family_profiles() {
  static const std::vector<FamilyProfile> profiles = {
      {0x00, 0x3F, 0xC0, 0xFF},
      {0x60, 0x9F, 0x00, 0x3F},
      {0xC0, 0xFF, 0x60, 0x9F},
  };
  return profiles;
}

// Writes `<id>.bytes` and `<id>.asm` for a sample of the given family with
// sections .text, .rdata, .data, .rsrc of random sizes.
inline void write_family_sample(const std::filesystem::path& dir, const std::string& id,
                                const FamilyProfile& family, std::mt19937_64& rng) {
  constexpr std::uint64_t kOrigin = 0x401000;
  std::uniform_int_distribution<std::size_t> len(4096, 16384);
  const std::size_t text = len(rng), rdata = len(rng) / 2, data = len(rng) / 2, rsrc = len(rng);
  std::vector<AsmSection> sections = {{".text", 0, text},
                                      {".rdata", text, rdata},
                                      {".data", text + rdata, data},
                                      {".rsrc", text + rdata + data, rsrc}};
  std::vector<std::uint8_t> bytes(text + rdata + data + rsrc);
  std::uniform_int_distribution<int> text_bytes(family.text_lo, family.text_hi);
  std::uniform_int_distribution<int> rsrc_bytes(family.rsrc_lo, family.rsrc_hi);
  std::uniform_int_distribution<int> any(0, 255);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i < text) {
      bytes[i] = static_cast<std::uint8_t>(text_bytes(rng));
    } else if (i >= text + rdata + data) {
      bytes[i] = static_cast<std::uint8_t>(rsrc_bytes(rng));
    } else {
      bytes[i] = static_cast<std::uint8_t>(any(rng));
    }
  }
  write_file(dir / (id + ".bytes"), to_bytes_text(bytes, kOrigin));
  write_file(dir / (id + ".asm"), to_asm_text(bytes, kOrigin, sections));
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("secimg-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace secimg::testing
