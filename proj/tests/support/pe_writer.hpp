#pragma once

// Minimal PE32 image writer used to build test fixtures. Deliberately shares
// no code with the parser under test.

#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace secimg::testing {

struct PeSectionSpec {
  std::string name;  // up to 8 bytes
  std::uint32_t raw_offset = 0;
  std::uint32_t raw_size = 0;
  std::uint32_t characteristics = 0;
  std::uint32_t virtual_address = 0;
  std::uint32_t virtual_size = 0;
  std::uint8_t fill = 0xCC;  // section data byte
};

struct PeImageSpec {
  std::vector<PeSectionSpec> sections;
  std::uint32_t lfanew = 0x80;
  // Defaults to the end of the furthest section (at least 0x200).
  std::optional<std::size_t> file_size;
};

inline constexpr std::uint32_t kCode = 0x00000020;
inline constexpr std::uint32_t kInitData = 0x00000040;
inline constexpr std::uint32_t kUninitData = 0x00000080;
inline constexpr std::uint32_t kExec = 0x20000000;
inline constexpr std::uint32_t kRead = 0x40000000;
inline constexpr std::uint32_t kWrite = 0x80000000;

inline constexpr std::size_t kOptionalHeaderSize = 0xE0;

inline void put16(std::vector<std::uint8_t>& f, std::size_t off, std::uint16_t v) {
  f[off] = static_cast<std::uint8_t>(v);
  f[off + 1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put32(std::vector<std::uint8_t>& f, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) f[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Offset of the section table in images produced by build_pe.
inline std::size_t section_table_offset(const PeImageSpec& spec) {
  return spec.lfanew + 4 + 20 + kOptionalHeaderSize;
}

inline std::vector<std::uint8_t> build_pe(const PeImageSpec& spec) {
  std::size_t size = 0x200;
  for (const auto& s : spec.sections) {
    size = std::max<std::size_t>(size, static_cast<std::size_t>(s.raw_offset) + s.raw_size);
  }
  const std::size_t table_end = section_table_offset(spec) + 40 * spec.sections.size();
  size = std::max(size, table_end);
  for (const auto& s : spec.sections) {
    if (s.raw_size > 0 && s.raw_offset < table_end) {
      throw std::logic_error("fixture section data overlaps the section table");
    }
  }
  std::vector<std::uint8_t> f(std::max(size, spec.file_size.value_or(0)), 0);

  // DOS header.
  f[0] = 'M';
  f[1] = 'Z';
  put16(f, 0x02, 0x0090);
  put16(f, 0x04, 0x0003);
  put16(f, 0x08, 0x0004);
  put16(f, 0x0C, 0xFFFF);
  put16(f, 0x10, 0x00B8);
  put16(f, 0x18, 0x0040);
  put32(f, 0x3C, spec.lfanew);

  const std::size_t pe = spec.lfanew;
  f[pe] = 'P';
  f[pe + 1] = 'E';
  // COFF header.
  const std::size_t coff = pe + 4;
  put16(f, coff + 0, 0x014C);  // i386
  put16(f, coff + 2, static_cast<std::uint16_t>(spec.sections.size()));
  put16(f, coff + 16, static_cast<std::uint16_t>(kOptionalHeaderSize));
  put16(f, coff + 18, 0x0102);
  // Optional header (PE32).
  const std::size_t opt = coff + 20;
  put16(f, opt + 0, 0x010B);
  put32(f, opt + 16, 0x1000);      // AddressOfEntryPoint
  put32(f, opt + 28, 0x00400000);  // ImageBase
  put32(f, opt + 32, 0x1000);      // SectionAlignment
  put32(f, opt + 36, 0x200);       // FileAlignment
  put16(f, opt + 40, 4);           // MajorOperatingSystemVersion
  put16(f, opt + 48, 4);           // MajorSubsystemVersion
  std::uint32_t image_size = 0x1000;
  for (const auto& s : spec.sections) {
    image_size = std::max(image_size, s.virtual_address + ((s.virtual_size + 0xFFF) & ~0xFFFu));
  }
  put32(f, opt + 56, image_size);  // SizeOfImage
  put32(f, opt + 60, 0x200);       // SizeOfHeaders
  put16(f, opt + 68, 3);           // Subsystem: console
  put32(f, opt + 92, 16);          // NumberOfRvaAndSizes

  std::size_t entry = section_table_offset(spec);
  for (const auto& s : spec.sections) {
    std::memcpy(&f[entry], s.name.data(), std::min<std::size_t>(s.name.size(), 8));
    put32(f, entry + 8, s.virtual_size);
    put32(f, entry + 12, s.virtual_address);
    put32(f, entry + 16, s.raw_size);
    put32(f, entry + 20, s.raw_offset);
    put32(f, entry + 36, s.characteristics);
    entry += 40;
  }
  for (const auto& s : spec.sections) {
    for (std::size_t i = 0; i < s.raw_size && s.raw_offset + i < f.size(); ++i) {
      f[s.raw_offset + i] = s.fill;
    }
  }
  if (spec.file_size) f.resize(*spec.file_size);
  return f;
}

// The five fixtures used across the PE tests.
inline PeImageSpec standard_fixture() {
  PeImageSpec spec;
  spec.sections = {
      {".text", 0x200, 0x200, kCode | kExec | kRead, 0x1000, 0x1F0, 0x90},
      {".data", 0x400, 0x100, kInitData | kRead | kWrite, 0x2000, 0x100, 0x44},
  };
  return spec;
}

inline PeImageSpec disguised_fixture() {
  PeImageSpec spec;
  spec.lfanew = 0x40;
  spec.sections = {
      {".evil", 0x200, 0x400, kCode | kExec | kRead, 0x1000, 0x400, 0x90},
      {"zzro", 0x600, 0x200, kInitData | kRead, 0x2000, 0x200, 0x11},
      {"zzrw", 0x800, 0x200, kInitData | kRead | kWrite, 0x3000, 0x200, 0x22},
      {".rsrc", 0xA00, 0x200, kInitData | kRead, 0x4000, 0x200, 0x33},
  };
  return spec;
}

inline PeImageSpec zero_length_fixture() {
  PeImageSpec spec;
  spec.sections = {
      {".text", 0x200, 0x200, kCode | kExec | kRead, 0x1000, 0x200, 0x90},
      {".bss", 0, 0, kUninitData | kRead | kWrite, 0x2000, 0x800, 0},
      {".rdata", 0x400, 0x200, kInitData | kRead, 0x3000, 0x200, 0x55},
  };
  return spec;
}

inline PeImageSpec out_of_bounds_fixture() {
  PeImageSpec spec;
  spec.sections = {
      {".text", 0x200, 0x200, kCode | kExec | kRead, 0x1000, 0x200, 0x90},
      {".data", 0x400, 0x1000, kInitData | kRead | kWrite, 0x2000, 0x1000, 0x44},
  };
  spec.file_size = 0x600;
  return spec;
}

inline std::vector<std::uint8_t> non_pe_fixture() {
  std::vector<std::uint8_t> f(0x400, 0);
  const char elf[] = {0x7F, 'E', 'L', 'F', 1, 1, 1, 0};
  std::memcpy(f.data(), elf, sizeof(elf));
  return f;
}

}  // namespace secimg::testing
