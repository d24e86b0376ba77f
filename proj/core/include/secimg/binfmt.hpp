#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "secimg/sectioning.hpp"

namespace secimg {

// A contiguous stretch of addresses in a `.bytes` dump and where it landed
// in the concatenated buffer.
struct AddressRun {
  std::uint64_t address = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct ByteBuffer {
  std::vector<std::uint8_t> data;
  // Address of the first byte as printed in the source; 0 for raw PE files.
  std::uint64_t origin_address = 0;
  // One run per maximal address-contiguous stretch. Empty for raw PE input,
  // which is treated as a single run starting at origin_address.
  std::vector<AddressRun> runs;

  std::size_t size() const noexcept { return data.size(); }
  // Buffer offset of `address`, clamped into [0, size()]. Addresses falling
  // into a dump gap map to the start of the next run.
  std::size_t offset_of(std::uint64_t address) const noexcept;
  // One past the highest address the buffer covers.
  std::uint64_t end_address() const noexcept;
};

struct SectionHeaderRaw {
  std::string name;  // NUL-trimmed
  std::uint32_t virtual_address = 0;
  std::uint32_t virtual_size = 0;
  std::uint32_t raw_offset = 0;
  std::uint32_t raw_size = 0;
  std::uint32_t pointer_to_relocations = 0;
  std::uint32_t pointer_to_linenumbers = 0;
  std::uint16_t number_of_relocations = 0;
  std::uint16_t number_of_linenumbers = 0;
  std::uint32_t characteristics = 0;
};

enum class SectionSource : std::uint8_t { PeHeaderTable, AsmLinePrefix };

struct SectionRecord {
  std::string name;
  SectionCategory category = SectionCategory::Other;
  std::size_t start = 0;
  std::size_t length = 0;
  SectionSource source = SectionSource::PeHeaderTable;
  // Raw flag word; absent for `.asm` derived records.
  std::optional<std::uint32_t> characteristics;
  // Position in the PE section table before sorting by raw offset.
  std::optional<std::size_t> table_index;

  std::size_t end() const noexcept { return start + length; }
};

struct SectionedBinary {
  std::string sample_id;
  ByteBuffer buffer;
  // Sorted by start, pairwise disjoint, each inside the buffer.
  std::vector<SectionRecord> sections;
  std::optional<ByteSpan> header_span;
};

// Section table as stored in the file, in table order.
struct PeSectionTable {
  std::size_t table_offset = 0;
  std::vector<SectionHeaderRaw> headers;
};

PeSectionTable read_pe_section_table(std::span<const std::uint8_t> raw);

// Throws MalformedPe when the image is not a loadable PE.
SectionedBinary parse_pe(ByteBuffer raw,
                         const SectionCategorizer& categorizer = SectionCategorizer::builtin());

// BIG-2015 hex dump: `<address> <tok>{0,16}`, tokens are two hex digits or
// "??" (read as 0x00). Throws MalformedBytesLine.
ByteBuffer parse_bytes_file(std::istream& text);
ByteBuffer parse_bytes_text(std::string_view text);

// Recovers sections from the `segname:address` prefixes of an IDA listing.
// Throws AsmBufferMismatch if fewer than half the listed addresses fall in
// the buffer's address range.
SectionedBinary parse_asm_sections(std::istream& text, ByteBuffer buffer,
                                   const SectionCategorizer& categorizer =
                                       SectionCategorizer::builtin());

// Loaders that open the files and tag the result with `sample_id`. I/O
// failures raise IoError.
ByteBuffer read_file_bytes(const std::string& path);
SectionedBinary load_pe_file(const std::string& path, const std::string& sample_id,
                             const SectionCategorizer& categorizer = SectionCategorizer::builtin());
SectionedBinary load_big2015_pair(const std::string& bytes_path, const std::string& asm_path,
                                  const std::string& sample_id,
                                  const SectionCategorizer& categorizer =
                                      SectionCategorizer::builtin());

// Checks the SectionedBinary layout invariants; returns a description of
// the first violation or nullopt.
std::optional<std::string> validate_layout(const SectionedBinary& bin);

}  // namespace secimg
