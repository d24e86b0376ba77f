#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace secimg {

struct SectionedBinary;

// Canonical channel order: HEADER < TEXT < RDATA < DATA < RSRC < OTHER.
enum class SectionCategory : std::uint8_t { Header, Text, Rdata, Data, Rsrc, Other };

inline constexpr std::array<SectionCategory, 6> kAllCategories = {
    SectionCategory::Header, SectionCategory::Text, SectionCategory::Rdata,
    SectionCategory::Data,   SectionCategory::Rsrc, SectionCategory::Other};

// "HEADER", "TEXT", ... as used in name-map files and diagnostics.
std::string_view category_name(SectionCategory cat) noexcept;
// Channel label as written in experiment names: "HEADER", ".text", ..., "others".
std::string_view category_label(SectionCategory cat) noexcept;
// Accepts either spelling above, case-insensitive.
std::optional<SectionCategory> parse_category(std::string_view text);

// IMAGE_SCN_* bits relevant to categorization.
namespace scn {
inline constexpr std::uint32_t kCntCode = 0x00000020;
inline constexpr std::uint32_t kCntInitializedData = 0x00000040;
inline constexpr std::uint32_t kCntUninitializedData = 0x00000080;
inline constexpr std::uint32_t kMemExecute = 0x20000000;
inline constexpr std::uint32_t kMemRead = 0x40000000;
inline constexpr std::uint32_t kMemWrite = 0x80000000;
}  // namespace scn

struct CharacteristicsFlags {
  bool code = false;
  bool initialized_data = false;
  bool uninitialized_data = false;
  bool execute = false;
  bool read = false;
  bool write = false;

  static CharacteristicsFlags decode(std::uint32_t word) noexcept;
  std::uint32_t encode() const noexcept;

  bool operator==(const CharacteristicsFlags&) const = default;
};

// Name-first section categorizer. Exact (case-sensitive) name lookup wins;
// unknown names fall back to the characteristics flags when available.
class SectionCategorizer {
 public:
  // Standard PE section names plus the CODE and .rodata aliases.
  static SectionCategorizer builtin();

  // Reads `name=CATEGORY` lines on top of the built-in map. Blank lines and
  // lines starting with '#' are ignored. Throws UsageError on a bad line.
  static SectionCategorizer from_config(std::istream& in);
  static SectionCategorizer from_config_file(const std::string& path);

  void set(std::string name, SectionCategory cat);
  std::optional<SectionCategory> lookup(std::string_view name) const;

  SectionCategory categorize(std::string_view name,
                             const std::optional<CharacteristicsFlags>& flags) const;

  const std::unordered_map<std::string, SectionCategory>& names() const noexcept {
    return names_;
  }

 private:
  std::unordered_map<std::string, SectionCategory> names_;
};

// Category implied by the flags alone.
SectionCategory categorize_by_flags(const CharacteristicsFlags& flags) noexcept;

// Categorizes with the built-in map.
SectionCategory categorize_section(std::string_view name,
                                   const std::optional<CharacteristicsFlags>& flags);

struct ByteSpan {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const noexcept { return start + length; }
  bool operator==(const ByteSpan&) const = default;
};

// Spans of every section of `cat` in file order. HEADER yields the header
// span when the binary has one.
std::vector<ByteSpan> category_spans(const SectionedBinary& bin, SectionCategory cat);

}  // namespace secimg
