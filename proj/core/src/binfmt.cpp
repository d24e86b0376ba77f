#include "secimg/binfmt.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "secimg/error.hpp"

namespace secimg {

namespace {

constexpr std::size_t kDosHeaderSize = 0x40;
constexpr std::size_t kLfanewOffset = 0x3C;
constexpr std::size_t kCoffHeaderSize = 20;
constexpr std::size_t kSectionHeaderSize = 40;
constexpr std::size_t kMaxBytesPerLine = 16;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_upper_hex(char c) noexcept { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); }

bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::optional<std::uint64_t> parse_hex(std::string_view s) {
  if (s.empty() || s.size() > 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    const int d = hex_value(c);
    if (d < 0) return std::nullopt;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

// Splits `line` into whitespace-separated tokens.
void tokenize(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
}

std::string read_stream(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++lineno;
    fn(lineno, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace

std::size_t ByteBuffer::offset_of(std::uint64_t address) const noexcept {
  if (runs.empty()) {
    if (address <= origin_address) return 0;
    const std::uint64_t rel = address - origin_address;
    return rel >= data.size() ? data.size() : static_cast<std::size_t>(rel);
  }
  for (const auto& run : runs) {
    if (address < run.address) return run.offset;
    if (address < run.address + run.length) {
      return run.offset + static_cast<std::size_t>(address - run.address);
    }
  }
  return data.size();
}

std::uint64_t ByteBuffer::end_address() const noexcept {
  if (runs.empty()) return origin_address + data.size();
  return runs.back().address + runs.back().length;
}

PeSectionTable read_pe_section_table(std::span<const std::uint8_t> raw) {
  if (raw.size() < 2 || raw[0] != 0x4D || raw[1] != 0x5A) {
    throw MalformedPe("missing MZ signature");
  }
  if (raw.size() < kDosHeaderSize) throw MalformedPe("truncated DOS header");
  const std::uint64_t lfanew = read_u32(raw, kLfanewOffset);
  if (lfanew + 4 + kCoffHeaderSize > raw.size()) {
    throw MalformedPe("PE header offset points outside the file");
  }
  const auto pe = static_cast<std::size_t>(lfanew);
  if (raw[pe] != 'P' || raw[pe + 1] != 'E' || raw[pe + 2] != 0 || raw[pe + 3] != 0) {
    throw MalformedPe("missing PE signature");
  }
  const std::size_t coff = pe + 4;
  const std::uint16_t section_count = read_u16(raw, coff + 2);
  const std::uint16_t optional_size = read_u16(raw, coff + 16);
  const std::uint64_t table = static_cast<std::uint64_t>(coff) + kCoffHeaderSize + optional_size;
  if (table + static_cast<std::uint64_t>(section_count) * kSectionHeaderSize > raw.size()) {
    throw MalformedPe("section table extends past end of file");
  }

  PeSectionTable out;
  out.table_offset = static_cast<std::size_t>(table);
  out.headers.reserve(section_count);
  for (std::size_t i = 0; i < section_count; ++i) {
    const std::size_t off = out.table_offset + i * kSectionHeaderSize;
    SectionHeaderRaw h;
    const char* name = reinterpret_cast<const char*>(raw.data() + off);
    h.name.assign(name, strnlen(name, 8));
    h.virtual_size = read_u32(raw, off + 8);
    h.virtual_address = read_u32(raw, off + 12);
    h.raw_size = read_u32(raw, off + 16);
    h.raw_offset = read_u32(raw, off + 20);
    h.pointer_to_relocations = read_u32(raw, off + 24);
    h.pointer_to_linenumbers = read_u32(raw, off + 28);
    h.number_of_relocations = read_u16(raw, off + 32);
    h.number_of_linenumbers = read_u16(raw, off + 34);
    h.characteristics = read_u32(raw, off + 36);
    if (static_cast<std::uint64_t>(h.raw_offset) + h.raw_size > raw.size()) {
      throw MalformedPe("section '" + h.name + "' raw data lies outside the file");
    }
    out.headers.push_back(std::move(h));
  }
  return out;
}

SectionedBinary parse_pe(ByteBuffer raw, const SectionCategorizer& categorizer) {
  const PeSectionTable table = read_pe_section_table(raw.data);

  SectionedBinary bin;
  bin.sections.reserve(table.headers.size());
  for (std::size_t i = 0; i < table.headers.size(); ++i) {
    const auto& h = table.headers[i];
    SectionRecord rec;
    rec.name = h.name;
    rec.category = categorizer.categorize(h.name, CharacteristicsFlags::decode(h.characteristics));
    rec.start = h.raw_offset;
    rec.length = h.raw_size;
    rec.source = SectionSource::PeHeaderTable;
    rec.characteristics = h.characteristics;
    rec.table_index = i;
    bin.sections.push_back(std::move(rec));
  }
  std::stable_sort(bin.sections.begin(), bin.sections.end(),
                   [](const SectionRecord& a, const SectionRecord& b) { return a.start < b.start; });

  // Raw ranges that overlap an earlier section are trimmed to start where
  // the earlier one ends.
  std::size_t covered_end = 0;
  for (auto& rec : bin.sections) {
    if (rec.length == 0) continue;
    if (rec.start < covered_end) {
      const std::size_t end = std::max(rec.end(), covered_end);
      spdlog::warn("PE section '{}' overlaps a previous section; trimmed", rec.name);
      rec.start = covered_end;
      rec.length = end - covered_end;
    }
    covered_end = std::max(covered_end, rec.end());
  }
  std::stable_sort(bin.sections.begin(), bin.sections.end(),
                   [](const SectionRecord& a, const SectionRecord& b) { return a.start < b.start; });

  std::size_t first_data = raw.size();
  for (const auto& rec : bin.sections) {
    if (rec.length > 0) first_data = std::min(first_data, rec.start);
  }
  bin.header_span = ByteSpan{0, first_data};
  bin.buffer = std::move(raw);
  return bin;
}

ByteBuffer parse_bytes_text(std::string_view text) {
  ByteBuffer buf;
  buf.data.reserve(text.size() / 3);
  std::vector<std::string_view> tokens;
  std::optional<std::uint64_t> previous_address;
  std::size_t gaps = 0;

  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    tokenize(line, tokens);
    if (tokens.empty()) return;
    const auto address = parse_hex(tokens[0]);
    if (!address) {
      throw MalformedBytesLine(lineno, "bad address '" + std::string(tokens[0]) + "'");
    }
    if (tokens.size() - 1 > kMaxBytesPerLine) {
      throw MalformedBytesLine(lineno, "more than 16 byte tokens");
    }
    if (previous_address && *address <= *previous_address) {
      throw MalformedBytesLine(lineno, "address does not increase");
    }
    if (!buf.runs.empty() && *address < buf.end_address()) {
      throw MalformedBytesLine(lineno, "address overlaps previous line");
    }
    previous_address = *address;

    if (buf.runs.empty()) {
      buf.origin_address = *address;
      buf.runs.push_back({*address, 0, 0});
    } else if (*address != buf.end_address()) {
      ++gaps;
      buf.runs.push_back({*address, buf.data.size(), 0});
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      if (tok == "??") {
        buf.data.push_back(0);
        continue;
      }
      const int hi = tok.size() == 2 ? hex_value(tok[0]) : -1;
      const int lo = tok.size() == 2 ? hex_value(tok[1]) : -1;
      if (hi < 0 || lo < 0) {
        throw MalformedBytesLine(lineno, "bad byte token '" + std::string(tok) + "'");
      }
      buf.data.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    buf.runs.back().length += tokens.size() - 1;
  });

  if (gaps > 0) {
    spdlog::warn(".bytes dump has {} address gap(s); bytes concatenated without padding", gaps);
  }
  return buf;
}

ByteBuffer parse_bytes_file(std::istream& text) { return parse_bytes_text(read_stream(text)); }

namespace {

struct AsmRun {
  std::string name;
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  std::size_t last_line_bytes = 0;
};

// Leading two-digit hex tokens after the address (IDA marks truncated byte
// listings with a trailing '+').
std::size_t count_listed_bytes(std::string_view rest) {
  std::vector<std::string_view> tokens;
  tokenize(rest, tokens);
  std::size_t n = 0;
  for (auto tok : tokens) {
    if (!tok.empty() && tok.back() == '+') tok.remove_suffix(1);
    // IDA prints bytes in upper case; mnemonics such as "db" are lower case.
    if (tok.size() != 2 || !is_upper_hex(tok[0]) || !is_upper_hex(tok[1])) break;
    ++n;
  }
  return n;
}

}  // namespace

SectionedBinary parse_asm_sections(std::istream& text, ByteBuffer buffer,
                                   const SectionCategorizer& categorizer) {
  const std::string content = read_stream(text);
  std::vector<AsmRun> runs;
  std::size_t addressed = 0;
  std::size_t in_range = 0;
  const std::uint64_t lo = buffer.origin_address;
  const std::uint64_t hi = buffer.end_address();

  for_each_line(content, [&](std::size_t, std::string_view line) {
    const auto colon = line.find(':');
    if (colon == 0 || colon == std::string_view::npos) return;
    const std::string_view seg = line.substr(0, colon);
    if (std::any_of(seg.begin(), seg.end(), [](char c) { return is_space(c); })) return;
    std::size_t end = colon + 1;
    while (end < line.size() && hex_value(line[end]) >= 0) ++end;
    if (end < line.size() && !is_space(line[end])) return;
    const auto address = parse_hex(line.substr(colon + 1, end - colon - 1));
    if (!address) return;

    ++addressed;
    if (*address >= lo && *address < hi) ++in_range;

    const std::size_t listed = count_listed_bytes(line.substr(end));
    if (runs.empty() || runs.back().name != seg) {
      runs.push_back({std::string(seg), *address, *address, listed});
    } else {
      auto& run = runs.back();
      run.first = std::min(run.first, *address);
      if (*address >= run.last) {
        run.last = *address;
        run.last_line_bytes = listed;
      }
    }
  });

  if (addressed == 0) throw AsmBufferMismatch("listing has no segment:address lines");
  if (in_range * 2 < addressed) {
    throw AsmBufferMismatch(std::to_string(in_range) + " of " + std::to_string(addressed) +
                            " listing addresses fall inside the .bytes range");
  }

  std::stable_sort(runs.begin(), runs.end(),
                   [](const AsmRun& a, const AsmRun& b) { return a.first < b.first; });

  std::vector<SectionRecord> records;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    const std::size_t start = buffer.offset_of(run.first);
    std::size_t stop = buffer.size();
    if (i + 1 < runs.size()) {
      // A run reaches the next run's first address or past its own last line,
      // whichever is further.
      const std::uint64_t natural_end = run.last + run.last_line_bytes;
      stop = buffer.offset_of(std::max(natural_end, runs[i + 1].first));
    }
    if (stop <= start) continue;
    SectionRecord rec;
    rec.name = run.name;
    rec.start = start;
    rec.length = stop - start;
    rec.source = SectionSource::AsmLinePrefix;
    records.push_back(std::move(rec));
  }

  // Merge overlaps into the earlier record, and join touching records that
  // share a name.
  std::vector<SectionRecord> merged;
  for (auto& rec : records) {
    if (!merged.empty()) {
      auto& prev = merged.back();
      if (rec.start < prev.end() || (rec.start == prev.end() && rec.name == prev.name)) {
        prev.length = std::max(prev.end(), rec.end()) - prev.start;
        continue;
      }
    }
    merged.push_back(std::move(rec));
  }
  for (auto& rec : merged) rec.category = categorizer.categorize(rec.name, std::nullopt);

  SectionedBinary bin;
  bin.buffer = std::move(buffer);
  bin.sections = std::move(merged);
  return bin;
}

ByteBuffer read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  ByteBuffer buf;
  buf.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return buf;
}

SectionedBinary load_pe_file(const std::string& path, const std::string& sample_id,
                             const SectionCategorizer& categorizer) {
  auto bin = parse_pe(read_file_bytes(path), categorizer);
  bin.sample_id = sample_id;
  return bin;
}

SectionedBinary load_big2015_pair(const std::string& bytes_path, const std::string& asm_path,
                                  const std::string& sample_id,
                                  const SectionCategorizer& categorizer) {
  std::ifstream bytes_in(bytes_path, std::ios::binary);
  if (!bytes_in) throw IoError("cannot open " + bytes_path);
  ByteBuffer buffer = parse_bytes_file(bytes_in);
  std::ifstream asm_in(asm_path, std::ios::binary);
  if (!asm_in) throw IoError("cannot open " + asm_path);
  auto bin = parse_asm_sections(asm_in, std::move(buffer), categorizer);
  bin.sample_id = sample_id;
  return bin;
}

std::optional<std::string> validate_layout(const SectionedBinary& bin) {
  const std::size_t size = bin.buffer.size();
  std::size_t covered = 0;
  if (bin.header_span) {
    if (bin.header_span->end() > size) return "header span exceeds buffer";
    covered = bin.header_span->end();
  }
  std::size_t previous_start = 0;
  for (const auto& rec : bin.sections) {
    if (rec.end() > size) return "section '" + rec.name + "' exceeds buffer";
    if (rec.start < previous_start) return "sections not sorted at '" + rec.name + "'";
    previous_start = rec.start;
    if (rec.length == 0) continue;
    if (rec.start < covered) return "section '" + rec.name + "' overlaps a previous span";
    covered = rec.end();
  }
  return std::nullopt;
}

}  // namespace secimg
