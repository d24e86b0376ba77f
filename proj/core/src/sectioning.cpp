#include "secimg/sectioning.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <spdlog/spdlog.h>

#include "secimg/binfmt.hpp"
#include "secimg/error.hpp"

namespace secimg {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view category_name(SectionCategory cat) noexcept {
  switch (cat) {
    case SectionCategory::Header: return "HEADER";
    case SectionCategory::Text: return "TEXT";
    case SectionCategory::Rdata: return "RDATA";
    case SectionCategory::Data: return "DATA";
    case SectionCategory::Rsrc: return "RSRC";
    case SectionCategory::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view category_label(SectionCategory cat) noexcept {
  switch (cat) {
    case SectionCategory::Header: return "HEADER";
    case SectionCategory::Text: return ".text";
    case SectionCategory::Rdata: return ".rdata";
    case SectionCategory::Data: return ".data";
    case SectionCategory::Rsrc: return ".rsrc";
    case SectionCategory::Other: return "others";
  }
  return "others";
}

std::optional<SectionCategory> parse_category(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "header") return SectionCategory::Header;
  if (s == "text" || s == ".text") return SectionCategory::Text;
  if (s == "rdata" || s == ".rdata") return SectionCategory::Rdata;
  if (s == "data" || s == ".data") return SectionCategory::Data;
  if (s == "rsrc" || s == ".rsrc") return SectionCategory::Rsrc;
  if (s == "other" || s == "others") return SectionCategory::Other;
  return std::nullopt;
}

CharacteristicsFlags CharacteristicsFlags::decode(std::uint32_t word) noexcept {
  CharacteristicsFlags f;
  f.code = (word & scn::kCntCode) != 0;
  f.initialized_data = (word & scn::kCntInitializedData) != 0;
  f.uninitialized_data = (word & scn::kCntUninitializedData) != 0;
  f.execute = (word & scn::kMemExecute) != 0;
  f.read = (word & scn::kMemRead) != 0;
  f.write = (word & scn::kMemWrite) != 0;
  return f;
}

std::uint32_t CharacteristicsFlags::encode() const noexcept {
  std::uint32_t w = 0;
  if (code) w |= scn::kCntCode;
  if (initialized_data) w |= scn::kCntInitializedData;
  if (uninitialized_data) w |= scn::kCntUninitializedData;
  if (execute) w |= scn::kMemExecute;
  if (read) w |= scn::kMemRead;
  if (write) w |= scn::kMemWrite;
  return w;
}

SectionCategory categorize_by_flags(const CharacteristicsFlags& flags) noexcept {
  if (flags.code || flags.execute) return SectionCategory::Text;
  if (flags.initialized_data && flags.read && !flags.write) return SectionCategory::Rdata;
  if (flags.initialized_data && flags.write) return SectionCategory::Data;
  return SectionCategory::Other;
}

SectionCategorizer SectionCategorizer::builtin() {
  SectionCategorizer c;
  c.set(".text", SectionCategory::Text);
  c.set(".rdata", SectionCategory::Rdata);
  c.set(".data", SectionCategory::Data);
  c.set(".rsrc", SectionCategory::Rsrc);
  for (const char* name : {".edata", ".idata", ".tls", ".bss", ".reloc"}) {
    c.set(name, SectionCategory::Other);
  }
  c.set("CODE", SectionCategory::Text);
  c.set(".rodata", SectionCategory::Rdata);
  return c;
}

SectionCategorizer SectionCategorizer::from_config(std::istream& in) {
  SectionCategorizer c = builtin();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("name map line " + std::to_string(lineno) + ": expected name=CATEGORY");
    }
    const std::string_view name = trim(view.substr(0, eq));
    const auto cat = parse_category(trim(view.substr(eq + 1)));
    if (name.empty() || !cat) {
      throw UsageError("name map line " + std::to_string(lineno) + ": bad entry '" +
                       std::string(view) + "'");
    }
    c.set(std::string(name), *cat);
  }
  return c;
}

SectionCategorizer SectionCategorizer::from_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open name map " + path);
  return from_config(in);
}

void SectionCategorizer::set(std::string name, SectionCategory cat) {
  // HEADER is the region before the first section, never a section itself.
  if (cat == SectionCategory::Header) {
    throw UsageError("section '" + name + "' cannot be mapped to HEADER");
  }
  names_.insert_or_assign(std::move(name), cat);
}

std::optional<SectionCategory> SectionCategorizer::lookup(std::string_view name) const {
  const auto it = names_.find(std::string(name));
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

SectionCategory SectionCategorizer::categorize(
    std::string_view name, const std::optional<CharacteristicsFlags>& flags) const {
  if (const auto by_name = lookup(name)) {
    if (flags) {
      const SectionCategory by_flags = categorize_by_flags(*flags);
      if (by_flags != *by_name && *by_name != SectionCategory::Other &&
          *by_name != SectionCategory::Rsrc) {
        spdlog::debug("section '{}': name says {}, flags say {}; using name", name,
                      category_name(*by_name), category_name(by_flags));
      }
    }
    return *by_name;
  }
  if (flags) return categorize_by_flags(*flags);
  return SectionCategory::Other;
}

SectionCategory categorize_section(std::string_view name,
                                   const std::optional<CharacteristicsFlags>& flags) {
  static const SectionCategorizer kBuiltin = SectionCategorizer::builtin();
  return kBuiltin.categorize(name, flags);
}

std::vector<ByteSpan> category_spans(const SectionedBinary& bin, SectionCategory cat) {
  std::vector<ByteSpan> spans;
  if (cat == SectionCategory::Header) {
    if (bin.header_span) spans.push_back(*bin.header_span);
    return spans;
  }
  for (const auto& rec : bin.sections) {
    if (rec.category == cat) spans.push_back({rec.start, rec.length});
  }
  return spans;
}

}  // namespace secimg
