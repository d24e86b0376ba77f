#include <doctest.h>

#include <random>
#include <sstream>

#include "secimg/binfmt.hpp"
#include "secimg/error.hpp"
#include "secimg/sectioning.hpp"

using namespace secimg;

namespace {

CharacteristicsFlags flags(std::uint32_t word) { return CharacteristicsFlags::decode(word); }

constexpr std::uint32_t kCodeExecRead = scn::kCntCode | scn::kMemExecute | scn::kMemRead;

SectionRecord rec(std::string name, SectionCategory cat, std::size_t start, std::size_t length) {
  SectionRecord r;
  r.name = std::move(name);
  r.category = cat;
  r.start = start;
  r.length = length;
  return r;
}

}  // namespace

TEST_CASE("name table wins") {
  CHECK(categorize_section(".text", flags(kCodeExecRead)) == SectionCategory::Text);
  CHECK(categorize_section(".rdata", std::nullopt) == SectionCategory::Rdata);
  CHECK(categorize_section(".data", std::nullopt) == SectionCategory::Data);
  CHECK(categorize_section(".rsrc", std::nullopt) == SectionCategory::Rsrc);
  for (const char* other : {".edata", ".idata", ".tls", ".bss", ".reloc"}) {
    CHECK(categorize_section(other, std::nullopt) == SectionCategory::Other);
  }
  CHECK(categorize_section("CODE", std::nullopt) == SectionCategory::Text);
  CHECK(categorize_section(".rodata", std::nullopt) == SectionCategory::Rdata);
  CHECK(categorize_section(".bss", flags(scn::kCntUninitializedData | scn::kMemRead |
                                         scn::kMemWrite)) == SectionCategory::Other);
  // The name decides even when the flags disagree.
  CHECK(categorize_section(".rsrc", flags(kCodeExecRead)) == SectionCategory::Rsrc);
}

TEST_CASE("lookup is case-sensitive") {
  CHECK(categorize_section(".TEXT", std::nullopt) == SectionCategory::Other);
  CHECK(categorize_section(".TEXT", flags(kCodeExecRead)) == SectionCategory::Text);
}

TEST_CASE("unknown names fall back to flags") {
  CHECK(categorize_section(".evil", flags(kCodeExecRead)) == SectionCategory::Text);
  CHECK(categorize_section("x", flags(scn::kMemExecute)) == SectionCategory::Text);
  CHECK(categorize_section("x", flags(scn::kCntInitializedData | scn::kMemRead)) ==
        SectionCategory::Rdata);
  CHECK(categorize_section("x", flags(scn::kCntInitializedData | scn::kMemRead |
                                      scn::kMemWrite)) == SectionCategory::Data);
  CHECK(categorize_section("x", flags(scn::kCntInitializedData | scn::kMemWrite)) ==
        SectionCategory::Data);
  CHECK(categorize_section("x", flags(scn::kCntUninitializedData | scn::kMemRead |
                                      scn::kMemWrite)) == SectionCategory::Other);
  CHECK(categorize_section("x", flags(scn::kCntInitializedData)) == SectionCategory::Other);
  CHECK(categorize_section("x", flags(0)) == SectionCategory::Other);
  CHECK(categorize_section("UPX1", std::nullopt) == SectionCategory::Other);
}

TEST_CASE("flag fallback never yields HEADER or RSRC") {
  for (std::uint32_t bits = 0; bits < 64; ++bits) {
    std::uint32_t word = 0;
    const std::uint32_t all[] = {scn::kCntCode,  scn::kCntInitializedData,
                                 scn::kCntUninitializedData, scn::kMemExecute,
                                 scn::kMemRead,  scn::kMemWrite};
    for (int i = 0; i < 6; ++i) {
      if (bits & (1u << i)) word |= all[i];
    }
    const auto f = CharacteristicsFlags::decode(word);
    CHECK(f.encode() == word);
    const auto cat = categorize_by_flags(f);
    CHECK(cat != SectionCategory::Header);
    CHECK(cat != SectionCategory::Rsrc);
  }
}

TEST_CASE("decode ignores unrelated bits") {
  const auto f = CharacteristicsFlags::decode(0xFFFFFFFF);
  CHECK(f.code);
  CHECK(f.write);
  CHECK(f.encode() == (scn::kCntCode | scn::kCntInitializedData | scn::kCntUninitializedData |
                       scn::kMemExecute | scn::kMemRead | scn::kMemWrite));
}

TEST_CASE("category names round trip") {
  for (auto cat : kAllCategories) {
    CHECK(parse_category(category_name(cat)) == cat);
    CHECK(parse_category(category_label(cat)) == cat);
  }
  CHECK(category_label(SectionCategory::Text) == ".text");
  CHECK(category_label(SectionCategory::Other) == "others");
  CHECK(parse_category("rsrc") == SectionCategory::Rsrc);
  CHECK(parse_category("Text") == SectionCategory::Text);
  CHECK_FALSE(parse_category("bogus"));
}

TEST_CASE("categorizer config extends the built-in map") {
  std::istringstream in(
      "# packer names\n"
      "\n"
      "UPX0=TEXT\n"
      " .text = OTHER \n"
      "pdata=.rdata\n");
  const auto c = SectionCategorizer::from_config(in);
  CHECK(c.categorize("UPX0", std::nullopt) == SectionCategory::Text);
  CHECK(c.categorize(".text", std::nullopt) == SectionCategory::Other);
  CHECK(c.categorize("pdata", std::nullopt) == SectionCategory::Rdata);
  CHECK(c.categorize(".rsrc", std::nullopt) == SectionCategory::Rsrc);

  std::istringstream bad("UPX0 TEXT\n");
  CHECK_THROWS_AS(SectionCategorizer::from_config(bad), UsageError);
  std::istringstream unknown("UPX0=CODEZ\n");
  CHECK_THROWS_AS(SectionCategorizer::from_config(unknown), UsageError);
  std::istringstream header("UPX0=HEADER\n");
  CHECK_THROWS_AS(SectionCategorizer::from_config(header), UsageError);
  CHECK_THROWS_AS(SectionCategorizer::from_config_file("/nonexistent/names.cfg"), IoError);
}

TEST_CASE("category_spans filters in file order") {
  SectionedBinary bin;
  bin.buffer.data.resize(180);
  bin.sections = {rec(".text", SectionCategory::Text, 0, 100),
                  rec(".rdata", SectionCategory::Rdata, 100, 50),
                  rec(".text", SectionCategory::Text, 150, 30)};
  CHECK(category_spans(bin, SectionCategory::Text) ==
        std::vector<ByteSpan>{{0, 100}, {150, 30}});
  CHECK(category_spans(bin, SectionCategory::Rsrc).empty());
  CHECK(category_spans(bin, SectionCategory::Header).empty());
  bin.header_span = ByteSpan{0, 0};
  CHECK(category_spans(bin, SectionCategory::Header) == std::vector<ByteSpan>{{0, 0}});
}

TEST_CASE("property: spans of all categories partition the section set") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    SectionedBinary bin;
    std::size_t off = 0;
    std::uniform_int_distribution<int> n(0, 10), cat(1, 5);
    std::uniform_int_distribution<std::size_t> len(0, 100);
    const int count = n(rng);
    for (int i = 0; i < count; ++i) {
      const auto l = len(rng);
      bin.sections.push_back(rec("s", static_cast<SectionCategory>(cat(rng)), off, l));
      off += l;
    }
    bin.buffer.data.resize(off);
    std::size_t total = 0;
    for (auto c : kAllCategories) {
      const auto spans = category_spans(bin, c);
      for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i - 1].end() <= spans[i].start);
      total += spans.size();
    }
    CHECK(total == bin.sections.size());
  }
}
