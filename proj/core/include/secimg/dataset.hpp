#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secimg/binfmt.hpp"
#include "secimg/sectioning.hpp"

namespace secimg {

inline constexpr int kFamilyCount = 9;

// BIG-2015 family names indexed by class id - 1.
inline constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {
    "Ramnit", "Lollipop",     "Kelihos_ver3",   "Vundo", "Simda",
    "Tracur", "Kelihos_ver1", "Obfuscator.ACY", "Gatak"};

// Training-set sample counts per family, same order as kFamilyNames.
inline constexpr std::array<std::size_t, kFamilyCount> kBig2015TrainCounts = {
    1541, 2478, 2942, 475, 42, 751, 398, 1228, 1013};

struct SectionSummary {
  std::string name;
  SectionCategory category = SectionCategory::Other;
  std::size_t start = 0;
  std::size_t length = 0;

  bool operator==(const SectionSummary&) const = default;
};

struct SampleManifestEntry {
  std::string sample_id;
  std::optional<int> family_label;  // 1..9, absent for test samples
  std::optional<std::string> bytes_path;
  std::optional<std::string> asm_path;
  std::optional<std::string> pe_path;
  std::size_t byte_length = 0;
  std::vector<SectionSummary> section_summary;

  bool operator==(const SampleManifestEntry&) const = default;
};

enum class DatasetLayout : std::uint8_t { Big2015, PeDir };

std::optional<DatasetLayout> parse_layout(std::string_view text);

struct SkippedSample {
  std::string sample_id;
  std::string reason;
};

struct Manifest {
  std::vector<SampleManifestEntry> entries;  // sorted by sample_id
  std::vector<SkippedSample> skipped;
};

using LabelMap = std::map<std::string, int>;

// `Id,Class` CSV (quotes around fields tolerated). Throws DataError on a bad
// header or class outside 1..9, DuplicateSampleId on repeated ids.
LabelMap read_labels_csv(std::istream& in);
LabelMap read_labels_csv_file(const std::string& path);
void write_labels_csv(std::ostream& out, const LabelMap& labels);

struct ManifestOptions {
  std::size_t jobs = 1;
  const SectionCategorizer* categorizer = nullptr;  // built-in when null
};

// Scans root_dir (non-recursive). Unmatched or unparseable samples are
// reported in Manifest::skipped. Throws EmptyDataset, DuplicateSampleId,
// IoError.
Manifest build_manifest(const std::string& root_dir, DatasetLayout layout,
                        const std::optional<LabelMap>& labels = std::nullopt,
                        const ManifestOptions& options = {});

SectionedBinary load_sample(const SampleManifestEntry& entry,
                            const SectionCategorizer& categorizer = SectionCategorizer::builtin());

SampleManifestEntry make_entry(const SectionedBinary& bin);

// JSON-lines, one entry per line.
void write_manifest_jsonl(std::ostream& out, const std::vector<SampleManifestEntry>& entries);
std::vector<SampleManifestEntry> read_manifest_jsonl(std::istream& in);
void write_manifest_file(const std::string& path, const std::vector<SampleManifestEntry>& entries);
std::vector<SampleManifestEntry> read_manifest_file(const std::string& path);

struct SplitResult {
  std::vector<SampleManifestEntry> train;
  std::vector<SampleManifestEntry> holdout;
};

// Per-family holdout of floor(n * fraction) samples, clamped to [1, n-1]
// for families with at least two samples. Deterministic for a given seed.
// Throws UnlabeledSample, UsageError for fraction outside (0,1).
SplitResult stratified_split(const std::vector<SampleManifestEntry>& manifest,
                             double holdout_fraction, std::uint64_t seed);

}  // namespace secimg
