#include "secimg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "secimg/error.hpp"
#include "secimg/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace secimg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct Candidate {
  std::string id;
  std::optional<std::string> bytes_path;
  std::optional<std::string> asm_path;
  std::optional<std::string> pe_path;
};

// Uniform draw in [0, bound) by rejection; mt19937_64 output is fully
// specified, so the result is identical on every platform.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::optional<DatasetLayout> parse_layout(std::string_view text) {
  const std::string s = lower(std::string(text));
  if (s == "big2015") return DatasetLayout::Big2015;
  if (s == "pe" || s == "pe_dir" || s == "pe-dir") return DatasetLayout::PeDir;
  return std::nullopt;
}

LabelMap read_labels_csv(std::istream& in) {
  LabelMap labels;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) {
      throw DataError("labels line " + std::to_string(lineno) + ": expected Id,Class");
    }
    const std::string_view id = unquote(view.substr(0, comma));
    const std::string_view cls = unquote(view.substr(comma + 1));
    if (!header_seen) {
      if (lower(std::string(id)) != "id" || lower(std::string(cls)) != "class") {
        throw DataError("labels CSV must start with the header Id,Class");
      }
      header_seen = true;
      continue;
    }
    int value = 0;
    const auto [ptr, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), value);
    if (ec != std::errc() || ptr != cls.data() + cls.size() || value < 1 ||
        value > kFamilyCount) {
      throw DataError("labels line " + std::to_string(lineno) + ": class '" + std::string(cls) +
                      "' outside 1..9");
    }
    if (!labels.emplace(std::string(id), value).second) {
      throw DuplicateSampleId("label for '" + std::string(id) + "' given twice");
    }
  }
  if (!header_seen) throw DataError("labels CSV is empty");
  return labels;
}

LabelMap read_labels_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_labels_csv(in);
}

void write_labels_csv(std::ostream& out, const LabelMap& labels) {
  out << "Id,Class\n";
  for (const auto& [id, cls] : labels) out << id << ',' << cls << '\n';
}

SampleManifestEntry make_entry(const SectionedBinary& bin) {
  SampleManifestEntry e;
  e.sample_id = bin.sample_id;
  e.byte_length = bin.buffer.size();
  for (const auto& rec : bin.sections) {
    e.section_summary.push_back({rec.name, rec.category, rec.start, rec.length});
  }
  return e;
}

SectionedBinary load_sample(const SampleManifestEntry& entry,
                            const SectionCategorizer& categorizer) {
  if (entry.pe_path) return load_pe_file(*entry.pe_path, entry.sample_id, categorizer);
  if (entry.bytes_path && entry.asm_path) {
    return load_big2015_pair(*entry.bytes_path, *entry.asm_path, entry.sample_id, categorizer);
  }
  throw DataError("manifest entry '" + entry.sample_id + "' has no input files");
}

Manifest build_manifest(const std::string& root_dir, DatasetLayout layout,
                        const std::optional<LabelMap>& labels, const ManifestOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(root_dir, ec)) throw IoError("not a directory: " + root_dir);

  std::map<std::string, Candidate> candidates;
  Manifest manifest;
  for (const auto& dirent : fs::directory_iterator(root_dir)) {
    if (!dirent.is_regular_file()) continue;
    const fs::path& p = dirent.path();
    const std::string id = p.stem().string();
    auto& c = candidates[id];
    c.id = id;
    if (layout == DatasetLayout::Big2015) {
      const std::string ext = lower(p.extension().string());
      std::optional<std::string>* slot = nullptr;
      if (ext == ".bytes") slot = &c.bytes_path;
      if (ext == ".asm") slot = &c.asm_path;
      if (!slot) continue;
      if (*slot) throw DuplicateSampleId("sample '" + id + "' has two " + ext + " files");
      *slot = p.string();
    } else {
      if (c.pe_path) throw DuplicateSampleId("two files map to sample id '" + id + "'");
      c.pe_path = p.string();
    }
  }

  std::vector<Candidate> usable;
  for (auto& [id, c] : candidates) {
    if (layout == DatasetLayout::Big2015) {
      if (!c.bytes_path && !c.asm_path) continue;
      if (!c.bytes_path || !c.asm_path) {
        const char* missing = c.bytes_path ? ".asm" : ".bytes";
        spdlog::warn("sample '{}' has no {} counterpart; skipped", id, missing);
        manifest.skipped.push_back({id, std::string("missing ") + missing});
        continue;
      }
    }
    usable.push_back(std::move(c));
  }

  const SectionCategorizer builtin = SectionCategorizer::builtin();
  const SectionCategorizer& categorizer = options.categorizer ? *options.categorizer : builtin;
  std::vector<std::optional<SampleManifestEntry>> parsed(usable.size());
  std::vector<std::string> failures(usable.size());
  parallel_for(usable.size(), options.jobs, [&](std::size_t i) {
    const auto& c = usable[i];
    SampleManifestEntry probe;
    probe.sample_id = c.id;
    probe.bytes_path = c.bytes_path;
    probe.asm_path = c.asm_path;
    probe.pe_path = c.pe_path;
    try {
      const SectionedBinary bin = load_sample(probe, categorizer);
      if (bin.buffer.size() == 0) {
        failures[i] = "empty sample";
        return;
      }
      SampleManifestEntry e = make_entry(bin);
      e.bytes_path = c.bytes_path;
      e.asm_path = c.asm_path;
      e.pe_path = c.pe_path;
      parsed[i] = std::move(e);
    } catch (const DataError& err) {
      failures[i] = err.what();
    }
  });

  for (std::size_t i = 0; i < usable.size(); ++i) {
    if (!parsed[i]) {
      spdlog::warn("sample '{}' skipped: {}", usable[i].id, failures[i]);
      manifest.skipped.push_back({usable[i].id, failures[i]});
      continue;
    }
    auto& e = *parsed[i];
    if (labels) {
      if (const auto it = labels->find(e.sample_id); it != labels->end()) {
        e.family_label = it->second;
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  std::sort(manifest.skipped.begin(), manifest.skipped.end(),
            [](const SkippedSample& a, const SkippedSample& b) { return a.sample_id < b.sample_id; });
  if (manifest.entries.empty()) throw EmptyDataset("no usable samples in " + root_dir);
  return manifest;
}

namespace {

json entry_to_json(const SampleManifestEntry& e) {
  json j;
  j["sample_id"] = e.sample_id;
  j["family_label"] = e.family_label ? json(*e.family_label) : json(nullptr);
  if (e.bytes_path) j["bytes_path"] = *e.bytes_path;
  if (e.asm_path) j["asm_path"] = *e.asm_path;
  if (e.pe_path) j["pe_path"] = *e.pe_path;
  j["byte_length"] = e.byte_length;
  json sections = json::array();
  for (const auto& s : e.section_summary) {
    sections.push_back({{"name", s.name},
                        {"category", std::string(category_name(s.category))},
                        {"start", s.start},
                        {"length", s.length}});
  }
  j["section_summary"] = std::move(sections);
  return j;
}

SampleManifestEntry entry_from_json(const json& j) {
  SampleManifestEntry e;
  e.sample_id = j.at("sample_id").get<std::string>();
  if (j.contains("family_label") && !j["family_label"].is_null()) {
    e.family_label = j["family_label"].get<int>();
  }
  if (j.contains("bytes_path")) e.bytes_path = j["bytes_path"].get<std::string>();
  if (j.contains("asm_path")) e.asm_path = j["asm_path"].get<std::string>();
  if (j.contains("pe_path")) e.pe_path = j["pe_path"].get<std::string>();
  e.byte_length = j.at("byte_length").get<std::size_t>();
  for (const auto& s : j.at("section_summary")) {
    const auto cat = parse_category(s.at("category").get<std::string>());
    if (!cat) throw DataError("manifest: unknown category for '" + e.sample_id + "'");
    e.section_summary.push_back({s.at("name").get<std::string>(), *cat,
                                 s.at("start").get<std::size_t>(),
                                 s.at("length").get<std::size_t>()});
  }
  const bool big2015 = e.bytes_path && e.asm_path;
  if (big2015 == e.pe_path.has_value() || (!big2015 && (e.bytes_path || e.asm_path))) {
    throw DataError("manifest entry '" + e.sample_id +
                    "' must have either bytes_path+asm_path or pe_path");
  }
  if (e.byte_length == 0) throw DataError("manifest entry '" + e.sample_id + "' is empty");
  if (e.family_label && (*e.family_label < 1 || *e.family_label > kFamilyCount)) {
    throw DataError("manifest entry '" + e.sample_id + "' has label outside 1..9");
  }
  return e;
}

}  // namespace

void write_manifest_jsonl(std::ostream& out, const std::vector<SampleManifestEntry>& entries) {
  for (const auto& e : entries) out << entry_to_json(e).dump() << '\n';
}

std::vector<SampleManifestEntry> read_manifest_jsonl(std::istream& in) {
  std::vector<SampleManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      entries.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& err) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + err.what());
    }
  }
  return entries;
}

void write_manifest_file(const std::string& path, const std::vector<SampleManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  write_manifest_jsonl(out, entries);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<SampleManifestEntry> read_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_manifest_jsonl(in);
}

SplitResult stratified_split(const std::vector<SampleManifestEntry>& manifest,
                             double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw UsageError("holdout fraction must lie in (0, 1)");
  }
  std::map<int, std::vector<const SampleManifestEntry*>> families;
  for (const auto& e : manifest) {
    if (!e.family_label) throw UnlabeledSample("sample '" + e.sample_id + "' has no label");
    families[*e.family_label].push_back(&e);
  }

  std::mt19937_64 rng(seed);
  SplitResult result;
  for (auto& [label, members] : families) {
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[bounded(rng, i)]);
    }
    const std::size_t n = members.size();
    // Small epsilon so products like 0.29 * 100 do not floor one short.
    auto take = static_cast<std::size_t>(std::floor(static_cast<double>(n) * holdout_fraction + 1e-9));
    if (n >= 2) take = std::clamp<std::size_t>(take, 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      (i < take ? result.holdout : result.train).push_back(*members[i]);
    }
  }
  const auto by_id = [](const SampleManifestEntry& a, const SampleManifestEntry& b) {
    return a.sample_id < b.sample_id;
  };
  std::sort(result.train.begin(), result.train.end(), by_id);
  std::sort(result.holdout.begin(), result.holdout.end(), by_id);
  return result;
}

}  // namespace secimg
