#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "secimg/baseline.hpp"
#include "secimg/binfmt.hpp"
#include "secimg/dataset.hpp"
#include "secimg/error.hpp"
#include "secimg/eval.hpp"
#include "secimg/parallel.hpp"
#include "secimg/render.hpp"
#include "secimg/tensor_file.hpp"

namespace fs = std::filesystem;

namespace secimg::cli {

namespace {

constexpr const char* kManifestFile = "manifest.jsonl";
constexpr const char* kTrainManifestFile = "train.jsonl";
constexpr const char* kHoldoutManifestFile = "holdout.jsonl";
constexpr const char* kTensorDir = "tensors";
constexpr const char* kPngDir = "png";
constexpr const char* kModelPrefix = "knn";
constexpr const char* kPredictionsFile = "predictions.csv";
constexpr const char* kMetricsFile = "metrics.json";

struct RenderOptions {
  std::string scheme;  // empty: S3, or implied by --spec
  std::string spec;
  std::size_t width = 1024;
  std::string target = "224x224";
  std::string names;
  bool png = false;
};

struct Options {
  std::size_t jobs = 1;
  bool verbose = false;
  bool quiet = false;

  std::string in;
  std::string layout = "big2015";
  std::string labels;
  std::string out = ".";
  std::string manifest;
  std::string tensors;
  std::string model;
  std::string preds;
  std::string metrics_dir;
  std::string id;
  std::string config;
  std::size_t k = 5;
  std::size_t side = 64;
  std::uint64_t seed = 0;
  double holdout = 0.2;

  RenderOptions render;
};

void add_render_options(CLI::App* sub, RenderOptions& r) {
  sub->add_option("--scheme", r.scheme, "S1|S2|S3|S4|S5 (default S3)");
  sub->add_option("--spec", r.spec,
                  "channel spec, e.g. \"mode=mask;channels=imgs-1024,.text,.rsrc;width=1024\"");
  sub->add_option("--width", r.width, "row width for S3 and default S4/S5 specs")
      ->capture_default_str();
  sub->add_option("--target", r.target, "output size HxW")->capture_default_str();
  sub->add_option("--names", r.names, "section name map file (name=CATEGORY lines)");
  sub->add_flag("--png", r.png, "also write one PNG per channel");
}

std::pair<std::size_t, std::size_t> parse_target(const std::string& text) {
  const auto x = text.find_first_of("xX");
  std::size_t h = 0, w = 0;
  if (x != std::string::npos) {
    const auto r1 = std::from_chars(text.data(), text.data() + x, h);
    const auto r2 = std::from_chars(text.data() + x + 1, text.data() + text.size(), w);
    if (r1.ec == std::errc() && r1.ptr == text.data() + x && r2.ec == std::errc() &&
        r2.ptr == text.data() + text.size() && h > 0 && w > 0) {
      return {h, w};
    }
  }
  throw UsageError("--target must look like 224x224, got '" + text + "'");
}

RenderConfig make_render_config(const RenderOptions& r) {
  RenderConfig config;
  const std::string name = r.scheme.empty() ? "S3" : r.scheme;
  const auto scheme = parse_scheme(name);
  if (!scheme) throw UsageError("unknown scheme '" + name + "'");
  config.scheme = *scheme;
  config.width = r.width;
  if (r.width == 0) throw UsageError("--width must be positive");
  std::tie(config.target_h, config.target_w) = parse_target(r.target);
  if (!r.spec.empty()) {
    config.spec = parse_channel_spec(r.spec);
    const Scheme implied = config.spec->mode == SegmentMode::Split ? Scheme::S4 : Scheme::S5;
    if (!r.scheme.empty() && *scheme != implied) {
      throw UsageError("--spec mode implies " + std::string(scheme_name(implied)) +
                       " but --scheme is " + r.scheme);
    }
    config.scheme = implied;
  }
  return config;
}

SectionCategorizer make_categorizer(const RenderOptions& r) {
  if (r.names.empty()) return SectionCategorizer::builtin();
  return SectionCategorizer::from_config_file(r.names);
}

std::string describe(const RenderConfig& config) {
  if (config.scheme == Scheme::S4 || config.scheme == Scheme::S5) {
    return channel_spec_label(config.effective_spec());
  }
  return std::string(scheme_name(config.scheme));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct ExportTally {
  std::size_t written = 0;
  std::vector<SkippedSample> failed;
};

// Renders every entry to <out>/<id>.msit (and PNGs when asked). Per-sample
// data errors are tallied, I/O errors abort.
ExportTally export_entries(const std::vector<SampleManifestEntry>& entries,
                           const RenderConfig& config, const SectionCategorizer& categorizer,
                           const std::string& tensor_dir, const std::optional<std::string>& png_dir,
                           std::size_t jobs) {
  ensure_dir(tensor_dir);
  if (png_dir) ensure_dir(*png_dir);
  std::vector<std::string> errors(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& entry = entries[i];
    try {
      const SectionedBinary bin = load_sample(entry, categorizer);
      const ChannelStack stack = render_sample(bin, config);
      export_stack(stack, join(tensor_dir, entry.sample_id + ".msit"));
      if (png_dir) export_png_channels(stack, *png_dir);
    } catch (const DataError& err) {
      errors[i] = err.what();
    }
  });
  ExportTally tally;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (errors[i].empty()) {
      ++tally.written;
    } else {
      spdlog::warn("sample '{}' not rendered: {}", entries[i].sample_id, errors[i]);
      tally.failed.push_back({entries[i].sample_id, errors[i]});
    }
  }
  return tally;
}

// Loads <tensor_dir>/<id>.msit for each entry, shrinking channels to the
// k-NN feature side right away so large corpora fit in memory.
std::vector<ChannelStack> load_feature_stacks(const std::vector<SampleManifestEntry>& entries,
                                              const std::string& tensor_dir, std::size_t side,
                                              std::size_t jobs) {
  std::vector<ChannelStack> stacks(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    ChannelStack stack = import_stack(join(tensor_dir, entries[i].sample_id + ".msit"));
    for (auto& ch : stack.channels) ch = resize(ch, side, side);
    stacks[i] = std::move(stack);
  });
  return stacks;
}

std::vector<SampleManifestEntry> labeled_only(const std::vector<SampleManifestEntry>& entries) {
  std::vector<SampleManifestEntry> out;
  for (const auto& e : entries) {
    if (e.family_label) {
      out.push_back(e);
    } else {
      spdlog::warn("sample '{}' has no label; not used for fitting", e.sample_id);
    }
  }
  return out;
}

KnnModel fit_model(const std::vector<SampleManifestEntry>& entries, const std::string& tensor_dir,
                   std::size_t k, std::size_t side, std::size_t jobs) {
  const auto train = labeled_only(entries);
  if (train.empty()) throw EmptyDataset("no labeled samples to fit");
  const auto stacks = load_feature_stacks(train, tensor_dir, side, jobs);
  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto& e : train) labels.push_back(*e.family_label);
  KnnOptions options;
  options.k = k;
  options.side = side;
  return knn_fit(stacks, labels, options);
}

PredictionMatrix predict(const KnnModel& model, const std::vector<SampleManifestEntry>& entries,
                         const std::string& tensor_dir, std::size_t jobs) {
  const auto stacks = load_feature_stacks(entries, tensor_dir, model.side(), jobs);
  std::vector<std::vector<double>> rows(entries.size());
  parallel_for(entries.size(), jobs,
               [&](std::size_t i) { rows[i] = knn_predict_proba(model, stacks[i]); });
  PredictionMatrix preds;
  preds.classes = model.classes();
  for (std::size_t i = 0; i < entries.size(); ++i) preds.append(entries[i].sample_id, rows[i]);
  return preds;
}

LabelMap labels_from_manifest(const std::vector<SampleManifestEntry>& entries) {
  LabelMap labels;
  for (const auto& e : entries) {
    if (e.family_label) labels.emplace(e.sample_id, *e.family_label);
  }
  return labels;
}

void print_metrics(const Metrics& m) {
  std::cout << "logloss: " << m.logloss << '\n' << "accuracy: " << m.accuracy << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out << text << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// --- subcommands ----------------------------------------------------------

int cmd_manifest(const Options& o) {
  const auto layout = parse_layout(o.layout);
  if (!layout) throw UsageError("unknown layout '" + o.layout + "'");
  std::optional<LabelMap> labels;
  if (!o.labels.empty()) labels = read_labels_csv_file(o.labels);
  const SectionCategorizer categorizer = make_categorizer(o.render);
  ManifestOptions mo;
  mo.jobs = o.jobs;
  mo.categorizer = &categorizer;
  const Manifest m = build_manifest(o.in, *layout, labels, mo);
  ensure_dir(o.out);
  write_manifest_file(join(o.out, kManifestFile), m.entries);
  spdlog::info("manifest: {} entries, {} skipped -> {}", m.entries.size(), m.skipped.size(),
               join(o.out, kManifestFile));
  return kOk;
}

int cmd_render(const Options& o) {
  const RenderConfig config = make_render_config(o.render);
  const SectionCategorizer categorizer = make_categorizer(o.render);
  SectionedBinary bin;
  if (const auto plus = o.in.find('+'); plus != std::string::npos) {
    const std::string bytes_path = o.in.substr(0, plus);
    const std::string asm_path = o.in.substr(plus + 1);
    const std::string id = o.id.empty() ? fs::path(bytes_path).stem().string() : o.id;
    bin = load_big2015_pair(bytes_path, asm_path, id, categorizer);
  } else {
    const std::string id = o.id.empty() ? fs::path(o.in).stem().string() : o.id;
    bin = load_pe_file(o.in, id, categorizer);
  }
  const ChannelStack stack = render_sample(bin, config);
  ensure_dir(o.out);
  const std::string path = join(o.out, bin.sample_id + ".msit");
  export_stack(stack, path);
  if (o.render.png) export_png_channels(stack, o.out);
  spdlog::info("render: {} {} -> {} ({}x{}x{})", bin.sample_id, describe(config), path,
               stack.channel_count(), stack.height(), stack.width());
  return kOk;
}

int cmd_export(const Options& o) {
  const RenderConfig config = make_render_config(o.render);
  const SectionCategorizer categorizer = make_categorizer(o.render);
  const auto entries = read_manifest_file(o.manifest);
  if (entries.empty()) throw EmptyDataset("manifest " + o.manifest + " is empty");
  const std::optional<std::string> png_dir =
      o.render.png ? std::optional(join(o.out, kPngDir)) : std::nullopt;
  const auto tally = export_entries(entries, config, categorizer, o.out, png_dir, o.jobs);
  spdlog::info("export: {} -> {} written, {} failed", describe(config), tally.written,
               tally.failed.size());
  return tally.written > 0 ? kOk : kDataError;
}

int cmd_knn_fit(const Options& o) {
  const auto entries = read_manifest_file(o.manifest);
  const KnnModel model = fit_model(entries, o.tensors, o.k, o.side, o.jobs);
  ensure_dir(o.out);
  model.save(join(o.out, kModelPrefix));
  spdlog::info("knn-fit: {} rows, k={}, side={}, {} channels -> {}", model.rows(), model.k(),
               model.side(), model.channels(), join(o.out, kModelPrefix));
  return kOk;
}

int cmd_knn_predict(const Options& o) {
  const KnnModel model = KnnModel::load(join(o.model, kModelPrefix));
  const auto entries = read_manifest_file(o.manifest);
  const PredictionMatrix preds = predict(model, entries, o.tensors, o.jobs);
  ensure_dir(o.out);
  write_predictions_file(join(o.out, kPredictionsFile), preds);
  spdlog::info("knn-predict: {} rows -> {}", preds.rows(), join(o.out, kPredictionsFile));
  return kOk;
}

int cmd_score(const Options& o) {
  const PredictionMatrix preds = read_predictions_file(o.preds);
  const LabelMap labels = read_labels_csv_file(o.labels);
  const Metrics m = score(preds, labels_for(preds.sample_ids, labels));
  print_metrics(m);
  if (!o.metrics_dir.empty()) {
    ensure_dir(o.metrics_dir);
    write_text(join(o.metrics_dir, kMetricsFile), metrics_json(m));
  }
  return kOk;
}

int cmd_pipeline(const Options& o) {
  const RenderConfig config = make_render_config(o.render);
  const SectionCategorizer categorizer = make_categorizer(o.render);
  const auto layout = parse_layout(o.layout);
  if (!layout) throw UsageError("unknown layout '" + o.layout + "'");
  if (o.labels.empty()) throw UsageError("pipeline needs --labels");

  const LabelMap labels = read_labels_csv_file(o.labels);
  ManifestOptions mo;
  mo.jobs = o.jobs;
  mo.categorizer = &categorizer;
  const Manifest manifest = build_manifest(o.in, *layout, labels, mo);
  ensure_dir(o.out);
  write_manifest_file(join(o.out, kManifestFile), manifest.entries);
  spdlog::info("pipeline: {} samples, {} skipped while scanning", manifest.entries.size(),
               manifest.skipped.size());

  const auto labeled = labeled_only(manifest.entries);
  const std::string tensor_dir = join(o.out, kTensorDir);
  const std::optional<std::string> png_dir =
      o.render.png ? std::optional(join(o.out, kPngDir)) : std::nullopt;
  const auto tally = export_entries(labeled, config, categorizer, tensor_dir, png_dir, o.jobs);
  spdlog::info("pipeline: rendered {} as {}, {} failed", tally.written, describe(config),
               tally.failed.size());

  std::vector<SampleManifestEntry> rendered;
  for (const auto& e : labeled) {
    const bool failed = std::any_of(tally.failed.begin(), tally.failed.end(),
                                    [&](const SkippedSample& s) { return s.sample_id == e.sample_id; });
    if (!failed) rendered.push_back(e);
  }
  if (rendered.empty()) throw EmptyDataset("no sample could be rendered");

  const SplitResult split = stratified_split(rendered, o.holdout, o.seed);
  write_manifest_file(join(o.out, kTrainManifestFile), split.train);
  write_manifest_file(join(o.out, kHoldoutManifestFile), split.holdout);
  if (split.holdout.empty()) throw EmptyDataset("holdout split is empty");

  const KnnModel model = fit_model(split.train, tensor_dir, o.k, o.side, o.jobs);
  model.save(join(o.out, kModelPrefix));
  const PredictionMatrix preds = predict(model, split.holdout, tensor_dir, o.jobs);
  write_predictions_file(join(o.out, kPredictionsFile), preds);

  const Metrics m = score(preds, labels_for(preds.sample_ids, labels_from_manifest(split.holdout)));
  write_text(join(o.out, kMetricsFile), metrics_json(m));
  spdlog::info("pipeline: train {}, holdout {}", split.train.size(), split.holdout.size());
  print_metrics(m);
  return kOk;
}

// --- config file ----------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Plain `key = value` lines; keys are flag names without the dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    items.emplace_back(std::move(key), std::move(value));
  }
  return items;
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

bool truthy(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

// Appends `--key value` for every config item not already given on the
// command line, so flags override file values.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_config(*path)) {
    const std::string flag = "--" + key;
    if (key == "config" || flag_given(args, flag)) continue;
    if (key == "png" || key == "verbose" || key == "quiet") {
      if (truthy(value)) merged.push_back(flag);
      continue;
    }
    merged.push_back(flag);
    merged.push_back(value);
  }
  return merged;
}

void configure_logging(const Options& o) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("secimg");
    l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    return l;
  }();
  spdlog::set_default_logger(logger);
  spdlog::set_level(o.verbose ? spdlog::level::debug
                              : (o.quiet ? spdlog::level::warn : spdlog::level::info));
}

}  // namespace

int run(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"secimg: section-segmented grayscale images from executables"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");
  app.add_option("--jobs,-j", o.jobs, "worker threads")->capture_default_str();
  app.add_flag("--verbose,-v", o.verbose);
  app.add_flag("--quiet,-q", o.quiet);

  auto* manifest = app.add_subcommand("manifest", "scan a sample directory into manifest.jsonl");
  manifest->add_option("--in", o.in, "sample directory")->required();
  manifest->add_option("--layout", o.layout, "big2015|pe")->capture_default_str();
  manifest->add_option("--labels", o.labels, "Id,Class CSV");
  manifest->add_option("--names", o.render.names, "section name map file");
  manifest->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* render = app.add_subcommand("render", "render one sample to an MSIT tensor");
  render->add_option("--in", o.in, "PE file, or sample.bytes+sample.asm")->required();
  render->add_option("--id", o.id, "sample id (default: file stem)");
  render->add_option("--out", o.out, "output directory")->capture_default_str();
  add_render_options(render, o.render);

  auto* export_cmd = app.add_subcommand("export", "render every manifest entry to MSIT tensors");
  export_cmd->add_option("--manifest", o.manifest, "manifest.jsonl")->required();
  export_cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  add_render_options(export_cmd, o.render);

  auto* fit = app.add_subcommand("knn-fit", "fit the nearest-neighbour baseline");
  fit->add_option("--manifest", o.manifest, "manifest.jsonl of training samples")->required();
  fit->add_option("--tensors", o.tensors, "directory of <id>.msit")->required();
  fit->add_option("--k", o.k)->capture_default_str();
  fit->add_option("--side", o.side, "feature side length")->capture_default_str();
  fit->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* pred = app.add_subcommand("knn-predict", "write Id,Prediction1..9 for a manifest");
  pred->add_option("--model", o.model, "directory holding knn.msit/knn.json")->required();
  pred->add_option("--manifest", o.manifest, "manifest.jsonl")->required();
  pred->add_option("--tensors", o.tensors, "directory of <id>.msit")->required();
  pred->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* sc = app.add_subcommand("score", "multi-class logloss, accuracy, confusion");
  sc->add_option("--preds", o.preds, "Id,Prediction1..9 CSV")->required();
  sc->add_option("--labels", o.labels, "Id,Class CSV")->required();
  sc->add_option("--out", o.metrics_dir, "directory for metrics.json");

  auto* pipe = app.add_subcommand("pipeline", "manifest, render, split, fit, predict, score");
  pipe->add_option("--config", o.config, "key = value file mirroring these flags");
  pipe->add_option("--in", o.in, "sample directory")->required();
  pipe->add_option("--layout", o.layout, "big2015|pe")->capture_default_str();
  pipe->add_option("--labels", o.labels, "Id,Class CSV");
  pipe->add_option("--out", o.out, "output directory")->capture_default_str();
  pipe->add_option("--seed", o.seed)->capture_default_str();
  pipe->add_option("--holdout", o.holdout, "holdout fraction")->capture_default_str();
  pipe->add_option("--k", o.k)->capture_default_str();
  pipe->add_option("--side", o.side, "k-NN feature side length")->capture_default_str();
  add_render_options(pipe, o.render);

  std::vector<std::string> args;
  try {
    args = merge_config(raw_args);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return dynamic_cast<const IoError*>(&err) ? kIoError : kBadArguments;
  }
  std::vector<char*> argv;
  std::string program = "secimg";
  argv.push_back(program.data());
  for (auto& a : args) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kBadArguments;
  }
  configure_logging(o);

  try {
    if (*manifest) return cmd_manifest(o);
    if (*render) return cmd_render(o);
    if (*export_cmd) return cmd_export(o);
    if (*fit) return cmd_knn_fit(o);
    if (*pred) return cmd_knn_predict(o);
    if (*sc) return cmd_score(o);
    if (*pipe) return cmd_pipeline(o);
  } catch (const UsageError& err) {
    spdlog::error("{}", err.what());
    return kBadArguments;
  } catch (const DataError& err) {
    spdlog::error("data error: {}", err.what());
    return kDataError;
  } catch (const IoError& err) {
    spdlog::error("I/O error: {}", err.what());
    return kIoError;
  } catch (const fs::filesystem_error& err) {
    spdlog::error("I/O error: {}", err.what());
    return kIoError;
  }
  return kBadArguments;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace secimg::cli
