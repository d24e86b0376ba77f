#include "secimg/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "secimg/error.hpp"

namespace secimg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return parts;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t parse_width(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    throw UsageError("bad width '" + std::string(text) + "'");
  }
  return value;
}

std::string selector_label(const ChannelSelector& sel, std::size_t width) {
  if (sel.whole_image) return "imgs-" + std::to_string(width);
  return std::string(category_label(sel.category));
}

}  // namespace

void ChannelSpec::validate() const {
  if (selectors.empty()) throw UsageError("channel spec needs at least one channel");
  if (width == 0) throw UsageError("channel spec width must be at least 1");
  for (std::size_t i = 0; i < selectors.size(); ++i) {
    for (std::size_t j = i + 1; j < selectors.size(); ++j) {
      if (selectors[i] == selectors[j]) {
        throw UsageError("duplicate channel '" + selector_label(selectors[i], width) + "'");
      }
    }
  }
}

ChannelSpec parse_channel_spec(std::string_view text) {
  ChannelSpec spec;
  std::optional<std::size_t> explicit_width;
  std::optional<std::size_t> whole_width;
  bool have_channels = false;

  for (auto part : split(text, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("channel spec item '" + std::string(part) + "' is not key=value");
    }
    const std::string key = lower(trim(part.substr(0, eq)));
    const std::string_view value = trim(part.substr(eq + 1));
    if (key == "mode") {
      const std::string mode = lower(value);
      if (mode == "split") {
        spec.mode = SegmentMode::Split;
      } else if (mode == "mask") {
        spec.mode = SegmentMode::Mask;
      } else {
        throw UsageError("unknown mode '" + std::string(value) + "'");
      }
    } else if (key == "width") {
      explicit_width = parse_width(value);
    } else if (key == "channels") {
      have_channels = true;
      for (auto item : split(value, ',')) {
        item = trim(item);
        const std::string name = lower(item);
        if (name == "imgs" || name.rfind("imgs-", 0) == 0) {
          if (name.size() > 5) {
            const std::size_t w = parse_width(std::string_view(name).substr(5));
            if (whole_width && *whole_width != w) {
              throw UsageError("conflicting whole-image widths");
            }
            whole_width = w;
          }
          spec.selectors.push_back(ChannelSelector::whole());
        } else if (const auto cat = parse_category(item)) {
          spec.selectors.push_back(ChannelSelector::of(*cat));
        } else {
          throw UsageError("unknown channel '" + std::string(item) + "'");
        }
      }
    } else {
      throw UsageError("unknown channel spec key '" + key + "'");
    }
  }
  if (!have_channels) throw UsageError("channel spec is missing channels=");
  if (explicit_width && whole_width && *explicit_width != *whole_width) {
    throw UsageError("imgs-" + std::to_string(*whole_width) + " conflicts with width=" +
                     std::to_string(*explicit_width));
  }
  spec.width = explicit_width.value_or(whole_width.value_or(1024));
  spec.validate();
  return spec;
}

std::string format_channel_spec(const ChannelSpec& spec) {
  std::string out = spec.mode == SegmentMode::Split ? "mode=split" : "mode=mask";
  out += ";channels=";
  for (std::size_t i = 0; i < spec.selectors.size(); ++i) {
    if (i) out += ',';
    out += selector_label(spec.selectors[i], spec.width);
  }
  out += ";width=" + std::to_string(spec.width);
  return out;
}

std::string channel_spec_label(const ChannelSpec& spec) {
  std::string out = spec.mode == SegmentMode::Split ? "S4(" : "S5(";
  for (std::size_t i = 0; i < spec.selectors.size(); ++i) {
    if (i) out += '+';
    out += selector_label(spec.selectors[i], spec.width);
  }
  return out + ")";
}

bool ChannelStack::uniform() const noexcept {
  if (channels.empty()) return false;
  return std::all_of(channels.begin(), channels.end(), [&](const GrayImage& c) {
    return c.height() == channels.front().height() && c.width() == channels.front().width();
  });
}

std::vector<std::uint8_t> category_bytes(const SectionedBinary& bin, SectionCategory cat) {
  std::vector<std::uint8_t> out;
  const auto& data = bin.buffer.data;
  for (const auto& span : category_spans(bin, cat)) {
    out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(span.start),
               data.begin() + static_cast<std::ptrdiff_t>(span.end()));
  }
  return out;
}

GrayImage split_channel(const SectionedBinary& bin, SectionCategory cat, std::size_t width) {
  return rasterize(category_bytes(bin, cat), width);
}

GrayImage mask_channel(const SectionedBinary& bin, SectionCategory cat, std::size_t width) {
  const auto& data = bin.buffer.data;
  std::vector<std::uint8_t> masked(data.size(), 0);
  for (const auto& span : category_spans(bin, cat)) {
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(span.start),
              data.begin() + static_cast<std::ptrdiff_t>(span.end()),
              masked.begin() + static_cast<std::ptrdiff_t>(span.start));
  }
  return rasterize(masked, width);
}

ChannelStack compose_stack(const SectionedBinary& bin, const ChannelSpec& spec,
                           std::size_t target_h, std::size_t target_w) {
  spec.validate();
  ChannelStack stack;
  stack.sample_id = bin.sample_id;
  stack.spec = spec;
  stack.channels.reserve(spec.selectors.size());
  for (const auto& sel : spec.selectors) {
    GrayImage raw;
    if (sel.whole_image) {
      raw = rasterize(bin.buffer.data, spec.width);
    } else if (spec.mode == SegmentMode::Split) {
      raw = split_channel(bin, sel.category, spec.width);
    } else {
      raw = mask_channel(bin, sel.category, spec.width);
    }
    stack.channels.push_back(resize(raw, target_h, target_w));
  }
  return stack;
}

ChannelStack replicate_gray_to_3(const GrayImage& img) {
  ChannelStack stack;
  stack.channels = {img, img, img};
  return stack;
}

}  // namespace secimg
