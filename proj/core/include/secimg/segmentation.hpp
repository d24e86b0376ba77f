#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secimg/binfmt.hpp"
#include "secimg/imaging.hpp"
#include "secimg/sectioning.hpp"

namespace secimg {

// One channel of a stack: the whole-file image or a section category.
struct ChannelSelector {
  bool whole_image = false;
  SectionCategory category = SectionCategory::Other;

  static ChannelSelector whole() { return {true, SectionCategory::Other}; }
  static ChannelSelector of(SectionCategory cat) { return {false, cat}; }

  bool operator==(const ChannelSelector&) const = default;
};

enum class SegmentMode : std::uint8_t { Split, Mask };

struct ChannelSpec {
  std::vector<ChannelSelector> selectors;
  SegmentMode mode = SegmentMode::Mask;
  std::size_t width = 1024;

  // Throws UsageError when empty, duplicated, or width is 0.
  void validate() const;
  bool operator==(const ChannelSpec&) const = default;
};

// Parses `mode=split|mask; channels=imgs-1024,.text,.rsrc; width=1024`.
// Keys may appear in any order; mode and width are optional. Throws UsageError.
ChannelSpec parse_channel_spec(std::string_view text);
std::string format_channel_spec(const ChannelSpec& spec);
// Experiment-style name, e.g. "S5(imgs-1024+.text+.rsrc)".
std::string channel_spec_label(const ChannelSpec& spec);

struct ChannelStack {
  std::string sample_id;
  std::vector<GrayImage> channels;
  // Absent for replicated single-image stacks.
  std::optional<ChannelSpec> spec;
  std::optional<int> label;

  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t height() const noexcept { return channels.empty() ? 0 : channels.front().height(); }
  std::size_t width() const noexcept { return channels.empty() ? 0 : channels.front().width(); }
  // True when there is at least one channel and all share dimensions.
  bool uniform() const noexcept;
};

// Bytes of every span of `cat`, concatenated in file order.
std::vector<std::uint8_t> category_bytes(const SectionedBinary& bin, SectionCategory cat);

GrayImage split_channel(const SectionedBinary& bin, SectionCategory cat, std::size_t width);
GrayImage mask_channel(const SectionedBinary& bin, SectionCategory cat, std::size_t width);

// Every channel is resized independently to target_h x target_w.
ChannelStack compose_stack(const SectionedBinary& bin, const ChannelSpec& spec,
                           std::size_t target_h, std::size_t target_w);

ChannelStack replicate_gray_to_3(const GrayImage& img);

}  // namespace secimg
