#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "secimg/imaging.hpp"
#include "secimg/segmentation.hpp"

namespace secimg {

// The five dataset constructions: S1-S3 vary the row width of the whole-file
// image, S4 and S5 segment by section category.
enum class Scheme : std::uint8_t { S1, S2, S3, S4, S5 };

std::optional<Scheme> parse_scheme(std::string_view text);
std::string_view scheme_name(Scheme scheme) noexcept;

struct RenderConfig {
  Scheme scheme = Scheme::S3;
  // Row width for S3 (and default ChannelSpec width for S4/S5).
  std::size_t width = 1024;
  // Used by S4/S5; defaults to the scheme's reference channel set.
  std::optional<ChannelSpec> spec;
  std::size_t target_h = 224;
  std::size_t target_w = 224;

  // S1 -> table, S2 -> sqrt, S3 -> fixed(width). S4/S5 segment at spec.width.
  WidthScheme width_scheme() const;
  // The ChannelSpec S4/S5 use; throws UsageError for S1-S3.
  ChannelSpec effective_spec() const;
};

// S4: .text+.rdata+.rsrc split. S5: imgs-1024+.text+.rsrc masked.
ChannelSpec default_spec(Scheme scheme, std::size_t width = 1024);

// S1-S3: rasterize, resize, replicate to three channels.
// S4/S5: compose_stack with the effective spec.
ChannelStack render_sample(const SectionedBinary& bin, const RenderConfig& config);

}  // namespace secimg
