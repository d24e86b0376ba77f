#include "secimg/render.hpp"

#include <algorithm>

#include "secimg/error.hpp"

namespace secimg {

std::optional<Scheme> parse_scheme(std::string_view text) {
  if (text == "S1" || text == "s1") return Scheme::S1;
  if (text == "S2" || text == "s2") return Scheme::S2;
  if (text == "S3" || text == "s3") return Scheme::S3;
  if (text == "S4" || text == "s4") return Scheme::S4;
  if (text == "S5" || text == "s5") return Scheme::S5;
  return std::nullopt;
}

std::string_view scheme_name(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::S1: return "S1";
    case Scheme::S2: return "S2";
    case Scheme::S3: return "S3";
    case Scheme::S4: return "S4";
    case Scheme::S5: return "S5";
  }
  return "S3";
}

ChannelSpec default_spec(Scheme scheme, std::size_t width) {
  ChannelSpec spec;
  spec.width = width;
  if (scheme == Scheme::S4) {
    spec.mode = SegmentMode::Split;
    spec.selectors = {ChannelSelector::of(SectionCategory::Text),
                      ChannelSelector::of(SectionCategory::Rdata),
                      ChannelSelector::of(SectionCategory::Rsrc)};
  } else if (scheme == Scheme::S5) {
    spec.mode = SegmentMode::Mask;
    spec.selectors = {ChannelSelector::whole(), ChannelSelector::of(SectionCategory::Text),
                      ChannelSelector::of(SectionCategory::Rsrc)};
  } else {
    throw UsageError(std::string(scheme_name(scheme)) + " does not segment by section");
  }
  return spec;
}

WidthScheme RenderConfig::width_scheme() const {
  switch (scheme) {
    case Scheme::S1: return WidthScheme::nataraj();
    case Scheme::S2: return WidthScheme::sqrt();
    case Scheme::S3: return WidthScheme::fixed(width);
    case Scheme::S4:
    case Scheme::S5: break;
  }
  return WidthScheme::fixed(effective_spec().width);
}

ChannelSpec RenderConfig::effective_spec() const {
  if (scheme != Scheme::S4 && scheme != Scheme::S5) {
    throw UsageError(std::string(scheme_name(scheme)) + " does not use a channel spec");
  }
  if (spec) return *spec;
  return default_spec(scheme, width);
}

ChannelStack render_sample(const SectionedBinary& bin, const RenderConfig& config) {
  if (config.scheme == Scheme::S4 || config.scheme == Scheme::S5) {
    return compose_stack(bin, config.effective_spec(), config.target_h, config.target_w);
  }
  const std::size_t width = config.width_scheme().width_for(std::max<std::size_t>(bin.buffer.size(), 1));
  const GrayImage img =
      resize(rasterize(bin.buffer.data, width), config.target_h, config.target_w);
  ChannelStack stack = replicate_gray_to_3(img);
  stack.sample_id = bin.sample_id;
  return stack;
}

}  // namespace secimg
