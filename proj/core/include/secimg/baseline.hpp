#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "secimg/dataset.hpp"
#include "secimg/segmentation.hpp"

namespace secimg {

struct KnnOptions {
  std::size_t k = 5;
  std::size_t side = 64;
  std::size_t classes = kFamilyCount;
};

// Nearest-neighbour baseline over flattened channel stacks. Features are the
// stacks resized to side x side per channel; distances are computed on the
// pixel values scaled to [0,1].
class KnnModel {
 public:
  std::size_t k() const noexcept { return k_; }
  std::size_t side() const noexcept { return side_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t feature_length() const noexcept { return channels_ * side_ * side_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::uint8_t>& features() const noexcept { return features_; }

  // Flattened u8 feature row for `stack`. Throws ShapeMismatch.
  std::vector<std::uint8_t> featurize(const ChannelStack& stack) const;

  // Writes `<prefix>.msit` (features, one side x side image per channel per
  // row) and `<prefix>.json` (k, side, channels, classes, labels).
  void save(const std::string& prefix) const;
  static KnnModel load(const std::string& prefix);

 private:
  friend KnnModel knn_fit(const std::vector<ChannelStack>&, const std::vector<int>&,
                          const KnnOptions&);

  std::size_t k_ = 0;
  std::size_t side_ = 0;
  std::size_t channels_ = 0;
  std::size_t classes_ = kFamilyCount;
  std::vector<int> labels_;
  std::vector<std::uint8_t> features_;
};

// Throws DataError on empty input or mismatched label count,
// HeterogeneousChannels when channel counts differ. k is clamped to the
// number of rows.
KnnModel knn_fit(const std::vector<ChannelStack>& stacks, const std::vector<int>& labels,
                 const KnnOptions& options = {});

// P(c) = (votes_c + 1) / (k + M) over the k nearest rows; distance ties go to
// the lower training row index.
std::vector<double> knn_predict_proba(const KnnModel& model, const ChannelStack& stack);

}  // namespace secimg
