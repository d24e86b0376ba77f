#include "secimg/baseline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "secimg/error.hpp"
#include "secimg/tensor_file.hpp"

namespace secimg {

std::vector<std::uint8_t> KnnModel::featurize(const ChannelStack& stack) const {
  if (stack.channel_count() != channels_) {
    throw ShapeMismatch("stack has " + std::to_string(stack.channel_count()) +
                        " channels, model expects " + std::to_string(channels_));
  }
  std::vector<std::uint8_t> row;
  row.reserve(feature_length());
  for (const auto& ch : stack.channels) {
    const GrayImage small = resize(ch, side_, side_);
    row.insert(row.end(), small.pixels().begin(), small.pixels().end());
  }
  return row;
}

KnnModel knn_fit(const std::vector<ChannelStack>& stacks, const std::vector<int>& labels,
                 const KnnOptions& options) {
  if (stacks.empty()) throw EmptyDataset("k-NN needs at least one training stack");
  if (stacks.size() != labels.size()) {
    throw DimensionMismatch(std::to_string(stacks.size()) + " stacks vs " +
                            std::to_string(labels.size()) + " labels");
  }
  if (options.k == 0 || options.side == 0 || options.classes == 0) {
    throw UsageError("k, side and classes must be positive");
  }
  const std::size_t channels = stacks.front().channel_count();
  for (const auto& s : stacks) {
    if (s.channel_count() != channels) {
      throw HeterogeneousChannels("training stacks mix " + std::to_string(channels) + " and " +
                                  std::to_string(s.channel_count()) + " channels");
    }
  }
  for (int y : labels) {
    if (y < 1 || static_cast<std::size_t>(y) > options.classes) {
      throw DataError("training label " + std::to_string(y) + " outside 1.." +
                      std::to_string(options.classes));
    }
  }

  KnnModel model;
  model.k_ = options.k;
  if (model.k_ > stacks.size()) {
    spdlog::warn("k={} exceeds the {} training rows; using k={}", options.k, stacks.size(),
                 stacks.size());
    model.k_ = stacks.size();
  }
  model.side_ = options.side;
  model.channels_ = channels;
  model.classes_ = options.classes;
  model.labels_ = labels;
  model.features_.reserve(stacks.size() * model.feature_length());
  for (const auto& s : stacks) {
    const auto row = model.featurize(s);
    model.features_.insert(model.features_.end(), row.begin(), row.end());
  }
  return model;
}

std::vector<double> knn_predict_proba(const KnnModel& model, const ChannelStack& stack) {
  const auto query = model.featurize(stack);
  const std::size_t n = model.rows();
  const std::size_t len = model.feature_length();

  // Squared distances on raw bytes order rows exactly as on [0,1]-scaled
  // pixels and are exact integers, so ties are well defined.
  std::vector<std::uint64_t> dist(n, 0);
  const std::uint8_t* base = model.features().data();
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* row = base + r * len;
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < len; ++j) {
      const int d = static_cast<int>(row[j]) - static_cast<int>(query[j]);
      acc += static_cast<std::uint64_t>(d * d);
    }
    dist[r] = acc;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = model.k();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                    });

  const std::size_t m = model.classes();
  std::vector<double> votes(m, 1.0);  // Laplace alpha = 1
  for (std::size_t i = 0; i < k; ++i) {
    votes[static_cast<std::size_t>(model.labels()[order[i]] - 1)] += 1.0;
  }
  const double denom = static_cast<double>(k + m);
  for (auto& v : votes) v /= denom;
  return votes;
}

void KnnModel::save(const std::string& prefix) const {
  TensorFile t;
  t.channels = static_cast<std::uint32_t>(rows() * channels_);
  t.height = static_cast<std::uint32_t>(side_);
  t.width = static_cast<std::uint32_t>(side_);
  t.payload = features_;
  {
    std::ofstream out(prefix + ".msit", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + prefix + ".msit");
    write_tensor(out, t);
    if (!out) throw IoError("write failed: " + prefix + ".msit");
  }
  nlohmann::json j;
  j["k"] = k_;
  j["side"] = side_;
  j["channels"] = channels_;
  j["classes"] = classes_;
  j["rows"] = rows();
  j["labels"] = labels_;
  std::ofstream out(prefix + ".json", std::ios::trunc);
  if (!out) throw IoError("cannot create " + prefix + ".json");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + prefix + ".json");
}

KnnModel KnnModel::load(const std::string& prefix) {
  std::ifstream meta_in(prefix + ".json");
  if (!meta_in) throw IoError("cannot open " + prefix + ".json");
  nlohmann::json j;
  try {
    meta_in >> j;
  } catch (const nlohmann::json::exception& err) {
    throw DataError(prefix + ".json: " + err.what());
  }
  std::ifstream tensor_in(prefix + ".msit", std::ios::binary);
  if (!tensor_in) throw IoError("cannot open " + prefix + ".msit");
  TensorFile t = read_tensor(tensor_in);

  KnnModel model;
  try {
    model.k_ = j.at("k").get<std::size_t>();
    model.side_ = j.at("side").get<std::size_t>();
    model.channels_ = j.at("channels").get<std::size_t>();
    model.classes_ = j.at("classes").get<std::size_t>();
    model.labels_ = j.at("labels").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& err) {
    throw DataError(prefix + ".json: " + err.what());
  }
  if (t.height != model.side_ || t.width != model.side_ ||
      t.channels != model.labels_.size() * model.channels_ || model.k_ == 0 ||
      model.k_ > model.labels_.size()) {
    throw DataError("k-NN model files disagree on shape");
  }
  model.features_ = std::move(t.payload);
  return model;
}

}  // namespace secimg
