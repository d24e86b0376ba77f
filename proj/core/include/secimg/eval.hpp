#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "secimg/dataset.hpp"

namespace secimg {

inline constexpr double kProbabilityClip = 1e-15;

// Row-major N x M probabilities.
struct PredictionMatrix {
  std::vector<std::string> sample_ids;
  std::size_t classes = kFamilyCount;
  std::vector<double> probs;

  std::size_t rows() const noexcept { return sample_ids.size(); }
  const double* row(std::size_t i) const { return probs.data() + i * classes; }
  double* row(std::size_t i) { return probs.data() + i * classes; }

  void append(const std::string& id, const std::vector<double>& row);
  // Scales every row to sum 1. Throws DataError on negative, non-finite, or
  // all-zero rows.
  void normalize_rows();
};

// Class indices are 1-based.
struct LabelVector {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
};

// Labels for exactly `ids`, in that order. Throws IdMismatch for an id with
// no label.
LabelVector labels_for(const std::vector<std::string>& ids, const LabelMap& labels);

// -(1/N) * sum ln p(i, y_i), rows renormalized then clipped to
// [1e-15, 1 - 1e-15]. Throws DimensionMismatch, IdMismatch.
double logloss(const PredictionMatrix& preds, const LabelVector& labels);

// Argmax class per row (1-based), ties to the lowest index.
std::vector<int> predicted_classes(const PredictionMatrix& preds);
double accuracy(const PredictionMatrix& preds, const LabelVector& labels);
// confusion[t-1][p-1] counts true class t predicted as p.
std::vector<std::vector<std::size_t>> confusion(const PredictionMatrix& preds,
                                                const LabelVector& labels);

struct Metrics {
  double logloss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t samples = 0;
};

Metrics score(const PredictionMatrix& preds, const LabelVector& labels);
std::string metrics_json(const Metrics& metrics);

// `Id,Prediction1,...,PredictionM`. Reading renormalizes rows.
void write_predictions_csv(std::ostream& out, const PredictionMatrix& preds);
PredictionMatrix read_predictions_csv(std::istream& in);
PredictionMatrix read_predictions_file(const std::string& path);
void write_predictions_file(const std::string& path, const PredictionMatrix& preds);

}  // namespace secimg
