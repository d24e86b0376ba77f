#include "secimg/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "secimg/error.hpp"

namespace secimg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto pos = line.find(',');
    fields.push_back(trim(line.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return fields;
}

void check_aligned(const PredictionMatrix& preds, const LabelVector& labels) {
  if (preds.probs.size() != preds.rows() * preds.classes) {
    throw DimensionMismatch("prediction matrix storage does not match its shape");
  }
  if (labels.labels.size() != preds.rows() || labels.sample_ids.size() != preds.rows()) {
    throw DimensionMismatch(std::to_string(preds.rows()) + " predictions vs " +
                            std::to_string(labels.labels.size()) + " labels");
  }
  if (preds.rows() == 0) throw DimensionMismatch("no predictions to score");
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    if (preds.sample_ids[i] != labels.sample_ids[i]) {
      throw IdMismatch("row " + std::to_string(i) + ": prediction id '" + preds.sample_ids[i] +
                       "' vs label id '" + labels.sample_ids[i] + "'");
    }
    const int y = labels.labels[i];
    if (y < 1 || static_cast<std::size_t>(y) > preds.classes) {
      throw DimensionMismatch("label " + std::to_string(y) + " outside 1.." +
                              std::to_string(preds.classes));
    }
  }
}

}  // namespace

void PredictionMatrix::append(const std::string& id, const std::vector<double>& row) {
  if (row.size() != classes) {
    throw DimensionMismatch("row for '" + id + "' has " + std::to_string(row.size()) +
                            " entries, expected " + std::to_string(classes));
  }
  sample_ids.push_back(id);
  probs.insert(probs.end(), row.begin(), row.end());
}

void PredictionMatrix::normalize_rows() {
  for (std::size_t i = 0; i < rows(); ++i) {
    double* r = row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (!std::isfinite(r[j]) || r[j] < 0.0) {
        throw DataError("row '" + sample_ids[i] + "' has an invalid probability");
      }
      sum += r[j];
    }
    if (!(sum > 0.0)) throw DataError("row '" + sample_ids[i] + "' sums to zero");
    for (std::size_t j = 0; j < classes; ++j) r[j] /= sum;
  }
}

LabelVector labels_for(const std::vector<std::string>& ids, const LabelMap& labels) {
  LabelVector out;
  out.sample_ids = ids;
  out.labels.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw IdMismatch("no label for sample '" + id + "'");
    out.labels.push_back(it->second);
  }
  return out;
}

double logloss(const PredictionMatrix& preds, const LabelVector& labels) {
  check_aligned(preds, labels);
  PredictionMatrix normalized = preds;
  normalized.normalize_rows();
  double total = 0.0;
  for (std::size_t i = 0; i < normalized.rows(); ++i) {
    const double p = normalized.row(i)[labels.labels[i] - 1];
    total += std::log(std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip));
  }
  return -total / static_cast<double>(normalized.rows());
}

std::vector<int> predicted_classes(const PredictionMatrix& preds) {
  std::vector<int> out(preds.rows());
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    const double* r = preds.row(i);
    // max_element returns the first maximum, i.e. the lowest class index.
    out[i] = static_cast<int>(std::max_element(r, r + preds.classes) - r) + 1;
  }
  return out;
}

double accuracy(const PredictionMatrix& preds, const LabelVector& labels) {
  check_aligned(preds, labels);
  const auto predicted = predicted_classes(preds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels.labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

std::vector<std::vector<std::size_t>> confusion(const PredictionMatrix& preds,
                                                const LabelVector& labels) {
  check_aligned(preds, labels);
  std::vector<std::vector<std::size_t>> m(preds.classes, std::vector<std::size_t>(preds.classes, 0));
  const auto predicted = predicted_classes(preds);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++m[static_cast<std::size_t>(labels.labels[i] - 1)][static_cast<std::size_t>(predicted[i] - 1)];
  }
  return m;
}

Metrics score(const PredictionMatrix& preds, const LabelVector& labels) {
  Metrics m;
  m.logloss = logloss(preds, labels);
  m.accuracy = accuracy(preds, labels);
  m.confusion = confusion(preds, labels);
  m.samples = preds.rows();
  return m;
}

std::string metrics_json(const Metrics& metrics) {
  nlohmann::json j;
  j["logloss"] = metrics.logloss;
  j["accuracy"] = metrics.accuracy;
  j["samples"] = metrics.samples;
  j["confusion"] = metrics.confusion;
  return j.dump(2);
}

void write_predictions_csv(std::ostream& out, const PredictionMatrix& preds) {
  out << "Id";
  for (std::size_t j = 1; j <= preds.classes; ++j) out << ",Prediction" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    out << preds.sample_ids[i];
    const double* r = preds.row(i);
    for (std::size_t j = 0; j < preds.classes; ++j) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), r[j]);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

PredictionMatrix read_predictions_csv(std::istream& in) {
  PredictionMatrix preds;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() < 2 || fields[0] != "Id") {
        throw DataError("predictions CSV must start with Id,Prediction1,...");
      }
      for (std::size_t j = 1; j < fields.size(); ++j) {
        if (fields[j] != "Prediction" + std::to_string(j)) {
          throw DataError("predictions header column " + std::to_string(j + 1) + " is '" +
                          std::string(fields[j]) + "'");
        }
      }
      preds.classes = fields.size() - 1;
      header_seen = true;
      continue;
    }
    if (fields.size() != preds.classes + 1) {
      throw DimensionMismatch("predictions line " + std::to_string(lineno) + " has " +
                              std::to_string(fields.size()) + " fields");
    }
    row.assign(preds.classes, 0.0);
    for (std::size_t j = 0; j < preds.classes; ++j) {
      const auto f = fields[j + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[j]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError("predictions line " + std::to_string(lineno) + ": bad number '" +
                        std::string(f) + "'");
      }
    }
    preds.append(std::string(fields[0]), row);
  }
  if (!header_seen) throw DataError("predictions CSV is empty");
  preds.normalize_rows();
  return preds;
}

PredictionMatrix read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_predictions_csv(in);
}

void write_predictions_file(const std::string& path, const PredictionMatrix& preds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  write_predictions_csv(out, preds);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace secimg
