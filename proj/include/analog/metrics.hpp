#pragma once

#include <cstddef>
#include <span>

namespace analog {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Standard definitions; precision, recall and F1 are 0 when their
/// denominator is 0. Throws on all-zero counts.
Metrics metrics(const ConfusionCounts& c);

/// Harmonic mean of precision and recall (0 when both are 0).
double f1_from(double precision, double recall);

/// Predictions are positive when score >= threshold.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold = 0.5);

}  // namespace analog
