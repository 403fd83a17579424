#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace curator::metrics {

/// An undefined score (division by zero) is carried as nullopt.
using Score = std::optional<double>;

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t positives() const noexcept { return tp + fn; }
  std::uint64_t negatives() const noexcept { return fp + tn; }
  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& other) noexcept;
  bool operator==(const ConfusionCounts&) const = default;
};

/// Label swap: TP <-> TN and FP <-> FN.
ConfusionCounts swapped(const ConfusionCounts& c) noexcept;

/// Counts (predicted, truth) pairs; both spans must have equal length.
ConfusionCounts tally(std::span<const bool> predicted, std::span<const bool> truth);

Score precision(const ConfusionCounts& c) noexcept;
Score recall(const ConfusionCounts& c) noexcept;
Score npv(const ConfusionCounts& c) noexcept;
Score specificity(const ConfusionCounts& c) noexcept;

/// Harmonic mean of precision and recall. Undefined when TP+FP+FN = 0;
/// 0 when TP = 0 and FP or FN is nonzero.
Score f1(const ConfusionCounts& c) noexcept;

/// Harmonic mean of NPV and specificity, i.e. F1 of the label-swapped
/// matrix. Undefined when TN+FP+FN = 0; 0 when TN = 0 and FP or FN is nonzero.
Score f1_n(const ConfusionCounts& c) noexcept;

/// Mean of f1 and f1_n; undefined if either is.
Score average_f1(const ConfusionCounts& c) noexcept;

/// Negatives over positives, (FP+TN)/(TP+FN). Undefined with no positives.
Score skew(const ConfusionCounts& c) noexcept;

struct ScoreRow {
  ConfusionCounts counts;
  Score precision;
  Score recall;
  Score npv;
  Score specificity;
  Score f1;
  Score f1_n;
  Score average_f1;
  Score skew;
};

ScoreRow score_row(const ConfusionCounts& c);

/// Metric names in the fixed column order used by report emitters.
const std::vector<std::string>& metric_names();
Score metric_value(const ScoreRow& row, const std::string& name);

// Distance densities ---------------------------------------------------------

struct LabeledDistance {
  double distance = 0.0;
  bool is_keyword = false;
};

struct DensityHistogram {
  std::vector<double> edges;  // bins + 1 ascending edges; empty for no samples
  std::vector<std::size_t> keyword_counts;
  std::vector<std::size_t> other_counts;
  std::optional<double> fp0;
  std::optional<double> fn0;
  std::optional<double> active_threshold;
};

struct DensityMarkers {
  std::optional<double> fp0;
  std::optional<double> fn0;
  std::optional<double> active_threshold;
};

/// Per-label counts over `bins` equal-width bins spanning [min, max] of the
/// observed distances; the maximum falls in the last bin.
DensityHistogram density(std::span<const LabeledDistance> samples, std::size_t bins,
                         const DensityMarkers& markers = {});

// Method comparison ----------------------------------------------------------

/// class -> crop id -> keyword?
using ClassLabels = std::map<std::string, std::map<std::string, bool>>;

struct MethodDecisions {
  std::string method;
  ClassLabels predictions;
};

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<std::string> classes;
  // cells[class][method]; a class without crops has an all-undefined row.
  std::map<std::string, std::map<std::string, ScoreRow>> cells;
  // means[method][metric] over defined cells only.
  std::map<std::string, std::map<std::string, Score>> means;

  /// Rows: classes then a "mean" row; columns: method x metric, 4 d.p.,
  /// undefined cells written as NA.
  std::string to_csv() const;

  /// {metric, methods, classes, values[class][method], means{method}}.
  nlohmann::json heatmap(const std::string& metric = "average_f1") const;

  nlohmann::json to_json() const;
};

/// Scores every method's per-class keyword decisions against ground truth.
/// Throws ContractError when a method's crop universe differs from the
/// ground truth's for any class.
ComparisonReport compare_methods(std::span<const MethodDecisions> methods, const ClassLabels& truth);

nlohmann::json score_to_json(const Score& s);
nlohmann::json to_json(const ScoreRow& row);
nlohmann::json to_json(const DensityHistogram& h);

}  // namespace curator::metrics
