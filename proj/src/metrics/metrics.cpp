#include "curator/metrics/metrics.hpp"

#include "curator/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace curator::metrics {

namespace {

Score ratio(std::uint64_t num, std::uint64_t den) noexcept {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Shared by f1 and f1_n so that f1_n(c) and f1(swapped(c)) agree bit for bit.
Score harmonic(std::uint64_t hits, std::uint64_t misses_a, std::uint64_t misses_b) noexcept {
  if (hits + misses_a + misses_b == 0) return std::nullopt;
  if (hits == 0) return 0.0;
  const double a = static_cast<double>(hits) / static_cast<double>(hits + misses_a);
  const double b = static_cast<double>(hits) / static_cast<double>(hits + misses_b);
  return 2.0 * (a * b) / (a + b);
}

std::string format_score(const Score& s) {
  if (!s) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *s);
  return buf;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

ConfusionCounts swapped(const ConfusionCounts& c) noexcept {
  return ConfusionCounts{c.tn, c.fn, c.fp, c.tp};
}

ConfusionCounts tally(std::span<const bool> predicted, std::span<const bool> truth) {
  if (predicted.size() != truth.size()) {
    throw ContractError("tally: prediction and truth lengths differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) {
      ++(truth[i] ? c.tp : c.fp);
    } else {
      ++(truth[i] ? c.fn : c.tn);
    }
  }
  return c;
}

Score precision(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fp); }
Score recall(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fn); }
Score npv(const ConfusionCounts& c) noexcept { return ratio(c.tn, c.tn + c.fn); }
Score specificity(const ConfusionCounts& c) noexcept { return ratio(c.tn, c.tn + c.fp); }

Score f1(const ConfusionCounts& c) noexcept { return harmonic(c.tp, c.fp, c.fn); }

Score f1_n(const ConfusionCounts& c) noexcept {
  // NPV = TN/(TN+FN), specificity = TN/(TN+FP).
  return harmonic(c.tn, c.fn, c.fp);
}

Score average_f1(const ConfusionCounts& c) noexcept {
  const Score a = f1(c);
  const Score b = f1_n(c);
  if (!a || !b) return std::nullopt;
  return (*a + *b) / 2.0;
}

Score skew(const ConfusionCounts& c) noexcept { return ratio(c.negatives(), c.positives()); }

ScoreRow score_row(const ConfusionCounts& c) {
  return ScoreRow{c,         precision(c), recall(c),     npv(c),
                  specificity(c), f1(c),   f1_n(c), average_f1(c), skew(c)};
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"precision", "recall", "npv",        "specificity",
                                                 "f1",        "f1_n",   "average_f1", "skew"};
  return names;
}

Score metric_value(const ScoreRow& row, const std::string& name) {
  if (name == "precision") return row.precision;
  if (name == "recall") return row.recall;
  if (name == "npv") return row.npv;
  if (name == "specificity") return row.specificity;
  if (name == "f1") return row.f1;
  if (name == "f1_n") return row.f1_n;
  if (name == "average_f1") return row.average_f1;
  if (name == "skew") return row.skew;
  throw ValidationError("unknown metric '" + name + "'");
}

DensityHistogram density(std::span<const LabeledDistance> samples, std::size_t bins,
                         const DensityMarkers& markers) {
  if (bins < 1) {
    throw ValidationError("density needs at least one bin");
  }
  DensityHistogram h;
  h.fp0 = markers.fp0;
  h.fn0 = markers.fn0;
  h.active_threshold = markers.active_threshold;
  if (samples.empty()) {
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const LabeledDistance& a, const LabeledDistance& b) { return a.distance < b.distance; });
  const double lo = lo_it->distance;
  const double hi = hi_it->distance > lo ? hi_it->distance : lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);

  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + width * static_cast<double>(i);
  }
  h.edges.back() = hi;
  h.keyword_counts.assign(bins, 0);
  h.other_counts.assign(bins, 0);
  for (const auto& s : samples) {
    auto bin = static_cast<std::size_t>(std::floor((s.distance - lo) / width));
    bin = std::min(bin, bins - 1);
    ++(s.is_keyword ? h.keyword_counts : h.other_counts)[bin];
  }
  return h;
}

ComparisonReport compare_methods(std::span<const MethodDecisions> methods, const ClassLabels& truth) {
  ComparisonReport report;
  for (const auto& [cls, labels] : truth) {
    report.classes.push_back(cls);
  }
  for (const auto& m : methods) {
    if (std::find(report.methods.begin(), report.methods.end(), m.method) != report.methods.end()) {
      throw ContractError("duplicate method '" + m.method + "'");
    }
    report.methods.push_back(m.method);
    if (m.predictions.size() != truth.size()) {
      throw ContractError("method '" + m.method + "' covers a different set of classes");
    }
    for (const auto& [cls, labels] : truth) {
      auto it = m.predictions.find(cls);
      if (it == m.predictions.end() || it->second.size() != labels.size()) {
        throw ContractError("method '" + m.method + "' has a different crop universe for " + cls);
      }
      ConfusionCounts counts;
      auto pit = it->second.begin();
      for (const auto& [crop, is_keyword] : labels) {
        if (pit->first != crop) {
          throw ContractError("method '" + m.method + "' has a different crop universe for " + cls);
        }
        const bool predicted = pit->second;
        if (predicted) {
          ++(is_keyword ? counts.tp : counts.fp);
        } else {
          ++(is_keyword ? counts.fn : counts.tn);
        }
        ++pit;
      }
      report.cells[cls][m.method] = score_row(counts);
    }
  }

  for (const auto& method : report.methods) {
    for (const auto& metric : metric_names()) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& cls : report.classes) {
        if (const Score s = metric_value(report.cells[cls][method], metric)) {
          sum += *s;
          ++n;
        }
      }
      report.means[method][metric] = n ? Score(sum / static_cast<double>(n)) : std::nullopt;
    }
  }
  return report;
}

std::string ComparisonReport::to_csv() const {
  std::ostringstream out;
  out << "class";
  for (const auto& method : methods) {
    for (const auto& metric : metric_names()) {
      out << ',' << method << ':' << metric;
    }
  }
  out << '\n';
  for (const auto& cls : classes) {
    out << cls;
    const auto& row = cells.at(cls);
    for (const auto& method : methods) {
      for (const auto& metric : metric_names()) {
        out << ',' << format_score(metric_value(row.at(method), metric));
      }
    }
    out << '\n';
  }
  out << "mean";
  for (const auto& method : methods) {
    for (const auto& metric : metric_names()) {
      out << ',' << format_score(means.at(method).at(metric));
    }
  }
  out << '\n';
  return out.str();
}

nlohmann::json score_to_json(const Score& s) { return s ? nlohmann::json(*s) : nlohmann::json(nullptr); }

nlohmann::json ComparisonReport::heatmap(const std::string& metric) const {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& cls : classes) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& method : methods) {
      row.push_back(score_to_json(metric_value(cells.at(cls).at(method), metric)));
    }
    values.push_back(std::move(row));
  }
  nlohmann::json mean_values = nlohmann::json::object();
  for (const auto& method : methods) {
    mean_values[method] = score_to_json(means.at(method).at(metric));
  }
  return {{"metric", metric},
          {"methods", methods},
          {"classes", classes},
          {"values", std::move(values)},
          {"means", std::move(mean_values)}};
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& cls : classes) {
    for (const auto& method : methods) {
      rows[cls][method] = metrics::to_json(cells.at(cls).at(method));
    }
  }
  nlohmann::json mean_rows = nlohmann::json::object();
  for (const auto& method : methods) {
    for (const auto& metric : metric_names()) {
      mean_rows[method][metric] = score_to_json(means.at(method).at(metric));
    }
  }
  return {{"methods", methods}, {"classes", classes}, {"rows", rows},
          {"means", mean_rows},  {"heatmap", heatmap()}};
}

nlohmann::json to_json(const ScoreRow& row) {
  nlohmann::json j = {{"tp", row.counts.tp}, {"fp", row.counts.fp}, {"fn", row.counts.fn},
                      {"tn", row.counts.tn}};
  for (const auto& metric : metric_names()) {
    j[metric] = score_to_json(metric_value(row, metric));
  }
  return j;
}

nlohmann::json to_json(const DensityHistogram& h) {
  nlohmann::json j = {{"edges", h.edges},
                      {"keyword_counts", h.keyword_counts},
                      {"other_counts", h.other_counts},
                      {"fp0", score_to_json(h.fp0)},
                      {"fn0", score_to_json(h.fn0)},
                      {"active_threshold", score_to_json(h.active_threshold)}};
  return j;
}

}  // namespace curator::metrics
