#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace trackhdr {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_at(std::span<const std::uint8_t> labels, std::span<const double> probs,
                             double threshold);

enum class Metric {
  accuracy,
  balanced_accuracy,
  precision,
  recall,
  f1,
  mcc,
  log_loss,
  roc_auc,
  auprc
};

inline constexpr std::array<Metric, 9> kAllMetrics = {
    Metric::accuracy, Metric::balanced_accuracy, Metric::precision, Metric::recall, Metric::f1,
    Metric::mcc,      Metric::log_loss,          Metric::roc_auc,   Metric::auprc};

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);
// Metrics that are undefined unless both classes occur.
bool class_conditional(Metric m);

// Threshold metrics straight from counts. Zero denominators give 0;
// balanced accuracy averages the rates of the classes that occur.
double accuracy(const ConfusionMatrix& cm);
double balanced_accuracy(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);
double f1_score(const ConfusionMatrix& cm);
double mcc(const ConfusionMatrix& cm);

// Mean log-loss with probabilities clipped to [1e-15, 1 - 1e-15].
double log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs);
// Rank statistic with midranks for ties; 0.5 when one class is absent.
double roc_auc(std::span<const std::uint8_t> labels, std::span<const double> probs);
// Step-wise average precision over distinct thresholds; 0 without positives.
double auprc(std::span<const std::uint8_t> labels, std::span<const double> probs);

// One metric from labels and probabilities.
double compute_metric(Metric m, std::span<const std::uint8_t> labels, std::span<const double> probs,
                      double threshold = 0.5);
// True for metrics where larger is better (all but log_loss).
bool higher_is_better(Metric m);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  std::uint64_t draws = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double log_loss = 0.0;
  double roc_auc = 0.0;
  double auprc = 0.0;
  ConfusionMatrix cm;
  std::optional<std::map<Metric, Interval>> cis;
  // Bootstrap draws that contained a single class.
  std::uint64_t single_class_draws = 0;
  std::uint64_t n = 0;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  double get(Metric m) const;
};

inline constexpr std::size_t kDefaultResamples = 599;

// Throws LengthMismatch / EmptyInput. With with_ci, attaches bootstrap
// percentile intervals (2.5 / 97.5).
MetricsReport compute_metrics(std::span<const std::uint8_t> labels, std::span<const double> probs,
                              double threshold = 0.5, bool with_ci = false, std::uint64_t seed = 0,
                              std::size_t n_resamples = kDefaultResamples);

struct BootstrapResult {
  std::map<Metric, Interval> intervals;
  std::map<Metric, std::vector<double>> draws;
  std::uint64_t single_class_draws = 0;
};

// Resample b uses Rng(derive_seed(seed, b)). Requires n >= 2.
BootstrapResult bootstrap_ci(std::span<const std::uint8_t> labels, std::span<const double> probs,
                             std::span<const Metric> metrics, std::size_t n_resamples,
                             std::uint64_t seed, double threshold = 0.5);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& r);

// Plot series.
struct CurvePoint {
  double threshold;
  double x;
  double y;
};
// (recall, precision) per distinct threshold, highest threshold first.
std::vector<CurvePoint> precision_recall_curve(std::span<const std::uint8_t> labels,
                                               std::span<const double> probs);
// (fpr, tpr) per distinct threshold, starting at (0, 0).
std::vector<CurvePoint> roc_curve(std::span<const std::uint8_t> labels, std::span<const double> probs);

struct ReliabilityBin {
  double low;
  double high;
  std::uint64_t count;
  double mean_predicted;
  double observed_rate;
};
std::vector<ReliabilityBin> reliability_bins(std::span<const std::uint8_t> labels,
                                             std::span<const double> probs, std::size_t bins = 10);

}  // namespace trackhdr
