#include "trackhdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trackhdr/error.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"
#include "trackhdr/stats.hpp"

namespace trackhdr {

namespace {

constexpr double kClip = 1e-15;

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void check_inputs(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  if (labels.size() != probs.size()) throw LengthMismatch("labels and probabilities differ in length");
  if (labels.empty()) throw EmptyInput("no predictions to score");
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

// Cumulative (threshold, tp, fp) after each group of tied scores, scanning
// from the highest score down.
struct Step {
  double threshold;
  double tp;
  double fp;
};

std::vector<Step> threshold_steps(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  const auto order = order_by_score_desc(probs);
  std::vector<Step> steps;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) {
      tp += 1.0;
    } else {
      fp += 1.0;
    }
    if (k + 1 == order.size() || probs[order[k + 1]] != probs[order[k]]) {
      steps.push_back({probs[order[k]], tp, fp});
    }
  }
  return steps;
}

double metric_value(Metric m, const ConfusionMatrix& cm, std::span<const std::uint8_t> labels,
                    std::span<const double> probs) {
  switch (m) {
    case Metric::accuracy: return accuracy(cm);
    case Metric::balanced_accuracy: return balanced_accuracy(cm);
    case Metric::precision: return precision(cm);
    case Metric::recall: return recall(cm);
    case Metric::f1: return f1_score(cm);
    case Metric::mcc: return mcc(cm);
    case Metric::log_loss: return log_loss(labels, probs);
    case Metric::roc_auc: return roc_auc(labels, probs);
    case Metric::auprc: return auprc(labels, probs);
  }
  return 0.0;
}

}  // namespace

ConfusionMatrix confusion_at(std::span<const std::uint8_t> labels, std::span<const double> probs,
                             double threshold) {
  check_inputs(labels, probs);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i]) {
      ++(pred ? cm.tp : cm.fn);
    } else {
      ++(pred ? cm.fp : cm.tn);
    }
  }
  return cm;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::balanced_accuracy: return "balanced_accuracy";
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
    case Metric::mcc: return "mcc";
    case Metric::log_loss: return "log_loss";
    case Metric::roc_auc: return "roc_auc";
    case Metric::auprc: return "auprc";
  }
  return "unknown";
}

Metric parse_metric(std::string_view s) {
  for (const auto m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown metric '" + std::string(s) + "'");
}

double compute_metric(Metric m, std::span<const std::uint8_t> labels, std::span<const double> probs,
                      double threshold) {
  return metric_value(m, confusion_at(labels, probs, threshold), labels, probs);
}

bool higher_is_better(Metric m) { return m != Metric::log_loss; }

bool class_conditional(Metric m) { return m != Metric::accuracy && m != Metric::log_loss; }

double accuracy(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.tp + cm.tn), static_cast<double>(cm.total()));
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  const double pos = static_cast<double>(cm.tp + cm.fn);
  const double neg = static_cast<double>(cm.tn + cm.fp);
  double sum = 0.0;
  int classes = 0;
  if (pos > 0) {
    sum += cm.tp / pos;
    ++classes;
  }
  if (neg > 0) {
    sum += cm.tn / neg;
    ++classes;
  }
  return classes ? sum / classes : 0.0;
}

double precision(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
}

double recall(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
}

double f1_score(const ConfusionMatrix& cm) {
  const double p = precision(cm);
  const double r = recall(cm);
  return ratio(2.0 * p * r, p + r);
}

double mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double fn = static_cast<double>(cm.fn);
  const double den = std::sqrt((tp + fp) * (tp + fn)) * std::sqrt((tn + fp) * (tn + fn));
  return ratio(tp * tn - fp * fn, den);
}

double log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  check_inputs(labels, probs);
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probs[i], kClip, 1.0 - kClip);
    s -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return s / static_cast<double>(labels.size());
}

double roc_auc(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  check_inputs(labels, probs);
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && probs[order[end]] == probs[order[k]]) ++end;
    const double midrank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t t = k; t < end; ++t) {
      if (labels[order[t]]) {
        rank_sum += midrank;
        pos += 1.0;
      }
    }
    k = end;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return 0.5;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auprc(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  check_inputs(labels, probs);
  const auto steps = threshold_steps(labels, probs);
  const double pos = steps.back().tp;
  if (pos == 0.0) return 0.0;
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& s : steps) {
    const double r = s.tp / pos;
    area += (r - prev_recall) * (s.tp / (s.tp + s.fp));
    prev_recall = r;
  }
  return area;
}

double MetricsReport::get(Metric m) const {
  switch (m) {
    case Metric::accuracy: return accuracy;
    case Metric::balanced_accuracy: return balanced_accuracy;
    case Metric::precision: return precision;
    case Metric::recall: return recall;
    case Metric::f1: return f1;
    case Metric::mcc: return mcc;
    case Metric::log_loss: return log_loss;
    case Metric::roc_auc: return roc_auc;
    case Metric::auprc: return auprc;
  }
  return 0.0;
}

MetricsReport compute_metrics(std::span<const std::uint8_t> labels, std::span<const double> probs,
                              double threshold, bool with_ci, std::uint64_t seed,
                              std::size_t n_resamples) {
  check_inputs(labels, probs);
  for (const double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must lie in [0, 1]");
  }
  MetricsReport r;
  r.cm = confusion_at(labels, probs, threshold);
  r.accuracy = trackhdr::accuracy(r.cm);
  r.balanced_accuracy = trackhdr::balanced_accuracy(r.cm);
  r.precision = trackhdr::precision(r.cm);
  r.recall = trackhdr::recall(r.cm);
  r.f1 = f1_score(r.cm);
  r.mcc = trackhdr::mcc(r.cm);
  r.log_loss = trackhdr::log_loss(labels, probs);
  r.roc_auc = trackhdr::roc_auc(labels, probs);
  r.auprc = trackhdr::auprc(labels, probs);
  r.n = labels.size();
  r.threshold = threshold;
  r.seed = seed;
  if (with_ci && labels.size() >= 2) {
    auto boot = bootstrap_ci(labels, probs, kAllMetrics, n_resamples, seed, threshold);
    r.cis = std::move(boot.intervals);
    r.single_class_draws = boot.single_class_draws;
  }
  return r;
}

BootstrapResult bootstrap_ci(std::span<const std::uint8_t> labels, std::span<const double> probs,
                             std::span<const Metric> metrics, std::size_t n_resamples,
                             std::uint64_t seed, double threshold) {
  check_inputs(labels, probs);
  if (labels.size() < 2) throw EmptyInput("bootstrap needs at least two predictions");
  const std::size_t n = labels.size();
  std::vector<std::vector<double>> values(n_resamples, std::vector<double>(metrics.size()));
  std::vector<char> single_class(n_resamples, 0);
  parallel_for(n_resamples, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::uint8_t> y(n);
    std::vector<double> p(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(rng.below(n));
      y[i] = labels[k];
      p[i] = probs[k];
      pos += y[i];
    }
    single_class[b] = pos == 0 || pos == n;
    const auto cm = confusion_at(y, p, threshold);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      if (single_class[b] && class_conditional(metrics[m])) continue;
      values[b][m] = metric_value(metrics[m], cm, y, p);
    }
  });
  BootstrapResult out;
  for (std::size_t b = 0; b < n_resamples; ++b) out.single_class_draws += single_class[b];
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    std::vector<double> draws;
    draws.reserve(n_resamples);
    for (std::size_t b = 0; b < n_resamples; ++b) {
      if (single_class[b] && class_conditional(metrics[m])) continue;
      draws.push_back(values[b][m]);
    }
    Interval iv;
    iv.draws = draws.size();
    if (!draws.empty()) {
      std::vector<double> sorted = draws;
      std::sort(sorted.begin(), sorted.end());
      iv.low = quantile_sorted(sorted, 0.025);
      iv.high = quantile_sorted(sorted, 0.975);
    }
    out.intervals[metrics[m]] = iv;
    out.draws[metrics[m]] = std::move(draws);
  }
  return out;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  for (const auto m : kAllMetrics) j[std::string(to_string(m))] = r.get(m);
  j["confusion_matrix"] = to_json(r.cm);
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  j["seed"] = r.seed;
  if (r.cis) {
    nlohmann::json cis = nlohmann::json::object();
    for (const auto& [m, iv] : *r.cis) {
      cis[std::string(to_string(m))] = {{"low", iv.low}, {"high", iv.high}, {"draws", iv.draws}};
    }
    j["ci"] = std::move(cis);
    j["single_class_draws"] = r.single_class_draws;
  }
  return j;
}

std::vector<CurvePoint> precision_recall_curve(std::span<const std::uint8_t> labels,
                                               std::span<const double> probs) {
  check_inputs(labels, probs);
  const auto steps = threshold_steps(labels, probs);
  const double pos = steps.back().tp;
  std::vector<CurvePoint> out;
  for (const auto& s : steps) out.push_back({s.threshold, ratio(s.tp, pos), s.tp / (s.tp + s.fp)});
  return out;
}

std::vector<CurvePoint> roc_curve(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  check_inputs(labels, probs);
  const auto steps = threshold_steps(labels, probs);
  const double pos = steps.back().tp;
  const double neg = steps.back().fp;
  std::vector<CurvePoint> out{{1.0 + steps.front().threshold, 0.0, 0.0}};
  for (const auto& s : steps) out.push_back({s.threshold, ratio(s.fp, neg), ratio(s.tp, pos)});
  return out;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const std::uint8_t> labels,
                                             std::span<const double> probs, std::size_t bins) {
  check_inputs(labels, probs);
  if (bins == 0) throw InvalidArgument("reliability: bins must be positive");
  std::vector<ReliabilityBin> out(bins);
  std::vector<double> sum_p(bins, 0.0);
  std::vector<double> sum_y(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = {static_cast<double>(b) / bins, static_cast<double>(b + 1) / bins, 0, 0.0, 0.0};
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto b = static_cast<std::size_t>(probs[i] * static_cast<double>(bins));
    b = std::min(b, bins - 1);
    ++out[b].count;
    sum_p[b] += probs[i];
    sum_y[b] += labels[i];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].mean_predicted = ratio(sum_p[b], static_cast<double>(out[b].count));
    out[b].observed_rate = ratio(sum_y[b], static_cast<double>(out[b].count));
  }
  return out;
}

}  // namespace trackhdr
