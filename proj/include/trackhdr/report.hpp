#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/metrics.hpp"

namespace trackhdr {

using ReportRow = std::pair<std::string, MetricsReport>;

// One row per model in the order Accuracy, Log-Loss, ROC-AUC, AUPRC, BACC,
// F1, Precision, Recall, MCC, FP, TN, FN, TP. When a row carries intervals,
// a second line beneath it lists [low, high] per metric column.
std::string format_metrics_table(const std::vector<ReportRow>& rows);

nlohmann::json report_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_json(const nlohmann::json& j);

struct CurveFiles {
  std::string pr_csv;
  std::string roc_csv;
  std::string reliability_csv;
};
CurveFiles curve_csvs(std::span<const std::uint8_t> labels, std::span<const double> probs);

}  // namespace trackhdr
