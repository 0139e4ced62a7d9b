#include "trackhdr/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trackhdr/error.hpp"

namespace trackhdr {

namespace {

constexpr std::array<Metric, 9> kTableOrder = {
    Metric::accuracy, Metric::log_loss, Metric::roc_auc, Metric::auprc, Metric::balanced_accuracy,
    Metric::f1,       Metric::precision, Metric::recall, Metric::mcc};

constexpr std::array<const char*, 13> kHeadings = {
    "Accuracy", "Log-Loss", "ROC-AUC", "AUPRC", "BACC", "F1-Score", "Precision",
    "Recall",   "MCC",      "FP",      "TN",    "FN",   "TP"};

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.mcc = j.at("mcc").get<double>();
  r.log_loss = j.at("log_loss").get<double>();
  r.roc_auc = j.at("roc_auc").get<double>();
  r.auprc = j.at("auprc").get<double>();
  const auto& cm = j.at("confusion_matrix");
  r.cm = {cm.at("tp").get<std::uint64_t>(), cm.at("fp").get<std::uint64_t>(),
          cm.at("tn").get<std::uint64_t>(), cm.at("fn").get<std::uint64_t>()};
  r.n = j.at("n").get<std::uint64_t>();
  r.threshold = j.at("threshold").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ci")) {
    std::map<Metric, Interval> cis;
    for (const auto& [name, iv] : j["ci"].items()) {
      cis[parse_metric(name)] = {iv.at("low").get<double>(), iv.at("high").get<double>(),
                                 iv.at("draws").get<std::uint64_t>()};
    }
    r.cis = std::move(cis);
    r.single_class_draws = j.value("single_class_draws", std::uint64_t{0});
  }
  return r;
}

}  // namespace

std::string format_metrics_table(const std::vector<ReportRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Model"};
  header.insert(header.end(), kHeadings.begin(), kHeadings.end());
  cells.push_back(header);
  for (const auto& [name, r] : rows) {
    std::vector<std::string> line{name};
    for (const auto m : kTableOrder) line.push_back(fmt::format("{:.3f}", r.get(m)));
    for (const auto v : {r.cm.fp, r.cm.tn, r.cm.fn, r.cm.tp}) line.push_back(std::to_string(v));
    cells.push_back(std::move(line));
    if (r.cis) {
      std::vector<std::string> ci{""};
      for (const auto m : kTableOrder) {
        const auto it = r.cis->find(m);
        ci.push_back(it == r.cis->end() || it->second.draws == 0
                         ? "-"
                         : fmt::format("[{:.3f},{:.3f}]", it->second.low, it->second.high));
      }
      cells.push_back(std::move(ci));
    }
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    std::string text;
    for (std::size_t c = 0; c < cells[l].size(); ++c) {
      if (c == 0) {
        text += fmt::format("{:<{}}", cells[l][c], width[c]);
      } else {
        text += fmt::format("  {:>{}}", cells[l][c], width[c]);
      }
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out += text + "\n";
    if (l == 0) {
      std::size_t total = 0;
      for (const auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

nlohmann::json report_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, r] : rows) out.push_back({{"name", name}, {"metrics", to_json(r)}});
  return {{"v", 1}, {"rows", std::move(out)}};
}

std::vector<ReportRow> rows_from_json(const nlohmann::json& j) {
  std::vector<ReportRow> rows;
  try {
    for (const auto& row : j.at("rows")) {
      rows.emplace_back(row.at("name").get<std::string>(), report_from_json(row.at("metrics")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return rows;
}

CurveFiles curve_csvs(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  CurveFiles out;
  out.pr_csv = "threshold,recall,precision\n";
  for (const auto& p : precision_recall_curve(labels, probs)) {
    out.pr_csv += fmt::format("{},{},{}\n", p.threshold, p.x, p.y);
  }
  out.roc_csv = "threshold,fpr,tpr\n";
  for (const auto& p : roc_curve(labels, probs)) {
    out.roc_csv += fmt::format("{},{},{}\n", p.threshold, p.x, p.y);
  }
  out.reliability_csv = "bin_low,bin_high,count,mean_predicted,observed_rate\n";
  for (const auto& b : reliability_bins(labels, probs)) {
    out.reliability_csv +=
        fmt::format("{},{},{},{},{}\n", b.low, b.high, b.count, b.mean_predicted, b.observed_rate);
  }
  return out;
}

}  // namespace trackhdr
