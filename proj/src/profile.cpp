#include "trackhdr/profile.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "trackhdr/error.hpp"

namespace trackhdr {
namespace {

std::optional<double> parse_decimal_integer(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return static_cast<double>(v);
}

nlohmann::json quartiles_json(const Quartiles& q) {
  return nlohmann::json::array({q.q1, q.median, q.q3});
}

}  // namespace

ProfileReport profile_dataset(const Dataset& ds, const std::vector<std::string>& value_summary_headers) {
  if (!ds.labeled()) throw UnlabeledDataset("profile requires a labeled dataset");
  ProfileReport rep;
  rep.records = ds.records.size();
  std::set<std::string> names_t;
  std::set<std::string> names_nt;
  std::vector<double> per_record_t;
  std::vector<double> per_record_nt;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> values;
  std::set<std::string> wanted;
  for (const auto& h : value_summary_headers) {
    wanted.insert(normalize_header_name(h));
    rep.value_summaries[normalize_header_name(h)] = {};
  }

  for (const auto& r : ds.records) {
    const bool tracker = ds.label_of(r) == Label::T;
    (tracker ? rep.responses_per_label.tracker : rep.responses_per_label.non_tracker)++;
    if (r.headers.empty()) ++rep.headerless_records;
    std::set<std::string> distinct;
    for (const auto& [name, value] : r.headers) {
      distinct.insert(name);
      if (wanted.contains(name)) {
        if (const auto v = parse_decimal_integer(value)) {
          auto& slot = values[name];
          (tracker ? slot.first : slot.second).push_back(*v);
        } else {
          ++rep.value_summaries[name].skipped;
        }
      }
    }
    for (const auto& name : distinct) {
      ++rep.header_frequency[name];
      (tracker ? names_t : names_nt).insert(name);
    }
    (tracker ? per_record_t : per_record_nt).push_back(static_cast<double>(distinct.size()));
  }

  if (rep.records > 0) {
    rep.tracker_fraction = static_cast<double>(rep.responses_per_label.tracker) / rep.records;
    rep.non_tracker_fraction = 1.0 - rep.tracker_fraction;
  }
  rep.unique_headers_per_label = {names_t.size(), names_nt.size()};
  rep.headers_per_record_tracker = quartiles(std::move(per_record_t));
  rep.headers_per_record_non_tracker = quartiles(std::move(per_record_nt));
  for (auto& [name, vals] : values) {
    auto& s = rep.value_summaries[name];
    s.parsed_tracker = vals.first.size();
    s.parsed_non_tracker = vals.second.size();
    s.tracker = quartiles(std::move(vals.first));
    s.non_tracker = quartiles(std::move(vals.second));
  }
  return rep;
}

std::map<std::uint32_t, std::uint64_t> header_overlap_counts(
    const std::vector<std::vector<std::string>>& header_sets) {
  if (header_sets.size() > 31) throw InvalidArgument("overlap supports at most 31 datasets");
  std::map<std::string, std::uint32_t> membership;
  for (std::size_t i = 0; i < header_sets.size(); ++i) {
    for (const auto& name : header_sets[i]) membership[name] |= (1u << i);
  }
  std::map<std::uint32_t, std::uint64_t> regions;
  for (const auto& [name, mask] : membership) ++regions[mask];
  return regions;
}

std::vector<std::string> unique_header_names(const Dataset& ds) {
  std::set<std::string> names;
  for (const auto& r : ds.records) {
    for (const auto& h : r.headers) names.insert(h.first);
  }
  return {names.begin(), names.end()};
}

nlohmann::json to_json(const ProfileReport& rep) {
  nlohmann::json vs = nlohmann::json::object();
  for (const auto& [name, s] : rep.value_summaries) {
    vs[name] = {{"tracker", quartiles_json(s.tracker)},
                {"non_tracker", quartiles_json(s.non_tracker)},
                {"parsed_tracker", s.parsed_tracker},
                {"parsed_non_tracker", s.parsed_non_tracker},
                {"skipped", s.skipped}};
  }
  return {{"records", rep.records},
          {"responses_per_label", {{"T", rep.responses_per_label.tracker},
                                   {"NT", rep.responses_per_label.non_tracker}}},
          {"fraction_per_label", {{"T", rep.tracker_fraction}, {"NT", rep.non_tracker_fraction}}},
          {"unique_headers_per_label", {{"T", rep.unique_headers_per_label.tracker},
                                        {"NT", rep.unique_headers_per_label.non_tracker}}},
          {"headers_per_record_quartiles", {{"T", quartiles_json(rep.headers_per_record_tracker)},
                                            {"NT", quartiles_json(rep.headers_per_record_non_tracker)}}},
          {"header_frequency", rep.header_frequency},
          {"value_summaries", std::move(vs)},
          {"headerless_records", rep.headerless_records}};
}

std::string format_profile(const ProfileReport& rep, const std::string& title) {
  std::ostringstream out;
  auto q = [](const Quartiles& x) { return fmt::format("{:g},{:g},{:g}", x.q1, x.median, x.q3); };
  out << title << '\n';
  out << fmt::format("{:<34}{:>14}{:>14}\n", "", "T", "NT");
  out << fmt::format("{:<34}{:>14}{:>14}\n", "#Records", rep.responses_per_label.tracker,
                     rep.responses_per_label.non_tracker);
  out << fmt::format("{:<34}{:>14.4f}{:>14.4f}\n", "#Records fraction", rep.tracker_fraction,
                     rep.non_tracker_fraction);
  out << fmt::format("{:<34}{:>14}{:>14}\n", "#Unique headers", rep.unique_headers_per_label.tracker,
                     rep.unique_headers_per_label.non_tracker);
  out << fmt::format("{:<34}{:>14}{:>14}\n", "Headers per record (Q1,med,Q3)",
                     q(rep.headers_per_record_tracker), q(rep.headers_per_record_non_tracker));
  for (const auto& [name, s] : rep.value_summaries) {
    out << fmt::format("{:<34}{:>14}{:>14}\n", "value " + name, q(s.tracker), q(s.non_tracker));
  }
  out << fmt::format("headerless records: {}\n", rep.headerless_records);
  return out.str();
}

}  // namespace trackhdr
