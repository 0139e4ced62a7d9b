#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/record.hpp"
#include "trackhdr/stats.hpp"

namespace trackhdr {

struct LabelCounts {
  std::uint64_t tracker = 0;
  std::uint64_t non_tracker = 0;
};

struct ValueSummary {
  Quartiles tracker;
  Quartiles non_tracker;
  std::uint64_t parsed_tracker = 0;
  std::uint64_t parsed_non_tracker = 0;
  std::uint64_t skipped = 0;  // values that are not decimal integers
};

struct ProfileReport {
  std::uint64_t records = 0;
  LabelCounts responses_per_label;
  double tracker_fraction = 0.0;
  double non_tracker_fraction = 0.0;
  LabelCounts unique_headers_per_label;
  // Distinct header names per record.
  Quartiles headers_per_record_tracker;
  Quartiles headers_per_record_non_tracker;
  // Number of records in which each header name occurs.
  std::map<std::string, std::uint64_t> header_frequency;
  std::map<std::string, ValueSummary> value_summaries;
  std::uint64_t headerless_records = 0;
};

ProfileReport profile_dataset(const Dataset& ds, const std::vector<std::string>& value_summary_headers);

// Region cardinalities of the header-name intersection lattice over k sets.
// Key is a bit mask of set membership (bit i = dataset i); each header lands
// in exactly one region.
std::map<std::uint32_t, std::uint64_t> header_overlap_counts(
    const std::vector<std::vector<std::string>>& header_sets);

std::vector<std::string> unique_header_names(const Dataset& ds);

nlohmann::json to_json(const ProfileReport& report);
std::string format_profile(const ProfileReport& report, const std::string& title);

}  // namespace trackhdr
