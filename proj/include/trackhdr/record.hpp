#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trackhdr {

enum class Direction { request, response };
enum class Label { NT = 0, T = 1 };

std::string_view to_string(Direction d);
std::string_view to_string(Label l);
Direction parse_direction(std::string_view s);
Label parse_label(std::string_view s);

using Header = std::pair<std::string, std::string>;

// One captured HTTP message. Header names are lowercase and trimmed; values
// are kept verbatim. Duplicate names are allowed and keep their order.
struct HttpMessageRecord {
  std::uint64_t record_id = 0;
  Direction direction = Direction::response;
  std::string remote_hostname;
  std::string url;
  std::vector<Header> headers;
  std::string browser_tag;
  std::int64_t capture_timestamp = 0;

  bool operator==(const HttpMessageRecord&) const = default;
};

struct Provenance {
  std::vector<std::string> source_paths;
  std::string browser_tag;
  std::string crawl_date;
  std::string content_digest;
  std::vector<std::string> excluded_host_substrings;
  // Digest of the filter lists that produced label_map, if labeled.
  std::string label_source_digest;
  // Headerless messages are kept (they binarize to all-zero rows) and
  // counted here at ingest.
  std::uint64_t headerless_records = 0;

  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<HttpMessageRecord> records;
  Provenance provenance;
  std::optional<std::map<std::uint64_t, Label>> label_map;

  bool operator==(const Dataset&) const = default;

  bool labeled() const { return label_map.has_value(); }
  // Throws UnlabeledDataset when absent or incomplete for this record.
  Label label_of(const HttpMessageRecord& r) const;
};

// Normalises a header name: trims ASCII whitespace and lowercases.
std::string normalize_header_name(std::string_view name);

// Extracts the hostname from a URL authority: lowercased, userinfo and port
// removed, IPv6 brackets stripped. Returns nullopt when no host is present.
std::optional<std::string> hostname_from_url(std::string_view url);

// Checks the record invariants (lowercase trimmed names, bare hostname).
bool valid_hostname(std::string_view host);

// Digest over the parsed records (order-sensitive), independent of
// provenance. Identical inputs give identical digests.
std::string records_digest(const std::vector<HttpMessageRecord>& records);

// Keeps only records of one direction. Provenance and labels are carried.
Dataset select_direction(const Dataset& ds, Direction dir);

// Throws InvalidArgument on duplicate ids or an incomplete label_map.
void check_dataset_invariants(const Dataset& ds);

}  // namespace trackhdr
