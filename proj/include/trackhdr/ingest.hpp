#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "trackhdr/record.hpp"

namespace trackhdr {

enum class CaptureFormat { tex_json, canonical_jsonl };

CaptureFormat parse_capture_format(std::string_view s);

struct IngestResult {
  Dataset dataset;
  std::uint64_t skipped = 0;
  std::map<std::string, std::uint64_t> skipped_by_reason;
};

struct IngestOptions {
  // Applied to records that do not carry their own tag.
  std::string browser_tag;
  std::string crawl_date;
  // First record_id assigned by importers that number records themselves.
  std::uint64_t first_id = 0;
};

// Parses a capture export. Malformed container syntax throws ParseError;
// individual malformed entries are skipped and counted.
IngestResult ingest_capture(const std::string& path, CaptureFormat format,
                            const IngestOptions& options = {});
IngestResult ingest_capture_text(std::string_view text, CaptureFormat format,
                                 std::string_view source_name, const IngestOptions& options = {});

// Concatenates datasets in the given order (source path, then position).
// Throws InvalidArgument on colliding record ids.
Dataset merge_datasets(const std::vector<Dataset>& parts);

// Canonical JSONL persistence. load_dataset is strict: unknown version tags
// raise SchemaVersionError and any malformed line raises ParseError.
void persist_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);
std::string serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::string_view text);

// Drops records whose hostname contains any of the substrings
// (case-insensitive). An empty substring raises InvalidArgument.
Dataset filter_hosts(const Dataset& ds, const std::vector<std::string>& exclude_substrings);

}  // namespace trackhdr
