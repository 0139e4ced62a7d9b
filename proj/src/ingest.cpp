#include "trackhdr/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "trackhdr/error.hpp"

namespace trackhdr {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void skip(IngestResult& out, const std::string& reason) {
  ++out.skipped;
  ++out.skipped_by_reason[reason];
}

json provenance_to_json(const Dataset& ds) {
  const auto& p = ds.provenance;
  return json{{"source_paths", p.source_paths},
              {"browser_tag", p.browser_tag},
              {"crawl_date", p.crawl_date},
              {"content_digest", p.content_digest},
              {"excluded_host_substrings", p.excluded_host_substrings},
              {"label_source_digest", p.label_source_digest},
              {"headerless_records", p.headerless_records},
              {"labeled", ds.labeled()}};
}

void provenance_from_json(const json& meta, Dataset& ds) {
  auto& p = ds.provenance;
  p.source_paths = meta.value("source_paths", std::vector<std::string>{});
  p.browser_tag = meta.value("browser_tag", std::string{});
  p.crawl_date = meta.value("crawl_date", std::string{});
  p.content_digest = meta.value("content_digest", std::string{});
  p.excluded_host_substrings = meta.value("excluded_host_substrings", std::vector<std::string>{});
  p.label_source_digest = meta.value("label_source_digest", std::string{});
  p.headerless_records = meta.value("headerless_records", std::uint64_t{0});
  if (meta.value("labeled", false)) ds.label_map.emplace();
}

json record_to_json(const HttpMessageRecord& r, const Dataset& ds) {
  json hdr = json::array();
  for (const auto& [name, value] : r.headers) hdr.push_back(json::array({name, value}));
  json label = nullptr;
  if (ds.label_map) label = std::string(to_string(ds.label_of(r)));
  return json{{"v", kSchemaVersion},  {"id", r.record_id},
              {"dir", to_string(r.direction)}, {"host", r.remote_hostname},
              {"url", r.url},         {"browser", r.browser_tag},
              {"ts", r.capture_timestamp},     {"hdr", std::move(hdr)},
              {"label", std::move(label)}};
}

// Throws std::exception subclasses on schema violations; callers decide
// whether that skips the line or aborts.
HttpMessageRecord record_from_json(const json& j, std::optional<Label>& label) {
  HttpMessageRecord r;
  r.record_id = j.at("id").get<std::uint64_t>();
  r.direction = parse_direction(j.at("dir").get<std::string>());
  r.remote_hostname = j.at("host").get<std::string>();
  if (!valid_hostname(r.remote_hostname)) throw InvalidArgument("invalid hostname");
  r.url = j.value("url", std::string{});
  r.browser_tag = j.value("browser", std::string{});
  r.capture_timestamp = j.value("ts", std::int64_t{0});
  for (const auto& pair : j.at("hdr")) {
    if (!pair.is_array() || pair.size() != 2) throw InvalidArgument("header is not a pair");
    r.headers.emplace_back(normalize_header_name(pair[0].get<std::string>()),
                           pair[1].get<std::string>());
  }
  const auto& l = j.value("label", json(nullptr));
  label = l.is_null() ? std::nullopt : std::optional<Label>(parse_label(l.get<std::string>()));
  return r;
}

void check_version(const json& j) {
  if (!j.contains("v")) throw SchemaVersionError("missing version tag");
  const auto& v = j["v"];
  if (!v.is_number_integer() || v.get<long long>() != kSchemaVersion) {
    throw SchemaVersionError("unsupported schema version " + v.dump());
  }
}

std::string header_value(const json& h) {
  if (const auto it = h.find("value"); it != h.end() && it->is_string()) {
    return it->get<std::string>();
  }
  if (const auto it = h.find("binaryValue"); it != h.end() && it->is_array()) {
    std::string out;
    for (const auto& b : *it) out.push_back(static_cast<char>(b.get<int>()));
    return out;
  }
  return {};
}

// One webRequest-style entry: {url, timeStamp, requestHeaders|responseHeaders:
// [{name, value}]}. The direction comes from the enclosing array or, for
// flat arrays, from which header list is present.
void import_tex_entry(const json& e, std::optional<Direction> dir, const IngestOptions& opt,
                      std::uint64_t id, IngestResult& out) {
  if (!e.is_object()) return skip(out, "entry_not_object");
  const auto url = e.find("url");
  if (url == e.end() || !url->is_string()) return skip(out, "missing_url");
  const auto host = hostname_from_url(url->get<std::string>());
  if (!host) return skip(out, "bad_hostname");
  if (!dir) {
    if (e.contains("responseHeaders")) {
      dir = Direction::response;
    } else if (e.contains("requestHeaders")) {
      dir = Direction::request;
    } else {
      return skip(out, "no_headers_field");
    }
  }
  const char* key = *dir == Direction::response ? "responseHeaders" : "requestHeaders";
  HttpMessageRecord r;
  r.record_id = id;
  r.direction = *dir;
  r.remote_hostname = *host;
  r.url = url->get<std::string>();
  r.browser_tag = e.value("browser", opt.browser_tag);
  if (const auto ts = e.find("timeStamp"); ts != e.end() && ts->is_number()) {
    r.capture_timestamp = static_cast<std::int64_t>(ts->get<double>());
  }
  if (const auto hs = e.find(key); hs != e.end()) {
    if (!hs->is_array()) return skip(out, "headers_not_array");
    for (const auto& h : *hs) {
      if (!h.is_object() || !h.contains("name") || !h["name"].is_string()) {
        return skip(out, "bad_header");
      }
      r.headers.emplace_back(normalize_header_name(h["name"].get<std::string>()), header_value(h));
    }
  }
  out.dataset.records.push_back(std::move(r));
}

void import_tex_json(std::string_view text, const IngestOptions& opt, IngestResult& out) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("tex_json: ") + e.what());
  }
  std::uint64_t id = opt.first_id;
  auto import_array = [&](const json& arr, std::optional<Direction> dir) {
    for (const auto& e : arr) import_tex_entry(e, dir, opt, id++, out);
  };
  if (root.is_array()) {
    import_array(root, std::nullopt);
  } else if (root.is_object()) {
    bool any = false;
    for (const auto& [key, dir] : {std::pair{"requests", Direction::request},
                                   std::pair{"responses", Direction::response}}) {
      if (const auto it = root.find(key); it != root.end()) {
        if (!it->is_array()) throw ParseError(std::string("tex_json: '") + key + "' is not an array");
        import_array(*it, dir);
        any = true;
      }
    }
    if (!any) throw ParseError("tex_json: expected 'requests' or 'responses' arrays");
  } else {
    throw ParseError("tex_json: top level must be an object or array");
  }
}

void import_canonical(std::string_view text, bool strict, IngestResult& out) {
  Dataset& ds = out.dataset;
  std::map<std::uint64_t, Label> labels;
  std::size_t unlabeled = 0;
  bool saw_meta = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": not an object");
    check_version(j);
    if (j.contains("meta")) {
      if (saw_meta || !ds.records.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": meta line must lead the file");
      }
      provenance_from_json(j["meta"], ds);
      saw_meta = true;
      continue;
    }
    try {
      std::optional<Label> label;
      auto r = record_from_json(j, label);
      if (label) {
        labels[r.record_id] = *label;
      } else {
        ++unlabeled;
      }
      ds.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      if (strict) throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      skip(out, "bad_record");
    }
  }
  if (strict && !saw_meta) throw ParseError("missing leading meta line");
  if (!labels.empty() && unlabeled == 0) {
    ds.label_map = std::move(labels);
  } else if (!labels.empty()) {
    if (strict) throw ParseError("labels present on only some records");
    ds.label_map.reset();
  } else if (ds.label_map && !ds.records.empty()) {
    if (strict) throw ParseError("meta says labeled but records carry no labels");
    ds.label_map.reset();
  }
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

CaptureFormat parse_capture_format(std::string_view s) {
  if (s == "tex_json") return CaptureFormat::tex_json;
  if (s == "canonical_jsonl") return CaptureFormat::canonical_jsonl;
  throw InvalidArgument("unknown capture format '" + std::string(s) + "'");
}

IngestResult ingest_capture_text(std::string_view text, CaptureFormat format,
                                 std::string_view source_name, const IngestOptions& options) {
  IngestResult out;
  if (format == CaptureFormat::tex_json) {
    import_tex_json(text, options, out);
    out.dataset.provenance.browser_tag = options.browser_tag;
    out.dataset.provenance.crawl_date = options.crawl_date;
  } else {
    import_canonical(text, /*strict=*/false, out);
    if (!options.browser_tag.empty()) out.dataset.provenance.browser_tag = options.browser_tag;
    if (!options.crawl_date.empty()) out.dataset.provenance.crawl_date = options.crawl_date;
  }
  auto& prov = out.dataset.provenance;
  prov.source_paths = {std::string(source_name)};
  prov.headerless_records = static_cast<std::uint64_t>(
      std::count_if(out.dataset.records.begin(), out.dataset.records.end(),
                    [](const HttpMessageRecord& r) { return r.headers.empty(); }));
  prov.content_digest = records_digest(out.dataset.records);
  check_dataset_invariants(out.dataset);
  return out;
}

IngestResult ingest_capture(const std::string& path, CaptureFormat format,
                            const IngestOptions& options) {
  return ingest_capture_text(read_file(path), format, path, options);
}

Dataset merge_datasets(const std::vector<Dataset>& parts) {
  if (parts.empty()) return {};
  if (parts.size() == 1) return parts.front();
  Dataset out;
  out.provenance = parts.front().provenance;
  out.provenance.source_paths.clear();
  out.provenance.headerless_records = 0;
  const bool labeled = std::all_of(parts.begin(), parts.end(),
                                   [](const Dataset& d) { return d.labeled(); });
  if (labeled) out.label_map.emplace();
  for (const auto& part : parts) {
    for (const auto& p : part.provenance.source_paths) out.provenance.source_paths.push_back(p);
    out.provenance.headerless_records += part.provenance.headerless_records;
    if (part.provenance.browser_tag != out.provenance.browser_tag) out.provenance.browser_tag = "mixed";
    for (const auto& r : part.records) {
      if (labeled) out.label_map->emplace(r.record_id, part.label_of(r));
      out.records.push_back(r);
    }
  }
  check_dataset_invariants(out);
  out.provenance.content_digest = records_digest(out.records);
  return out;
}

std::string serialize_dataset(const Dataset& ds) {
  std::string out = json{{"v", kSchemaVersion}, {"meta", provenance_to_json(ds)}}.dump();
  out.push_back('\n');
  for (const auto& r : ds.records) {
    out += record_to_json(r, ds).dump(-1, ' ', false, json::error_handler_t::replace);
    out.push_back('\n');
  }
  return out;
}

Dataset deserialize_dataset(std::string_view text) {
  IngestResult res;
  import_canonical(text, /*strict=*/true, res);
  check_dataset_invariants(res.dataset);
  return std::move(res.dataset);
}

void persist_dataset(const Dataset& ds, const std::string& path) {
  check_dataset_invariants(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_dataset(ds);
  if (!out) throw IoError("write failed for " + path);
}

Dataset load_dataset(const std::string& path) { return deserialize_dataset(read_file(path)); }

Dataset filter_hosts(const Dataset& ds, const std::vector<std::string>& exclude_substrings) {
  std::vector<std::string> needles;
  for (const auto& s : exclude_substrings) {
    if (s.empty()) throw InvalidArgument("empty host exclusion substring");
    needles.push_back(lowercase(s));
  }
  Dataset out;
  out.provenance = ds.provenance;
  if (ds.label_map) out.label_map.emplace();
  for (const auto& r : ds.records) {
    const auto host = lowercase(r.remote_hostname);
    const bool excluded = std::any_of(needles.begin(), needles.end(), [&](const std::string& n) {
      return host.find(n) != std::string::npos;
    });
    if (excluded) continue;
    if (ds.label_map) out.label_map->emplace(r.record_id, ds.label_of(r));
    out.records.push_back(r);
  }
  for (const auto& n : needles) out.provenance.excluded_host_substrings.push_back(n);
  out.provenance.headerless_records = static_cast<std::uint64_t>(
      std::count_if(out.records.begin(), out.records.end(),
                    [](const HttpMessageRecord& r) { return r.headers.empty(); }));
  out.provenance.content_digest = records_digest(out.records);
  return out;
}

}  // namespace trackhdr
