#include "trackhdr/record.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "trackhdr/digest.hpp"
#include "trackhdr/error.hpp"

namespace trackhdr {

std::string_view to_string(Direction d) { return d == Direction::request ? "req" : "res"; }

std::string_view to_string(Label l) { return l == Label::T ? "T" : "NT"; }

Direction parse_direction(std::string_view s) {
  if (s == "req" || s == "request") return Direction::request;
  if (s == "res" || s == "response") return Direction::response;
  throw InvalidArgument("unknown direction '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
  if (s == "T") return Label::T;
  if (s == "NT") return Label::NT;
  throw InvalidArgument("unknown label '" + std::string(s) + "'");
}

Label Dataset::label_of(const HttpMessageRecord& r) const {
  if (!label_map) throw UnlabeledDataset("dataset has no labels");
  const auto it = label_map->find(r.record_id);
  if (it == label_map->end()) {
    throw UnlabeledDataset("record " + std::to_string(r.record_id) + " has no label");
  }
  return it->second;
}

std::string normalize_header_name(std::string_view name) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!name.empty() && is_space(static_cast<unsigned char>(name.front()))) name.remove_prefix(1);
  while (!name.empty() && is_space(static_cast<unsigned char>(name.back()))) name.remove_suffix(1);
  std::string out(name);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> hostname_from_url(std::string_view url) {
  std::string_view rest = url;
  if (const auto scheme = rest.find("://"); scheme != std::string_view::npos) {
    rest.remove_prefix(scheme + 3);
  } else if (rest.starts_with("//")) {
    rest.remove_prefix(2);
  }
  const auto end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, end);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  std::string_view host;
  if (authority.starts_with('[')) {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(1, close - 1);
  } else {
    host = authority.substr(0, authority.find(':'));
  }
  if (host.empty()) return std::nullopt;
  std::string out(host);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (!valid_hostname(out)) return std::nullopt;
  return out;
}

bool valid_hostname(std::string_view host) {
  if (host.empty() || host.size() > 255) return false;
  std::size_t colons = 0;
  for (char c : host) {
    const auto u = static_cast<unsigned char>(c);
    if (std::islower(u) || std::isdigit(u) || c == '.' || c == '-' || c == '_') continue;
    if (c == ':') {
      ++colons;
      continue;
    }
    return false;
  }
  // A single colon would be a port; IPv6 literals carry at least two.
  return colons == 0 || colons >= 2;
}

std::string records_digest(const std::vector<HttpMessageRecord>& records) {
  Sha256 h;
  h.field(static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) {
    h.field(r.record_id);
    h.field(to_string(r.direction));
    h.field(r.remote_hostname);
    h.field(r.url);
    h.field(r.browser_tag);
    h.field(static_cast<std::uint64_t>(r.capture_timestamp));
    h.field(static_cast<std::uint64_t>(r.headers.size()));
    for (const auto& [name, value] : r.headers) {
      h.field(name);
      h.field(value);
    }
  }
  return h.hex_digest();
}

Dataset select_direction(const Dataset& ds, Direction dir) {
  Dataset out;
  out.provenance = ds.provenance;
  std::copy_if(ds.records.begin(), ds.records.end(), std::back_inserter(out.records),
               [dir](const HttpMessageRecord& r) { return r.direction == dir; });
  if (ds.label_map) {
    out.label_map.emplace();
    for (const auto& r : out.records) out.label_map->emplace(r.record_id, ds.label_of(r));
  }
  out.provenance.content_digest = records_digest(out.records);
  return out;
}

void check_dataset_invariants(const Dataset& ds) {
  std::unordered_set<std::uint64_t> ids;
  ids.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    if (!ids.insert(r.record_id).second) {
      throw InvalidArgument("duplicate record_id " + std::to_string(r.record_id));
    }
    if (!valid_hostname(r.remote_hostname)) {
      throw InvalidArgument("record " + std::to_string(r.record_id) + " has invalid hostname '" +
                            r.remote_hostname + "'");
    }
  }
  if (ds.label_map) {
    if (ds.label_map->size() != ds.records.size()) {
      throw InvalidArgument("label_map does not cover every record exactly once");
    }
    for (const auto& r : ds.records) {
      if (!ds.label_map->contains(r.record_id)) {
        throw InvalidArgument("label_map misses record " + std::to_string(r.record_id));
      }
    }
  }
}

}  // namespace trackhdr
