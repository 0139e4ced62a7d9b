#include "trackhdr/filterlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "trackhdr/digest.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/parallel.hpp"

namespace trackhdr {
namespace {

constexpr std::size_t kRegexBudget = 512;
constexpr std::size_t kGram = 3;

// Options that only make sense for element hiding, popups or response
// rewriting; such rules never block a plain request and are skipped.
const std::set<std::string, std::less<>> kInapplicableOptions = {
    "elemhide", "ehide",  "generichide", "ghide",       "genericblock", "jsinject", "content",
    "urlblock", "popup",  "csp",         "removeparam", "replace",      "rewrite"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_separator(char c) {
  const auto u = static_cast<unsigned char>(c);
  return !(std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '%');
}

bool looks_like_options(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '~')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || std::string_view("_~-=,|.*:+").find(c) != std::string_view::npos;
  });
}

bool is_cosmetic(std::string_view line) {
  for (std::string_view marker : {"##", "#@#", "#?#", "#$#", "#@?#", "#@$#", "#%#", "$$", "$@$"}) {
    if (line.find(marker) != std::string_view::npos) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

// nullopt = skipped; reason is written to `reason`.
std::optional<FilterRule> parse_rule(std::string_view line, std::string& reason) {
  FilterRule rule;
  rule.raw_text = std::string(line);
  std::string_view body = line;
  if (body.starts_with("@@")) {
    rule.is_exception = true;
    body.remove_prefix(2);
  }
  if (const auto dollar = body.rfind('$'); dollar != std::string_view::npos) {
    const auto opts = body.substr(dollar + 1);
    if (looks_like_options(opts)) {
      std::string all = lower(opts);
      std::stringstream ss(all);
      for (std::string opt; std::getline(ss, opt, ',');) {
        if (opt.empty()) continue;
        std::string name = opt.substr(0, opt.find('='));
        if (name.starts_with('~')) name.erase(0, 1);
        if (kInapplicableOptions.contains(name)) {
          reason = "inapplicable_option";
          return std::nullopt;
        }
        rule.options.push_back(opt);
      }
      body = body.substr(0, dollar);
    }
  }
  if (body.size() >= 2 && body.front() == '/' && body.back() == '/') {
    rule.kind = RuleKind::regex;
    rule.pattern = std::string(body.substr(1, body.size() - 2));
    if (rule.pattern.empty()) {
      reason = "empty_pattern";
      return std::nullopt;
    }
    // Backreferences make std::regex matching exponential.
    bool backref = false;
    for (std::size_t i = 0; i + 1 < rule.pattern.size(); ++i) {
      if (rule.pattern[i] == '\\') {
        if (std::isdigit(static_cast<unsigned char>(rule.pattern[i + 1])) && rule.pattern[i + 1] != '0') {
          backref = true;
        }
        ++i;
      }
    }
    if (rule.pattern.size() > kRegexBudget || backref) {
      reason = "regex_budget";
      return std::nullopt;
    }
    try {
      rule.compiled = std::make_shared<const std::regex>(
          rule.pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error&) {
      reason = "regex_invalid";
      return std::nullopt;
    }
    return rule;
  }
  if (body.starts_with("||")) {
    rule.kind = RuleKind::hostname_anchor;
    body.remove_prefix(2);
  } else if (body.starts_with('|')) {
    rule.kind = RuleKind::anchored_start;
    body.remove_prefix(1);
  }
  if (body.ends_with('|')) {
    rule.end_anchor = true;
    body.remove_suffix(1);
    if (rule.kind == RuleKind::plain_substring) rule.kind = RuleKind::anchored_end;
  }
  rule.pattern = lower(body);
  if (rule.pattern.empty()) {
    reason = "empty_pattern";
    return std::nullopt;
  }
  std::string token;
  for (std::size_t i = 0; i < rule.pattern.size(); ++i) {
    const char c = rule.pattern[i];
    if (c == '^') rule.separator_positions.push_back(i);
    if (c == '*') {
      if (!token.empty()) rule.pattern_tokens.push_back(std::move(token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) rule.pattern_tokens.push_back(std::move(token));
  return rule;
}

// Maximal runs of literal characters (no `*` or `^`).
std::vector<std::string_view> literal_runs(std::string_view pattern) {
  std::vector<std::string_view> runs;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= pattern.size(); ++i) {
    if (i == pattern.size() || pattern[i] == '*' || pattern[i] == '^') {
      if (i > start) runs.push_back(pattern.substr(start, i - start));
      start = i + 1;
    }
  }
  return runs;
}

std::optional<std::string> first_complete_label(const FilterRule& rule) {
  const auto dot = rule.pattern.find('.');
  if (dot == std::string::npos || dot == 0) return std::nullopt;
  const auto label = std::string_view(rule.pattern).substr(0, dot);
  const bool literal = std::all_of(label.begin(), label.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  if (!literal) return std::nullopt;
  return std::string(label);
}

void build_index(FilterSet& fs) {
  for (std::uint32_t i = 0; i < fs.rules.size(); ++i) {
    const auto& rule = fs.rules[i];
    if (rule.kind == RuleKind::regex) {
      fs.unindexed.push_back(i);
      continue;
    }
    if (rule.kind == RuleKind::hostname_anchor) {
      if (auto label = first_complete_label(rule)) {
        fs.hostname_index[*label].push_back(i);
        continue;
      }
    }
    std::string best;
    std::size_t best_size = SIZE_MAX;
    for (const auto run : literal_runs(rule.pattern)) {
      for (std::size_t p = 0; p + kGram <= run.size(); ++p) {
        std::string gram(run.substr(p, kGram));
        const auto it = fs.ngram_index.find(gram);
        const std::size_t size = it == fs.ngram_index.end() ? 0 : it->second.size();
        if (size < best_size) {
          best_size = size;
          best = std::move(gram);
        }
      }
    }
    if (best.empty()) {
      fs.unindexed.push_back(i);
    } else {
      fs.ngram_index[best].push_back(i);
    }
  }
}

std::string synthetic_url(std::string_view host) {
  std::string url = "https://";
  url += host;
  url.push_back('/');
  return url;
}

void check_host(std::string_view host) {
  if (!valid_hostname(host)) throw InvalidHostname("invalid hostname '" + std::string(host) + "'");
}

MatchResult resolve(const FilterSet& fs, const std::vector<std::uint32_t>& candidates,
                    std::string_view url, ExceptionMode mode) {
  MatchResult res;
  for (const auto idx : candidates) {
    const auto& rule = fs.rules[idx];
    if (rule.is_exception) {
      if (mode == ExceptionMode::honor && !res.exception_rule && rule_matches(rule, url)) {
        res.exception_rule = idx;
      }
      continue;
    }
    if (!res.first_rule && rule_matches(rule, url)) {
      res.first_rule = idx;
      if (mode == ExceptionMode::ignore) break;
    }
  }
  res.matched = res.first_rule.has_value() && !res.exception_rule.has_value();
  if (!res.first_rule) res.exception_rule.reset();
  return res;
}

}  // namespace

std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::hostname_anchor: return "hostname_anchor";
    case RuleKind::plain_substring: return "plain_substring";
    case RuleKind::anchored_start: return "anchored_start";
    case RuleKind::anchored_end: return "anchored_end";
    case RuleKind::regex: return "regex";
  }
  return "unknown";
}

std::uint64_t FilterDiagnostics::skipped() const {
  std::uint64_t n = 0;
  for (const auto& [reason, count] : skipped_by_reason) {
    if (reason != "blank") n += count;
  }
  return n;
}

bool rule_matches(const FilterRule& rule, std::string_view url) {
  if (rule.kind == RuleKind::regex) {
    return std::regex_search(url.begin(), url.end(), *rule.compiled);
  }
  const std::size_t n = url.size();
  // reach[t]: the pattern prefix consumed so far can end at text offset t.
  std::vector<char> reach(n + 1, 0);
  std::vector<char> next(n + 1, 0);
  if (rule.kind == RuleKind::hostname_anchor) {
    const auto scheme = url.find("://");
    const std::size_t host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
    std::size_t host_end = url.find_first_of("/?#:", host_start);
    if (host_end == std::string_view::npos) host_end = n;
    reach[host_start] = 1;
    for (std::size_t t = host_start; t < host_end; ++t) {
      if (url[t] == '.') reach[t + 1] = 1;
    }
  } else if (rule.kind == RuleKind::anchored_start) {
    reach[0] = 1;
  } else {
    std::fill(reach.begin(), reach.end(), 1);
  }
  for (const char pc : rule.pattern) {
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    if (pc == '*') {
      const auto first = std::find(reach.begin(), reach.end(), 1);
      if (first != reach.end()) {
        std::fill(next.begin() + (first - reach.begin()), next.end(), 1);
        any = true;
      }
    } else {
      for (std::size_t t = 0; t <= n; ++t) {
        if (!reach[t]) continue;
        if (pc == '^') {
          if (t == n) {
            next[n] = 1;
            any = true;
          } else if (is_separator(url[t])) {
            next[t + 1] = 1;
            any = true;
          }
        } else if (t < n && static_cast<char>(std::tolower(static_cast<unsigned char>(url[t]))) == pc) {
          next[t + 1] = 1;
          any = true;
        }
      }
    }
    if (!any) return false;
    reach.swap(next);
  }
  if (rule.end_anchor) return reach[n] != 0;
  return true;
}

FilterSet parse_filter_list(std::string_view text) {
  FilterSet fs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (nl == text.size() && line.empty()) break;
    ++fs.diagnostics.lines;
    std::string reason;
    if (line.empty()) {
      reason = "blank";
    } else if (line.starts_with('!') || line.starts_with("[Adblock")) {
      reason = "comment";
    } else if (is_cosmetic(line)) {
      reason = "cosmetic";
    } else if (auto rule = parse_rule(line, reason)) {
      fs.rules.push_back(std::move(*rule));
      continue;
    }
    ++fs.diagnostics.skipped_by_reason[reason];
  }
  fs.diagnostics.rules = fs.rules.size();
  fs.source_digest = sha256_hex(text);
  build_index(fs);
  return fs;
}

FilterSet parse_filter_lists(const std::vector<std::string>& texts) {
  std::string all;
  for (const auto& t : texts) {
    all += t;
    if (!all.empty() && all.back() != '\n') all.push_back('\n');
  }
  return parse_filter_list(all);
}

FilterSet load_filter_lists(const std::vector<std::string>& paths) {
  std::vector<std::string> texts;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open filter list " + p);
    std::ostringstream ss;
    ss << in.rdbuf();
    texts.push_back(ss.str());
  }
  return parse_filter_lists(texts);
}

MatchResult match_hostname_scan(std::string_view host, const FilterSet& fs, ExceptionMode mode) {
  check_host(host);
  std::vector<std::uint32_t> all(fs.rules.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  return resolve(fs, all, synthetic_url(host), mode);
}

MatchResult match_hostname(std::string_view host, const FilterSet& fs, ExceptionMode mode) {
  check_host(host);
  const std::string url = synthetic_url(host);
  std::vector<std::uint32_t> candidates(fs.unindexed);
  std::size_t start = 0;
  while (start <= host.size()) {
    auto dot = host.find('.', start);
    if (dot == std::string_view::npos) dot = host.size();
    if (const auto it = fs.hostname_index.find(std::string(host.substr(start, dot - start)));
        it != fs.hostname_index.end()) {
      candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
    start = dot + 1;
  }
  if (!fs.ngram_index.empty()) {
    for (std::size_t p = 0; p + kGram <= url.size(); ++p) {
      if (const auto it = fs.ngram_index.find(url.substr(p, kGram)); it != fs.ngram_index.end()) {
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  return resolve(fs, candidates, url, mode);
}

Dataset label_dataset(const Dataset& ds, const FilterSet& fs, ExceptionMode mode, bool force) {
  if (ds.labeled() && !force) {
    throw InvalidArgument("dataset is already labeled; relabeling must be forced");
  }
  std::vector<std::string> hosts;
  hosts.reserve(ds.records.size());
  for (const auto& r : ds.records) hosts.push_back(r.remote_hostname);
  std::sort(hosts.begin(), hosts.end());
  hosts.erase(std::unique(hosts.begin(), hosts.end()), hosts.end());
  std::vector<char> tracker(hosts.size(), 0);
  parallel_for(hosts.size(), [&](std::size_t i) {
    tracker[i] = match_hostname(hosts[i], fs, mode).matched ? 1 : 0;
  });
  Dataset out = ds;
  out.label_map.emplace();
  for (const auto& r : ds.records) {
    const auto it = std::lower_bound(hosts.begin(), hosts.end(), r.remote_hostname);
    out.label_map->emplace(r.record_id, tracker[it - hosts.begin()] ? Label::T : Label::NT);
  }
  out.provenance.label_source_digest = fs.source_digest;
  return out;
}

}  // namespace trackhdr
