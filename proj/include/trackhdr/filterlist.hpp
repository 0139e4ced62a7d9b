#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trackhdr/record.hpp"

namespace trackhdr {

enum class RuleKind { hostname_anchor, plain_substring, anchored_start, anchored_end, regex };

std::string_view to_string(RuleKind k);

// One network rule in Adblock Plus syntax.
struct FilterRule {
  std::string raw_text;
  RuleKind kind = RuleKind::plain_substring;
  // True for `|…` / `||…` style starts and a trailing `|` respectively; a
  // rule may carry both, `kind` reports the start form first.
  bool end_anchor = false;
  // Lowercased pattern body without anchors and options. For regex rules,
  // the expression between the slashes.
  std::string pattern;
  // Literal segments between `*` wildcards (may contain `^`).
  std::vector<std::string> pattern_tokens;
  // Offsets of `^` placeholders within `pattern`.
  std::vector<std::size_t> separator_positions;
  bool is_exception = false;
  // `$` options, retained verbatim (lowercased) but not evaluated.
  std::vector<std::string> options;
  std::shared_ptr<const std::regex> compiled;
};

struct FilterDiagnostics {
  std::uint64_t lines = 0;
  std::uint64_t rules = 0;
  std::map<std::string, std::uint64_t> skipped_by_reason;
  std::uint64_t skipped() const;
};

struct FilterSet {
  std::vector<FilterRule> rules;
  // Hostname-anchored rules keyed by the first complete label of the anchor.
  std::unordered_map<std::string, std::vector<std::uint32_t>> hostname_index;
  // Remaining rules keyed by a 3-gram that any matching URL must contain.
  std::unordered_map<std::string, std::vector<std::uint32_t>> ngram_index;
  // Rules that cannot be keyed (regex, short literals); always checked.
  std::vector<std::uint32_t> unindexed;
  std::string source_digest;
  FilterDiagnostics diagnostics;
};

enum class ExceptionMode { ignore, honor };

struct MatchResult {
  bool matched = false;
  std::optional<std::uint32_t> first_rule;
  // Set in honor mode when an exception rule overrode a blocking match.
  std::optional<std::uint32_t> exception_rule;

  bool operator==(const MatchResult&) const = default;
};

// Parses the concatenation of the given list texts in order.
FilterSet parse_filter_list(std::string_view text);
FilterSet parse_filter_lists(const std::vector<std::string>& texts);
FilterSet load_filter_lists(const std::vector<std::string>& paths);

// Matches a bare hostname, rendered as "https://<h>/", against the rules.
// Returns the lowest-index matching blocking rule.
MatchResult match_hostname(std::string_view host, const FilterSet& fs,
                           ExceptionMode mode = ExceptionMode::ignore);
// Reference path: scans every rule in order, ignoring the indexes.
MatchResult match_hostname_scan(std::string_view host, const FilterSet& fs,
                                ExceptionMode mode = ExceptionMode::ignore);

// True if the rule's pattern matches the URL text.
bool rule_matches(const FilterRule& rule, std::string_view url);

// Labels every record T iff its hostname matches. Throws InvalidArgument
// when the dataset is already labeled and force is false.
Dataset label_dataset(const Dataset& ds, const FilterSet& fs,
                      ExceptionMode mode = ExceptionMode::ignore, bool force = false);

}  // namespace trackhdr
