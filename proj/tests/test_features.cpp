#include <doctest.h>

#include <algorithm>
#include <set>

#include "support/synthetic.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/rng.hpp"

using namespace trackhdr;

namespace {

// n records, the first n_t labeled T, each with the given headers.
Dataset labeled_rows(const std::vector<std::pair<Label, std::vector<Header>>>& rows) {
  Dataset ds;
  ds.label_map.emplace();
  for (const auto& [label, headers] : rows) {
    HttpMessageRecord r;
    r.record_id = ds.records.size();
    r.remote_hostname = "h.example";
    r.headers = headers;
    (*ds.label_map)[r.record_id] = label;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

std::size_t count_label(const Dataset& ds, Label l) {
  return static_cast<std::size_t>(std::count_if(ds.records.begin(), ds.records.end(),
                                                [&](const auto& r) { return ds.label_of(r) == l; }));
}

// Shortest edit path (insert, delete, substitute, swap adjacent) found by
// breadth-first search; only usable on very short strings.
std::size_t dl_oracle(const std::string& a, const std::string& b) {
  std::set<char> alpha(a.begin(), a.end());
  alpha.insert(b.begin(), b.end());
  std::set<std::string> frontier{a};
  std::set<std::string> seen{a};
  for (std::size_t d = 0;; ++d) {
    if (frontier.contains(b)) return d;
    std::set<std::string> next;
    for (const auto& s : frontier) {
      std::vector<std::string> nbrs;
      for (std::size_t i = 0; i <= s.size(); ++i) {
        for (char c : alpha) nbrs.push_back(s.substr(0, i) + c + s.substr(i));
        if (i < s.size()) {
          nbrs.push_back(s.substr(0, i) + s.substr(i + 1));
          for (char c : alpha) nbrs.push_back(s.substr(0, i) + c + s.substr(i + 1));
        }
        if (i + 1 < s.size()) {
          std::string t = s;
          std::swap(t[i], t[i + 1]);
          nbrs.push_back(t);
        }
      }
      for (auto& t : nbrs) {
        if (t.size() <= a.size() + b.size() && seen.insert(t).second) next.insert(std::move(t));
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace

TEST_CASE("stratified split arithmetic") {
  Dataset ds;
  ds.label_map.emplace();
  for (std::uint64_t i = 0; i < 1000; ++i) {
    HttpMessageRecord r;
    r.record_id = i;
    r.remote_hostname = "h";
    (*ds.label_map)[i] = i % 10 < 3 ? Label::T : Label::NT;
    ds.records.push_back(r);
  }
  const SplitSpec spec{0.8, 0.1, 0.1, 42, true};
  const auto s = split_dataset(ds, spec);
  CHECK(count_label(s.train, Label::NT) == 560);
  CHECK(count_label(s.train, Label::T) == 240);
  CHECK(s.train.records.size() + s.calibration.records.size() + s.test.records.size() == 1000);
  std::set<std::uint64_t> ids;
  for (const auto* part : {&s.train, &s.calibration, &s.test}) {
    for (const auto& r : part->records) CHECK(ids.insert(r.record_id).second);
    CHECK(std::is_sorted(part->records.begin(), part->records.end(),
                         [](const auto& a, const auto& b) { return a.record_id < b.record_id; }));
  }
  CHECK(ids.size() == 1000);
  CHECK(split_dataset(ds, spec).manifest.dump() == s.manifest.dump());
  CHECK(split_dataset(ds, {0.8, 0.1, 0.1, 43, true}).manifest.dump() != s.manifest.dump());
}

TEST_CASE("split fractions are validated") {
  CHECK_THROWS_AS(validate({0.5, 0.5, 0.2, 1, true}), InvalidFractions);
  CHECK_THROWS_AS(validate({1.0, 0.0, 0.0, 1, true}), InvalidFractions);
  CHECK_THROWS_AS(parse_split_fractions("0.7,0.3", 1), InvalidFractions);
  CHECK_THROWS_AS(parse_split_fractions("a,b,c", 1), InvalidFractions);
  CHECK(parse_split_fractions("0.7,0.1,0.2", 9).seed == 9);
}

TEST_CASE("tiny classes cannot be split three ways") {
  const auto ds = labeled_rows({{Label::T, {}}, {Label::T, {}}, {Label::NT, {}}, {Label::NT, {}},
                                {Label::NT, {}}});
  CHECK_THROWS_AS(split_dataset(ds, {}), InsufficientClassCount);
}

TEST_CASE("vocabulary filters") {
  std::vector<std::pair<Label, std::vector<Header>>> rows;
  for (int i = 0; i < 100; ++i) {
    const Label l = i % 2 ? Label::T : Label::NT;
    std::vector<Header> h{{"content-type", i % 3 ? "text/html" : "image/png"},
                          {"x-static-flag", "1"}};
    if (l == Label::NT) h.emplace_back("x-amz-id-2", std::to_string(i));
    if (i == 7) h.emplace_back("x-rare", "a");
    if (i == 8) h.emplace_back("x-rare", "b");
    rows.emplace_back(l, std::move(h));
  }
  const auto ds = labeled_rows(rows);
  const auto v = build_vocabulary(ds, {});
  CHECK(v.canonical == std::vector<std::string>{"content-type", "x-rare"});
  CHECK(v.frequency == std::vector<std::uint64_t>{100, 2});
  CHECK(v.dropped.at("x-static-flag") == DropReason::low_variance);
  CHECK(v.dropped.at("x-amz-id-2") == DropReason::single_label);
  CHECK_FALSE(v.dropped.contains("x-rare"));

  VocabularyParams strict;
  strict.min_presence_rate = 0.05;
  const auto v2 = build_vocabulary(ds, strict);
  CHECK(v2.dropped.at("x-rare") == DropReason::missing_ratio);
  CHECK(v.digest != v2.digest);
  CHECK(compute_vocabulary_digest(v) == v.digest);
}

TEST_CASE("presence below the rate floor is dropped") {
  // 1 of 100,000 rows, floor 1e-4.
  std::vector<std::pair<Label, std::vector<Header>>> rows;
  rows.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    std::vector<Header> h{{"content-type", i % 2 ? "a" : "b"}};
    if (i == 5) h.emplace_back("x-once", "z");
    rows.emplace_back(i % 2 ? Label::T : Label::NT, std::move(h));
  }
  const auto v = build_vocabulary(labeled_rows(rows), {});
  CHECK(v.dropped.at("x-once") == DropReason::missing_ratio);
}

TEST_CASE("Damerau-Levenshtein matches a breadth-first edit oracle") {
  Rng rng(11);
  const std::string alphabet = "abc";
  for (int t = 0; t < 150; ++t) {
    std::string a;
    std::string b;
    for (auto n = rng.below(4); n > 0; --n) a.push_back(alphabet[rng.below(3)]);
    for (auto n = rng.below(4); n > 0; --n) b.push_back(alphabet[rng.below(3)]);
    INFO(a << " / " << b);
    CHECK(damerau_levenshtein(a, b) == dl_oracle(a, b));
  }
  CHECK(damerau_levenshtein("ca", "abc") == 2);
  CHECK(damerau_levenshtein("content-length", "content-lenght") == 1);
}

TEST_CASE("name similarity and Jaccard") {
  const VocabularyParams p;
  CHECK(name_similarity("etag", "etag", p) == 1.0);
  CHECK(name_similarity("content-length", "content-lenght", p) == doctest::Approx(0.7 * 13 / 14 + 0.3 * 12 / 14));
  CHECK(name_similarity("ab", "abc", p) == doctest::Approx(0.7 * 2 / 3));
  CHECK(jaccard({}, {}) == 1.0);
  CHECK(jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3));
  VocabularyParams bad;
  bad.w_h = 0.5;
  CHECK_THROWS_AS(fuzzy_merge_headers({"a"}, {}, {}, bad), InvalidWeights);
}

TEST_CASE("fuzzy merge") {
  const std::set<std::string> lengths{"10", "20", "30"};
  std::map<std::string, std::set<std::string>> values{
      {"content-length", lengths},
      {"content-lenght", {"10", "20"}},
      {"cteonnt-length", {"10", "20", "30", "40"}},
      {"content-language", {"en", "de"}},
  };
  std::map<std::string, std::uint64_t> freq{
      {"content-length", 100}, {"content-lenght", 3}, {"cteonnt-length", 2}, {"content-language", 50}};
  const std::vector<std::string> names{"content-language", "content-length", "content-lenght",
                                       "cteonnt-length"};

  const auto defaults = fuzzy_merge_headers(names, values, freq, {});
  CHECK(defaults.at("content-lenght") == "content-length");
  CHECK_FALSE(defaults.contains("content-language"));
  // Anagram-like misspellings need a looser name threshold.
  CHECK_FALSE(defaults.contains("cteonnt-length"));
  VocabularyParams loose;
  loose.tau_name = 0.7;
  const auto merged = fuzzy_merge_headers(names, values, freq, loose);
  CHECK(merged.at("cteonnt-length") == "content-length");
  CHECK_FALSE(merged.contains("content-language"));

  // Disjoint value sets never merge, however close the names.
  VocabularyParams any_name;
  any_name.tau_name = 0.0;
  CHECK_FALSE(fuzzy_merge_headers(names, values, freq, any_name).contains("content-language"));

  // Frequency ties go to the lexicographically smaller name.
  const auto tie = fuzzy_merge_headers({"x-tracking-abdc", "x-tracking-abcd"},
                                       {{"x-tracking-abcd", {"1"}}, {"x-tracking-abdc", {"1"}}},
                                       {{"x-tracking-abcd", 5}, {"x-tracking-abdc", 5}}, {});
  CHECK(tie.at("x-tracking-abdc") == "x-tracking-abcd");
}

TEST_CASE("binarization") {
  const auto ds = labeled_rows({{Label::T, {{"a", "1"}, {"b", "1"}}},
                                {Label::NT, {{"a", "2"}, {"c", "1"}}},
                                {Label::T, {{"b", "3"}, {"c", "2"}}},
                                {Label::NT, {{"content-lenght", "9"}}},
                                {Label::NT, {{"zzz", "1"}}}});
  HeaderVocabulary v;
  v.canonical = {"a", "b", "c", "content-length"};
  v.frequency = {2, 2, 2, 1};
  v.alias_map = {{"content-lenght", "content-length"}};
  v.digest = compute_vocabulary_digest(v);
  const auto m = binarize(ds, v);
  CHECK(m.n_rows == 5);
  CHECK(m.dim == 4);
  CHECK(m.rows[0] == std::vector<std::uint32_t>{0, 1});
  CHECK_FALSE(m.has(0, 2));
  CHECK(m.rows[3] == std::vector<std::uint32_t>{3});
  CHECK(m.rows[4].empty());
  CHECK(m.labels == std::vector<std::uint8_t>{1, 0, 1, 0, 0});
  CHECK(m.vocabulary_digest == v.digest);
  CHECK_THROWS_AS(expect_vocabulary(v.digest, "other", "test"), VocabularyDigestMismatch);
}

TEST_CASE("vocabulary json round trip verifies the digest") {
  const auto ds = testing::synthetic_dataset(400, 0.3, 8);
  const auto v = build_vocabulary(ds, {});
  CHECK(vocabulary_from_json(to_json(v)) == v);
  auto j = to_json(v);
  j["canonical"].push_back("injected");
  CHECK_THROWS_AS(vocabulary_from_json(j), DigestMismatch);
}

TEST_CASE("leakage guard: test records never reach the vocabulary") {
  const auto ds = testing::synthetic_dataset(600, 0.3, 21);
  const SplitSpec spec{0.7, 0.1, 0.2, 42, true};
  const auto base = split_dataset(ds, spec);
  const auto digest = build_vocabulary(base.train, {}).digest;
  std::set<std::uint64_t> test_ids;
  for (const auto& r : base.test.records) test_ids.insert(r.record_id);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset mutated = ds;
    for (auto& r : mutated.records) {
      if (!test_ids.contains(r.record_id) || !rng.bernoulli(0.3)) continue;
      r.headers.emplace_back("x-new-" + std::to_string(trial), std::to_string(rng.next()));
      if (!r.headers.empty() && rng.bernoulli(0.5)) r.headers.erase(r.headers.begin());
    }
    const auto again = split_dataset(mutated, spec);
    CHECK(again.manifest["test_ids"] == base.manifest["test_ids"]);
    CHECK(build_vocabulary(again.train, {}).digest == digest);
  }
}
