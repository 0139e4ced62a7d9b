#include <doctest.h>

#include "trackhdr/error.hpp"
#include "trackhdr/profile.hpp"

using namespace trackhdr;

namespace {

Dataset make(std::vector<std::pair<Label, std::vector<Header>>> rows) {
  Dataset ds;
  ds.label_map.emplace();
  for (auto& [label, headers] : rows) {
    HttpMessageRecord r;
    r.record_id = ds.records.size();
    r.remote_hostname = "h.example";
    r.headers = std::move(headers);
    (*ds.label_map)[r.record_id] = label;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace

TEST_CASE("single non-tracker record") {
  const auto ds = make({{Label::NT, {{"a", "1"}, {"b", "2"}, {"c", "3"}}}});
  const auto p = profile_dataset(ds, {});
  CHECK(p.records == 1);
  CHECK(p.non_tracker_fraction == 1.0);
  CHECK(p.tracker_fraction == 0.0);
  CHECK(p.headers_per_record_non_tracker.q1 == 3.0);
  CHECK(p.headers_per_record_non_tracker.median == 3.0);
  CHECK(p.headers_per_record_non_tracker.q3 == 3.0);
  CHECK(p.unique_headers_per_label.non_tracker == 3);
}

TEST_CASE("label counts, frequencies and value summaries") {
  const auto ds = make({
      {Label::T, {{"content-length", "10"}, {"set-cookie", "x"}, {"set-cookie", "y"}}},
      {Label::T, {{"content-length", "30"}}},
      {Label::T, {{"content-length", "abc"}}},
      {Label::NT, {{"content-length", "1000"}, {"etag", "e"}}},
      {Label::NT, {}},
  });
  const auto p = profile_dataset(ds, {"content-length"});
  CHECK(p.responses_per_label.tracker == 3);
  CHECK(p.responses_per_label.non_tracker == 2);
  CHECK(p.tracker_fraction == doctest::Approx(0.6));
  CHECK(p.header_frequency.at("content-length") == 4);
  CHECK(p.header_frequency.at("set-cookie") == 1);
  CHECK(p.headerless_records == 1);
  CHECK(p.unique_headers_per_label.tracker == 2);
  CHECK(p.unique_headers_per_label.non_tracker == 2);
  // Distinct names per record: T {2, 1, 1}.
  CHECK(p.headers_per_record_tracker.median == 1.0);
  const auto& v = p.value_summaries.at("content-length");
  CHECK(v.tracker.median == 20.0);
  CHECK(v.non_tracker.median == 1000.0);
  CHECK(v.parsed_tracker == 2);
  CHECK(v.skipped == 1);
  CHECK(format_profile(p, "fixture").find("fixture") != std::string::npos);
  CHECK(to_json(p)["records"] == 5);
}

TEST_CASE("profiling needs labels") {
  Dataset ds;
  CHECK_THROWS_AS(profile_dataset(ds, {}), UnlabeledDataset);
}

TEST_CASE("header overlap regions partition the union") {
  const auto regions = header_overlap_counts({{"a", "b", "c"}, {"b", "c", "d"}, {"c", "e"}});
  CHECK(regions.at(0b001) == 1);  // a
  CHECK(regions.at(0b011) == 1);  // b
  CHECK(regions.at(0b111) == 1);  // c
  CHECK(regions.at(0b010) == 1);  // d
  CHECK(regions.at(0b100) == 1);  // e
  std::uint64_t total = 0;
  for (const auto& [mask, n] : regions) total += n;
  CHECK(total == 5);
}
