#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "support/pipeline.hpp"
#include "support/synthetic.hpp"
#include "trackhdr/digest.hpp"
#include "trackhdr/ingest.hpp"
#include "trackhdr/io.hpp"
#include "trackhdr/parallel.hpp"

using namespace trackhdr;
using testing::run;
namespace fs = std::filesystem;

namespace {

struct Inputs {
  std::string dir;
  std::string dataset;
  std::string later;
  std::string filters;
};

const Inputs& inputs() {
  static const Inputs in = [] {
    Inputs i;
    i.dir = testing::make_temp_dir("trackhdr-cli");
    i.dataset = i.dir + "/crawl.jsonl";
    i.later = i.dir + "/later.jsonl";
    i.filters = i.dir + "/list.txt";
    auto ds = testing::synthetic_dataset(1500, 0.3, 31);
    ds.label_map.reset();
    persist_dataset(ds, i.dataset);
    auto later = testing::synthetic_dataset(500, 0.3, 32, 100000, "later");
    later.label_map.reset();
    persist_dataset(later, i.later);
    write_text_file(i.filters, "[Adblock Plus 2.0]\n! test list\n||trk.example^\n");
    return i;
  }();
  return in;
}

}  // namespace

TEST_CASE("reference pipeline writes artifacts with manifests") {
  const auto& in = inputs();
  const std::string out = in.dir + "/run";
  const auto before = thread_count();
  const auto r = testing::run_reference_pipeline(out, in.dataset, in.later, in.filters, 2);
  set_thread_count(before);
  INFO(r.err);
  REQUIRE(r.code == 0);
  for (const char* rel : {"datasets/split.json", "vocab/vocabulary.json", "datasets/train.jsonl",
                          "matrices/train.bfm", "matrices/calibration.bfm", "matrices/test.bfm",
                          "models/random_forest.model", "models/random_forest.calibrated.model",
                          "models/gbm.model", "reports/RF.json", "reports/RF.txt", "reports/RF.pr.csv",
                          "reports/RF.roc.csv", "reports/RF.reliability.csv", "reports/table.txt",
                          "reports/decision_tree.cv.json"}) {
    const std::string path = out + "/" + rel;
    INFO(rel);
    REQUIRE(fs::exists(path));
    REQUIRE(fs::exists(path + ".manifest.json"));
    const auto m = nlohmann::json::parse(read_text_file(path + ".manifest.json"));
    bool listed = false;
    for (const auto& o : m.at("outputs")) {
      if (o.at("path") == path) {
        listed = true;
        CHECK(o.at("sha256") == sha256_file(path));
      }
    }
    CHECK(listed);
    CHECK(m.at("tool_version") == "0.1.0");
    CHECK(m.contains("started_at"));
  }
  const auto report = nlohmann::json::parse(read_text_file(out + "/reports/RF.json"));
  CHECK(report.at("rows")[0].at("metrics").at("f1").get<double>() > 0.8);
  const auto table = read_text_file(out + "/reports/table.txt");
  CHECK(table.find("RF") != std::string::npos);
  CHECK(table.find("GBM") != std::string::npos);
  const auto cv = nlohmann::json::parse(read_text_file(out + "/reports/decision_tree.cv.json"));
  CHECK(cv.at("fold_reports").size() == 6);
}

TEST_CASE("reruns are byte-identical across thread counts") {
  const auto& in = inputs();
  const auto before = thread_count();
  const auto a = testing::run_reference_pipeline(in.dir + "/one", in.dataset, in.later, in.filters, 1);
  const auto b = testing::run_reference_pipeline(in.dir + "/many", in.dataset, in.later, in.filters, 4);
  set_thread_count(before);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto x = testing::artifact_bytes(in.dir + "/one");
  const auto y = testing::artifact_bytes(in.dir + "/many");
  CHECK(x.size() > 20);
  REQUIRE(x.size() == y.size());
  for (const auto& [rel, bytes] : x) {
    INFO(rel);
    CHECK(y.at(rel) == bytes);
  }
}

TEST_CASE("matrix from another vocabulary is rejected") {
  const auto& in = inputs();
  const std::string a = in.dir + "/va";
  const std::string b = in.dir + "/vb";
  REQUIRE(run({"--out-dir", a, "prepare", "--in", in.dataset, "--filter-list", in.filters}).code == 0);
  REQUIRE(run({"--out-dir", b, "prepare", "--in", in.later, "--filter-list", in.filters}).code == 0);
  REQUIRE(run({"--out-dir", a, "train", "--kind", "bernoulli_nb", "--matrix", a + "/matrices/train.bfm"}).code == 0);
  const auto r = run({"--out-dir", a, "evaluate", "--model", a + "/models/bernoulli_nb.model", "--matrix",
                      b + "/matrices/test.bfm"});
  CHECK(r.code == 1);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err.at("error") == "VocabularyDigestMismatch");
  CHECK(r.err.find('\n') == r.err.size() - 1);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"train"}).code == 2);
  CHECK(run({"train", "--matrix", "x", "--kind", "rf", "--bogus"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"evaluate", "--help"}).code == 0);
  const auto missing = run({"train", "--kind", "random_forest", "--matrix", "/nonexistent/m.bfm"});
  CHECK(missing.code == 1);
  CHECK(nlohmann::json::parse(missing.err).at("error") == "IoError");
  const auto bad_kind = run({"train", "--kind", "svm", "--matrix", "/nonexistent/m.bfm"});
  CHECK(bad_kind.code == 1);
  CHECK(nlohmann::json::parse(bad_kind.err).at("error") == "InvalidArgument");
}

TEST_CASE("label and profile on a canonical dataset") {
  const auto& in = inputs();
  const std::string out = in.dir + "/lp";
  const std::string labeled = out + "/labeled.jsonl";
  REQUIRE(run({"--out-dir", out, "label", "--in", in.dataset, "--filter-list", in.filters, "--out", labeled}).code == 0);
  const auto ds = load_dataset(labeled);
  REQUIRE(ds.labeled());
  for (const auto& r : ds.records) {
    CHECK((ds.label_of(r) == Label::T) == r.remote_hostname.ends_with(".trk.example"));
  }
  CHECK(run({"--out-dir", out, "label", "--in", labeled, "--filter-list", in.filters, "--out", labeled + "2"}).code == 1);
  const auto p = run({"--out-dir", out, "profile", "--in", labeled});
  CHECK(p.code == 0);
  CHECK(fs::exists(out + "/reports/labeled.profile.json"));
}
