#include "trackhdr/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trackhdr/calibration.hpp"
#include "trackhdr/digest.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/evaluation.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/filterlist.hpp"
#include "trackhdr/importance.hpp"
#include "trackhdr/ingest.hpp"
#include "trackhdr/io.hpp"
#include "trackhdr/matrix.hpp"
#include "trackhdr/metrics.hpp"
#include "trackhdr/models.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/profile.hpp"
#include "trackhdr/report.hpp"

namespace trackhdr {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunContext {
  std::string command;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json file_entry(const std::string& path) {
  json e = {{"path", path}, {"sha256", sha256_file(path)}};
  const std::string sidecar = path + ".manifest.json";
  if (fs::exists(sidecar)) e["manifest"] = sidecar;
  return e;
}

// Writes <output>.manifest.json next to every output of the run.
void write_manifests(const RunContext& ctx) {
  json m;
  m["command"] = ctx.command;
  m["args"] = ctx.args;
  m["seed"] = ctx.seed;
  m["tool_version"] = kToolVersion;
  m["started_at"] = utc_now();
  m["duration_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - ctx.started)
                         .count();
  json inputs = json::array();
  for (const auto& p : ctx.inputs) inputs.push_back(file_entry(p));
  json outputs = json::array();
  for (const auto& p : ctx.outputs) outputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  const std::string text = m.dump(2) + "\n";
  for (const auto& p : ctx.outputs) write_text_file(p + ".manifest.json", text);
}

std::string in_layout(const std::string& out_dir, const char* sub, const std::string& file) {
  const fs::path dir = fs::path(out_dir) / sub;
  fs::create_directories(dir);
  return (dir / file).string();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void emit(RunContext& ctx, const std::string& path, std::string_view text) {
  ensure_parent(path);
  write_text_file(path, text);
  ctx.outputs.push_back(path);
}

Direction parse_header_source(const std::string& s) {
  if (s == "response") return Direction::response;
  if (s == "request") return Direction::request;
  throw InvalidArgument("--header-source must be response or request");
}

// Loads a canonical dataset and applies the shared host/label/direction
// options, in that order.
struct DatasetOptions {
  std::vector<std::string> filter_lists;
  std::vector<std::string> exclude_hosts;
  bool honor_exceptions = false;
  std::string header_source = "response";
};

void add_dataset_options(CLI::App* sub, DatasetOptions& o, bool with_direction = true) {
  sub->add_option("--filter-list", o.filter_lists, "Adblock filter list used for labeling (repeatable)");
  sub->add_option("--exclude-host-substring", o.exclude_hosts,
                  "Drop records whose hostname contains this text (repeatable)");
  sub->add_flag("--honor-exceptions", o.honor_exceptions, "Let @@ exception rules unblock hosts");
  if (with_direction) {
    sub->add_option("--header-source", o.header_source, "response or request")
        ->check(CLI::IsMember({"response", "request"}));
  }
}

Dataset prepare_input(RunContext& ctx, const std::string& path, const DatasetOptions& o) {
  ctx.inputs.push_back(path);
  Dataset ds = load_dataset(path);
  if (!o.exclude_hosts.empty()) ds = filter_hosts(ds, o.exclude_hosts);
  if (!o.filter_lists.empty()) {
    for (const auto& f : o.filter_lists) ctx.inputs.push_back(f);
    const auto rules = load_filter_lists(o.filter_lists);
    ds = label_dataset(ds, rules, o.honor_exceptions ? ExceptionMode::honor : ExceptionMode::ignore,
                       true);
  }
  return select_direction(ds, parse_header_source(o.header_source));
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

ModelFile load_model_input(RunContext& ctx, const std::string& path) {
  ctx.inputs.push_back(path);
  return load_model(path);
}

BinaryFeatureMatrix load_matrix_input(RunContext& ctx, const std::string& path) {
  ctx.inputs.push_back(path);
  return load_matrix(path);
}

HeaderVocabulary load_vocab_input(RunContext& ctx, const std::string& path) {
  ctx.inputs.push_back(path);
  return load_vocabulary(path);
}

struct ModelOverrides {
  std::optional<std::size_t> n_estimators;
  std::optional<int> max_depth;
  std::optional<std::size_t> max_features;
  std::optional<std::size_t> min_samples_leaf;
  std::optional<double> learning_rate;
  std::optional<double> l2;
  std::optional<double> alpha;
  std::optional<std::size_t> max_iter;
  std::optional<bool> bootstrap;
};

void add_model_options(CLI::App* sub, std::string& kind, ModelOverrides& o) {
  sub->add_option("--kind", kind,
                  "decision_tree, random_forest, extra_trees, bernoulli_nb, logistic_regression, "
                  "adaboost, grad_boost, or a preset: gbm, lgbm, histgb, xgboost, gnb")
      ->required();
  sub->add_option("--n-estimators", o.n_estimators);
  sub->add_option("--max-depth", o.max_depth);
  sub->add_option("--max-features", o.max_features);
  sub->add_option("--min-samples-leaf", o.min_samples_leaf);
  sub->add_option("--learning-rate", o.learning_rate);
  sub->add_option("--l2", o.l2);
  sub->add_option("--alpha", o.alpha);
  sub->add_option("--max-iter", o.max_iter);
  sub->add_option("--bootstrap", o.bootstrap);
}

std::pair<ModelKind, ModelParams> resolve_model(const std::string& kind, const ModelOverrides& o) {
  auto [k, p] = preset_params(kind);
  if (o.n_estimators) p.n_estimators = *o.n_estimators;
  if (o.max_depth) p.max_depth = *o.max_depth;
  if (o.max_features) p.max_features = *o.max_features;
  if (o.min_samples_leaf) p.min_samples_leaf = *o.min_samples_leaf;
  if (o.learning_rate) p.learning_rate = *o.learning_rate;
  if (o.l2) p.l2 = *o.l2;
  if (o.alpha) p.alpha = *o.alpha;
  if (o.max_iter) p.max_iter = *o.max_iter;
  if (o.bootstrap) p.bootstrap = *o.bootstrap;
  return {k, p};
}

void add_vocab_options(CLI::App* sub, VocabularyParams& v) {
  sub->add_option("--min-presence", v.min_presence_rate, "Minimum header presence rate");
  sub->add_option("--w-dl", v.w_dl, "Edit-distance weight of the name similarity");
  sub->add_option("--w-h", v.w_h, "Hamming weight of the name similarity");
  sub->add_option("--tau-name", v.tau_name, "Name similarity threshold for merging");
  sub->add_option("--tau-value", v.tau_value, "Value-set Jaccard threshold for merging");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tracker detection from HTTP headers", "trackhdr"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: TRACKHDR_THREADS or all cores)");
  std::string out_dir = "out";
  app.add_option("--out-dir", out_dir, "Root of the datasets/vocab/matrices/models/reports layout");

  RunContext ctx;
  ctx.args = args;
  std::function<void()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse capture exports into a canonical dataset");
  std::vector<std::string> ingest_in;
  std::string ingest_format = "tex_json";
  IngestOptions ingest_opts;
  std::vector<std::string> ingest_exclude;
  std::string ingest_out;
  ingest->add_option("--in", ingest_in, "Capture file (repeatable)")->required();
  ingest->add_option("--format", ingest_format)->check(CLI::IsMember({"tex_json", "canonical_jsonl"}));
  ingest->add_option("--browser", ingest_opts.browser_tag);
  ingest->add_option("--crawl-date", ingest_opts.crawl_date);
  ingest->add_option("--first-id", ingest_opts.first_id);
  ingest->add_option("--exclude-host-substring", ingest_exclude);
  ingest->add_option("--out", ingest_out, "Output dataset path");
  ingest->callback([&] {
    action = [&] {
      const auto fmt = parse_capture_format(ingest_format);
      std::vector<Dataset> parts;
      std::uint64_t skipped = 0;
      IngestOptions opts = ingest_opts;
      for (const auto& path : ingest_in) {
        ctx.inputs.push_back(path);
        auto res = ingest_capture(path, fmt, opts);
        skipped += res.skipped;
        for (const auto& r : res.dataset.records) opts.first_id = std::max(opts.first_id, r.record_id + 1);
        parts.push_back(std::move(res.dataset));
      }
      Dataset ds = merge_datasets(parts);
      if (!ingest_exclude.empty()) ds = filter_hosts(ds, ingest_exclude);
      const std::string name = ingest_opts.browser_tag.empty() ? "dataset" : ingest_opts.browser_tag;
      const std::string path = ingest_out.empty() ? in_layout(out_dir, "datasets", name + ".jsonl") : ingest_out;
      emit(ctx, path, serialize_dataset(ds));
      out << fmt::format("ingested {} records ({} skipped) -> {}\n", ds.records.size(), skipped, path);
    };
  });

  // label
  auto* label = app.add_subcommand("label", "Label records by matching hostnames against filter lists");
  std::string label_in;
  std::string label_out;
  std::vector<std::string> label_lists;
  bool label_honor = false;
  bool label_force = false;
  label->add_option("--in", label_in)->required();
  label->add_option("--filter-list", label_lists)->required();
  label->add_flag("--honor-exceptions", label_honor);
  label->add_flag("--force", label_force, "Relabel an already labeled dataset");
  label->add_option("--out", label_out);
  label->callback([&] {
    action = [&] {
      ctx.inputs.push_back(label_in);
      for (const auto& f : label_lists) ctx.inputs.push_back(f);
      const Dataset ds = load_dataset(label_in);
      const auto rules = load_filter_lists(label_lists);
      const Dataset labeled =
          label_dataset(ds, rules, label_honor ? ExceptionMode::honor : ExceptionMode::ignore, label_force);
      const std::string path =
          label_out.empty() ? in_layout(out_dir, "datasets", stem_of(label_in) + ".labeled.jsonl") : label_out;
      emit(ctx, path, serialize_dataset(labeled));
      std::uint64_t trackers = 0;
      for (const auto& [id, l] : *labeled.label_map) trackers += l == Label::T;
      out << fmt::format("{} rules ({} skipped lines); {} of {} records labeled T -> {}\n",
                         rules.rules.size(), rules.diagnostics.skipped(), trackers,
                         labeled.records.size(), path);
    };
  });

  // profile
  auto* profile = app.add_subcommand("profile", "Summarise a labeled dataset");
  std::string profile_in;
  std::string profile_out;
  std::vector<std::string> profile_values{"content-length", "age"};
  std::vector<std::string> profile_overlap;
  DatasetOptions profile_ds;
  profile->add_option("--in", profile_in)->required();
  profile->add_option("--value-header", profile_values, "Header whose integer values are summarised");
  profile->add_option("--overlap-with", profile_overlap, "Further datasets for the header overlap table");
  profile->add_option("--out", profile_out);
  add_dataset_options(profile, profile_ds);
  profile->callback([&] {
    action = [&] {
      const Dataset ds = prepare_input(ctx, profile_in, profile_ds);
      const auto report = profile_dataset(ds, profile_values);
      json j = to_json(report);
      if (!profile_overlap.empty()) {
        std::vector<std::vector<std::string>> sets{unique_header_names(ds)};
        std::vector<std::string> names{profile_in};
        for (const auto& p : profile_overlap) {
          ctx.inputs.push_back(p);
          sets.push_back(unique_header_names(select_direction(load_dataset(p), ds.records.empty()
                                                                                 ? Direction::response
                                                                                 : ds.records[0].direction)));
          names.push_back(p);
        }
        json regions = json::object();
        for (const auto& [mask, count] : header_overlap_counts(sets)) regions[std::to_string(mask)] = count;
        j["header_overlap"] = {{"datasets", names}, {"regions", regions}};
      }
      const std::string path =
          profile_out.empty() ? in_layout(out_dir, "reports", stem_of(profile_in) + ".profile.json") : profile_out;
      emit(ctx, path, j.dump(2) + "\n");
      out << format_profile(report, stem_of(profile_in));
    };
  });

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Split, build the header vocabulary and binarize");
  std::string prepare_in;
  std::string prepare_split = "0.7,0.1,0.2";
  std::uint64_t prepare_seed = 42;
  bool prepare_unstratified = false;
  DatasetOptions prepare_ds;
  VocabularyParams prepare_vocab;
  prepare->add_option("--in", prepare_in)->required();
  prepare->add_option("--split", prepare_split, "train,calibration,test fractions");
  prepare->add_option("--seed", prepare_seed);
  prepare->add_flag("--unstratified", prepare_unstratified);
  add_dataset_options(prepare, prepare_ds);
  add_vocab_options(prepare, prepare_vocab);
  prepare->callback([&] {
    action = [&] {
      ctx.seed = prepare_seed;
      const Dataset ds = prepare_input(ctx, prepare_in, prepare_ds);
      auto spec = parse_split_fractions(prepare_split, prepare_seed);
      spec.stratified = !prepare_unstratified;
      const auto split = split_dataset(ds, spec);
      const auto vocab = build_vocabulary(split.train, prepare_vocab);
      const std::array<std::pair<const char*, const Dataset*>, 3> parts{
          {{"train", &split.train}, {"calibration", &split.calibration}, {"test", &split.test}}};
      emit(ctx, in_layout(out_dir, "datasets", "split.json"), split.manifest.dump(2) + "\n");
      emit(ctx, in_layout(out_dir, "vocab", "vocabulary.json"), to_json(vocab).dump(2) + "\n");
      for (const auto& [name, part] : parts) {
        emit(ctx, in_layout(out_dir, "datasets", std::string(name) + ".jsonl"), serialize_dataset(*part));
        const auto mat = binarize(*part, vocab);
        emit(ctx, in_layout(out_dir, "matrices", std::string(name) + ".bfm"), serialize_matrix(mat));
        out << fmt::format("{}: {} rows, {} positives\n", name, mat.n_rows, mat.positives());
      }
      out << fmt::format("vocabulary: {} columns, {} aliases, {} dropped, digest {}\n", vocab.dim(),
                         vocab.alias_map.size(), vocab.dropped.size(), vocab.digest);
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Fit a classifier on a binary matrix");
  std::string train_kind;
  ModelOverrides train_over;
  std::string train_matrix;
  std::uint64_t train_seed = 42;
  std::string train_out;
  add_model_options(train, train_kind, train_over);
  train->add_option("--matrix", train_matrix)->required();
  train->add_option("--seed", train_seed);
  train->add_option("--out", train_out);
  train->callback([&] {
    action = [&] {
      ctx.seed = train_seed;
      const auto [kind, params] = resolve_model(train_kind, train_over);
      const auto mat = load_matrix_input(ctx, train_matrix);
      const auto model = train_classifier(kind, mat, params, train_seed);
      for (const auto& w : model.warnings) err << w << "\n";
      const std::string path = train_out.empty() ? in_layout(out_dir, "models", train_kind + ".model") : train_out;
      emit(ctx, path, serialize_model(model));
      out << fmt::format("trained {} on {} rows x {} columns -> {}\n", to_string(kind), mat.n_rows,
                         mat.dim, path);
    };
  });

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit an isotonic calibration map");
  std::string cal_model;
  std::string cal_matrix;
  std::string cal_out;
  calibrate->add_option("--model", cal_model)->required();
  calibrate->add_option("--matrix", cal_matrix)->required();
  calibrate->add_option("--out", cal_out);
  calibrate->callback([&] {
    action = [&] {
      const auto file = load_model_input(ctx, cal_model);
      if (file.mapping) throw InvalidArgument("model is already calibrated");
      const auto mat = load_matrix_input(ctx, cal_matrix);
      const auto calibrated = calibrate_isotonic(file.base, mat);
      const std::string path =
          cal_out.empty() ? in_layout(out_dir, "models", stem_of(cal_model) + ".calibrated.model") : cal_out;
      emit(ctx, path, serialize_model(calibrated));
      out << fmt::format("isotonic map with {} steps -> {}\n", calibrated.mapping.values.size(), path);
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a binary matrix");
  std::string eval_model;
  std::string eval_matrix;
  std::string eval_name;
  double eval_threshold = 0.5;
  bool eval_ci = false;
  std::uint64_t eval_seed = 42;
  std::string eval_out;
  evaluate->add_option("--model", eval_model)->required();
  evaluate->add_option("--matrix", eval_matrix)->required();
  evaluate->add_option("--name", eval_name, "Row label in the report");
  evaluate->add_option("--threshold", eval_threshold);
  evaluate->add_flag("--ci", eval_ci, "Attach bootstrap confidence intervals");
  evaluate->add_option("--seed", eval_seed);
  evaluate->add_option("--out", eval_out, "Report JSON path");
  evaluate->callback([&] {
    action = [&] {
      ctx.seed = eval_seed;
      const auto file = load_model_input(ctx, eval_model);
      const auto mat = load_matrix_input(ctx, eval_matrix);
      const auto probs = file.predict(mat);
      const std::string name = eval_name.empty() ? stem_of(eval_model) : eval_name;
      const std::vector<ReportRow> rows{
          {name, compute_metrics(mat.labels, probs, eval_threshold, eval_ci, eval_seed)}};
      const std::string path = eval_out.empty() ? in_layout(out_dir, "reports", name + ".json") : eval_out;
      json j = report_json(rows);
      j["vocabulary_digest"] = mat.vocabulary_digest;
      emit(ctx, path, j.dump(2) + "\n");
      const std::string table = format_metrics_table(rows);
      const std::string base = (fs::path(path).parent_path() / fs::path(path).stem()).string();
      emit(ctx, base + ".txt", table);
      const auto curves = curve_csvs(mat.labels, probs);
      emit(ctx, base + ".pr.csv", curves.pr_csv);
      emit(ctx, base + ".roc.csv", curves.roc_csv);
      emit(ctx, base + ".reliability.csv", curves.reliability_csv);
      out << table;
    };
  });

  // cross-eval
  auto* cross = app.add_subcommand("cross-eval", "Apply a trained model to further datasets");
  std::string cross_model;
  std::string cross_vocab;
  std::vector<std::string> cross_tests;
  std::vector<std::string> cross_tags;
  double cross_threshold = 0.5;
  bool cross_ci = false;
  std::uint64_t cross_seed = 42;
  std::string cross_out;
  DatasetOptions cross_ds;
  cross->add_option("--model", cross_model)->required();
  cross->add_option("--vocab", cross_vocab, "Vocabulary the model was trained with")->required();
  cross->add_option("--test", cross_tests, "Canonical dataset (repeatable)")->required();
  cross->add_option("--tag", cross_tags, "Report label per --test, in order");
  cross->add_option("--threshold", cross_threshold);
  cross->add_flag("--ci", cross_ci);
  cross->add_option("--seed", cross_seed);
  cross->add_option("--out", cross_out);
  add_dataset_options(cross, cross_ds);
  cross->callback([&] {
    action = [&] {
      ctx.seed = cross_seed;
      if (!cross_tags.empty() && cross_tags.size() != cross_tests.size()) {
        throw InvalidArgument("--tag must be given once per --test");
      }
      const auto file = load_model_input(ctx, cross_model);
      const auto vocab = load_vocab_input(ctx, cross_vocab);
      std::vector<std::pair<std::string, Dataset>> tests;
      for (std::size_t i = 0; i < cross_tests.size(); ++i) {
        const std::string tag = cross_tags.empty() ? stem_of(cross_tests[i]) : cross_tags[i];
        tests.emplace_back(tag, prepare_input(ctx, cross_tests[i], cross_ds));
      }
      const auto rows = cross_evaluate(file, vocab, tests, cross_threshold, cross_ci, cross_seed);
      const std::string path =
          cross_out.empty() ? in_layout(out_dir, "reports", stem_of(cross_model) + ".cross.json") : cross_out;
      json j = report_json(rows);
      j["vocabulary_digest"] = vocab.digest;
      emit(ctx, path, j.dump(2) + "\n");
      const std::string table = format_metrics_table(rows);
      emit(ctx, (fs::path(path).parent_path() / fs::path(path).stem()).string() + ".txt", table);
      out << table;
    };
  });

  // cv
  auto* cv = app.add_subcommand("cv", "Repeated stratified k-fold cross-validation");
  std::string cv_in;
  std::string cv_kind;
  ModelOverrides cv_over;
  std::size_t cv_repeats = 5;
  std::size_t cv_folds = 5;
  std::uint64_t cv_seed = 42;
  double cv_threshold = 0.5;
  std::string cv_out;
  DatasetOptions cv_ds;
  VocabularyParams cv_vocab;
  cv->add_option("--in", cv_in)->required();
  add_model_options(cv, cv_kind, cv_over);
  cv->add_option("--repeats", cv_repeats);
  cv->add_option("--folds", cv_folds);
  cv->add_option("--seed", cv_seed);
  cv->add_option("--threshold", cv_threshold);
  cv->add_option("--out", cv_out);
  add_dataset_options(cv, cv_ds);
  add_vocab_options(cv, cv_vocab);
  cv->callback([&] {
    action = [&] {
      ctx.seed = cv_seed;
      const Dataset ds = prepare_input(ctx, cv_in, cv_ds);
      const auto [kind, params] = resolve_model(cv_kind, cv_over);
      const PipelineParams pipeline{cv_vocab, params, cv_threshold};
      const auto result = repeated_stratified_cv(kind, ds, pipeline, cv_repeats, cv_folds, cv_seed);
      const std::string path = cv_out.empty() ? in_layout(out_dir, "reports", cv_kind + ".cv.json") : cv_out;
      emit(ctx, path, to_json(result).dump(2) + "\n");
      for (const auto m : kAllMetrics) {
        const auto& a = result.aggregate.at(m);
        out << fmt::format("{:<18} {:.4f} +/- {:.4f}\n", to_string(m), a.mean, a.std);
      }
    };
  });

  // importance
  auto* importance = app.add_subcommand("importance", "Feature importance of a trained model");
  std::string imp_model;
  std::string imp_matrix;
  std::string imp_vocab;
  std::string imp_method = "permutation";
  std::string imp_metric = "f1";
  std::uint64_t imp_seed = 42;
  std::size_t imp_repeats = 5;
  std::size_t imp_top = 10;
  std::string imp_out;
  importance->add_option("--model", imp_model)->required();
  importance->add_option("--matrix", imp_matrix, "Evaluation matrix")->required();
  importance->add_option("--vocab", imp_vocab, "Vocabulary for column names")->required();
  importance->add_option("--method", imp_method)->check(CLI::IsMember({"impurity", "permutation"}));
  importance->add_option("--metric", imp_metric);
  importance->add_option("--seed", imp_seed);
  importance->add_option("--repeats", imp_repeats);
  importance->add_option("--top", imp_top, "Rows printed");
  importance->add_option("--out", imp_out);
  importance->callback([&] {
    action = [&] {
      ctx.seed = imp_seed;
      const auto file = load_model_input(ctx, imp_model);
      const auto mat = load_matrix_input(ctx, imp_matrix);
      const auto vocab = load_vocab_input(ctx, imp_vocab);
      expect_vocabulary(vocab.digest, mat.vocabulary_digest, "importance");
      const auto report = compute_feature_importance(file, mat, vocab.canonical, parse_metric(imp_metric),
                                                     parse_importance_method(imp_method), imp_seed,
                                                     imp_repeats);
      const json j = to_json(report);
      const std::string path = imp_out.empty()
                                   ? in_layout(out_dir, "reports", stem_of(imp_model) + "." + imp_method + ".json")
                                   : imp_out;
      emit(ctx, path, j.dump(2) + "\n");
      const auto& rows = j["features"];
      for (std::size_t i = 0; i < std::min(imp_top, rows.size()); ++i) {
        out << fmt::format("{:<40} {:.4f}\n", rows[i]["header"].get<std::string>(),
                           rows[i]["score"].get<double>());
      }
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Combine report JSON files into one table");
  std::vector<std::string> report_in;
  std::string report_out;
  report->add_option("--in", report_in, "Report JSON (repeatable)")->required();
  report->add_option("--out", report_out);
  report->callback([&] {
    action = [&] {
      std::vector<ReportRow> rows;
      for (const auto& p : report_in) {
        ctx.inputs.push_back(p);
        json j;
        try {
          j = json::parse(read_text_file(p));
        } catch (const json::exception& e) {
          throw ParseError(p + ": " + e.what());
        }
        for (auto& r : rows_from_json(j)) rows.push_back(std::move(r));
      }
      const std::string table = format_metrics_table(rows);
      const std::string path = report_out.empty() ? in_layout(out_dir, "reports", "table.txt") : report_out;
      emit(ctx, path, table);
      emit(ctx, (fs::path(path).parent_path() / fs::path(path).stem()).string() + ".json",
           report_json(rows).dump(2) + "\n");
      out << table;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }
  for (const auto* sub : app.get_subcommands()) ctx.command = sub->get_name();
  if (threads > 0) set_thread_count(threads);

  try {
    action();
    write_manifests(ctx);
  } catch (const Error& e) {
    err << json{{"error", e.class_name()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << json{{"error", "IoError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace trackhdr
