#include "trackhdr/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "trackhdr/digest.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"

namespace trackhdr {

// ---------------------------------------------------------------- splitting

void validate(const SplitSpec& spec) {
  for (const double f : {spec.train, spec.calibration, spec.test}) {
    if (!(f > 0.0 && f < 1.0)) throw InvalidFractions("split fractions must lie in (0,1)");
  }
  if (std::abs(spec.train + spec.calibration + spec.test - 1.0) > 1e-9) {
    throw InvalidFractions("split fractions must sum to 1");
  }
}

SplitSpec parse_split_fractions(std::string_view csv, std::uint64_t seed) {
  std::vector<double> parts;
  std::stringstream ss{std::string(csv)};
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidFractions("bad split fraction '" + item + "'");
    }
  }
  if (parts.size() != 3) throw InvalidFractions("expected train,calibration,test fractions");
  SplitSpec spec{parts[0], parts[1], parts[2], seed, true};
  validate(spec);
  return spec;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& positions) {
  Dataset out;
  out.provenance = ds.provenance;
  out.records.reserve(positions.size());
  if (ds.label_map) out.label_map.emplace();
  for (const auto p : positions) {
    const auto& r = ds.records.at(p);
    out.records.push_back(r);
    if (ds.label_map) out.label_map->emplace(r.record_id, ds.label_of(r));
  }
  out.provenance.headerless_records = static_cast<std::uint64_t>(
      std::count_if(out.records.begin(), out.records.end(),
                    [](const HttpMessageRecord& r) { return r.headers.empty(); }));
  out.provenance.content_digest = records_digest(out.records);
  return out;
}

DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec) {
  validate(spec);
  if (!ds.labeled()) throw UnlabeledDataset("split requires a labeled dataset");

  std::vector<std::vector<std::size_t>> groups(spec.stratified ? 2 : 1);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const std::size_t g = spec.stratified ? static_cast<std::size_t>(ds.label_of(ds.records[i])) : 0;
    groups[g].push_back(i);
  }
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& members = groups[g];
    if (members.empty()) continue;
    if (members.size() < 3) {
      throw InsufficientClassCount("class has " + std::to_string(members.size()) +
                                   " records, fewer than the 3 requested splits");
    }
    Rng rng(derive_seed(spec.seed, g));
    rng.shuffle(std::span(members));
    const auto c = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(c * spec.train));
    const auto n_cal = std::min(static_cast<std::size_t>(std::llround(c * spec.calibration)),
                                members.size() - n_train);
    parts[0].insert(parts[0].end(), members.begin(), members.begin() + n_train);
    parts[1].insert(parts[1].end(), members.begin() + n_train, members.begin() + n_train + n_cal);
    parts[2].insert(parts[2].end(), members.begin() + n_train + n_cal, members.end());
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());

  DatasetSplit out{subset(ds, parts[0]), subset(ds, parts[1]), subset(ds, parts[2]), {}};
  auto ids = [](const Dataset& d) {
    std::vector<std::uint64_t> v;
    v.reserve(d.records.size());
    for (const auto& r : d.records) v.push_back(r.record_id);
    return v;
  };
  out.manifest = {{"fractions", {spec.train, spec.calibration, spec.test}},
                  {"seed", spec.seed},
                  {"stratified", spec.stratified},
                  {"source_digest", ds.provenance.content_digest},
                  {"train_ids", ids(out.train)},
                  {"calibration_ids", ids(out.calibration)},
                  {"test_ids", ids(out.test)}};
  return out;
}

// ------------------------------------------------------------ string metrics

std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t inf = n + m;
  // (n+2) x (m+2) table with a sentinel row/column.
  std::vector<std::size_t> d((n + 2) * (m + 2));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 2) + j]; };
  at(0, 0) = inf;
  for (std::size_t i = 0; i <= n; ++i) {
    at(i + 1, 0) = inf;
    at(i + 1, 1) = i;
  }
  for (std::size_t j = 0; j <= m; ++j) {
    at(0, j + 1) = inf;
    at(1, j + 1) = j;
  }
  std::array<std::size_t, 256> last_row{};
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t last_match_col = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t i1 = last_row[static_cast<unsigned char>(b[j - 1])];
      const std::size_t j1 = last_match_col;
      std::size_t cost = 1;
      if (a[i - 1] == b[j - 1]) {
        cost = 0;
        last_match_col = j;
      }
      at(i + 1, j + 1) = std::min({at(i, j) + cost, at(i + 1, j) + 1, at(i, j + 1) + 1,
                                   at(i1, j1) + (i - i1 - 1) + 1 + (j - j1 - 1)});
    }
    last_row[static_cast<unsigned char>(a[i - 1])] = i;
  }
  return at(n + 1, m + 1);
}

double name_similarity(std::string_view a, std::string_view b, const VocabularyParams& params) {
  const std::size_t len = std::max(a.size(), b.size());
  if (len == 0) return 1.0;
  const double dl = static_cast<double>(damerau_levenshtein(a, b)) / static_cast<double>(len);
  double ham_term = 0.0;
  if (a.size() == b.size()) {
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i];
    ham_term = 1.0 - static_cast<double>(mismatches) / static_cast<double>(len);
  }
  return params.w_dl * (1.0 - dl) + params.w_h * ham_term;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

namespace {

void check_weights(const VocabularyParams& p) {
  if (p.w_dl < 0 || p.w_h < 0 || std::abs(p.w_dl + p.w_h - 1.0) > 1e-12) {
    throw InvalidWeights("w_dl + w_h must equal 1");
  }
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> similar_name_pairs(
    const std::vector<std::string>& names, const VocabularyParams& params) {
  check_weights(params);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> per_row(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const std::size_t la = names[i].size();
      const std::size_t lb = names[j].size();
      const std::size_t len = std::max(la, lb);
      const std::size_t diff = la > lb ? la - lb : lb - la;
      // DL distance is at least the length difference.
      const double bound = params.w_dl * (1.0 - (len ? static_cast<double>(diff) / len : 0.0)) +
                           (la == lb ? params.w_h : 0.0);
      if (bound + 1e-12 < params.tau_name) continue;
      if (name_similarity(names[i], names[j], params) >= params.tau_name) per_row[i].emplace_back(i, j);
    }
  });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto& r : per_row) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::map<std::string, std::string> fuzzy_merge_headers(
    const std::vector<std::string>& names,
    const std::map<std::string, std::set<std::string>>& value_sets,
    const std::map<std::string, std::uint64_t>& frequencies, const VocabularyParams& params) {
  check_weights(params);
  std::vector<std::string> sorted(names);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  static const std::set<std::string> kEmpty;
  auto values_of = [&](const std::string& n) -> const std::set<std::string>& {
    const auto it = value_sets.find(n);
    return it == value_sets.end() ? kEmpty : it->second;
  };
  auto freq_of = [&](const std::string& n) -> std::uint64_t {
    const auto it = frequencies.find(n);
    return it == frequencies.end() ? 0 : it->second;
  };

  UnionFind uf(sorted.size());
  for (const auto& [i, j] : similar_name_pairs(sorted, params)) {
    if (jaccard(values_of(sorted[i]), values_of(sorted[j])) >= params.tau_value) uf.unite(i, j);
  }
  std::map<std::size_t, std::size_t> best;  // root -> canonical member
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t root = uf.find(i);
    const auto it = best.find(root);
    if (it == best.end()) {
      best[root] = i;
      continue;
    }
    // `sorted` is ascending, so the earlier member wins frequency ties.
    if (freq_of(sorted[i]) > freq_of(sorted[it->second])) it->second = i;
  }
  std::map<std::string, std::string> aliases;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t canon = best[uf.find(i)];
    if (canon != i) aliases[sorted[i]] = sorted[canon];
  }
  return aliases;
}

// --------------------------------------------------------------- vocabulary

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::low_variance: return "low_variance";
    case DropReason::missing_ratio: return "missing_ratio";
    case DropReason::single_label: return "single_label";
  }
  return "unknown";
}

namespace {

DropReason parse_drop_reason(std::string_view s) {
  if (s == "low_variance") return DropReason::low_variance;
  if (s == "missing_ratio") return DropReason::missing_ratio;
  if (s == "single_label") return DropReason::single_label;
  throw ParseError("unknown drop reason '" + std::string(s) + "'");
}

struct HeaderStats {
  std::uint64_t presence = 0;
  std::uint64_t presence_t = 0;
  std::uint64_t presence_nt = 0;
  std::string first_value;
  bool has_value = false;
  bool multi_valued = false;
};

}  // namespace

long HeaderVocabulary::column_of(const std::string& name) const {
  const std::string* target = &name;
  if (const auto it = alias_map.find(name); it != alias_map.end()) target = &it->second;
  const auto it = std::find(canonical.begin(), canonical.end(), *target);
  return it == canonical.end() ? -1 : static_cast<long>(it - canonical.begin());
}

std::string compute_vocabulary_digest(const HeaderVocabulary& v) {
  auto j = to_json(v);
  j.erase("digest");
  return sha256_hex(j.dump());
}

HeaderVocabulary build_vocabulary(const Dataset& train, const VocabularyParams& params) {
  check_weights(params);
  if (!train.labeled()) throw UnlabeledDataset("vocabulary requires a labeled training split");
  if (train.records.empty()) throw EmptyTrainingSet("training split is empty");

  std::map<std::string, HeaderStats> stats;
  for (const auto& r : train.records) {
    const bool tracker = train.label_of(r) == Label::T;
    std::set<std::string_view> seen;
    for (const auto& [name, value] : r.headers) {
      auto& s = stats[name];
      if (!s.has_value) {
        s.first_value = value;
        s.has_value = true;
      } else if (!s.multi_valued && value != s.first_value) {
        s.multi_valued = true;
      }
      if (seen.insert(name).second) {
        ++s.presence;
        ++(tracker ? s.presence_t : s.presence_nt);
      }
    }
  }

  HeaderVocabulary vocab;
  vocab.params = params;
  vocab.train_digest = records_digest(train.records);
  const auto n = static_cast<double>(train.records.size());
  std::vector<std::string> survivors;
  for (const auto& [name, s] : stats) {
    // Reason precedence: missing_ratio, low_variance, single_label.
    if (static_cast<double>(s.presence) / n < params.min_presence_rate) {
      vocab.dropped[name] = DropReason::missing_ratio;
    } else if (!s.multi_valued) {
      vocab.dropped[name] = DropReason::low_variance;
    } else if (s.presence_t == 0 || s.presence_nt == 0) {
      vocab.dropped[name] = DropReason::single_label;
    } else {
      survivors.push_back(name);
    }
  }

  // Value sets are only collected for names that have a similar partner.
  std::set<std::string> involved;
  for (const auto& [i, j] : similar_name_pairs(survivors, params)) {
    involved.insert(survivors[i]);
    involved.insert(survivors[j]);
  }
  std::map<std::string, std::set<std::string>> value_sets;
  if (!involved.empty()) {
    for (const auto& r : train.records) {
      for (const auto& [name, value] : r.headers) {
        if (involved.contains(name)) value_sets[name].insert(value);
      }
    }
  }
  std::map<std::string, std::uint64_t> freq;
  for (const auto& name : survivors) freq[name] = stats[name].presence;
  vocab.alias_map = fuzzy_merge_headers(survivors, value_sets, freq, params);

  // Group-level presence and label counts for ordering and the (iii) re-check.
  std::map<std::string, HeaderStats> groups;
  for (const auto& name : survivors) {
    if (!vocab.alias_map.contains(name)) groups[name];
  }
  for (const auto& r : train.records) {
    const bool tracker = train.label_of(r) == Label::T;
    std::set<std::string> hit;
    for (const auto& h : r.headers) {
      const auto alias = vocab.alias_map.find(h.first);
      const std::string& canon = alias == vocab.alias_map.end() ? h.first : alias->second;
      if (groups.contains(canon)) hit.insert(canon);
    }
    for (const auto& c : hit) {
      auto& g = groups[c];
      ++g.presence;
      ++(tracker ? g.presence_t : g.presence_nt);
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> columns;
  for (const auto& [name, g] : groups) {
    if (g.presence_t == 0 || g.presence_nt == 0) {
      vocab.dropped[name] = DropReason::single_label;
      for (auto it = vocab.alias_map.begin(); it != vocab.alias_map.end();) {
        if (it->second == name) {
          vocab.dropped[it->first] = DropReason::single_label;
          it = vocab.alias_map.erase(it);
        } else {
          ++it;
        }
      }
      continue;
    }
    columns.emplace_back(name, g.presence);
  }
  std::sort(columns.begin(), columns.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [name, count] : columns) {
    vocab.canonical.push_back(name);
    vocab.frequency.push_back(count);
  }
  vocab.digest = compute_vocabulary_digest(vocab);
  return vocab;
}

nlohmann::json to_json(const HeaderVocabulary& v) {
  nlohmann::json dropped = nlohmann::json::object();
  for (const auto& [name, reason] : v.dropped) dropped[name] = std::string(to_string(reason));
  return {{"v", 1},
          {"canonical", v.canonical},
          {"frequency", v.frequency},
          {"alias_map", v.alias_map},
          {"dropped", std::move(dropped)},
          {"thresholds",
           {{"min_presence_rate", v.params.min_presence_rate},
            {"w_dl", v.params.w_dl},
            {"w_h", v.params.w_h},
            {"tau_name", v.params.tau_name},
            {"tau_value", v.params.tau_value}}},
          {"train_digest", v.train_digest},
          {"digest", v.digest}};
}

HeaderVocabulary vocabulary_from_json(const nlohmann::json& j) {
  if (j.value("v", 0) != 1) throw SchemaVersionError("vocabulary: unsupported version");
  HeaderVocabulary v;
  try {
    v.canonical = j.at("canonical").get<std::vector<std::string>>();
    v.frequency = j.at("frequency").get<std::vector<std::uint64_t>>();
    v.alias_map = j.at("alias_map").get<std::map<std::string, std::string>>();
    for (const auto& [name, reason] : j.at("dropped").items()) {
      v.dropped[name] = parse_drop_reason(reason.get<std::string>());
    }
    const auto& t = j.at("thresholds");
    v.params = {t.at("min_presence_rate").get<double>(), t.at("w_dl").get<double>(),
                t.at("w_h").get<double>(), t.at("tau_name").get<double>(),
                t.at("tau_value").get<double>()};
    v.train_digest = j.at("train_digest").get<std::string>();
    v.digest = j.at("digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
  if (compute_vocabulary_digest(v) != v.digest) {
    throw DigestMismatch("vocabulary content does not match its digest");
  }
  return v;
}

void save_vocabulary(const HeaderVocabulary& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(v).dump(1) << '\n';
}

HeaderVocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    return vocabulary_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
}

// ------------------------------------------------------------- binarization

BinaryFeatureMatrix binarize(const Dataset& ds, const HeaderVocabulary& vocab) {
  if (!ds.labeled()) throw UnlabeledDataset("binarize requires a labeled dataset");
  std::unordered_map<std::string, std::uint32_t> column;
  for (std::uint32_t j = 0; j < vocab.canonical.size(); ++j) column[vocab.canonical[j]] = j;
  for (const auto& [alias, canon] : vocab.alias_map) {
    if (const auto it = column.find(canon); it != column.end()) column[alias] = it->second;
  }
  BinaryFeatureMatrix m;
  m.n_rows = ds.records.size();
  m.dim = vocab.dim();
  m.vocabulary_digest = vocab.digest;
  m.rows.resize(m.n_rows);
  m.labels.resize(m.n_rows);
  parallel_for(m.n_rows, [&](std::size_t i) {
    const auto& r = ds.records[i];
    auto& row = m.rows[i];
    for (const auto& h : r.headers) {
      if (const auto it = column.find(h.first); it != column.end()) row.push_back(it->second);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    m.labels[i] = ds.label_of(r) == Label::T ? 1 : 0;
  });
  return m;
}

void expect_vocabulary(const std::string& expected, const std::string& actual, std::string_view what) {
  if (expected != actual) {
    throw VocabularyDigestMismatch(std::string(what) + ": vocabulary digest " + actual +
                                   " does not match expected " + expected);
  }
}

}  // namespace trackhdr
