#include "trackhdr/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trackhdr/error.hpp"

namespace trackhdr {

bool BinaryFeatureMatrix::has(std::size_t row, std::uint32_t col) const {
  return std::binary_search(rows[row].begin(), rows[row].end(), col);
}

std::size_t BinaryFeatureMatrix::nnz() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

double BinaryFeatureMatrix::density() const {
  if (n_rows == 0 || dim == 0) return 0.0;
  return static_cast<double>(nnz()) / (static_cast<double>(n_rows) * static_cast<double>(dim));
}

std::size_t BinaryFeatureMatrix::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

void check_matrix(const BinaryFeatureMatrix& m) {
  if (m.rows.size() != m.n_rows) throw InvalidArgument("matrix: row count mismatch");
  if (m.labels.size() != m.n_rows) throw InvalidArgument("matrix: label count mismatch");
  for (const auto& r : m.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] >= m.dim) throw InvalidArgument("matrix: column index out of range");
      if (i > 0 && r[i] <= r[i - 1]) throw InvalidArgument("matrix: row indices not increasing");
    }
  }
  for (auto l : m.labels) {
    if (l > 1) throw InvalidArgument("matrix: label not in {0,1}");
  }
}

std::string serialize_matrix(const BinaryFeatureMatrix& m) {
  check_matrix(m);
  std::string out =
      nlohmann::json{{"v", 1}, {"n", m.n_rows}, {"d", m.dim}, {"vocab_digest", m.vocabulary_digest}}
          .dump();
  out.push_back('\n');
  char buf[16];
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    out.push_back(m.labels[i] ? '1' : '0');
    for (const auto c : m.rows[i]) {
      out.push_back(' ');
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), c);
      out.append(buf, end);
    }
    out.push_back('\n');
  }
  return out;
}

BinaryFeatureMatrix deserialize_matrix(std::string_view text) {
  const auto first_nl = text.find('\n');
  if (first_nl == std::string_view::npos) throw ParseError("matrix: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text.substr(0, first_nl));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("matrix header: ") + e.what());
  }
  if (header.value("v", 0) != 1) throw SchemaVersionError("matrix: unsupported version");
  BinaryFeatureMatrix m;
  try {
    m.n_rows = header.at("n").get<std::size_t>();
    m.dim = header.at("d").get<std::size_t>();
    m.vocabulary_digest = header.at("vocab_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("matrix header: ") + e.what());
  }
  m.rows.reserve(m.n_rows);
  m.labels.reserve(m.n_rows);
  std::size_t pos = first_nl + 1;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<std::uint32_t> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    unsigned label = 0;
    auto [q, ec] = std::from_chars(p, end, label);
    if (ec != std::errc()) throw ParseError("matrix: bad label");
    p = q;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      std::uint32_t c = 0;
      auto [r, ec2] = std::from_chars(p, end, c);
      if (ec2 != std::errc()) throw ParseError("matrix: bad column index");
      row.push_back(c);
      p = r;
    }
    m.labels.push_back(static_cast<std::uint8_t>(label));
    m.rows.push_back(std::move(row));
  }
  if (m.rows.size() != m.n_rows) throw ParseError("matrix: row count does not match header");
  try {
    check_matrix(m);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return m;
}

void save_matrix(const BinaryFeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_matrix(m);
}

BinaryFeatureMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_matrix(ss.str());
}

BinaryFeatureMatrix select_rows(const BinaryFeatureMatrix& m, const std::vector<std::size_t>& rows) {
  BinaryFeatureMatrix out;
  out.dim = m.dim;
  out.vocabulary_digest = m.vocabulary_digest;
  out.n_rows = rows.size();
  out.rows.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (const auto r : rows) {
    out.rows.push_back(m.rows.at(r));
    out.labels.push_back(m.labels.at(r));
  }
  return out;
}

}  // namespace trackhdr
