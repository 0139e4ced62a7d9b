#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trackhdr {

// Sparse n x d presence matrix. Each row lists the set column indices in
// strictly increasing order; labels are 0 (NT) / 1 (T).
struct BinaryFeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t dim = 0;
  std::vector<std::vector<std::uint32_t>> rows;
  std::vector<std::uint8_t> labels;
  std::string vocabulary_digest;

  bool operator==(const BinaryFeatureMatrix&) const = default;

  bool has(std::size_t row, std::uint32_t col) const;
  std::size_t nnz() const;
  double density() const;
  std::size_t positives() const;
};

// Throws InvalidArgument on a violated invariant.
void check_matrix(const BinaryFeatureMatrix& m);

// Text format: {"v":1,"n":…,"d":…,"vocab_digest":…} header line, then one
// line per row: label followed by sorted column indices.
std::string serialize_matrix(const BinaryFeatureMatrix& m);
BinaryFeatureMatrix deserialize_matrix(std::string_view text);
void save_matrix(const BinaryFeatureMatrix& m, const std::string& path);
BinaryFeatureMatrix load_matrix(const std::string& path);

// Subset of rows, in the given order.
BinaryFeatureMatrix select_rows(const BinaryFeatureMatrix& m, const std::vector<std::size_t>& rows);

}  // namespace trackhdr
