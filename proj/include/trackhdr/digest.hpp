#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace trackhdr {

// Incremental SHA-256 producing lowercase hex. Used for every content digest
// (datasets, filter lists, vocabularies, artifacts).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  // Length-prefixed field so that ("ab","c") and ("a","bc") differ.
  Sha256& field(std::string_view bytes);
  Sha256& field(std::uint64_t value);
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace trackhdr
