#pragma once

#include <map>
#include <string>
#include <vector>

namespace trackhdr::testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};
CliResult run(const std::vector<std::string>& args);

// Runs prepare, train, calibrate, evaluate, cross-eval, cv, importance and
// report under `out_dir`. Returns the first failing step, or an empty
// result with code 0.
CliResult run_reference_pipeline(const std::string& out_dir, const std::string& dataset,
                                 const std::string& later_dataset, const std::string& filter_list,
                                 std::size_t threads);

// Relative path -> file bytes for every artifact except manifests.
std::map<std::string, std::string> artifact_bytes(const std::string& dir);

}  // namespace trackhdr::testing
