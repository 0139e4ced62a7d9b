#pragma once

#include <string>
#include <string_view>

namespace trackhdr {

// Whole-file helpers; both throw IoError.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace trackhdr
