#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace echoscope::testing {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// File contents with the run-timestamp lines removed.
inline std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# generated_at:", 0) == 0 || line.find("\"generated_at\":") != std::string::npos) continue;
    out += line + '\n';
  }
  return out;
}

}  // namespace echoscope::testing
