#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gw/prob_core.hpp"

namespace gw::cli {

inline constexpr const char* kToolVersion = "gwtool 0.3.0";
inline constexpr const char* kCsvSchema = "1";

// Input document (JSON):
//   {"x_alphabet": [...], "y_alphabet": [...], "pxy": [...]}   row-major, flat or nested
// "counts" may replace "pxy" for integer types; "cond" optionally gives P(w|x,y) rows for cover.
struct InputDoc {
  std::vector<std::string> x_alphabet;
  std::vector<std::string> y_alphabet;
  JointDist dist{Matrix::Constant(1, 1, 1.0)};
  std::optional<Counts> counts;
  std::optional<Matrix> cond;
  std::string digest;  // FNV-1a 64 of the raw bytes, hex
};

InputDoc parse_input(const std::string& text);
InputDoc load_input(const std::string& path);
std::string input_json(const InputDoc& doc);  // pxy form, parseable by parse_input

std::string digest_hex(const std::string& bytes);

struct Manifest {
  std::string command;
  std::string input_digest;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<std::string> wall_clock;
};

// '#'-prefixed lines, one field each
std::string manifest_header(const Manifest& m);

// full tool entry point; returns the process exit code
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gw::cli
