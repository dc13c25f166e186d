#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gw/cli.hpp"
#include "gw/errors.hpp"

namespace gw::cli {

using nlohmann::json;

namespace {

std::vector<std::string> alphabet(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("input: missing ") + key);
  const json& a = j.at(key);
  if (!a.is_array() || a.empty()) throw ValidationError(std::string("input: ") + key + " must be a non-empty array");
  std::vector<std::string> out;
  for (const auto& s : a) out.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  return out;
}

// flat row-major or nested rows
std::vector<json> entries(const json& v, std::size_t rows, std::size_t cols, const char* key) {
  if (!v.is_array()) throw ValidationError(std::string("input: ") + key + " must be an array");
  std::vector<json> flat;
  if (!v.empty() && v.front().is_array()) {
    if (v.size() != rows) throw ValidationError(std::string("input: ") + key + " row count mismatch");
    for (const auto& row : v) {
      if (!row.is_array() || row.size() != cols)
        throw ValidationError(std::string("input: ") + key + " column count mismatch");
      for (const auto& e : row) flat.push_back(e);
    }
  } else {
    flat.assign(v.begin(), v.end());
  }
  if (flat.size() != rows * cols) throw ValidationError(std::string("input: ") + key + " has the wrong length");
  for (const auto& e : flat)
    if (!e.is_number()) throw ValidationError(std::string("input: ") + key + " entries must be numbers");
  return flat;
}

}  // namespace

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

InputDoc parse_input(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("input: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("input: top level must be an object");
  InputDoc doc;
  doc.x_alphabet = alphabet(j, "x_alphabet");
  doc.y_alphabet = alphabet(j, "y_alphabet");
  const auto nx = doc.x_alphabet.size(), ny = doc.y_alphabet.size();
  const Index X = static_cast<Index>(nx), Y = static_cast<Index>(ny);
  if (j.contains("pxy") == j.contains("counts")) throw ValidationError("input: give exactly one of pxy, counts");
  if (j.contains("pxy")) {
    const auto e = entries(j.at("pxy"), nx, ny, "pxy");
    Matrix p(X, Y);
    for (Index i = 0; i < X * Y; ++i) p(i / Y, i % Y) = e[i].get<double>();
    doc.dist = JointDist(p);
  } else {
    const auto e = entries(j.at("counts"), nx, ny, "counts");
    Counts c(X, Y);
    for (Index i = 0; i < X * Y; ++i) {
      if (!e[i].is_number_integer() || e[i].get<long>() < 0)
        throw ValidationError("input: counts must be non-negative integers");
      c(i / Y, i % Y) = e[i].get<long>();
    }
    doc.dist = JointDist::from_counts(c);
    doc.counts = c;
  }
  if (j.contains("cond")) {
    const json& cj = j.at("cond");
    if (!cj.is_array() || cj.size() != nx * ny || !cj.front().is_array())
      throw ValidationError("input: cond must have one row per (x,y) cell");
    const std::size_t w = cj.front().size();
    const auto e = entries(cj, nx * ny, w, "cond");
    Matrix m(X * Y, static_cast<Index>(w));
    for (Index i = 0; i < m.size(); ++i) m(i / m.cols(), i % m.cols()) = e[i].get<double>();
    CondChannel check(m);  // validates rows
    doc.cond = m;
  }
  doc.digest = digest_hex(text);
  return doc;
}

InputDoc load_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("input: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_input(ss.str());
}

std::string input_json(const InputDoc& doc) {
  json j;
  j["x_alphabet"] = doc.x_alphabet;
  j["y_alphabet"] = doc.y_alphabet;
  json rows = json::array();
  for (Index x = 0; x < doc.dist.x_size(); ++x) {
    json r = json::array();
    for (Index y = 0; y < doc.dist.y_size(); ++y) r.push_back(doc.dist(x, y));
    rows.push_back(r);
  }
  j["pxy"] = rows;
  return j.dump();
}

std::string manifest_header(const Manifest& m) {
  std::ostringstream os;
  os << "# command: " << m.command << '\n';
  os << "# input_digest: fnv1a64:" << m.input_digest << '\n';
  os << "# seed: " << m.seed << '\n';
  for (const auto& [k, v] : m.config) os << "# config." << k << ": " << v << '\n';
  os << "# version: " << kToolVersion << '\n';
  os << "# schema: " << kCsvSchema << '\n';
  if (m.wall_clock) os << "# wall_clock: " << *m.wall_clock << '\n';
  return os.str();
}

}  // namespace gw::cli
