#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mktsim::csv {

// Shortest round-trip decimal form; locale-independent and byte-stable,
// which keeps rerun outputs byte-identical.
inline std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("csv: double format failed");
  return std::string(buf, ptr);
}

inline std::string format(std::int64_t v) { return std::to_string(v); }
inline std::string format(std::int32_t v) { return std::to_string(v); }
inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

template <typename T>
std::string format(const std::optional<T>& v) {
  return v ? format(*v) : std::string{};
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("csv: cannot open " + path + " for writing");
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? (first = false, "") : ","), out_ << format(fields)), ...);
    out_ << '\n';
  }

  void raw_line(const std::string& line) { out_ << line << '\n'; }

 private:
  std::ofstream out_;
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

// Whole-file read including the header row; files here are small.
inline std::vector<std::vector<std::string>> read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_line(line));
  }
  return rows;
}

}  // namespace mktsim::csv
