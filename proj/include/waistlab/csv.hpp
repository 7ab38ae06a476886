#pragma once

// Plain CSV and whitespace table writers. Doubles are printed with %.17g so
// they round-trip exactly; lines end in '\n' on every platform.

#include "waistlab/errors.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace waistlab {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

class TableWriter {
public:
  TableWriter(const std::filesystem::path& path, const std::vector<std::string>& header, char sep = ',',
              const std::string& header_prefix = "")
      : out_(open_output(path)), sep_(sep), path_(path) {
    out_ << header_prefix;
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << (i ? std::string(1, sep_) : "") << header[i];
    out_ << '\n';
  }

  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((put(cells, first), first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_)
      throw Error("write to '" + path_.string() + "' failed");
  }

private:
  template <class T>
  void put(const T& v, bool first) {
    if (!first)
      out_ << sep_;
    if constexpr (std::is_floating_point_v<T>)
      out_ << format_number(static_cast<double>(v));
    else if constexpr (std::is_same_v<T, bool>)
      out_ << (v ? 1 : 0);
    else
      out_ << v;
  }

  std::ofstream out_;
  char sep_;
  std::filesystem::path path_;
};

class CsvWriter : public TableWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : TableWriter(path, header, ',') {}
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw Error("write to '" + path.string() + "' failed");
}

} // namespace waistlab
