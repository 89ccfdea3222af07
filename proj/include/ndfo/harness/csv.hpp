#pragma once

#include <charconv>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ndfo/core.hpp"

namespace ndfo::harness {

/// Shortest decimal that round-trips to the same double. NaN becomes an
/// empty field.
inline std::string format_double(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw Error("could not format double");
  return std::string(buf, res.ptr);
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

/// Builds a CSV document in memory: optional '#' comment line, header row,
/// then rows. LF line endings, no quoting (fields never contain separators).
class CsvDocument {
 public:
  CsvDocument(std::string comment, std::vector<std::string> columns)
      : comment_(std::move(comment)), columns_(std::move(columns)) {}

  class Row {
   public:
    Row& operator<<(const std::string& s) { return add(s); }
    Row& operator<<(std::string_view s) { return add(std::string(s)); }
    Row& operator<<(const char* s) { return add(s); }
    Row& operator<<(double v) { return add(format_double(v)); }
    template <std::integral T>
    Row& operator<<(T v) {
      return add(std::to_string(v));
    }

   private:
    friend class CsvDocument;
    Row& add(std::string field) {
      fields_.push_back(std::move(field));
      return *this;
    }
    std::vector<std::string> fields_;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

  [[nodiscard]] std::string str() const {
    std::string out;
    if (!comment_.empty()) out += "# " + comment_ + "\n";
    append_line(out, columns_);
    for (const auto& r : rows_) {
      if (r.fields_.size() != columns_.size())
        throw Error("csv row has " + std::to_string(r.fields_.size()) + " fields, expected " +
                    std::to_string(columns_.size()));
      append_line(out, r.fields_);
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open '" + path + "' for writing");
    const std::string text = str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw Error("failed writing '" + path + "'");
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  }

  std::string comment_;
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

}  // namespace ndfo::harness
